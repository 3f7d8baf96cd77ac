"""Directed reputation networks: equilibrium reputations, entry/exit dynamics,
performance and robustness metrics, and a reproducible sweep harness."""

from .graph import (
    CoreAnalysis,
    CycleReport,
    DirectedNetwork,
    compute_sccs,
    degrees,
    enumerate_cycles,
    is_whole_network,
)
from .reputation import (
    EquilibriumResult,
    SolverConfig,
    attenuation_check,
    chain_length_bound,
    equilibrium,
)
from .dynamics import ExitRule, RewireModel, StepOutcome, random_network, rewire_newcomers, select_leavers, step
from .metrics import (
    EnsembleSummary,
    RobustnessSummary,
    StepRecord,
    ensemble_average,
    population_mean_benefit,
    rank_sum_pvalue,
    robustness_from_trace,
)
from .experiments import ExperimentConfig, SweepResult, export_snapshot, replay, run_experiment

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
