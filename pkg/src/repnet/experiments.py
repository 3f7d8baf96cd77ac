"""Reproducible experiment harness.

A sweep is a grid of (tau, run) cells over a fixed density. Every cell gets
its own PCG64 stream derived purely from (master seed, tau index, run index),
so cells can execute in any order, sequentially or across worker processes,
and still merge into bit-identical outputs.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import metrics
from .dynamics import ExitRule, RewireModel, random_network, step
from .graph import CoreAnalysis, DirectedNetwork, compute_sccs, degrees, to_dot
from .metrics import RobustnessSummary, StepRecord
from .reputation import EquilibriumResult, SolverConfig

WORKER_ENV_VAR = "REPNET_WORKERS"

DENSITY_KINDS = ("probability", "links_per_user")


class ConfigError(ValueError):
    """Raised on any experiment-configuration validation failure."""


@dataclass
class ExperimentConfig:
    n: int
    density: float
    density_kind: str  # "probability" or "links_per_user"
    tau_values: list[float]
    t_max: int
    runs: int
    seed: int
    solver: SolverConfig = field(default_factory=SolverConfig)
    sample_every: int = 10
    filter_whole: bool = True
    burn_in: int | None = None  # defaults to t_max // 10
    workers: int = 1

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"n must be at least 2, got {self.n}")
        if self.density_kind not in DENSITY_KINDS:
            raise ConfigError(
                f"density_kind must be one of {DENSITY_KINDS}, got {self.density_kind!r}"
            )
        if self.density < 0:
            raise ConfigError("density must be non-negative")
        if self.density_kind == "probability" and self.density > 1:
            raise ConfigError("probability density must lie in [0, 1]")
        if not self.tau_values:
            raise ConfigError("tau_values must be nonempty")
        for tau in self.tau_values:
            if not (0 <= tau < 1):
                raise ConfigError(f"every tau must lie in [0, 1), got {tau}")
        if self.t_max < 1:
            raise ConfigError("t_max must be at least 1")
        if self.runs < 1:
            raise ConfigError("runs must be at least 1")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.sample_every < 1:
            raise ConfigError("sample_every must be at least 1")
        if self.burn_in is not None and not (0 <= self.burn_in < self.t_max):
            raise ConfigError("burn_in must lie in [0, t_max)")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")

    @property
    def p(self) -> float:
        if self.density_kind == "probability":
            return self.density
        return self.density / (self.n - 1)

    @property
    def links_per_user(self) -> float:
        return self.p * (self.n - 1)

    @property
    def effective_burn_in(self) -> int:
        return self.burn_in if self.burn_in is not None else self.t_max // 10

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        solver = doc.pop("solver", None)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"n", "density", "density_kind", "tau_values", "t_max", "runs", "seed"} - set(doc)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        try:
            cfg = cls(**doc, solver=SolverConfig(**solver) if solver else SolverConfig())
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg

    def to_json(self) -> str:
        doc = asdict(self)
        return json.dumps(doc, indent=2, sort_keys=True)


def cell_rng(seed: int, tau_index: int, run_index: int) -> np.random.Generator:
    """Deterministic per-cell stream: pure function of (seed, tau idx, run idx)."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(tau_index, run_index)))
    )


@dataclass
class CellResult:
    tau_index: int
    run_index: int
    tau: float
    final_b_mean: float
    time_avg_b_mean: float
    rewired_fraction: float
    lifetimes: list[int]
    recoveries: list[int]
    sampled_records: list[StepRecord]
    sampled_max_out_degree: list[int]
    unconverged_steps: int


def simulate_trace(
    n: int,
    tau: float,
    model: RewireModel,
    solver: SolverConfig,
    t_max: int,
    rng: np.random.Generator,
    net: DirectedNetwork | None = None,
) -> tuple[list[StepRecord], list[int], int]:
    """Run t_max network steps; per-step records plus max out-degree per step."""
    if net is None:
        net = random_network(n, model, rng)
    rule = ExitRule(tau=tau)
    records: list[StepRecord] = []
    max_out: list[int] = []
    unconverged = 0
    for t in range(t_max):
        analysis = compute_sccs(net)
        net_next, outcome, eq = step(net, rule, model, solver, rng, step_index=t)
        if not eq.converged:
            unconverged += 1
        records.append(
            StepRecord(
                t=t,
                b_mean=metrics.population_mean_benefit(eq.b),
                lambda1=eq.lambda1,
                core_size=analysis.core_size,
                core_alive=analysis.is_core_alive,
                departed_count=len(outcome.departed),
                y_remaining=1.0 - len(outcome.departed) / n,
                whole_network=analysis.whole_network_component,
            )
        )
        max_out.append(int(degrees(net)[1].max()))
        net = net_next
    return records, max_out, unconverged


def run_cell(cfg: ExperimentConfig, tau_index: int, run_index: int) -> CellResult:
    tau = cfg.tau_values[tau_index]
    rng = cell_rng(cfg.seed, tau_index, run_index)
    model = RewireModel(cfg.p)
    records, max_out, unconverged = _simulate(cfg, tau, model, rng)
    burn = cfg.effective_burn_in
    rob = metrics.robustness_from_trace(records, cfg.n)
    sampled = [r for r in records if r.t % cfg.sample_every == 0 or r.t == cfg.t_max - 1]
    sampled_out = [
        d for r, d in zip(records, max_out)
        if r.t % cfg.sample_every == 0 or r.t == cfg.t_max - 1
    ]
    return CellResult(
        tau_index=tau_index,
        run_index=run_index,
        tau=tau,
        final_b_mean=records[-1].b_mean,
        time_avg_b_mean=float(np.mean([r.b_mean for r in records[burn:]])),
        rewired_fraction=rob.mean_rewired_fraction,
        lifetimes=rob.lifetimes,
        recoveries=rob.recoveries,
        sampled_records=sampled,
        sampled_max_out_degree=sampled_out,
        unconverged_steps=unconverged,
    )


def _simulate(cfg, tau, model, rng):
    """Cell inner loop; see fastpath module for the accelerated equivalent."""
    from . import fastpath

    if fastpath.available() and cfg.solver.mode == "shifted-power":
        return fastpath.simulate_trace_fast(
            cfg.n, tau, model.p, cfg.solver, cfg.t_max, rng
        )
    return simulate_trace(cfg.n, tau, model, cfg.solver, cfg.t_max, rng)


@dataclass
class TauSummary:
    tau: float
    p: float
    runs: int
    mean_b: float  # post-burn-in time average, averaged over runs
    stderr_b: float
    mean_b_final: float  # run-final population average (Eq.-10 style)
    mean_lifetime: float
    mean_recovery: float
    mean_rewired_fraction: float
    lifetimes: list[int]
    recoveries: list[int]
    mean_max_out_degree: float
    ensemble: metrics.EnsembleSummary | None


@dataclass
class SweepResult:
    config: ExperimentConfig
    cells: list[CellResult]
    summaries: list[TauSummary]


def _aggregate(cfg: ExperimentConfig, cells: list[CellResult]) -> list[TauSummary]:
    summaries = []
    for ti, tau in enumerate(cfg.tau_values):
        group = sorted(
            (c for c in cells if c.tau_index == ti), key=lambda c: c.run_index
        )
        time_avgs = [c.time_avg_b_mean for c in group]
        lifetimes = [seg for c in group for seg in c.lifetimes]
        recoveries = [seg for c in group for seg in c.recoveries]
        pooled = [(c.run_index, r) for c in group for r in c.sampled_records]
        try:
            ens = metrics.ensemble_average(pooled, filter_whole=cfg.filter_whole)
        except ValueError:
            ens = None
        summaries.append(
            TauSummary(
                tau=tau,
                p=cfg.p,
                runs=len(group),
                mean_b=float(np.mean(time_avgs)),
                stderr_b=float(np.std(time_avgs, ddof=1) / math.sqrt(len(time_avgs)))
                if len(time_avgs) > 1
                else 0.0,
                mean_b_final=float(np.mean([c.final_b_mean for c in group])),
                mean_lifetime=float(np.mean(lifetimes)) if lifetimes else math.nan,
                mean_recovery=float(np.mean(recoveries)) if recoveries else math.nan,
                mean_rewired_fraction=float(np.mean([c.rewired_fraction for c in group])),
                lifetimes=lifetimes,
                recoveries=recoveries,
                mean_max_out_degree=float(
                    np.mean([d for c in group for d in c.sampled_max_out_degree])
                ),
                ensemble=ens,
            )
        )
    return summaries


def _cell_task(args):
    cfg_json, tau_index, run_index = args
    cfg = ExperimentConfig.from_json(cfg_json)
    return run_cell(cfg, tau_index, run_index)


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> SweepResult:
    """Execute every (tau, run) cell and optionally persist CSV outputs."""
    workers = int(os.environ.get(WORKER_ENV_VAR, cfg.workers))
    keys = [(ti, r) for ti in range(len(cfg.tau_values)) for r in range(cfg.runs)]
    if workers > 1 and len(keys) > 1:
        cfg_json = cfg.to_json()
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_cell_task, [(cfg_json, ti, r) for ti, r in keys]))
    else:
        cells = [run_cell(cfg, ti, r) for ti, r in keys]
    cells.sort(key=lambda c: (c.tau_index, c.run_index))
    result = SweepResult(config=cfg, cells=cells, summaries=_aggregate(cfg, cells))
    if out_dir is not None:
        write_sweep_outputs(result, Path(out_dir))
    return result


# -- persistence --------------------------------------------------------------


def atomic_write(path: Path, data: str | bytes) -> None:
    """Write via temp file + rename so interrupted sweeps never leave halves."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _tau_tag(tau: float) -> str:
    return format(tau, ".4f").rstrip("0").rstrip(".").replace(".", "_") or "0"


def write_sweep_outputs(result: SweepResult, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    lines = [metrics.SWEEP_CSV_HEADER]
    for s in result.summaries:
        lines.append(
            f"{s.tau!r},{s.p!r},{s.runs},{s.mean_b!r},{s.mean_lifetime!r},"
            f"{s.mean_recovery!r},{s.mean_rewired_fraction!r}"
        )
    atomic_write(out_dir / "summary.csv", "\n".join(lines) + "\n")

    run_lines = ["tau,p,run,mean_b_timeavg,mean_b_final,rewired_fraction,stderr_group"]
    for c in result.cells:
        run_lines.append(
            f"{c.tau!r},{result.config.p!r},{c.run_index},{c.time_avg_b_mean!r},"
            f"{c.final_b_mean!r},{c.rewired_fraction!r},"
        )
    atomic_write(out_dir / "runs.csv", "\n".join(run_lines) + "\n")

    seg_lines = ["tau,p,run,kind,length"]
    for c in result.cells:
        for seg in c.lifetimes:
            seg_lines.append(f"{c.tau!r},{result.config.p!r},{c.run_index},lifetime,{seg}")
        for seg in c.recoveries:
            seg_lines.append(f"{c.tau!r},{result.config.p!r},{c.run_index},recovery,{seg}")
    atomic_write(out_dir / "segments.csv", "\n".join(seg_lines) + "\n")

    for s in result.summaries:
        if s.ensemble is None:
            continue
        tag = _tau_tag(s.tau)
        q_lines = ["value,probability"]
        for q, prob in s.ensemble.histogram_core_size.items():
            q_lines.append(f"{q},{prob!r}")
        atomic_write(out_dir / f"hist_core_size_tau{tag}.csv", "\n".join(q_lines) + "\n")
        l_lines = ["value,probability"]
        for lb, prob in s.ensemble.histogram_lambda1.items():
            l_lines.append(f"{lb!r},{prob!r}")
        atomic_write(out_dir / f"hist_lambda1_tau{tag}.csv", "\n".join(l_lines) + "\n")


def export_snapshot(
    net: DirectedNetwork,
    analysis: CoreAnalysis,
    eq: EquilibriumResult,
    format: str,
) -> bytes:
    """Serialize a network snapshot as DOT (b labels, styled core) or JSON."""
    if format == "json":
        doc = {
            "n": net.n,
            "edges": [[j, i] for j, i in net.edges()],
            "core": sorted(analysis.core) if analysis.is_core_alive else [],
            "b": [float(v) for v in eq.b],
            "lambda1": eq.lambda1,
        }
        return (json.dumps(doc) + "\n").encode()
    if format == "dot":
        labels = {v: f"{v} ({eq.b[v]:.2f})" for v in range(net.n)}
        core = analysis.core if analysis.is_core_alive else ()
        return to_dot(net, core=core, labels=labels).encode()
    raise ValueError(f"unknown snapshot format {format!r}")


def import_snapshot(data: bytes) -> DirectedNetwork:
    doc = json.loads(data.decode())
    return DirectedNetwork.from_edges(doc["n"], doc["edges"])


def replay(trace_path: str | Path) -> list[StepRecord]:
    """Load a persisted step-record trace for re-aggregation."""
    text = Path(trace_path).read_text()
    return metrics.step_records_from_csv(text)
