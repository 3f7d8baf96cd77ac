"""Entry/exit network dynamics.

One network time unit T: compute the quasi-stationary reputation of the
current network, drop every user whose relative reputation falls below the
cost tau (or force out a single minimum-reputation user when nobody is below
threshold), then refill the vacated slots with randomly wired newcomers.

All randomness flows through a caller-supplied numpy Generator so that runs
are replayable from a 64-bit seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import DirectedNetwork
from .reputation import EquilibriumResult, SolverConfig, equilibrium


@dataclass(frozen=True)
class ExitRule:
    """Fixed participation cost tau; users stay iff b_i - tau >= 0."""

    tau: float
    force_min_exit: bool = True

    def __post_init__(self):
        if not (0 <= self.tau < 1):
            raise ValueError(f"tau must lie in [0, 1), got {self.tau}")


@dataclass(frozen=True)
class RewireModel:
    """Each ordered newcomer pair is linked independently with probability p."""

    p: float

    def __post_init__(self):
        if not (0 <= self.p <= 1):
            raise ValueError(f"link probability must lie in [0, 1], got {self.p}")

    @classmethod
    def from_links_per_user(cls, m: float, n: int) -> "RewireModel":
        """Build from the average link count m = p (n - 1)."""
        if n < 2:
            raise ValueError("links-per-user density needs n >= 2")
        return cls(m / (n - 1))

    def links_per_user(self, n: int) -> float:
        return self.p * (n - 1)


@dataclass
class StepOutcome:
    departed: frozenset[int]
    arrived: frozenset[int]
    b_before: np.ndarray
    cascade_context: int  # step index T
    forced_exit: int | None
    solver_converged: bool = True


def select_leavers(b: np.ndarray, rule: ExitRule, rng: np.random.Generator) -> set[int]:
    """Users leaving this step: everyone below tau, else one forced minimum.

    With force_min_exit and an empty threshold selection, exactly one user at
    the minimum reputation leaves; ties are broken uniformly at random.
    """
    b = np.asarray(b, dtype=np.float64)
    if b.size == 0:
        raise ValueError("cannot select leavers from an empty reputation vector")
    leavers = set(np.flatnonzero(b < rule.tau).tolist())
    if not leavers and rule.force_min_exit:
        mins = np.flatnonzero(b == b.min())
        # floor of a single uniform draw; keeps the stream identical across
        # the reference and accelerated simulation paths
        leavers = {int(mins[int(rng.random() * mins.size)])}
    return leavers


def rewire_newcomers(
    net: DirectedNetwork,
    leavers,
    model: RewireModel,
    rng: np.random.Generator,
) -> DirectedNetwork:
    """Replace each leaver's slot by a freshly wired newcomer.

    All links of every leaver are removed first. Each newcomer then links to
    and from every other user independently with probability p; pairs of
    same-step newcomers are wired through the out-draws of both sides so that
    each ordered pair is sampled exactly once.
    """
    leavers = sorted(leavers)
    if not leavers:
        raise ValueError("rewire_newcomers requires a nonempty leaver set")
    new = net.copy()
    a = new.a
    newcomer = np.zeros(net.n, dtype=bool)
    newcomer[leavers] = True
    for v in leavers:
        a[v, :] = 0
        a[:, v] = 0
    for v in leavers:
        out_draw = rng.random(net.n)
        in_draw = rng.random(net.n)
        out_mask = out_draw < model.p
        out_mask[v] = False
        a[out_mask, v] = 1  # v follows k  <=>  a[k, v] = 1
        in_mask = in_draw < model.p
        in_mask[v] = False
        in_mask[newcomer] = False  # newcomer->v pairs come from their out-draws
        a[v, in_mask] = 1
    return new


def random_network(n: int, model: RewireModel, rng: np.random.Generator) -> DirectedNetwork:
    """Initial condition: every ordered pair linked independently with probability p."""
    a = (rng.random((n, n)) < model.p).astype(np.uint8)
    np.fill_diagonal(a, 0)
    return DirectedNetwork(n, a)


def step(
    net: DirectedNetwork,
    rule: ExitRule,
    model: RewireModel,
    solver: SolverConfig | None,
    rng: np.random.Generator,
    step_index: int = 0,
) -> tuple[DirectedNetwork, StepOutcome, EquilibriumResult]:
    """One network time unit: equilibrium -> departures -> rewired arrivals."""
    eq = equilibrium(net, solver)
    leavers = select_leavers(eq.b, rule, rng)
    threshold_hits = np.flatnonzero(eq.b < rule.tau)
    forced = None
    if leavers and threshold_hits.size == 0:
        forced = next(iter(leavers))
    if leavers:
        new_net = rewire_newcomers(net, leavers, model, rng)
    else:
        new_net = net
    outcome = StepOutcome(
        departed=frozenset(leavers),
        arrived=frozenset(leavers),
        b_before=eq.b,
        cascade_context=step_index,
        forced_exit=forced,
        solver_converged=eq.converged,
    )
    return new_net, outcome, eq
