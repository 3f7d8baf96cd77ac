"""Equilibrium reputation computation.

The relative reputation vector in equilibrium is the Perron-Frobenius
eigenvector of the adjacency matrix, normalized so its largest component is 1.
The solver iterates b <- M.b / max(M.b) with M = I + A; the +I shift breaks
the periodicity of pure cycles without changing eigenvectors, and the leading
eigenvalue of A itself is recovered through the identity
lambda1 = sum_j a_zj b_j at the fixed point, z being the top-reputation user.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csgraph

from .graph import DirectedNetwork


class EmptyNetworkError(ValueError):
    """Raised when an equilibrium is requested for a zero-user network."""


class ChainBoundDomainError(ValueError):
    """Raised when the simple-chain length bound is unbounded or empty."""


@dataclass
class SolverConfig:
    tolerance: float = 1e-9
    max_iterations: int | None = None  # defaults to 100 n + 1000
    mode: str = "shifted-power"  # or "ode-integration"
    dt: float = 0.1  # Euler step for ode-integration mode

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.mode not in ("shifted-power", "ode-integration"):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def iteration_cap(self, n: int) -> int:
        return self.max_iterations if self.max_iterations is not None else 100 * n + 1000


@dataclass
class EquilibriumResult:
    b: np.ndarray  # max-normalized relative reputation, max(b) = 1
    x: np.ndarray  # sum-normalized relative reputation, sum(x) = 1
    lambda1: float
    z: int  # index of the top-reputation user
    iterations: int
    converged: bool
    residual: float


def acyclic_limit(a: np.ndarray) -> np.ndarray:
    """Exact limit of the shifted iteration on an acyclic network.

    (M^k 1)_i grows like C(k, d_i) * P_i where d_i is the longest directed
    path ending at user i (walking follower -> followed) and P_i counts such
    longest paths. The normalized limit therefore puts mass P_i / P_max on
    the users of maximal depth and zero elsewhere.
    """
    n = a.shape[0]
    in_deg_left = a.astype(np.int64).sum(axis=1)  # unprocessed followers of i
    depth = np.zeros(n, dtype=np.int64)
    count = np.ones(n, dtype=np.float64)
    ready = [int(v) for v in np.flatnonzero(in_deg_left == 0)]
    order = []
    while ready:
        j = ready.pop()
        order.append(j)
        for i in np.flatnonzero(a[:, j]):  # users that j follows
            i = int(i)
            if depth[j] + 1 > depth[i]:
                depth[i] = depth[j] + 1
                count[i] = count[j]
            elif depth[j] + 1 == depth[i]:
                count[i] += count[j]
            in_deg_left[i] -= 1
            if in_deg_left[i] == 0:
                ready.append(i)
    if len(order) != n:
        raise ValueError("acyclic_limit called on a network containing a cycle")
    b = np.where(depth == depth.max(), count, 0.0)
    return b / b.max()


def _has_cycle(a: np.ndarray) -> bool:
    if not a.any():
        return False
    ncomp, _ = csgraph.connected_components(a, directed=True, connection="strong")
    return ncomp < a.shape[0]


def equilibrium(net: DirectedNetwork, cfg: SolverConfig | None = None) -> EquilibriumResult:
    """Relative reputation vector, lambda1 and diagnostics for a fixed network."""
    if net.n == 0:
        raise EmptyNetworkError("cannot compute an equilibrium for an empty network")
    cfg = cfg or SolverConfig()
    a = net.a.astype(np.float64)
    n = net.n

    if not _has_cycle(a):
        # Acyclic: lambda1 = 0 and the shifted iteration converges only
        # polynomially, so report its exact limit directly.
        b = acyclic_limit(a)
        return _finish(a, b, iterations=0, converged=True, residual=0.0)

    b = np.ones(n)
    cap = cfg.iteration_cap(n)
    residual = math.inf
    iterations = 0
    if cfg.mode == "shifted-power":
        for iterations in range(1, cap + 1):
            w = b + a @ b
            w /= w.max()
            residual = float(np.abs(w - b).max())
            b = w
            if residual < cfg.tolerance:
                break
    else:  # ode-integration: explicit Euler on the relative-reputation flow
        for iterations in range(1, cap + 1):
            z = int(np.argmax(b))
            w = b + cfg.dt * (a @ b - b * (a[z] @ b))
            w /= w.max()
            residual = float(np.abs(w - b).max())
            b = w
            if residual < cfg.tolerance:
                break
    return _finish(a, b, iterations, residual < cfg.tolerance, residual)


def _finish(a, b, iterations, converged, residual) -> EquilibriumResult:
    z = int(np.argmax(b))  # first maximal index
    lambda1 = float(a[z] @ b)
    total = b.sum()
    x = b / total if total > 0 else b.copy()
    return EquilibriumResult(
        b=b, x=x, lambda1=lambda1, z=z,
        iterations=iterations, converged=converged, residual=residual,
    )


def relative_reputation_ode_step(net: DirectedNetwork, b: np.ndarray, dt: float) -> np.ndarray:
    """One explicit Euler step of db_i/dt = sum_j a_ij b_j - b_i sum_j a_zj b_j."""
    b = np.asarray(b, dtype=np.float64)
    if dt <= 0:
        raise ValueError("dt must be positive")
    if b.min() < 0 or b.max() <= 0:
        raise ValueError("b must be non-negative with a positive maximum")
    a = net.a.astype(np.float64)
    z = int(np.argmax(b))
    return b + dt * (a @ b - b * (a[z] @ b))


def absolute_reputation_derivative(net: DirectedNetwork, X: np.ndarray, phi: float) -> np.ndarray:
    """dX_i/dt = sum_j a_ij X_j - phi X_i (verification helper only)."""
    X = np.asarray(X, dtype=np.float64)
    if phi < 0:
        raise ValueError("phi must be non-negative")
    if X.min() < 0:
        raise ValueError("X must be non-negative")
    return net.a.astype(np.float64) @ X - phi * X


def chain_length_bound(b_anchor: float, tau: float, lambda1: float) -> int:
    """Maximum length n of a simple chain hanging off a core user.

    Positions along the chain attenuate by 1/lambda1 per hop, so the last
    position that still clears the cost is n = ceil(ln(b_anchor/tau) / ln(lambda1)),
    counting the anchoring core user as position 1.
    """
    if not (0 < tau < 1):
        raise ChainBoundDomainError(f"tau must lie in (0, 1), got {tau}")
    if not (0 < b_anchor <= 1):
        raise ChainBoundDomainError(f"b_anchor must lie in (0, 1], got {b_anchor}")
    if lambda1 <= 1 or b_anchor <= tau:
        raise ChainBoundDomainError(
            "unbounded or empty chain: requires lambda1 > 1 and b_anchor > tau"
        )
    q = math.log(b_anchor / tau) / math.log(lambda1)
    if abs(q - round(q)) < 1e-12:  # snap exact ratios lost to float noise
        q = round(q)
    return int(math.ceil(q))


def attenuation_check(net: DirectedNetwork, eq: EquilibriumResult) -> float:
    """max_i | b_i - (1/lambda1) sum_j a_ij b_j |, a validity diagnostic."""
    if eq.lambda1 <= 0:
        raise ValueError("attenuation check requires lambda1 > 0")
    a = net.a.astype(np.float64)
    return float(np.abs(eq.b - (a @ eq.b) / eq.lambda1).max())
