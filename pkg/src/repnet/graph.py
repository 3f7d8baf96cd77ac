"""Directed network representation and structural analysis.

Conventions follow the follower direction used throughout the package: an
edge (j, i) means "user j follows user i", i.e. adjacency entry a[i, j] = 1.
Rows of the adjacency matrix therefore index the followed user, columns the
follower.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csgraph


class NetworkTooLargeError(ValueError):
    """Raised when exact cycle enumeration is requested on an oversized network."""


class InvalidAdjacencyError(ValueError):
    """Raised when an adjacency matrix is non-square, non-binary or has self-loops."""


class DirectedNetwork:
    """Unweighted directed graph over a fixed set of ``n`` user slots.

    Backed by a dense 0/1 matrix so that edge insert/delete are O(1) and the
    full link set of a user (row plus column) can be cleared in one shot when
    the user exits.
    """

    __slots__ = ("n", "a")

    def __init__(self, n: int, a: np.ndarray | None = None):
        if n < 0:
            raise ValueError("network size must be non-negative")
        self.n = int(n)
        if a is None:
            a = np.zeros((self.n, self.n), dtype=np.uint8)
        self.a = a

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges) -> "DirectedNetwork":
        """Build a network from (follower, followed) pairs."""
        net = cls(n)
        for j, i in edges:
            net.add_edge(j, i)
        return net

    @classmethod
    def from_adjacency(cls, matrix) -> "DirectedNetwork":
        """Build from a matrix with a[i, j] = 1 iff j follows i; validates entries."""
        a = np.asarray(matrix)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidAdjacencyError(f"adjacency must be square, got shape {a.shape}")
        bad = np.argwhere((a != 0) & (a != 1))
        if bad.size:
            i, j = bad[0]
            raise InvalidAdjacencyError(f"non-binary entry at row {i}, column {j}")
        diag = np.flatnonzero(np.diagonal(a))
        if diag.size:
            raise InvalidAdjacencyError(f"self-loop at user {diag[0]}")
        return cls(a.shape[0], a.astype(np.uint8).copy())

    def copy(self) -> "DirectedNetwork":
        return DirectedNetwork(self.n, self.a.copy())

    # -- edge operations ----------------------------------------------------

    def _check(self, j: int, i: int) -> None:
        if not (0 <= j < self.n and 0 <= i < self.n):
            raise ValueError(f"edge ({j}, {i}) out of range for n={self.n}")
        if j == i:
            raise InvalidAdjacencyError(f"self-loop at user {i}")

    def add_edge(self, j: int, i: int) -> None:
        """j starts following i."""
        self._check(j, i)
        self.a[i, j] = 1

    def remove_edge(self, j: int, i: int) -> None:
        self._check(j, i)
        self.a[i, j] = 0

    def has_edge(self, j: int, i: int) -> bool:
        return bool(self.a[i, j])

    def clear_user(self, i: int) -> None:
        """Remove every incoming and outgoing link of user i (user exit)."""
        self.a[i, :] = 0
        self.a[:, i] = 0

    def edges(self) -> list[tuple[int, int]]:
        """All (follower, followed) pairs, sorted."""
        followed, follower = np.nonzero(self.a)
        return sorted(zip(follower.tolist(), followed.tolist()))

    @property
    def num_edges(self) -> int:
        return int(self.a.sum())

    def followers(self, i: int) -> np.ndarray:
        """Users that follow i (they boost i's reputation)."""
        return np.flatnonzero(self.a[i, :])

    def followees(self, j: int) -> np.ndarray:
        """Users that j follows."""
        return np.flatnonzero(self.a[:, j])

    def subgraph(self, nodes) -> "DirectedNetwork":
        idx = np.asarray(sorted(nodes), dtype=int)
        return DirectedNetwork(len(idx), self.a[np.ix_(idx, idx)].copy())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DirectedNetwork)
            and self.n == other.n
            and np.array_equal(self.a, other.a)
        )

    def __repr__(self) -> str:
        return f"DirectedNetwork(n={self.n}, edges={self.num_edges})"


@dataclass
class CoreAnalysis:
    """Strongly-connected-component decomposition with the selected core."""

    sccs: list[frozenset[int]]
    core: frozenset[int]
    core_size: int
    is_core_alive: bool
    whole_network_component: bool


@dataclass
class CycleReport:
    """Simple directed cycles found by bounded exact enumeration."""

    cycles: list[tuple[int, ...]]
    count_by_length: dict[int, int] = field(default_factory=dict)
    truncated: bool = False


def _subgraph_spectral_radius(net: DirectedNetwork, nodes: frozenset[int]) -> float:
    sub = net.a[np.ix_(sorted(nodes), sorted(nodes))].astype(float)
    return float(np.abs(np.linalg.eigvals(sub)).max())


def compute_sccs(net: DirectedNetwork) -> CoreAnalysis:
    """Partition into SCCs and select the core.

    The core is the SCC of maximal size; ties are broken by larger spectral
    radius of the induced subgraph, then by smallest contained user id. The
    core is alive only if it contains a cycle, i.e. has at least two members.
    """
    if net.n == 0:
        return CoreAnalysis([], frozenset(), 0, False, False)
    ncomp, labels = csgraph.connected_components(
        net.a, directed=True, connection="strong"
    )
    groups: dict[int, list[int]] = {}
    for node, lab in enumerate(labels.tolist()):
        groups.setdefault(lab, []).append(node)
    sccs = [frozenset(members) for members in groups.values()]
    sccs.sort(key=min)

    max_size = max(len(s) for s in sccs)
    candidates = [s for s in sccs if len(s) == max_size]
    if len(candidates) > 1 and max_size > 1:
        radii = [_subgraph_spectral_radius(net, s) for s in candidates]
        best = max(radii)
        candidates = [s for s, r in zip(candidates, radii) if r >= best - 1e-12]
    core = min(candidates, key=min)
    return CoreAnalysis(
        sccs=sccs,
        core=core,
        core_size=len(core),
        is_core_alive=len(core) >= 2,
        whole_network_component=is_whole_network(net),
    )


def is_whole_network(net: DirectedNetwork) -> bool:
    """True iff the undirected shadow is one component and nobody is isolated."""
    if net.n == 0:
        return False
    in_deg, out_deg = degrees(net)
    if np.any(in_deg + out_deg == 0):
        return False
    ncomp, _ = csgraph.connected_components(net.a, directed=False)
    return ncomp == 1


def degrees(net: DirectedNetwork) -> tuple[np.ndarray, np.ndarray]:
    """(in_degrees, out_degrees): followers of each user, users each user follows."""
    in_deg = net.a.sum(axis=1).astype(np.int64)
    out_deg = net.a.sum(axis=0).astype(np.int64)
    return in_deg, out_deg


def enumerate_cycles(
    net: DirectedNetwork, max_nodes: int = 64, budget: int = 100_000
) -> CycleReport:
    """All simple directed cycles, Johnson-style, capped by an output budget.

    Cycles are reported in follower order (j -> i walks from follower to
    followed), rotated to start at their smallest node. Enumeration is
    exponential in the worst case, so networks above ``max_nodes`` are refused.
    """
    if net.n > max_nodes:
        raise NetworkTooLargeError(
            f"network too large for exact enumeration (n={net.n} > {max_nodes})"
        )
    # successor map in follower->followed direction
    succ = {v: set(net.followees(v).tolist()) for v in range(net.n)}
    cycles: list[tuple[int, ...]] = []
    truncated = False

    for start in range(net.n):
        if truncated:
            break
        # consider only nodes >= start; every cycle is found once, rooted at
        # its minimal node
        blocked: set[int] = set()
        block_map: dict[int, set[int]] = {}
        path: list[int] = [start]

        def unblock(v: int) -> None:
            blocked.discard(v)
            for w in block_map.pop(v, ()):  # pragma: no branch
                if w in blocked:
                    unblock(w)

        def circuit(v: int) -> bool:
            nonlocal truncated
            found = False
            blocked.add(v)
            for w in sorted(succ[v]):
                if w < start:
                    continue
                if w == start:
                    if len(path) >= 2:
                        if len(cycles) >= budget:
                            truncated = True
                            break
                        cycles.append(tuple(path))
                        found = True
                elif w not in blocked:
                    if circuit_rec(w):
                        found = True
                    if truncated:
                        break
            if found:
                unblock(v)
            else:
                for w in sorted(succ[v]):
                    if w >= start:
                        block_map.setdefault(w, set()).add(v)
            return found

        def circuit_rec(w: int) -> bool:
            path.append(w)
            res = circuit(w)
            path.pop()
            return res

        circuit(start)

    counts = Counter(len(c) for c in cycles)
    return CycleReport(
        cycles=cycles, count_by_length=dict(sorted(counts.items())), truncated=truncated
    )


# -- snapshot formats -------------------------------------------------------


def to_json_snapshot(net: DirectedNetwork, core=()) -> str:
    """JSON snapshot: {"n": int, "edges": [[from, to], ...], "core": [ids]}."""
    doc = {
        "n": net.n,
        "edges": [[j, i] for j, i in net.edges()],
        "core": sorted(core),
    }
    return json.dumps(doc)


def from_json_snapshot(text: str) -> tuple[DirectedNetwork, frozenset[int]]:
    doc = json.loads(text)
    net = DirectedNetwork.from_edges(doc["n"], doc["edges"])
    return net, frozenset(doc.get("core", ()))


def to_dot(net: DirectedNetwork, core=(), labels: dict[int, str] | None = None) -> str:
    """DOT export; core nodes carry the attribute core=true."""
    core = set(core)
    lines = ["digraph reputation {"]
    for v in range(net.n):
        attrs = []
        if labels and v in labels:
            attrs.append(f'label="{labels[v]}"')
        if v in core:
            attrs.append("core=true")
            attrs.append('style=filled fillcolor="#e06060"')
        lines.append(f"  {v} [{', '.join(attrs)}];" if attrs else f"  {v};")
    for j, i in net.edges():
        lines.append(f"  {j} -> {i};")
    lines.append("}")
    return "\n".join(lines) + "\n"
