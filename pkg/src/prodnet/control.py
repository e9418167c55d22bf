"""Controllability: Kalman rank with grouped inputs and minimum-input structural control."""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError, FitError, ShapeError
from .netcore import Graph, degree_stats

log = logging.getLogger(__name__)

GAMMA_CRITICAL = 2.0


@dataclass(frozen=True)
class InputAssignment:
    """Control inputs as ``(gain, node indices)`` groups; one input column per group.

    Indices refer to positions in the state vector (graph node order).
    """

    n: int
    groups: tuple

    def __post_init__(self):
        groups = tuple((float(gain), frozenset(int(i) for i in members)) for gain, members in self.groups)
        object.__setattr__(self, "groups", groups)
        seen: set = set()
        for _, members in groups:
            if seen & members:
                raise DomainError("input groups must be disjoint")
            if any(not 0 <= i < self.n for i in members):
                raise ShapeError(f"group member outside 0..{self.n - 1}")
            seen |= members
        if not any(g != 0 and m for g, m in groups):
            raise DomainError("input assignment needs at least one nonzero gain")

    @classmethod
    def full_diagonal(cls, gains: Sequence[float]) -> "InputAssignment":
        return cls(len(gains), tuple((g, {i}) for i, g in enumerate(gains)))

    @classmethod
    def from_degrees(cls, g: Graph, f: Callable[[int], float]) -> "InputAssignment":
        """Diagonal input with gain ``f(k_i)`` on node ``i``."""
        return cls.full_diagonal([f(int(k)) for k in g.degree_array])

    def matrix(self) -> np.ndarray:
        B = np.zeros((self.n, len(self.groups)))
        for j, (gain, members) in enumerate(self.groups):
            B[sorted(members), j] = gain
        return B

    @property
    def m(self) -> int:
        return len(self.groups)


def _input_matrix(A: np.ndarray, inputs) -> np.ndarray:
    B = inputs.matrix() if isinstance(inputs, InputAssignment) else np.asarray(inputs, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    if B.shape[0] != A.shape[0]:
        raise ShapeError(f"input matrix has {B.shape[0]} rows, state has {A.shape[0]}")
    return B


def _state_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"state matrix must be square, got {A.shape}")
    return A


def controllability_matrix(A, inputs) -> np.ndarray:
    """``[B, AB, A^2 B, ..., A^(n-1) B]``."""
    A = _state_matrix(A)
    B = _input_matrix(A, inputs)
    blocks = [B]
    for _ in range(1, A.shape[0]):
        blocks.append(A @ blocks[-1])
    return np.hstack(blocks)


def exact_rank(M) -> int:
    """Rank by fraction-exact Gaussian elimination (floats converted exactly)."""
    rows = [[Fraction(x) for x in row] for row in np.asarray(M, dtype=object).tolist()]
    if not rows:
        return 0
    rank = 0
    ncols = len(rows[0])
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        p = rows[rank]
        for r in range(rank + 1, len(rows)):
            if rows[r][col] != 0:
                factor = rows[r][col] / p[col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], p)]
        rank += 1
        if rank == len(rows):
            break
    return rank


def _exact_controllability(A, B) -> list:
    Af = [[Fraction(x) for x in row] for row in np.asarray(A).tolist()]
    block = [[Fraction(x) for x in row] for row in np.asarray(B).tolist()]
    n = len(Af)
    blocks = [block]
    for _ in range(1, n):
        prev = blocks[-1]
        blocks.append([[sum(Af[i][k] * prev[k][j] for k in range(n)) for j in range(len(prev[0]))] for i in range(n)])
    return [sum((blk[i] for blk in blocks), []) for i in range(n)]


def kalman_rank(A, inputs, tol: float = 1e-10, exact: bool = False) -> tuple[int, bool]:
    """Rank of the controllability matrix and whether it equals ``n``.

    The numeric path counts singular values above ``tol * s_max * max(n, n m)``.
    ``exact=True`` eliminates over the rationals instead.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    A = _state_matrix(A)
    n = A.shape[0]
    if exact:
        B = inputs.matrix() if isinstance(inputs, InputAssignment) else np.asarray(inputs, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        rank = exact_rank(_exact_controllability(A, B))
        return rank, rank == n
    C = controllability_matrix(A, inputs)
    sv = np.linalg.svd(C, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0, n == 0
    rank = int(np.count_nonzero(sv > tol * sv[0] * max(C.shape)))
    return rank, rank == n


# -- structural control -------------------------------------------------------


def hopcroft_karp(adj: Sequence[Sequence[int]], n_right: int) -> list:
    """Maximum bipartite matching; returns ``match_left`` (-1 where unmatched).

    ``adj[u]`` lists right vertices adjacent to left vertex ``u``.
    """
    n_left = len(adj)
    match_l = [-1] * n_left
    match_r = [-1] * n_right
    inf = n_left + 1

    while True:
        dist = [inf] * n_left
        queue = deque()
        for u in range(n_left):
            if match_l[u] == -1:
                dist[u] = 0
                queue.append(u)
        found = False
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                w = match_r[v]
                if w == -1:
                    found = True
                elif dist[w] == inf:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        if not found:
            return match_l

        # iterative DFS along the layered graph
        ptr = [0] * n_left
        for root in range(n_left):
            if match_l[root] != -1:
                continue
            stack = [root]
            path_v: list = []
            while stack:
                u = stack[-1]
                advanced = False
                while ptr[u] < len(adj[u]):
                    v = adj[u][ptr[u]]
                    ptr[u] += 1
                    w = match_r[v]
                    if w == -1:
                        path_v.append(v)
                        for uu, vv in zip(stack, path_v):
                            match_l[uu] = vv
                            match_r[vv] = uu
                        stack = []
                        advanced = True
                        break
                    if dist[w] == dist[u] + 1:
                        path_v.append(v)
                        stack.append(w)
                        advanced = True
                        break
                if not advanced:
                    dist[u] = inf
                    stack.pop()
                    if path_v:
                        path_v.pop()


@dataclass
class MatchingResult:
    matching_size: int
    matched_edges: list
    driver_nodes: list
    n_nodes: int

    @property
    def n_drivers(self) -> int:
        return len(self.driver_nodes)

    @property
    def n_D(self) -> float:
        return self.n_drivers / self.n_nodes


def maximum_matching(g: Graph) -> MatchingResult:
    """Maximum matching of the out-copy/in-copy bipartite graph.

    Driver nodes are those whose in-copy is unmatched; when the matching is
    perfect the first node is used so that at least one driver remains.
    Undirected graphs are read as two opposite arcs per edge.
    """
    if g.n == 0:
        raise ShapeError("empty graph")
    arcs = [(u, v) for u, v, _ in g.edges]
    if not g.directed:
        log.info("undirected graph symmetrized into %d arcs for matching", 2 * len(arcs))
        arcs += [(v, u) for u, v in arcs]
    idx = g.index
    adj: list = [[] for _ in range(g.n)]
    for u, v in arcs:
        adj[idx[u]].append(idx[v])
    for row in adj:
        row.sort()
    match_l = hopcroft_karp(adj, g.n)
    edges = [(g.nodes[u], g.nodes[v]) for u, v in enumerate(match_l) if v != -1]
    hit = {v for v in match_l if v != -1}
    drivers = [g.nodes[i] for i in range(g.n) if i not in hit]
    if not drivers:
        drivers = [g.nodes[0]]
    return MatchingResult(len(edges), edges, drivers, g.n)


def driver_fraction_analytic(gamma: float, k_mean: float) -> float:
    """Scale-free estimate ``exp(-(1 - 1/(gamma - 1)) k / 2)`` clamped to (0, 1]."""
    if not gamma > 1:
        raise DomainError(f"gamma must exceed 1, got {gamma}")
    if k_mean < 0:
        raise DomainError("mean degree must be nonnegative")
    if gamma <= GAMMA_CRITICAL:
        return 1.0
    val = math.exp(-0.5 * (1.0 - 1.0 / (gamma - 1.0)) * k_mean)
    return min(max(val, math.ulp(0.0)), 1.0)


@dataclass
class ControlReport:
    kalman_rank: int | None
    fully_controllable: bool | None
    matching_size: int
    driver_nodes: list
    n_D_exact: float
    n_D_analytic: float | None
    H: float
    gamma: float | None = None
    k_mean: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def control_report(
    g: Graph,
    inputs: InputAssignment | None = None,
    gamma: float | None = None,
    exact: bool = False,
    tol: float = 1e-10,
) -> ControlReport:
    """Kalman rank (when inputs are given), matching drivers and the analytic n_D.

    Without ``gamma`` the exponent is fitted from the graph's degree
    histogram when it has enough support; otherwise ``n_D_analytic`` is None.
    """
    from .stationary import fit_power_law

    stats = degree_stats(g)
    rank = full = None
    if inputs is not None:
        rank, full = kalman_rank(g.adjacency_matrix(), inputs, tol=tol, exact=exact)
    match = maximum_matching(g)
    if gamma is None:
        try:
            gamma = fit_power_law(stats.histogram).gamma_hat
        except FitError:
            gamma = None
    analytic = None
    if gamma is not None and gamma > 1:
        analytic = driver_fraction_analytic(gamma, stats.mean_degree)
    return ControlReport(
        kalman_rank=rank,
        fully_controllable=full,
        matching_size=match.matching_size,
        driver_nodes=match.driver_nodes,
        n_D_exact=match.n_D,
        n_D_analytic=analytic,
        H=stats.heterogeneity,
        gamma=gamma,
        k_mean=stats.mean_degree,
    )
