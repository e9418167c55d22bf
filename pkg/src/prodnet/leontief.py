"""Step matrices and Leontief inverses.

One evolution step augments the n-sector input matrix with a row and column
for the entering firm. ``B`` carries the expected links of the entrant,
``C`` the expected loss of links through exits, and ``E = B - C`` the net
change. The dynamic Leontief inverse is ``(I - (A_s + E))^{-1}``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .errors import DivergenceError, InvalidRatesError, InvalidSizeError, NonConvergenceError, ShapeError
from .netcore import Graph, attachment_distribution, deletion_distribution

MODES = ("text", "displayed")
NEW_NODE = "__new__"

# Default elasticity attached to the entrant's border before scaling by P_a.
DEFAULT_BORDER = 0.2
# Largest intermediate-input share of any row; the remaining 0.2 is labor.
DEFAULT_INTERMEDIATE_SHARE = 0.8
CONDITION_WARN = 1e12


@dataclass(frozen=True)
class StepSet:
    A_s: np.ndarray
    B: np.ndarray
    C: np.ndarray
    E: np.ndarray
    m_rate: Fraction
    n_rate: Fraction
    mode: str
    nodes: tuple

    @property
    def deletion_ratio(self) -> Fraction:
        return self.n_rate / self.m_rate

    @property
    def M(self) -> np.ndarray:
        """Net coefficient matrix ``A_s + B - C``."""
        return self.A_s + self.E


@dataclass(frozen=True)
class LeontiefResult:
    L: np.ndarray
    row_sums: np.ndarray
    row_sum_variance: float
    spectral_radius: float

    @property
    def column_sums(self) -> np.ndarray:
        return self.L.sum(axis=0)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    return Fraction(x)


def share_weight(g: Graph, intermediate_share: float = DEFAULT_INTERMEDIATE_SHARE) -> float:
    """Uniform edge weight that makes the busiest row sum to ``intermediate_share``."""
    kmax = int(g.degree_array.max()) if g.n else 0
    if kmax == 0:
        raise InvalidSizeError("graph has no edges")
    return intermediate_share / kmax


def build_step_set(
    g: Graph,
    edge_weight: float | None = None,
    m_rate=1,
    n_rate=Fraction(1, 2),
    mode: str = "text",
    border: float = DEFAULT_BORDER,
    protected: Iterable = (),
) -> StepSet:
    """Assemble ``(A_s, B, C, E)`` for one step of entry and exit.

    ``edge_weight=None`` keeps the graph's own weights. In ``text`` mode the
    entrant's border is ``border * P_a`` and ``C = diag(P_d) A_s`` with
    ``P_d = (n/m) * p_d``. ``displayed`` mode rescales both so that a
    regular graph reproduces the worked cycle matrices (border ``border``,
    C entries ``(N-1) P_d a_ij``).
    """
    m_rate, n_rate = _as_fraction(m_rate), _as_fraction(n_rate)
    if not m_rate > n_rate >= 0:
        raise InvalidRatesError(f"need m_rate > n_rate >= 0, got m={m_rate}, n={n_rate}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if g.n == 0:
        raise InvalidSizeError("empty graph")

    if edge_weight is not None:
        g = g.with_weight(edge_weight)
    n = g.n
    A = g.adjacency_matrix(weighted=True)

    A_s = np.zeros((n + 1, n + 1))
    A_s[:n, :n] = A

    p_add = attachment_distribution(g).as_array(g.nodes)
    ratio = n_rate / m_rate
    if ratio > 0:
        p_del = deletion_distribution(g, float(ratio), protected).as_array(g.nodes)
    else:
        p_del = np.zeros(n)

    if mode == "text":
        border_vals = border * p_add
        del_scale = p_del
    else:
        border_vals = border * n * p_add
        del_scale = (n - 1) * p_del

    B = np.zeros_like(A_s)
    B[:n, n] = border_vals
    B[n, :n] = border_vals
    C = np.zeros_like(A_s)
    C[:n, :n] = del_scale[:, None] * A

    return StepSet(
        A_s=A_s,
        B=B,
        C=C,
        E=B - C,
        m_rate=m_rate,
        n_rate=n_rate,
        mode=mode,
        nodes=tuple(g.nodes) + (NEW_NODE,),
    )


def spectral_radius(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def _check_square(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")
    return M


def _result(L: np.ndarray, rho: float) -> LeontiefResult:
    rs = L.sum(axis=1)
    return LeontiefResult(L=L, row_sums=rs, row_sum_variance=float(rs.var()), spectral_radius=rho)


def leontief_inverse(M) -> LeontiefResult:
    """Dense ``(I - M)^{-1}``; refuses matrices whose power series diverges."""
    M = _check_square(M)
    rho = spectral_radius(M)
    if rho >= 1.0:
        raise DivergenceError(f"spectral radius {rho:.6g} >= 1", rho)
    I_M = np.eye(M.shape[0]) - M
    cond = np.linalg.cond(I_M)
    if cond > CONDITION_WARN:
        warnings.warn(f"I - M is ill-conditioned (cond ~ {cond:.3g})", RuntimeWarning, stacklevel=2)
    L = np.linalg.solve(I_M, np.eye(M.shape[0]))
    return _result(L, rho)


def neumann_series(M, tol: float = 1e-12, k_max: int = 10_000) -> tuple[LeontiefResult, int]:
    """Partial sums of ``sum_k M^k``; returns the result and the number of terms used.

    Stops once the newest term's largest entry drops below ``tol``.
    """
    M = _check_square(M)
    rho = spectral_radius(M)
    if rho >= 1.0:
        raise DivergenceError(f"spectral radius {rho:.6g} >= 1", rho)
    n = M.shape[0]
    total = np.eye(n)
    term = np.eye(n)
    terms = 1
    while True:
        term = term @ M
        size = float(np.max(np.abs(term))) if n else 0.0
        if size < tol:
            break
        if terms >= k_max:
            raise NonConvergenceError(
                f"Neumann series not converged after {terms} terms (last term {size:.3g})",
                residual=size,
                terms=terms,
            )
        total = total + term
        terms += 1
    return _result(total, rho), terms


def step_inverses(step: StepSet) -> tuple[LeontiefResult, LeontiefResult]:
    """Static inverse of the base economy and dynamic inverse of the step."""
    n = step.A_s.shape[0] - 1
    return leontief_inverse(step.A_s[:n, :n]), leontief_inverse(step.M)


def step_economy(step: StepSet, gamma_pref=None):
    """Economy whose labor shares close the constant-returns identity row by row."""
    from .economy import Economy

    A, B, C = step.A_s, step.B, step.C
    alpha = 1.0 - A.sum(axis=1) - B.sum(axis=1) + C.sum(axis=1)
    size = A.shape[0]
    if gamma_pref is None:
        gamma_pref = np.full(size, 1.0 / size)
    return Economy(
        A=A.copy(),
        alpha=alpha,
        b=B.copy(),
        c=C.copy(),
        beta=np.ones(size),
        gamma_pref=np.asarray(gamma_pref, dtype=float),
    )
