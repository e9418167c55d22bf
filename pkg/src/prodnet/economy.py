"""Cobb-Douglas economy with entering and exiting suppliers.

Firm i produces with labor share ``alpha_i``, elasticities ``a_ij`` toward
existing suppliers, ``b_ip`` toward entrants and ``c_ik`` toward exiting
firms. Constant returns require

    alpha_i + sum_p b_ip - sum_k c_ik + sum_j a_ij = 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, NonInvertibleError, ShapeError
from .leontief import StepSet, leontief_inverse

IDENTITY_TOL = 1e-10
SHOCK_LAWS = ("normal", "lognormal-of-psi")


@dataclass
class Economy:
    A: np.ndarray
    alpha: np.ndarray
    b: np.ndarray
    c: np.ndarray
    beta: np.ndarray
    gamma_pref: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.alpha = np.asarray(self.alpha, dtype=float)
        n = self.A.shape[0]
        self.b = _as_2d(self.b, n)
        self.c = _as_2d(self.c, n)
        self.beta = np.asarray(self.beta, dtype=float)
        self.gamma_pref = np.asarray(self.gamma_pref, dtype=float)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "alpha": self.alpha.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "beta": self.beta.tolist(),
            "gamma_pref": self.gamma_pref.tolist(),
        }

    @classmethod
    def from_dict(cls, doc) -> "Economy":
        n = len(doc["A"])
        return cls(
            A=doc["A"],
            alpha=doc["alpha"],
            b=doc.get("b", np.zeros((n, 0))),
            c=doc.get("c", np.zeros((n, 0))),
            beta=doc.get("beta", np.ones(n)),
            gamma_pref=doc.get("gamma_pref", np.full(n, 1.0 / n)),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> "Economy":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _as_2d(x, n: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.size == 0:
        return np.zeros((n, 0))
    return arr.reshape(n, -1) if arr.ndim == 1 else arr


@dataclass
class ValidationReport:
    ok: bool
    residuals: np.ndarray
    problems: list = field(default_factory=list)


def validate_economy(e: Economy, tol: float = IDENTITY_TOL) -> ValidationReport:
    """Check constant returns, preference normalization and elasticity bounds.

    Residuals are ``alpha_i + sum b - sum c + sum a - 1`` per row.
    """
    n = e.n
    if e.A.shape != (n, n):
        raise ShapeError(f"A must be square, got {e.A.shape}")
    for name, vec in (("alpha", e.alpha), ("beta", e.beta), ("gamma_pref", e.gamma_pref)):
        if vec.shape != (n,):
            raise ShapeError(f"{name} has shape {vec.shape}, expected ({n},)")
    for name, mat in (("b", e.b), ("c", e.c)):
        if mat.ndim != 2 or mat.shape[0] != n:
            raise ShapeError(f"{name} has shape {mat.shape}, expected ({n}, *)")

    residuals = e.alpha + e.b.sum(axis=1) - e.c.sum(axis=1) + e.A.sum(axis=1) - 1.0
    problems = []
    bad = np.flatnonzero(np.abs(residuals) > tol)
    if bad.size:
        problems.append(f"constant returns violated in rows {bad.tolist()}")
    if abs(e.gamma_pref.sum() - 1.0) > tol:
        problems.append(f"preference shares sum to {e.gamma_pref.sum():.12g}")
    if np.any(e.gamma_pref < 0):
        problems.append("negative preference share")
    for name, arr in (("alpha", e.alpha), ("A", e.A), ("b", e.b), ("c", e.c)):
        if arr.size and (arr.min() < -tol or arr.max() > 1 + tol):
            problems.append(f"{name} has elasticities outside [0, 1]")
    return ValidationReport(ok=not problems, residuals=residuals, problems=problems)


@dataclass
class Allocation:
    intermediate: np.ndarray
    added: np.ndarray
    deleted: np.ndarray
    labor: np.ndarray


def optimal_allocations(
    e: Economy,
    prices,
    wage: float,
    outputs,
    added_prices=None,
    deleted_prices=None,
) -> Allocation:
    """Profit-maximizing input demands given prices, the wage and outputs.

    ``x_ij = p_i a_ij y_i / p_j`` and likewise for entrant and exiting
    inputs; ``L_i = p_i alpha_i y_i / w``. Entrant/exiting prices default to
    ``prices`` when ``b``/``c`` are square.
    """
    p = np.asarray(prices, dtype=float)
    y = np.asarray(outputs, dtype=float)
    pp = _default_prices(p, e.b, added_prices)
    pk = _default_prices(p, e.c, deleted_prices)
    if wage <= 0 or np.any(p <= 0) or np.any(y <= 0) or np.any(pp <= 0) or np.any(pk <= 0):
        raise DomainError("prices, wage and outputs must be strictly positive")
    if p.shape != (e.n,) or y.shape != (e.n,):
        raise ShapeError("prices and outputs must have one entry per sector")
    if e.b.shape[1] != pp.size or e.c.shape[1] != pk.size:
        raise ShapeError("entrant/exiting prices do not match the b/c column counts")

    revenue = (p * y)[:, None]
    return Allocation(
        intermediate=revenue * e.A / p[None, :],
        added=revenue * e.b / pp[None, :],
        deleted=revenue * e.c / pk[None, :],
        labor=(p * e.alpha * y) / wage,
    )


def _default_prices(p: np.ndarray, block: np.ndarray, given) -> np.ndarray:
    if given is not None:
        return np.asarray(given, dtype=float)
    if block.shape[1] == 0:
        return np.ones(0)
    return p


def relative_prices(step, z) -> np.ndarray:
    """Log prices relative to the wage: ``p_hat = -(I - (A_s + B - C))^{-1} z``.

    ``step`` is a :class:`StepSet` or any square coefficient matrix; ``z``
    holds log productivities. ``z = 0`` gives the homogeneous solution 0.
    """
    M = step.M if isinstance(step, StepSet) else np.asarray(step, dtype=float)
    z = np.asarray(z, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or z.shape != (M.shape[0],):
        raise ShapeError(f"coefficient matrix {M.shape} and z {z.shape} do not conform")
    try:
        L = leontief_inverse(M).L
    except np.linalg.LinAlgError as exc:
        raise NonInvertibleError(str(exc)) from exc
    return -L @ z


@dataclass(frozen=True)
class ShockModel:
    """Idiosyncratic log-productivity shocks with standard deviation ``sigma``.

    ``lognormal-of-psi`` draws psi lognormal with mean 1 and std ``sigma`` and
    returns ``log(psi)``; ``normal`` draws the log shock directly.
    """

    sigma: float
    distribution: str = "normal"
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise DomainError("sigma must be >= 0")
        if self.distribution not in SHOCK_LAWS:
            raise ValueError(f"distribution must be one of {SHOCK_LAWS}")

    def sample(self, size, rng: np.random.Generator | None = None) -> np.ndarray:
        rng = np.random.default_rng(self.seed) if rng is None else rng
        if self.distribution == "normal":
            return rng.normal(0.0, self.sigma, size)
        s2 = np.log1p(self.sigma**2)
        return rng.normal(-s2 / 2, np.sqrt(s2), size)
