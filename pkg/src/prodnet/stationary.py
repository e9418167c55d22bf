"""Closed-form stationary degree distribution and power-law fitting.

With exit rate q, mean degree nu, entrant-edge fraction delta, growth g and
rewiring fraction r the long-run degree density is

    p(k) = lam (k + R)^(-1-S) [G(1+S, R/s) - G(1+S, (R+k)/s)],  s = nu (1 - delta)

where G is the upper incomplete gamma function.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from .errors import DomainError, FitError, SingularParametersError

_EPS = 1e-16
_TINY = 1e-300
_MAXIT = 10_000
SINGULAR_TOL = 1e-12


# -- upper incomplete gamma -------------------------------------------------


def _lower_series(a: float, x: float) -> float:
    # gamma(a, x) = e^-x x^a sum_n x^n / (a (a+1) ... (a+n))
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAXIT):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x))


def _upper_continued_fraction(a: float, x: float) -> float:
    # modified Lentz evaluation of the Legendre continued fraction
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x)) * h


def _uigamma(a: float, x: float) -> float:
    if not a > 0:
        raise DomainError(f"upper incomplete gamma needs a > 0, got {a}")
    if x < 0:
        raise DomainError(f"upper incomplete gamma needs x >= 0, got {x}")
    if x == 0:
        return math.gamma(a)
    if x < a + 1.0:
        return math.gamma(a) - _lower_series(a, x)
    return _upper_continued_fraction(a, x)


def upper_incomplete_gamma(a, x):
    """Unregularized upper incomplete gamma, integral of t^(a-1) e^-t over [x, inf).

    Power series below ``x = a + 1``, continued fraction above. Accepts
    scalars or arrays (broadcast).
    """
    if np.ndim(a) == 0 and np.ndim(x) == 0:
        return _uigamma(float(a), float(x))
    return np.vectorize(_uigamma, otypes=[float])(a, x)


# -- closed form ------------------------------------------------------------


@dataclass(frozen=True)
class StationaryParams:
    q: float
    nu: float
    delta: float
    g: float
    r: float

    def __post_init__(self):
        for name in ("q", "delta", "g", "r"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {val}")
        if not self.nu > 0:
            raise DomainError(f"nu must be positive, got {self.nu}")

    @property
    def scale(self) -> float:
        """nu (1 - delta), the mean of the entrant degree law."""
        return self.nu * (1.0 - self.delta)


CALIBRATION = StationaryParams(q=0.24, nu=1.06, delta=0.75, g=0.04, r=0.18)


@dataclass(frozen=True)
class StationaryDerived:
    R: float
    S: float
    lambda_norm: float


def compute_RS(p: StationaryParams) -> StationaryDerived:
    if p.delta >= 1.0:
        raise SingularParametersError("delta must be < 1")
    qg = p.q + p.g
    den = p.delta * qg * (1.0 - p.r) - p.q * p.r * (1.0 - p.q)
    if abs(den) < SINGULAR_TOL:
        raise SingularParametersError(f"R/S denominator vanishes ({den:.3g})")
    R = (p.nu * p.delta * qg * p.r + p.q * p.r * (1.0 - p.q)) / den
    S = qg * (1.0 - p.q) / den
    s = p.scale
    lam = math.exp(R / s) * S * s**S
    return StationaryDerived(R=R, S=S, lambda_norm=lam)


def stationary_pmf(k, p: StationaryParams, derived: StationaryDerived | None = None):
    """Density p(k) on a scalar or grid of k >= 0."""
    d = compute_RS(p) if derived is None else derived
    s = p.scale
    if s <= 0:
        raise SingularParametersError("nu (1 - delta) must be positive")
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0):
        raise DomainError("k must be nonnegative")
    if d.R < 0:
        raise SingularParametersError(f"R = {d.R:.6g} < 0 has no valid gamma argument")
    if d.S <= -1:
        raise SingularParametersError(f"S = {d.S:.6g} gives a nonpositive gamma order")
    head = upper_incomplete_gamma(1.0 + d.S, d.R / s)
    tail = upper_incomplete_gamma(1.0 + d.S, (d.R + k_arr) / s)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = d.lambda_norm * (k_arr + d.R) ** (-1.0 - d.S) * (head - tail)
    # the bracket vanishes identically at k = 0
    out = np.where(k_arr == 0, 0.0, np.maximum(out, 0.0))
    return float(out) if np.ndim(k) == 0 else out


def stationary_grid(p: StationaryParams, k_max: int, k_min: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Integer grid ``k_min..k_max`` and the density renormalized to a pmf on it."""
    if k_max < k_min:
        raise DomainError("k_max must be >= k_min")
    ks = np.arange(k_min, k_max + 1)
    dens = stationary_pmf(ks, p)
    total = dens.sum()
    if total <= 0:
        raise SingularParametersError("density has no mass on the grid")
    return ks, dens / total


# -- power-law fits ---------------------------------------------------------


@dataclass
class PowerLawFit:
    gamma_hat: float
    r_squared: float
    k_min: int
    k_max: int
    n_points: int
    method: str
    intercept: float
    residuals: np.ndarray

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["residuals"] = [float(v) for v in self.residuals]
        return doc


def _pairs(data) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(data, Mapping):
        ks = np.array(list(data.keys()), dtype=float)
        ps = np.array(list(data.values()), dtype=float)
    else:
        ks, ps = (np.asarray(v, dtype=float) for v in data)
    if ks.shape != ps.shape:
        raise FitError("degree and mass arrays differ in length")
    order = np.argsort(ks)
    return ks[order], ps[order]


def fit_power_law(data, k_min: int = 2, k_max: int | None = None, method: str = "ls") -> PowerLawFit:
    """Exponent ``gamma`` of ``P(k) ~ k^-gamma`` (reported positive).

    ``data`` is a ``{degree: mass}`` mapping or a ``(degrees, masses)``
    pair; masses may be counts or probabilities. ``method="ls"`` regresses
    log mass on log degree; ``method="mle"`` uses the discrete
    continuous-approximation estimator ``1 + W / sum w ln(k / (k_min - 1/2))``.
    """
    if method not in ("ls", "mle"):
        raise ValueError("method must be 'ls' or 'mle'")
    ks, ps = _pairs(data)
    mask = (ks >= k_min) & (ks > 0) & (ps > 0)
    if k_max is not None:
        mask &= ks <= k_max
    if np.count_nonzero(mask) < 5:
        raise FitError(f"need >= 5 degrees with positive mass at k >= {k_min}, got {np.count_nonzero(mask)}")
    k, m = ks[mask], ps[mask]
    x, y = np.log(k), np.log(m)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    if method == "ls":
        gamma = -float(slope)
    else:
        if k_min < 1:
            raise FitError("MLE needs k_min >= 1")
        gamma = 1.0 + m.sum() / float(np.sum(m * np.log(k / (k_min - 0.5))))
    return PowerLawFit(
        gamma_hat=gamma,
        r_squared=r2,
        k_min=int(k_min),
        k_max=int(k.max()),
        n_points=int(k.size),
        method=method,
        intercept=float(intercept),
        residuals=resid,
    )


def ks_distance(pmf_a: Mapping, pmf_b: Mapping) -> float:
    """Largest gap between the CDFs of two pmfs on the union of their supports."""
    support = sorted(set(pmf_a) | set(pmf_b))
    ta = sum(pmf_a.values())
    tb = sum(pmf_b.values())
    ca = cb = gap = 0.0
    for k in support:
        ca += pmf_a.get(k, 0.0) / ta
        cb += pmf_b.get(k, 0.0) / tb
        gap = max(gap, abs(ca - cb))
    return gap
