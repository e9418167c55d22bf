"""Aggregate volatility from Leontief structure, plus Monte Carlo over evolving networks."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import norm

from .errors import ConfigurationError, DivergenceError, DomainError, ShapeError
from .evolve import EvolutionConfig, evolve
from .leontief import (
    DEFAULT_BORDER,
    DEFAULT_INTERMEDIATE_SHARE,
    build_step_set,
    leontief_inverse,
    share_weight,
)
from .netcore import Graph

log = logging.getLogger(__name__)

VARIANTS = ("uniform", "preference-weighted")
MAX_SKIP_FRACTION = 0.10


def _square(L) -> np.ndarray:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ShapeError(f"Leontief inverse must be square, got {L.shape}")
    return L


def centralities(L, axis: str = "column") -> np.ndarray:
    """``v_i = sum_j l_ji`` (column sums) or the row sums ``sum_j l_ij``."""
    L = _square(L)
    if axis == "column":
        return L.sum(axis=0)
    if axis == "row":
        return L.sum(axis=1)
    raise ValueError("axis must be 'column' or 'row'")


def log_outputs(L, eps=None) -> np.ndarray:
    """Sector log outputs ``log y_i = sum_j l_ij eps_j``; ``eps`` defaults to ones."""
    L = _square(L)
    eps = np.ones(L.shape[0]) if eps is None else np.asarray(eps, dtype=float)
    if eps.shape != (L.shape[0],):
        raise ShapeError(f"shock vector has shape {eps.shape}, expected ({L.shape[0]},)")
    return L @ eps


def domar_weights(L, variant: str = "uniform", gamma_pref=None) -> np.ndarray:
    L = _square(L)
    if variant == "uniform":
        return L.sum(axis=0) / L.shape[0]
    if variant != "preference-weighted":
        raise ValueError(f"variant must be one of {VARIANTS}")
    if gamma_pref is None:
        raise DomainError("preference-weighted Domar weights need gamma_pref")
    gamma = np.asarray(gamma_pref, dtype=float)
    if gamma.shape != (L.shape[0],):
        raise ShapeError("gamma_pref must have one entry per sector")
    if abs(gamma.sum() - 1.0) > 1e-10 or np.any(gamma < 0):
        raise DomainError("gamma_pref must be a nonnegative vector summing to 1")
    return gamma @ L


@dataclass
class VolatilityReport:
    v: np.ndarray
    lambda_domar: np.ndarray
    var_v: float
    sigma_agg: float
    sigma_norm: float
    n: int
    alpha_bar: float
    variant: str
    centrality: str = "column"

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["v"] = self.v.tolist()
        doc["lambda_domar"] = self.lambda_domar.tolist()
        return doc


def aggregate_volatility(
    sigma: float,
    L,
    alpha_bar: float,
    variant: str = "uniform",
    gamma_pref=None,
    centrality: str = "column",
) -> VolatilityReport:
    """Both volatility figures for shocks of std ``sigma``.

    ``sigma_agg = sigma / sqrt(n) * sqrt(alpha^-2 + var(v))`` and
    ``sigma_norm = sigma * ||lambda||``. They coincide only in special cases
    and are reported side by side.
    """
    if sigma < 0:
        raise DomainError("sigma must be >= 0")
    if not 0 < alpha_bar <= 1:
        raise DomainError(f"labor share must lie in (0, 1], got {alpha_bar}")
    L = _square(L)
    n = L.shape[0]
    v = centralities(L, centrality)
    var_v = float(v.var())
    lam = domar_weights(L, variant, gamma_pref)
    return VolatilityReport(
        v=v,
        lambda_domar=lam,
        var_v=var_v,
        sigma_agg=sigma / math.sqrt(n) * math.sqrt(alpha_bar**-2 + var_v),
        sigma_norm=sigma * float(np.linalg.norm(lam)),
        n=n,
        alpha_bar=alpha_bar,
        variant=variant,
        centrality=centrality,
    )


# -- Monte Carlo ------------------------------------------------------------


@dataclass(frozen=True)
class EconomyTemplate:
    """How an evolved graph is turned into a step economy for one trial.

    ``edge_weight=None`` applies the share rule: every edge gets
    ``intermediate_share / k_max``.
    """

    edge_weight: float | None = None
    intermediate_share: float = DEFAULT_INTERMEDIATE_SHARE
    m_rate: Fraction = Fraction(1)
    n_rate: Fraction = Fraction(1, 2)
    mode: str = "text"
    border: float = DEFAULT_BORDER
    centrality: str = "row"

    def var_centrality(self, g: Graph) -> float:
        w = share_weight(g, self.intermediate_share) if self.edge_weight is None else self.edge_weight
        # evolved graphs routinely hold orphaned nodes; their exclusion is expected here
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            step = build_step_set(g, w, self.m_rate, self.n_rate, self.mode, self.border)
        L = leontief_inverse(step.M).L
        return float(centralities(L, self.centrality).var())

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["m_rate"] = str(self.m_rate)
        doc["n_rate"] = str(self.n_rate)
        return doc


@dataclass
class MonteCarloReport:
    samples: list
    mu_hat: float
    sigma_hat: float
    qq_points: list
    trials: int
    seed: int
    skipped: int = 0
    target: tuple = (0.20, 0.02)
    distance_to_target: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _trial(args) -> float | None:
    evo, template, child_seed = args
    if isinstance(evo, Graph):
        g = evo
    else:
        g = evolve(evo, np.random.default_rng(child_seed)).final_graph
    try:
        return template.var_centrality(g)
    except DivergenceError as exc:
        log.info("trial skipped: spectral radius %.4g", exc.spectral_radius)
        return None


def normal_qq(samples, mu: float, sigma: float) -> list:
    """``(theoretical, empirical)`` pairs at plotting positions ``(i - 1/2) / n``."""
    emp = np.sort(np.asarray(samples, dtype=float))
    probs = (np.arange(1, emp.size + 1) - 0.5) / emp.size
    theo = mu + sigma * norm.ppf(probs)
    return [(float(a), float(b)) for a, b in zip(theo, emp)]


def monte_carlo_var_centrality(
    evo: EvolutionConfig | Graph,
    econ_template: EconomyTemplate | None = None,
    trials: int = 100,
    seed: int = 0,
    workers: int = 1,
) -> MonteCarloReport:
    """Distribution of ``var(v)`` over independently evolved networks.

    Passing a :class:`Graph` instead of a config freezes the network. Trial
    ``i`` uses the ``i``-th child of ``SeedSequence(seed)``, so results do
    not depend on ``workers``.
    """
    if trials < 2:
        raise ConfigurationError("need at least 2 trials")
    template = EconomyTemplate() if econ_template is None else econ_template
    children = np.random.SeedSequence(seed).spawn(trials)
    jobs = [(evo, template, child) for child in children]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_trial, jobs))
    else:
        results = [_trial(job) for job in jobs]

    samples = [r for r in results if r is not None]
    skipped = trials - len(samples)
    if skipped > MAX_SKIP_FRACTION * trials:
        raise ConfigurationError(f"{skipped}/{trials} trials diverged; economy template is unstable")
    if len(samples) < 2:
        raise ConfigurationError("fewer than two usable trials")

    ordered = np.sort(np.asarray(samples))
    mu = float(ordered.mean())
    sd = float(ordered.std(ddof=1))
    target = (0.20, 0.02)
    return MonteCarloReport(
        samples=samples,
        mu_hat=mu,
        sigma_hat=sd,
        qq_points=normal_qq(ordered, mu, sd),
        trials=trials,
        seed=seed,
        skipped=skipped,
        target=target,
        distance_to_target={"mu": mu - target[0], "sigma": sd - target[1]},
    )
