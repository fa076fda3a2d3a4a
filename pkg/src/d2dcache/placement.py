"""Probabilistic content placement.

S-1 maximises the approximated average successful LoS reception
probability (ASLP); S-2 is the cache-hit maximising baseline. Both reduce
to a separable concave program with a box constraint per file and one
budget constraint, solved by bisection on the Lagrange multiplier.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import wrightomega

from .errors import BracketError, ConfigurationError
from .model import ContentLibrary, DerivedConstants, NetworkConfig

ASLP_OPTIMAL = "aslp-optimal"
HIT_MAX_BASELINE = "hit-max-baseline"
CUSTOM = "custom"

MU_LOW = 1e-300
MAX_BISECTION_ITER = 200


@dataclass(frozen=True)
class CachingPolicy:
    q: np.ndarray
    policy_kind: str = CUSTOM
    mu_star: float | None = None
    iterations: int = 0

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.ndim != 1:
            raise ValueError("caching vector must be one-dimensional")
        if np.any(q < 0) or np.any(q > 1):
            raise ValueError("caching probabilities must lie in [0, 1]")
        q.flags.writeable = False
        object.__setattr__(self, "q", q)

    @classmethod
    def constant(cls, N: int, value: float) -> "CachingPolicy":
        return cls(np.full(N, float(value)), CUSTOM)


@dataclass(frozen=True)
class PlacementGeometry:
    d_hat: np.ndarray = field(repr=False)
    d_ic: np.ndarray = field(repr=False)


def _coverage_exponent(config: NetworkConfig, radius) -> np.ndarray:
    """``pi * lambda_u * (1 - rho) * r**2``: cacher mass of a disk, per unit q."""
    return math.pi * config.cacher_density_per_q * np.square(radius)


def qos_distance(gain: float, threshold, interference: float, noise: float,
                 alpha: float) -> np.ndarray:
    """Largest link length meeting ``threshold`` without fading:
    ``(gain / (T * (I + N)))**(1/alpha)``, +inf for ``T == 0``."""
    t = np.asarray(threshold, dtype=float)
    with np.errstate(divide="ignore"):
        return np.power(gain / (t * (interference + noise)), 1.0 / alpha)


def placement_distances(constants: DerivedConstants, config: NetworkConfig,
                        library: ContentLibrary) -> PlacementGeometry:
    d_hat = qos_distance(config.G_m**2, constants.thresholds, constants.i_bar,
                         constants.n_hat, config.alpha_L)
    d_ic = np.minimum(d_hat, min(config.D_L, config.D_R))
    return PlacementGeometry(d_hat=d_hat, d_ic=d_ic)


def slp_closed_form(q_i, d_ic, config: NetworkConfig):
    return -np.expm1(-_coverage_exponent(config, d_ic) * np.asarray(q_i, dtype=float))


def aslp(q, geometry: PlacementGeometry, library: ContentLibrary,
         config: NetworkConfig) -> float:
    q = np.asarray(q.q if isinstance(q, CachingPolicy) else q, dtype=float)
    if q.shape != (library.N,) or geometry.d_ic.shape != (library.N,):
        raise ValueError(f"expected {library.N} caching probabilities, got shape {q.shape}")
    return float(np.dot(library.popularity, slp_closed_form(q, geometry.d_ic, config)))


def cache_hit_objective(q, library: ContentLibrary, config: NetworkConfig) -> float:
    """Hit probability of S-2: self cache, or a cacher within ``D_R``."""
    q = np.asarray(q.q if isinstance(q, CachingPolicy) else q, dtype=float)
    a = _coverage_exponent(config, config.D_R)
    return float(np.dot(library.popularity, 1.0 - (1.0 - q) * np.exp(-a * q)))


def q_of_log_mu(log_mu: float, geometry: PlacementGeometry, library: ContentLibrary,
                config: NetworkConfig) -> np.ndarray:
    a = _coverage_exponent(config, geometry.d_ic)
    beta = library.popularity
    q = np.zeros(library.N)
    ok = a > 0
    q[ok] = (np.log(beta[ok] * a[ok]) - log_mu) / a[ok]
    return np.clip(q, 0.0, 1.0)


def q_of_mu(mu: float, geometry: PlacementGeometry, library: ContentLibrary,
            config: NetworkConfig) -> np.ndarray:
    """Clamped KKT stationary point of the ASLP Lagrangian for multiplier ``mu``.

    Files whose LoS coverage radius is zero get ``q_i = 0``.
    """
    if not mu > 0:
        raise ValueError(f"multiplier must be positive, got {mu!r}")
    return q_of_log_mu(math.log(mu), geometry, library, config)


def _bisect_budget(q_given: Callable[[float], np.ndarray], log_mu_high: float,
                   budget: float, tol: float) -> tuple[np.ndarray, float, int]:
    """Find log(mu) with ``sum(q_given(log_mu)) == budget`` (sum is nonincreasing)."""
    excess = lambda lm: q_given(lm).sum() - budget  # noqa: E731
    hi = log_mu_high
    if excess(hi) > tol:
        raise BracketError("budget not exhausted at the upper multiplier bound")
    lo = math.log(MU_LOW)
    for _ in range(60):
        if excess(lo) >= 0:
            break
        lo = hi - 2.0 * (hi - lo)
    else:
        raise BracketError("could not find a multiplier small enough to fill the cache")
    for it in range(1, MAX_BISECTION_ITER + 1):
        mid = 0.5 * (lo + hi)
        e = excess(mid)
        if abs(e) <= tol:
            return q_given(mid), mid, it
        if e > 0:
            lo = mid
        else:
            hi = mid
    raise BracketError(f"bisection did not reach tolerance {tol} in {MAX_BISECTION_ITER} steps")


def _solve(q_given, log_mu_high, servable, budget, tol, kind):
    N = servable.size
    if budget <= 0:
        return CachingPolicy(np.zeros(N), kind)
    if servable.sum() <= budget:
        # Caching every servable file is feasible; constraint inactive.
        return CachingPolicy(servable.astype(float), kind, mu_star=0.0)
    q, log_mu, iters = _bisect_budget(q_given, log_mu_high, budget, tol)
    return CachingPolicy(q, kind, mu_star=math.exp(log_mu), iterations=iters)


def optimize_caching(geometry: PlacementGeometry, library: ContentLibrary,
                     config: NetworkConfig, tol: float = 1e-10) -> CachingPolicy:
    """ASLP-optimal caching probabilities (system S-1)."""
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    a = _coverage_exponent(config, geometry.d_ic)
    servable = a > 0
    log_hi = float(np.max(np.log(library.popularity[servable] * a[servable]))) if servable.any() else 0.0
    return _solve(lambda lm: q_of_log_mu(lm, geometry, library, config),
                  log_hi, servable, library.M_d, tol, ASLP_OPTIMAL)


def hitmax_q_of_log_mu(log_mu: float, library: ContentLibrary,
                       config: NetworkConfig) -> np.ndarray:
    # Stationarity of beta*(1 - (1-q) e^{-aq}) - mu*q: with u = 1 + a - a q,
    # u + ln u = ln(mu/beta) + 1 + a.
    a = float(_coverage_exponent(config, config.D_R))
    u = wrightomega(log_mu - np.log(library.popularity) + 1.0 + a).real
    return np.clip((1.0 + a - u) / a, 0.0, 1.0)


def baseline_hitmax_caching(library: ContentLibrary, config: NetworkConfig,
                            tol: float = 1e-10) -> CachingPolicy:
    """Cache-hit maximising placement (system S-2), D2D radius ``D_R``."""
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    a = float(_coverage_exponent(config, config.D_R))
    log_hi = float(np.log(library.popularity.max() * (1.0 + a)))
    servable = np.ones(library.N, dtype=bool)
    return _solve(lambda lm: hitmax_q_of_log_mu(lm, library, config),
                  log_hi, servable, library.M_d, tol, HIT_MAX_BASELINE)


def marginal_gains(q, geometry: PlacementGeometry, library: ContentLibrary,
                   config: NetworkConfig) -> np.ndarray:
    """d ASLP / d q_i; equal across interior coordinates at the optimum."""
    a = _coverage_exponent(config, geometry.d_ic)
    return library.popularity * a * np.exp(-a * np.asarray(q, dtype=float))
