"""Network and content model: configuration, popularity, thresholds and
derived physical constants.

Everything in here is linear / SI. Decibel inputs are converted once, at
the config-loading boundary (see :mod:`d2dcache.experiments`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DivergentIntegralError

SPEED_OF_LIGHT = 299_792_458.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


LAPLACE_VARIANTS = ("corrected", "printed")


@dataclass(frozen=True)
class NetworkConfig:
    """Physical and topological parameters of the C-RAN + mmWave D2D network.

    Defaults reproduce the simulation table of the reference scenario; the
    few parameters it leaves open (beamwidth, cellular antenna gains,
    carrier frequencies) take the values listed in the README.
    Densities are per square metre, powers in watts, distances in metres.
    """

    lambda_u: float
    lambda_R: float = 10e-6
    rho: float = 0.5
    P_c: float = 0.1
    P_d: float = 2e-3
    P_b: float = 1.0
    f_c_cell: float = 1e9
    f_c_mm: float = 28e9
    B_c: float = 20e6
    B_d: float = 1e9
    alpha_c: float = 2.5
    alpha_L: float = 2.1
    alpha_N: float = 4.0
    D_L: float = 75.0
    D_R: float = 150.0
    G_m: float = db_to_linear(9.0)
    G_s: float = db_to_linear(-9.0)
    delta_theta: float = math.pi / 6
    G_T: float = 1.0
    G_R: float = 1.0
    N_o: float = dbm_to_watt(-178.0)
    F_N: float = db_to_linear(10.0)
    # RRH window; interference from RRHs beyond it is added as its mean.
    sim_radius: float = 2000.0
    # MU window around the typical user (D2D requesters, caches, interferers).
    d2d_window: float = 500.0
    laplace_variant: str = "corrected"

    def __post_init__(self):
        positive = ("lambda_u", "lambda_R", "P_c", "P_d", "B_c", "B_d",
                    "f_c_cell", "f_c_mm", "G_m", "G_s", "G_T", "G_R",
                    "N_o", "F_N", "D_L", "D_R", "sim_radius", "d2d_window")
        for name in positive:
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be positive and finite, got {value!r}")
        if not (math.isfinite(self.P_b) and self.P_b >= 0):
            raise ConfigurationError(f"P_b must be nonnegative, got {self.P_b!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ConfigurationError(f"rho must lie in [0, 1], got {self.rho!r}")
        if not 0.0 < self.delta_theta <= 2 * math.pi:
            raise ConfigurationError(
                f"delta_theta must lie in (0, 2*pi], got {self.delta_theta!r}")
        for name in ("alpha_c", "alpha_L", "alpha_N"):
            if getattr(self, name) <= 2.0:
                raise DivergentIntegralError(
                    f"{name} must exceed 2 for finite aggregate interference, "
                    f"got {getattr(self, name)!r}")
        if not self.alpha_L < self.alpha_N:
            raise ConfigurationError(
                f"alpha_L must be smaller than alpha_N (got {self.alpha_L}, {self.alpha_N})")
        if self.laplace_variant not in LAPLACE_VARIANTS:
            raise ConfigurationError(
                f"laplace_variant must be one of {LAPLACE_VARIANTS}, got {self.laplace_variant!r}")

    @property
    def wavelength_cell(self) -> float:
        return SPEED_OF_LIGHT / self.f_c_cell

    @property
    def wavelength_mm(self) -> float:
        return SPEED_OF_LIGHT / self.f_c_mm

    @property
    def cacher_density_per_q(self) -> float:
        """Density of inactive MUs; multiply by q_i for the file-i cacher PPP."""
        return self.lambda_u * (1.0 - self.rho)


@dataclass(frozen=True)
class ContentLibrary:
    """File library with Zipf popularity and per-file rate constraints.

    ``rates`` may be given as a single number (same constraint for every
    file) or as a sequence of length ``N``.
    """

    N: int = 100
    epsilon: float = 1.2
    rates: float | Sequence[float] = 1e9
    M_d: float = 2
    M_e: int = 50

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError(f"N must be a positive integer, got {self.N!r}")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ConfigurationError(f"epsilon must be >= 0, got {self.epsilon!r}")
        rates = self.rates
        if np.isscalar(rates):
            rates = (float(rates),) * int(self.N)
        else:
            rates = tuple(float(r) for r in rates)
        if len(rates) != self.N:
            raise ConfigurationError(f"rates has {len(rates)} entries, expected N={self.N}")
        if not all(math.isfinite(r) and r > 0 for r in rates):
            raise ConfigurationError("all rates must be positive and finite")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "N", int(self.N))
        if not 0 < self.M_d <= self.N:
            raise ConfigurationError(f"M_d must lie in (0, N], got {self.M_d!r}")
        if int(self.M_e) != self.M_e or not 0 <= self.M_e <= self.N:
            raise ConfigurationError(f"M_e must be an integer in [0, N], got {self.M_e!r}")
        object.__setattr__(self, "M_e", int(self.M_e))

    @cached_property
    def popularity(self) -> np.ndarray:
        beta = zipf_popularity(self.N, self.epsilon)
        beta.flags.writeable = False
        return beta

    @property
    def rate_array(self) -> np.ndarray:
        return np.asarray(self.rates, dtype=float)

    def edge_cloud_mask(self) -> np.ndarray:
        """Edge cloud holds the ``M_e`` most popular files."""
        mask = np.zeros(self.N, dtype=bool)
        mask[: self.M_e] = True
        return mask


@dataclass(frozen=True)
class GainPMF:
    """Distribution of the interfering-link antenna gain G'."""

    values: tuple[float, float, float]
    probs: tuple[float, float, float]

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        idx = np.searchsorted(np.cumsum(self.probs)[:-1], rng.random(size), side="right")
        return np.asarray(self.values)[idx]


@dataclass(frozen=True)
class DerivedConstants:
    n_hat: float
    n_hat_c: float
    i_bar: float
    thresholds: np.ndarray = field(repr=False)
    thresholds_cell: np.ndarray = field(repr=False)
    gains: GainPMF = field(repr=False)


def zipf_popularity(N: int, epsilon: float) -> np.ndarray:
    """Request probabilities ``beta_i ∝ i**-epsilon`` for ranks 1..N."""
    if N < 1:
        raise ConfigurationError(f"library must contain at least one file, got N={N}")
    if epsilon < 0:
        raise ConfigurationError(f"Zipf exponent must be >= 0, got {epsilon}")
    weights = np.arange(1, N + 1, dtype=float) ** -float(epsilon)
    return weights / weights.sum()


def rate_threshold(R, B):
    """SINR threshold ``2**(R/B) - 1`` needed to sustain rate R on bandwidth B."""
    if np.any(np.asarray(B) <= 0):
        raise ConfigurationError(f"bandwidth must be positive, got {B!r}")
    if np.any(np.asarray(R) < 0):
        raise ConfigurationError(f"rate must be nonnegative, got {R!r}")
    # huge R/B overflows to an infinite threshold, which is the right limit
    with np.errstate(over="ignore"):
        return np.expm1(np.log(2.0) * np.divide(R, B))


def interferer_gain_pmf(G_m: float, G_s: float, delta_theta: float) -> GainPMF:
    if not 0.0 < delta_theta <= 2 * math.pi:
        raise ConfigurationError(f"delta_theta must lie in (0, 2*pi], got {delta_theta!r}")
    two_pi = 2 * math.pi
    p_main = (delta_theta / two_pi) ** 2
    p_side = ((two_pi - delta_theta) / two_pi) ** 2
    p_mixed = 2 * delta_theta * (two_pi - delta_theta) / two_pi**2
    return GainPMF(values=(G_m**2, G_s**2, G_m * G_s), probs=(p_main, p_side, p_mixed))


def effective_noise(config: NetworkConfig) -> tuple[float, float]:
    """Normalised noise of the D2D and the cellular link, ``(n_hat, n_hat_c)``.

    Path loss is measured relative to the free-space loss at 1 m, hence the
    ``16 pi^2 / W^2`` factor.
    """
    c = config
    n_hat = 16 * math.pi**2 * c.N_o * c.F_N * c.B_d / (c.P_d * c.wavelength_mm**2)
    n_hat_c = (16 * math.pi**2 * c.N_o * c.F_N * c.B_c
               / (c.G_T * c.G_R * c.P_c * c.wavelength_cell**2))
    return n_hat, n_hat_c


def worst_case_avg_interference(config: NetworkConfig) -> float:
    """Mean D2D interference when every active MU is served over D2D.

    Campbell's theorem on a PPP of intensity ``rho * lambda_u`` with the
    bounded path loss ``min(1, r**-alpha(r))``; ``alpha`` switches from the
    LoS to the NLoS exponent at ``D_L``. Assumes ``D_L >= 1``.
    """
    c = config
    if c.alpha_L <= 2 or c.alpha_N <= 2:
        raise DivergentIntegralError("Campbell integral diverges for path-loss exponent <= 2")
    beam = (c.G_m * c.delta_theta + c.G_s * (2 * math.pi - c.delta_theta)) ** 2
    radial = ((c.alpha_L - 2 * c.D_L ** (2 - c.alpha_L)) / (c.alpha_L - 2)
              + 2 * c.D_L ** (2 - c.alpha_N) / (c.alpha_N - 2))
    return c.lambda_u * c.rho / (4 * math.pi) * beam * radial


def derive_constants(config: NetworkConfig, library: ContentLibrary) -> DerivedConstants:
    n_hat, n_hat_c = effective_noise(config)
    rates = library.rate_array
    t_d2d = rate_threshold(rates, config.B_d)
    t_cell = rate_threshold(rates, config.B_c)
    t_d2d.flags.writeable = False
    t_cell.flags.writeable = False
    return DerivedConstants(
        n_hat=n_hat,
        n_hat_c=n_hat_c,
        i_bar=worst_case_avg_interference(config),
        thresholds=t_d2d,
        thresholds_cell=t_cell,
        gains=interferer_gain_pmf(config.G_m, config.G_s, config.delta_theta),
    )
