"""Analytic performance evaluation by numerical quadrature.

All interference integrals reduce, after rescaling the radius, to the
dimensionless kernel ``K(alpha; lo, hi) = int_lo^hi t / (t**alpha + 1) dt``,
which is evaluated piecewise: directly on ``[0, 1]``, in ``log t`` above
1, and with the closed-form power-law tail beyond the radius where
``t**-alpha`` drops below 1e-14.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate

from .association import AssociationThresholds
from .errors import NumericalIntegrationError
from .model import (ContentLibrary, DerivedConstants, NetworkConfig, derive_constants,
                    interferer_gain_pmf)
from .placement import CachingPolicy

EPSREL = 1e-8
EPSABS = 1e-15
TAIL_CUTOFF = 1e-14
QUAD_LIMIT = 200


def _quad(func, a, b, epsrel=EPSREL, epsabs=EPSABS):
    if a >= b:
        return 0.0
    out = integrate.quad(func, a, b, epsabs=epsabs, epsrel=epsrel, limit=QUAD_LIMIT,
                         full_output=1)
    value, abserr, info = out[0], out[1], out[2]
    if abserr > max(epsabs, 10 * epsrel * abs(value)) and len(out) > 3:
        raise NumericalIntegrationError(
            f"quadrature on [{a}, {b}] did not converge: {out[3]}",
            estimate=value, abserr=abserr, info=info)
    return value


@lru_cache(maxsize=65536)
def kernel_integral(alpha: float, lo: float, hi: float, epsrel: float = EPSREL) -> float:
    """``int_lo^hi t/(t**alpha + 1) dt`` for ``alpha > 2`` and ``0 <= lo <= hi <= inf``."""
    if hi <= lo:
        return 0.0
    total = 0.0
    if lo < 1.0:
        total += _quad(lambda t: t / (t**alpha + 1.0), lo, min(hi, 1.0), epsrel)
    if hi > 1.0:
        t_cut = TAIL_CUTOFF ** (-1.0 / alpha)
        u_lo = math.log(max(lo, 1.0))
        u_hi = math.log(min(hi, t_cut))
        # t dt = e^{2u} du
        total += _quad(lambda u: math.exp((2.0 - alpha) * u) / (1.0 + math.exp(-alpha * u)),
                       u_lo, u_hi, epsrel)
        if hi > t_cut:
            start = max(lo, t_cut)
            tail = start ** (2.0 - alpha) / (alpha - 2.0)
            if math.isfinite(hi):
                tail -= hi ** (2.0 - alpha) / (alpha - 2.0)
            total += tail
    return total


def _scaled_kernel(c: float, alpha: float, lo: float, hi: float, epsrel: float) -> float:
    """``int_lo^hi y c/(y**alpha + c) dy`` via ``y = c**(1/alpha) t``."""
    if c <= 0.0:
        return 0.0
    scale = c ** (1.0 / alpha)
    return scale * scale * kernel_integral(alpha, lo / scale, hi / scale, epsrel)


def laplace_d2d_interference(S: float, p_d: float, config: NetworkConfig,
                             constants: DerivedConstants | None = None,
                             epsrel: float = EPSREL) -> float:
    """Laplace transform ``E[exp(-S * I / G_m^2)]`` of the D2D interference.

    Interferers form a PPP of intensity ``rho * lambda_u * p_d`` with
    Rayleigh fading and i.i.d. gains G'. ``config.laplace_variant`` picks
    between the corrected integrand ``1 - 1/(1 + G' S y^-a / G_m^2)`` and
    the printed ``1 - G_m^2/(1 + G' S y^-a)``; the latter does not vanish at
    large ``y`` and is integrated only out to ``config.sim_radius``.
    """
    c = config
    intensity = c.rho * c.lambda_u * p_d
    if S < 0:
        raise ValueError(f"transform argument must be nonnegative, got {S}")
    if intensity == 0.0:
        return 1.0
    gains = (constants.gains if constants is not None
             else interferer_gain_pmf(c.G_m, c.G_s, c.delta_theta))
    gm2 = c.G_m**2
    expectation = 0.0
    for g, prob in zip(gains.values, gains.probs):
        if prob == 0.0:
            continue
        if c.laplace_variant == "corrected":
            k = g * S / gm2
            integral = (_scaled_kernel(k, c.alpha_L, 0.0, c.D_L, epsrel)
                        + _scaled_kernel(k, c.alpha_N, c.D_L, math.inf, epsrel))
        else:
            k = g * S
            R = c.sim_radius
            integral = (1.0 - gm2) * R * R / 2.0 + gm2 * (
                _scaled_kernel(k, c.alpha_L, 0.0, min(c.D_L, R), epsrel)
                + _scaled_kernel(k, c.alpha_N, c.D_L, R, epsrel))
        expectation += prob * integral
    exponent = -2.0 * math.pi * intensity * expectation
    # only the printed variant can go positive, and then overflow
    return math.exp(exponent) if exponent < 709.0 else math.inf


def laplace_cellular_interference(S: float, x: float, config: NetworkConfig,
                                  epsrel: float = EPSREL) -> float:
    """Laplace transform of the interference from RRHs farther than ``x``."""
    if S < 0 or x < 0:
        raise ValueError("S and x must be nonnegative")
    if S == 0.0:
        return 1.0
    integral = _scaled_kernel(S, config.alpha_c, x, math.inf, epsrel)
    return math.exp(-2.0 * math.pi * config.lambda_R * integral)


@lru_cache(maxsize=4096)
def _cellular_success(config: NetworkConfig, T: float, n_hat_c: float, epsrel: float) -> float:
    if T == 0.0:
        return 1.0
    lam, alpha = config.lambda_R, config.alpha_c

    # w = pi * lambda_R * z^2 turns the nearest-RRH density into e^{-w} dw
    def integrand(w):
        z = math.sqrt(w / (math.pi * lam))
        s = T * z**alpha
        return (laplace_cellular_interference(s, z, config, epsrel)
                * math.exp(-n_hat_c * s - w))

    return min(1.0, _quad(integrand, 0.0, math.inf, epsrel))


def cellular_success_prob(file_index: int, config: NetworkConfig, library: ContentLibrary,
                          constants: DerivedConstants | None = None,
                          epsrel: float = EPSREL) -> float:
    """``Pr[SINR_c >= T_i]`` when served by the nearest RRH."""
    constants = constants or derive_constants(config, library)
    return _cellular_success(config, float(constants.thresholds_cell[file_index]),
                             constants.n_hat_c, epsrel)


def self_hit_prob(q_star, library: ContentLibrary) -> float:
    return float(np.dot(library.popularity, _as_q(q_star)))


def d2d_delivery_prob(q_star, thresholds: AssociationThresholds, library: ContentLibrary,
                      config: NetworkConfig) -> float:
    """Probability that a request is handed to a D2D transmitter."""
    q = _as_q(q_star)
    a = math.pi * config.cacher_density_per_q * np.square(thresholds.d_iu)
    return float(np.sum(library.popularity * (1.0 - q) * -np.expm1(-a * q)))


def d2d_limits(file_index: int, thresholds: AssociationThresholds,
               config: NetworkConfig) -> tuple[float, float]:
    """Upper limits of the LoS ``[0, D1]`` and NLoS ``[D_L, D2]`` integrals."""
    d1 = min(config.D_L, float(thresholds.d_hat_L[file_index]), config.D_R)
    d2 = max(config.D_L, min(float(thresholds.d_hat_N[file_index]), config.D_R))
    return d1, d2


def d2d_success_prob(file_index: int, q_star, thresholds: AssociationThresholds, p_d: float,
                     config: NetworkConfig, library: ContentLibrary,
                     constants: DerivedConstants | None = None,
                     epsrel: float = EPSREL, _laplace=None) -> float:
    """``Pr[SINR_d >= T_i and r <= D_iu]`` for the nearest cacher of file i."""
    q_i = float(_as_q(q_star)[file_index])
    lam = config.cacher_density_per_q * q_i
    if lam == 0.0:
        return 0.0
    constants = constants or derive_constants(config, library)
    T = float(constants.thresholds[file_index])
    noise = constants.n_hat / config.G_m**2
    laplace = _laplace or (lambda s: laplace_d2d_interference(s, p_d, config, constants, epsrel))
    d1, d2 = d2d_limits(file_index, thresholds, config)

    def integrand(z, alpha):
        s = T * z**alpha
        pdf = 2.0 * math.pi * lam * z * math.exp(-math.pi * lam * z * z)
        return laplace(s) * math.exp(-noise * s) * pdf

    los = _quad(lambda z: integrand(z, config.alpha_L), 0.0, d1, epsrel)
    nlos = _quad(lambda z: integrand(z, config.alpha_N), config.D_L, d2, epsrel)
    return min(1.0, los + nlos)


@dataclass(frozen=True)
class AnalyticReport:
    p_s: float
    p_d: float
    op: float
    sp_d2d: float
    sp_cell: float
    sp_total: float
    per_file_d2d: np.ndarray = field(repr=False)
    per_file_cell: np.ndarray = field(repr=False)


def overall_report(q_star, thresholds: AssociationThresholds, config: NetworkConfig,
                   library: ContentLibrary, constants: DerivedConstants | None = None,
                   epsrel: float = EPSREL) -> AnalyticReport:
    """Successful reception and offloading probabilities for a placement
    and delivery rule."""
    q = _as_q(q_star)
    constants = constants or derive_constants(config, library)
    beta = library.popularity
    p_s = self_hit_prob(q, library)
    p_d = d2d_delivery_prob(q, thresholds, library, config)

    laplace = lru_cache(maxsize=None)(
        lambda s: laplace_d2d_interference(s, p_d, config, constants, epsrel))
    void = np.exp(-math.pi * config.cacher_density_per_q * q * np.square(thresholds.d_iu))
    per_d2d = np.zeros(library.N)
    per_cell = np.zeros(library.N)
    for i in range(library.N):
        weight = beta[i] * (1.0 - q[i])
        if weight == 0.0:
            continue
        per_d2d[i] = weight * d2d_success_prob(i, q, thresholds, p_d, config, library,
                                               constants, epsrel, _laplace=laplace)
        per_cell[i] = weight * void[i] * cellular_success_prob(i, config, library,
                                                               constants, epsrel)
    sp_d2d = float(per_d2d.sum())
    sp_cell = float(per_cell.sum())
    return AnalyticReport(
        p_s=p_s, p_d=p_d, op=p_s + p_d, sp_d2d=sp_d2d, sp_cell=sp_cell,
        sp_total=min(1.0, p_s + sp_d2d + sp_cell),
        per_file_d2d=per_d2d, per_file_cell=per_cell)


def _as_q(q_star) -> np.ndarray:
    return np.asarray(q_star.q if isinstance(q_star, CachingPolicy) else q_star, dtype=float)

