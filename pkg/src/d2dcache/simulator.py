"""Monte Carlo simulation of the cache-enabled mmWave D2D network.

One trial samples a fresh topology around a typical MU at the origin,
places content, lets every active MU pick a delivery mode and then
realizes the typical user's link (fading, antenna gains, interference).
Metrics are measured at the typical user only.

Seeding: trial ``i`` of a campaign with base seed ``s`` draws from
``SeedSequence(s, spawn_key=(i,))``, whose four children feed topology,
caches, requests and channel, in that order. Two systems run with the same
base seed therefore see identical node positions and activity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .association import (AssociationThresholds, DeliveryDecision, Mode,
                          association_thresholds, baseline_thresholds)
from .errors import ConfigurationError
from .model import (ContentLibrary, DerivedConstants, NetworkConfig, derive_constants,
                    interferer_gain_pmf)
from .placement import (HIT_MAX_BASELINE, CachingPolicy, baseline_hitmax_caching,
                        optimize_caching, placement_distances)

MODES = tuple(Mode)
_CODE = {m: k for k, m in enumerate(MODES)}
SELF, LOS, NLOS, FRONT, BACK = (_CODE[m] for m in (
    Mode.SELF_CACHE, Mode.D2D_LOS, Mode.D2D_NLOS,
    Mode.CELLULAR_FRONTHAUL, Mode.CELLULAR_BACKHAUL))
Z95 = 1.959963984540054


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def trial_seeds(base_seed: int, trial: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(base_seed, spawn_key=(trial,)).spawn(4)


def uniform_disk(rng: np.random.Generator, n: int, radius: float,
                 inner: float = 0.0) -> np.ndarray:
    r = np.sqrt(rng.uniform(inner * inner, radius * radius, n))
    phi = rng.uniform(0.0, 2 * math.pi, n)
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


@dataclass
class Topology:
    """One realization. MU 0 is the typical user at the origin (always active)."""

    rrh_points: np.ndarray
    mu_points: np.ndarray
    active: np.ndarray
    window: float
    rrh_window: float
    caches: np.ndarray | None = None
    seed: object = None

    @property
    def n_mu(self) -> int:
        return len(self.mu_points)


def generate_topology(config: NetworkConfig, seed) -> Topology:
    if config.d2d_window <= config.D_R + config.D_L:
        raise ConfigurationError(
            f"d2d_window ({config.d2d_window} m) must exceed D_R + D_L "
            f"({config.D_R + config.D_L} m)")
    if config.sim_radius < config.d2d_window:
        raise ConfigurationError("sim_radius must be at least d2d_window")
    rng = _rng(seed)
    n_rrh = rng.poisson(config.lambda_R * math.pi * config.sim_radius**2)
    rrh = uniform_disk(rng, n_rrh, config.sim_radius)
    n_mu = rng.poisson(config.lambda_u * math.pi * config.d2d_window**2)
    mus = np.vstack((np.zeros((1, 2)), uniform_disk(rng, n_mu, config.d2d_window)))
    active = rng.random(n_mu + 1) < config.rho
    active[0] = True
    return Topology(rrh, mus, active, config.d2d_window, config.sim_radius, seed=seed)


def assign_caches(topology: Topology, q, seed) -> Topology:
    """Each MU caches file i independently with probability ``q_i``."""
    q = np.asarray(q.q if isinstance(q, CachingPolicy) else q, dtype=float)
    rng = _rng(seed)
    caches = rng.random((topology.n_mu, q.size)) < q
    return replace(topology, caches=caches)


@dataclass
class Associations:
    """Per-MU delivery decisions; entries of inactive MUs are -1."""

    requests: np.ndarray
    modes: np.ndarray
    servers: np.ndarray
    server_distances: np.ndarray

    def decision(self, mu: int) -> DeliveryDecision:
        mode = MODES[self.modes[mu]]
        if mode.is_d2d:
            return DeliveryDecision(mode, int(self.requests[mu]),
                                    float(self.server_distances[mu]), int(self.servers[mu]))
        return DeliveryDecision(mode, int(self.requests[mu]))


def sample_requests(rng: np.random.Generator, popularity: np.ndarray, size: int) -> np.ndarray:
    cdf = np.cumsum(popularity)
    idx = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
    return np.minimum(idx, popularity.size - 1)


def resolve_associations(topology: Topology, thresholds: AssociationThresholds,
                         library: ContentLibrary, config: NetworkConfig, seed) -> Associations:
    """Every active MU draws a request and is served per the association rule.

    Inactive MUs act as D2D transmitters; one transmitter may serve any
    number of requesters.
    """
    if topology.caches is None:
        raise ValueError("assign caches before resolving associations")
    rng = _rng(seed)
    n = topology.n_mu
    act = np.flatnonzero(topology.active)
    idle = np.flatnonzero(~topology.active)

    requests = np.full(n, -1)
    modes = np.full(n, -1)
    servers = np.full(n, -1)
    dists = np.full(n, np.nan)

    req = sample_requests(rng, library.popularity, act.size)
    requests[act] = req
    self_hit = topology.caches[act, req]

    nearest = np.full(act.size, np.inf)
    choice = np.full(act.size, -1)
    pending = np.flatnonzero(~self_hit)
    if idle.size and pending.size:
        idle_pts = topology.mu_points[idle]
        idle_caches = topology.caches[idle]
        order = pending[np.argsort(req[pending], kind="stable")]
        files, starts = np.unique(req[order], return_index=True)
        for f, rows in zip(files, np.split(order, starts[1:])):
            holders = np.flatnonzero(idle_caches[:, f])
            if holders.size == 0:
                continue
            delta = topology.mu_points[act[rows], None, :] - idle_pts[None, holders, :]
            d = np.hypot(delta[..., 0], delta[..., 1])
            j = np.argmin(d, axis=1)  # first minimum: lowest index wins ties
            nearest[rows] = d[np.arange(rows.size), j]
            choice[rows] = idle[holders[j]]
    d2d = ~self_hit & (nearest <= thresholds.d_iu[req])
    edge = req < library.M_e

    m = np.where(edge, FRONT, BACK)
    m = np.where(d2d, np.where(nearest <= config.D_L, LOS, NLOS), m)
    m = np.where(self_hit, SELF, m)
    modes[act] = m
    servers[act[d2d]] = choice[d2d]
    dists[act[d2d]] = nearest[d2d]
    return Associations(requests, modes, servers, dists)


@dataclass(frozen=True)
class TrialOutcome:
    mode: Mode
    file_index: int
    success: bool
    throughput: float
    power: float
    sinr: float | None = None
    server_distance: float | None = None


def request_power(mode: Mode, config: NetworkConfig) -> float:
    if mode is Mode.SELF_CACHE:
        return 0.0
    if mode.is_d2d:
        return config.P_d
    if mode is Mode.CELLULAR_FRONTHAUL:
        return config.P_c
    return config.P_c + config.P_b


def d2d_path_gain(r, config: NetworkConfig):
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        return r ** -np.where(r <= config.D_L, config.alpha_L, config.alpha_N)


def evaluate_typical_user(topology: Topology, associations: Associations,
                          config: NetworkConfig, library: ContentLibrary, seed,
                          constants: DerivedConstants | None = None) -> TrialOutcome:
    constants = constants or derive_constants(config, library)
    rng = _rng(seed)
    mode = MODES[associations.modes[0]]
    f = int(associations.requests[0])
    power = request_power(mode, config)
    rate = library.rates[f]

    if mode is Mode.SELF_CACHE:
        return TrialOutcome(mode, f, True, rate, 0.0)

    if mode.is_d2d:
        own = associations.servers[0]
        r0 = float(associations.server_distances[0])
        others = np.flatnonzero(associations.servers >= 0)
        others = others[(others != 0) & (associations.servers[others] != own)]
        tx = topology.mu_points[associations.servers[others]]
        y = np.hypot(tx[:, 0], tx[:, 1])
        h0 = rng.exponential()
        h = rng.exponential(size=y.size)
        g = constants.gains.sample(rng, y.size)
        signal = config.G_m**2 * h0 * float(d2d_path_gain(r0, config))
        interference = float(np.sum(h * g * d2d_path_gain(y, config)))
        sinr = signal / (constants.n_hat + interference)
        threshold = constants.thresholds[f]
    else:
        rrh = topology.rrh_points
        if rrh.shape[0] == 0:
            return TrialOutcome(mode, f, False, 0.0, power, 0.0)
        y = np.hypot(rrh[:, 0], rrh[:, 1])
        k = int(np.argmin(y))
        fading = rng.exponential(size=y.size)
        received = fading * y ** -config.alpha_c
        # RRHs beyond the window contribute their mean interference
        tail = (2 * math.pi * config.lambda_R * topology.rrh_window ** (2 - config.alpha_c)
                / (config.alpha_c - 2))
        sinr = received[k] / (constants.n_hat_c + received.sum() - received[k] + tail)
        threshold = constants.thresholds_cell[f]
        r0 = None

    success = bool(sinr >= threshold)
    return TrialOutcome(mode, f, success, rate if success else 0.0, power, float(sinr), r0)


def energy_metrics(outcomes: Sequence[TrialOutcome], config: NetworkConfig
                   ) -> tuple[float | None, float | None]:
    """``(ee_total, ee_d2d)`` in bit/J per request; ``None`` if no energy was spent.

    A failed transmission still spends its full power.
    """
    if not outcomes:
        raise ValueError("no outcomes")
    thr = np.array([o.throughput for o in outcomes])
    pw = np.array([o.power for o in outcomes])
    d2d = np.array([o.mode.is_d2d for o in outcomes])
    return _ee(thr, pw, d2d, config)


def _ee(thr, pw, d2d, config):
    total_power = pw.sum()
    ee_total = float(thr.sum() / total_power) if total_power > 0 else None
    n_d2d = int(d2d.sum())
    ee_d2d = float(thr[d2d].sum() / (n_d2d * config.P_d)) if n_d2d else None
    return ee_total, ee_d2d


def _ci(flags: np.ndarray) -> tuple[float, float]:
    n = flags.size
    p = float(flags.mean())
    return p, Z95 * math.sqrt(p * (1.0 - p) / n)


@dataclass(frozen=True)
class MetricsReport:
    sp: float
    sp_ci: float
    op_d: float
    op_d_ci: float
    sop_d: float
    sop_d_ci: float
    self_hit: float
    self_hit_ci: float
    d2d_fraction: float
    d2d_fraction_ci: float
    ee_total: float | None
    ee_d2d: float | None
    trials: int
    mode_counts: dict = field(default_factory=dict, compare=True)


def summarize(outcomes: Sequence[TrialOutcome], config: NetworkConfig) -> MetricsReport:
    modes = [o.mode for o in outcomes]
    success = np.array([o.success for o in outcomes])
    offl = np.array([m.offloaded for m in modes])
    d2d = np.array([m.is_d2d for m in modes])
    selfc = np.array([m is Mode.SELF_CACHE for m in modes])
    thr = np.array([o.throughput for o in outcomes])
    pw = np.array([o.power for o in outcomes])
    ee_total, ee_d2d = _ee(thr, pw, d2d, config)
    counts = {m.value: int(sum(1 for x in modes if x is m)) for m in MODES}
    return MetricsReport(*_ci(success), *_ci(offl), *_ci(offl & success), *_ci(selfc),
                         *_ci(d2d), ee_total, ee_d2d, len(outcomes), counts)


def run_trial(config: NetworkConfig, library: ContentLibrary, policy: CachingPolicy,
              thresholds: AssociationThresholds, base_seed: int, trial: int,
              constants: DerivedConstants | None = None) -> TrialOutcome:
    s_topo, s_cache, s_req, s_chan = trial_seeds(base_seed, trial)
    topo = generate_topology(config, s_topo)
    topo = assign_caches(topo, policy, s_cache)
    assoc = resolve_associations(topo, thresholds, library, config, s_req)
    return evaluate_typical_user(topo, assoc, config, library, s_chan, constants)


def delivery_thresholds(policy: CachingPolicy, config: NetworkConfig, library: ContentLibrary,
                        constants: DerivedConstants | None = None) -> AssociationThresholds:
    """Association rule paired with a placement: QoS-aware radius for S-1 and
    custom policies, plain discovery range for the S-2 baseline."""
    if policy.policy_kind == HIT_MAX_BASELINE:
        return baseline_thresholds(library, config)
    constants = constants or derive_constants(config, library)
    return association_thresholds(policy, constants, library, config)


def run_campaign(config: NetworkConfig, library: ContentLibrary, policy: CachingPolicy,
                 trials: int, base_seed: int = 0,
                 thresholds: AssociationThresholds | None = None,
                 return_outcomes: bool = False):
    """Independent trials (fresh topology each) aggregated into a MetricsReport."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    constants = derive_constants(config, library)
    if thresholds is None:
        thresholds = delivery_thresholds(policy, config, library, constants)
    outcomes = [run_trial(config, library, policy, thresholds, base_seed, t, constants)
                for t in range(trials)]
    report = summarize(outcomes, config)
    return (report, outcomes) if return_outcomes else report


def system_policy(system: str, config: NetworkConfig, library: ContentLibrary,
                  constants: DerivedConstants | None = None) -> CachingPolicy:
    if system == "S-1":
        constants = constants or derive_constants(config, library)
        return optimize_caching(placement_distances(constants, config, library), library, config)
    if system == "S-2":
        return baseline_hitmax_caching(library, config)
    raise ValueError(f"unknown system {system!r}; expected 'S-1' or 'S-2'")


def worst_case_interference_mc(config: NetworkConfig, realizations: int = 100_000, seed=0,
                               edges: Sequence[float] = (0.0, 1.0, 2.0, 5.0, 10.0, 30.0, 75.0),
                               oversample: Sequence[int] = (34000, 17000, 3100, 570, 88, 10),
                               outer_radius: float | None = None,
                               chunk: int = 2_000_000) -> tuple[float, float]:
    """Monte Carlo mean of ``sum G' min(1, r^-alpha(r))`` over a PPP of
    intensity ``rho * lambda_u``, with its standard error.

    The disk is stratified into annuli simulated independently. Annulus
    ``k`` pools ``realizations * oversample[k]`` realizations and the
    outermost one (out to ``outer_radius``, default ``4 * D_L``) exactly
    ``realizations``: the near field carries nearly all of the variance.
    """
    rng = _rng(seed)
    gains = interferer_gain_pmf(config.G_m, config.G_s, config.delta_theta)
    outer = outer_radius if outer_radius is not None else 4.0 * config.D_L
    bounds = [e for e in edges if e < outer] + [outer]
    factors = (list(oversample) + [1] * len(bounds))[: len(bounds) - 2] + [1]
    lam = config.rho * config.lambda_u
    mean, var = 0.0, 0.0
    for (lo, hi), m in zip(zip(bounds[:-1], bounds[1:]), factors):
        k = realizations * m
        n_total = rng.poisson(lam * math.pi * (hi * hi - lo * lo) * k)
        s1 = s2 = 0.0
        for start in range(0, n_total, chunk):
            n = min(chunk, n_total - start)
            r = np.sqrt(rng.uniform(lo * lo, hi * hi, n))
            v = gains.sample(rng, n) * np.minimum(1.0, d2d_path_gain(r, config))
            s1 += v.sum()
            s2 += np.dot(v, v)
        mean += s1 / k
        var += s2 / k / k
    return mean, math.sqrt(var)
