import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from d2dcache.association import Mode, associate
from d2dcache.errors import ConfigurationError
from d2dcache.model import ContentLibrary, NetworkConfig, derive_constants
from d2dcache.placement import CachingPolicy
from d2dcache.simulator import (Associations, TrialOutcome, assign_caches, delivery_thresholds,
                                energy_metrics, evaluate_typical_user, generate_topology,
                                request_power, resolve_associations, run_campaign, system_policy,
                                trial_seeds)

REF = NetworkConfig(lambda_u=500e-6)
LIB = ContentLibrary()


def test_window_validation():
    with pytest.raises(ConfigurationError):
        generate_topology(replace(REF, d2d_window=200.0), 0)
    with pytest.raises(ConfigurationError):
        generate_topology(replace(REF, sim_radius=400.0), 0)


def test_typical_user_at_origin_and_active():
    topo = generate_topology(REF, 3)
    assert np.all(topo.mu_points[0] == 0) and topo.active[0]
    assert np.all(np.hypot(*topo.mu_points.T) <= REF.d2d_window)
    assert np.all(np.hypot(*topo.rrh_points.T) <= REF.sim_radius)


def test_vanishing_density_leaves_only_typical_user():
    topo = generate_topology(replace(REF, lambda_u=1e-12), 0)
    assert topo.n_mu == 1


def test_poisson_counts():
    cfg = replace(REF, lambda_u=200e-6)
    counts = np.array([generate_topology(cfg, s).n_mu - 1 for s in range(400)])
    rrh = np.array([len(generate_topology(cfg, s).rrh_points) for s in range(400)])
    mean_mu = cfg.lambda_u * math.pi * cfg.d2d_window**2
    mean_rrh = cfg.lambda_R * math.pi * cfg.sim_radius**2
    assert abs(counts.mean() - mean_mu) < 4 * math.sqrt(mean_mu / counts.size)
    assert abs(rrh.mean() - mean_rrh) < 4 * math.sqrt(mean_rrh / rrh.size)
    # Poisson dispersion: variance / mean near 1
    assert 0.8 < counts.var(ddof=1) / counts.mean() < 1.2


def test_active_flags_bernoulli():
    topo = generate_topology(REF, 7)
    others = topo.active[1:]
    p = REF.rho
    assert abs(others.mean() - p) < 4 * math.sqrt(p * (1 - p) / others.size)


def test_cache_frequencies_bernoulli():
    topo = generate_topology(REF, 1)
    q = np.linspace(0.0, 1.0, 11)
    caches = assign_caches(topo, q, 2).caches
    freq = caches.mean(axis=0)
    n = caches.shape[0]
    assert np.all(np.abs(freq - q) <= 4 * np.sqrt(q * (1 - q) / n) + 1e-12)


def test_nearest_cacher_distance_ks():
    q = np.array([0.3])
    lam = REF.lambda_u * (1 - REF.rho) * q[0]
    dist = []
    for s in range(10_000):
        ss = trial_seeds(99, s)
        topo = assign_caches(generate_topology(REF, ss[0]), q, ss[1])
        holders = (~topo.active) & topo.caches[:, 0]
        dist.append(np.min(np.hypot(*topo.mu_points[holders].T)))
    cdf = lambda r: -np.expm1(-math.pi * lam * np.square(r))  # noqa: E731
    assert stats.kstest(dist, cdf).pvalue > 0.01


def _decisions_scalar(topo, th, assoc, library, config):
    idle = np.flatnonzero(~topo.active)
    out = []
    for mu in np.flatnonzero(topo.active):
        delta = topo.mu_points[idle] - topo.mu_points[mu]
        nbrs = [(float(d), set(np.flatnonzero(topo.caches[j])))
                for d, j in zip(np.hypot(*delta.T), idle)]
        d = associate(int(assoc.requests[mu]), set(np.flatnonzero(topo.caches[mu])), nbrs,
                      set(range(library.M_e)), th, config)
        out.append((mu, d))
    return out, idle


@pytest.mark.parametrize("system", ["S-1", "S-2"])
def test_vectorised_associations_match_reference_rule(system):
    cfg = replace(REF, lambda_u=150e-6)
    k = derive_constants(cfg, LIB)
    policy = system_policy(system, cfg, LIB, k)
    th = delivery_thresholds(policy, cfg, LIB, k)
    topo = assign_caches(generate_topology(cfg, 4), policy, 5)
    assoc = resolve_associations(topo, th, LIB, cfg, 6)
    scalar, idle = _decisions_scalar(topo, th, assoc, LIB, cfg)
    for mu, d in scalar:
        got = assoc.decision(mu)
        assert got.mode is d.mode
        if d.mode.is_d2d:
            assert got.server == idle[d.server]
            assert got.server_distance == pytest.approx(d.server_distance, abs=1e-9)
    assert np.all(assoc.modes[~topo.active] == -1)


def test_no_inactive_users_means_no_d2d():
    cfg = replace(REF, rho=1.0)
    report = run_campaign(cfg, LIB, CachingPolicy(np.full(LIB.N, 0.02)), trials=200, base_seed=1)
    assert report.d2d_fraction == 0.0


def test_empty_caches_full_edge_cloud_all_fronthaul():
    lib = ContentLibrary(M_e=LIB.N)
    policy = CachingPolicy(np.zeros(lib.N))
    topo = assign_caches(generate_topology(REF, 0), policy, 1)
    k = derive_constants(REF, lib)
    th = delivery_thresholds(policy, REF, lib, k)
    assoc = resolve_associations(topo, th, lib, REF, 2)
    assert set(assoc.modes[topo.active].tolist()) == {3}
    assert assoc.decision(0).mode is Mode.CELLULAR_FRONTHAUL


def test_request_power_accounting():
    assert request_power(Mode.SELF_CACHE, REF) == 0.0
    assert request_power(Mode.D2D_LOS, REF) == REF.P_d
    assert request_power(Mode.D2D_NLOS, REF) == REF.P_d
    assert request_power(Mode.CELLULAR_FRONTHAUL, REF) == REF.P_c
    assert request_power(Mode.CELLULAR_BACKHAUL, REF) == REF.P_c + REF.P_b


def _single_link(mode_code, dist, others=()):
    """Typical user served at ``dist`` with extra D2D pairs ``(requester, server)``."""
    n = 2 + 2 * len(others)
    pts = np.zeros((n, 2))
    pts[1] = (dist, 0.0)
    servers = np.full(n, -1)
    servers[0] = 1
    for k, (req_xy, srv_xy) in enumerate(others):
        pts[2 + 2 * k], pts[3 + 2 * k] = req_xy, srv_xy
        servers[2 + 2 * k] = 3 + 2 * k
    modes = np.full(n, -1)
    modes[0] = mode_code
    modes[servers >= 0] = mode_code
    requests = np.where(modes >= 0, 0, -1)
    dists = np.where(servers >= 0, 1.0, np.nan)
    dists[0] = dist
    topo = generate_topology(REF, 0)
    topo = replace(topo, mu_points=pts, active=servers >= 0)
    return topo, Associations(requests, modes, servers, dists)


def test_self_cache_outcome():
    topo, assoc = _single_link(0, 10.0)
    out = evaluate_typical_user(topo, assoc, REF, LIB, 0)
    assert out == TrialOutcome(Mode.SELF_CACHE, 0, True, LIB.rates[0], 0.0)


def test_interference_free_short_link_succeeds():
    topo, assoc = _single_link(1, 1.0)
    wins = [evaluate_typical_user(topo, assoc, REF, LIB, s).success for s in range(200)]
    # success iff h >= T N_hat / G_m^2, i.e. with probability exp(-T N_hat / G_m^2)
    p = math.exp(-derive_constants(REF, LIB).n_hat / REF.G_m**2)
    assert np.mean(wins) >= p - 4 * math.sqrt(p * (1 - p) / 200) - 0.01


def test_own_server_is_not_an_interferer():
    topo, assoc = _single_link(1, 20.0, others=[((5.0, 5.0), (20.0, 0.0))])
    # second pair shares the typical user's server: no interference at all
    assoc.servers[2] = 1
    a = evaluate_typical_user(topo, assoc, REF, LIB, 3)
    b = evaluate_typical_user(*_single_link(1, 20.0), REF, LIB, 3)
    assert a.sinr == pytest.approx(b.sinr)


def test_energy_metrics_examples():
    r = LIB.rates[0]
    ok = TrialOutcome(Mode.D2D_LOS, 0, True, r, REF.P_d)
    assert energy_metrics([ok, ok], REF) == (pytest.approx(r / REF.P_d), pytest.approx(r / REF.P_d))
    self_only = [TrialOutcome(Mode.SELF_CACHE, 0, True, r, 0.0)]
    assert energy_metrics(self_only, REF) == (None, None)
    cell = [TrialOutcome(Mode.CELLULAR_BACKHAUL, 0, False, 0.0, REF.P_c + REF.P_b)]
    assert energy_metrics(cell, REF) == (0.0, None)
    with pytest.raises(ValueError):
        energy_metrics([], REF)


def test_all_ones_policy():
    lib = ContentLibrary(N=5, M_d=5, M_e=0)
    rep = run_campaign(REF, lib, CachingPolicy(np.ones(5)), trials=50)
    assert rep.sp == rep.op_d == rep.sop_d == rep.self_hit == 1.0


def test_campaign_rejects_zero_trials():
    with pytest.raises(ValueError):
        run_campaign(REF, LIB, CachingPolicy(np.zeros(LIB.N)), trials=0)


def test_ci_shrinks_with_trials():
    cfg = replace(REF, lambda_u=100e-6)
    policy = system_policy("S-2", cfg, LIB)
    small = run_campaign(cfg, LIB, policy, trials=100, base_seed=8)
    big = run_campaign(cfg, LIB, policy, trials=10_000, base_seed=8)
    assert big.sp_ci == pytest.approx(small.sp_ci / 10, rel=0.35)


def test_bit_identical_reruns():
    policy = system_policy("S-1", REF, LIB)
    a = run_campaign(REF, LIB, policy, trials=150, base_seed=42)
    b = run_campaign(REF, LIB, policy, trials=150, base_seed=42)
    c = run_campaign(REF, LIB, policy, trials=150, base_seed=43)
    assert a == b
    assert a != c


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["S-1", "S-2"]))
def test_report_invariants(seed, system):
    cfg = replace(REF, lambda_u=200e-6)
    rep = run_campaign(cfg, LIB, system_policy(system, cfg, LIB), trials=40, base_seed=seed)
    assert rep.sop_d <= rep.op_d
    assert rep.self_hit <= rep.sp
    assert sum(rep.mode_counts.values()) == rep.trials


def test_success_implies_threshold():
    policy = system_policy("S-2", REF, LIB)
    _, outs = run_campaign(REF, LIB, policy, trials=300, base_seed=2, return_outcomes=True)
    k = derive_constants(REF, LIB)
    for o in outs:
        if o.success and o.mode is not Mode.SELF_CACHE:
            T = k.thresholds if o.mode.is_d2d else k.thresholds_cell
            assert o.sinr >= T[o.file_index]
