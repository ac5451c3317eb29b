"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; the stochastic checks consume the shared million-sample density runs
from conftest.
"""

import math

import numpy as np
import pytest

from treecast import (
    FiniteDist,
    NoiseChannel,
    QbpConfig,
    alpha_bound,
    brute_force_tree,
    build_hat_bar,
    calibrate_barrier,
    eps_critical,
    evolve_pair,
    hellinger2,
    make_params,
    mixture,
    nongaussianness,
    omega_bound,
    powerlaw_fit,
    qbp_evolve,
    random_scheme,
    restricted_sdpi_scan,
    skl,
    skl_contraction_ratio,
    threshold_scan,
    wasserstein,
)
from treecast.dynamics import majority_scheme, or_table, tribes_scheme

from conftest import random_full_support


def test_criterion_01_ks_geometric_decay():
    params = make_params(2, 0.4)
    bound = 4 * params.d * params.nu**2
    assert bound == pytest.approx(0.08, abs=1e-15)
    skls = [brute_force_tree(params, depth).skl for depth in range(1, 5)]
    ratios = [b / a for a, b in zip(skls, skls[1:])]
    assert all(r <= bound + 1e-9 for r in ratios)
    print(f"\n[criterion 1] PASS: SKL ratios {['%.5f' % r for r in ratios]} <= 0.08")


def test_criterion_02_mixing_inequality():
    rng = np.random.default_rng(101)
    for metric in (skl, hellinger2):
        for _ in range(10_000):
            m = int(rng.integers(2, 6))
            P = FiniteDist(random_full_support(rng, m))
            Q = FiniteDist(random_full_support(rng, m))
            d_big = float(rng.uniform(1e-3, 0.5))
            d_small = float(rng.uniform(0.0, d_big))
            at_big = metric(mixture(P, Q, d_big).probs, mixture(Q, P, d_big).probs)
            at_small = metric(
                mixture(P, Q, d_small).probs, mixture(Q, P, d_small).probs
            )
            plain = metric(P.probs, Q.probs)
            assert at_small <= (d_small / d_big) ** 2 * at_big + 1e-10
            assert at_small <= 4 * d_small**2 * plain + 1e-10
    print("\n[criterion 2] PASS: 10^4 mixing-inequality trials for SKL and Hellinger^2")


def test_criterion_03_omega_bound(density_runs):
    for eps in (0.10, 0.12, 0.14):
        rep = density_runs[eps]
        cap = omega_bound(eps)
        assert rep.sigma2[-1] <= cap + 3 * rep.sigma2_se[-1], (eps, rep.sigma2[-1], cap)
    rep = density_runs[0.20]
    # above threshold: the signed chi^2-information estimate is statistically
    # indistinguishable from zero, and the second moment has decayed to dust
    assert abs(rep.signal[-1]) <= 3 * rep.signal_se[-1]
    assert rep.sigma2[-1] < 1e-6
    print(
        "\n[criterion 3] PASS: sigma2(50) <= omega(eps) below threshold; "
        f"at eps=0.2 signal {rep.signal[-1]:.2e} within 3 SE ({rep.signal_se[-1]:.2e}) of 0"
    )


def test_criterion_04_quantized_bp_invariant_interval():
    lam = 1.02
    eps = (1 - lam / math.sqrt(2)) / 2
    cfg = QbpConfig(L=max(64, math.ceil(lam**3 / (2 * (lam - 1) ** 2))), epsilon=eps)
    assert cfg.L == 1327
    # fixed-point identities of the interval endpoints
    lhs_a = (cfg.lam**2 * cfg.A) * (1 - cfg.lam**2 * cfg.A / 2) / cfg.lam
    lhs_b = (cfg.lam**2 * cfg.B) * (1 - cfg.lam**2 * cfg.B / 4)
    assert lhs_a == pytest.approx(cfg.A, abs=1e-12)
    assert lhs_b == pytest.approx(cfg.B, abs=1e-12)
    traj = qbp_evolve(cfg, 200, record_pairs=False)
    assert traj.sigma2.size == 201
    assert np.all(traj.sigma2 >= cfg.A - 1e-9)
    assert np.all(traj.sigma2 <= cfg.B + 1e-9)
    print(
        f"\n[criterion 4] PASS: sigma2 in [{cfg.A:.6f}, {cfg.B:.6f}] for 200 levels "
        f"(L={cfg.L}, lambda=1.02)"
    )


def test_criterion_05_threshold_trend():
    table = threshold_scan([4, 8, 16, 32, 64, 128, 256], probe_depth=800)
    eps_list = [r.eps_of_L for r in table.rows]
    assert all(a < b for a, b in zip(eps_list, eps_list[1:]))
    assert all(e < table.eps_c for e in eps_list)
    fit = powerlaw_fit(table)
    assert fit.slope < 0
    assert fit.r2 > 0.9
    print(
        f"\n[criterion 5] PASS: eps(L) strictly increasing, slope {fit.slope:.3f} < 0, "
        f"r^2 {fit.r2:.3f} > 0.9"
    )


def test_criterion_06_gaussian_attraction_trend(density_runs):
    points = [(eps, density_runs[eps]) for eps in (0.10, 0.125, 0.14)]
    for (e1, r1), (e2, r2) in zip(points, points[1:]):
        diff = r1.w2_gauss[-1] - r2.w2_gauss[-1]
        se = math.hypot(r1.w2_gauss_se[-1], r2.w2_gauss_se[-1])
        assert diff >= -3 * se, (e1, e2, diff, se)
    vals = [f"{r.w2_gauss[-1]:.4f}" for _, r in points]
    print(f"\n[criterion 6] PASS: standardized W2-to-Gaussian decreasing: {vals}")


def test_criterion_07_restricted_sdpi():
    res = restricted_sdpi_scan(2, 2, gamma=0.1, grid_step=0.05)
    assert res.eta_hat <= 1 - 1e-3
    ratio = skl_contraction_ratio(
        or_table(2),
        FiniteDist(np.array([1 - 1e-4, 1e-4])),
        FiniteDist(np.array([1 - 2e-4, 2e-4])),
        2,
    )
    assert ratio >= 0.99
    print(
        f"\n[criterion 7] PASS: eta_hat {res.eta_hat:.4f} <= 1 - 1e-3; "
        f"OR ratio {ratio:.5f} >= 0.99"
    )


def test_criterion_08_one_bit_failure_near_threshold():
    # (a) recursive majority, d = 3
    eps_a = eps_critical(3) - 0.001
    traj_a = evolve_pair(make_params(3, eps_a), majority_scheme(3), None, 500)
    hit_a = np.argmax(traj_a.skls < 1e-6)
    assert traj_a.skls[-1] < 1e-6 and hit_a <= 500
    # (b) alternating AND/OR, d = 2
    eps_b = eps_critical(2) - 0.005
    traj_b = evolve_pair(make_params(2, eps_b), tribes_scheme(2), None, 500)
    hit_b = np.argmax(traj_b.skls < 1e-6)
    assert traj_b.skls[-1] < 1e-6 and hit_b <= 500
    lam, phis, levels = calibrate_barrier(traj_b.bernoulli_levels(), start_level=5)
    steps = np.diff(phis)
    assert np.all(steps < 0)
    c = float(-steps.max())
    assert c > 0
    print(
        f"\n[criterion 8] PASS: SKL < 1e-6 at levels {hit_a} (maj3) / {hit_b} (tribes); "
        f"phi descends monotonically past level 5 (barrier {lam}, step >= {c:.4f})"
    )


def test_criterion_09_noisy_contraction():
    nu = math.sqrt(0.9 / (4 * 2 * (1 - 0.2)))
    params = make_params(2, 0.5 - nu)
    assert 4 * params.d * params.nu**2 * (1 - 0.2) == pytest.approx(0.9, abs=1e-12)
    channel = NoiseChannel.mixture(0.2, FiniteDist.uniform(4))
    rng = np.random.default_rng(202)
    checked = 0
    for _ in range(100):
        scheme = random_scheme(rng, 4, 2, stochastic=bool(rng.integers(0, 2)))
        s = evolve_pair(params, scheme, channel, 12).skls
        for n in range(2, len(s)):
            # stop once SKL reaches the float cancellation floor
            if not (math.isfinite(s[n - 1]) and s[n - 1] > 1e-20):
                break
            assert s[n] / s[n - 1] <= 0.9 + 1e-9
            checked += 1
    assert checked > 500
    print(f"\n[criterion 9] PASS: {checked} level ratios <= 0.9 over 100 random schemes")


def test_criterion_10_wasserstein_approximation():
    checked = []
    for eps, depth in ((0.30, 2), (0.30, 3), (0.35, 2), (0.35, 3), (0.40, 3)):
        params = make_params(2, eps)
        S = brute_force_tree(params, depth).scores
        sig2, mu = S.second_moment, S.fourth_moment
        assert sig2 <= 2.0**-3 and mu <= 2.0**-5  # alpha_p domains
        hat, bar = build_hat_bar(S, params.theta)
        w2 = wasserstein(2, hat, bar)
        w4 = wasserstein(4, hat, bar)
        assert w2**2 <= sig2 * alpha_bound(2, sig2)
        assert w4**4 <= mu * alpha_bound(4, mu)
        checked.append((eps, depth, w2**2 / (sig2 * alpha_bound(2, sig2))))
    tightest = max(c[2] for c in checked)
    print(
        f"\n[criterion 10] PASS: W2/W4 bounds on {len(checked)} exact laws "
        f"(largest W2^2 usage {tightest:.3g} of bound)"
    )


def test_criterion_11_nongaussianness_floor():
    rng = np.random.default_rng(303)
    count = 0
    for L in (2, 4, 8, 16):
        for _ in range(250):
            v = np.sort(rng.uniform(-3, 3, L))
            w = random_full_support(rng, L)
            m = float(np.dot(v, w))
            var = float(np.dot(w, (v - m) ** 2))
            z = (v - m) / math.sqrt(var)
            e, _ = nongaussianness((z, w))
            assert e >= 1 / (2 * L) - 1e-9
            count += 1
    e_rad, s_rad = nongaussianness((np.array([-1.0, 1.0]), np.array([0.5, 0.5])))
    assert e_rad == pytest.approx(math.sqrt(1 - 2 / math.pi), abs=1e-6)
    assert count == 1000
    print(
        f"\n[criterion 11] PASS: E(Z) >= 1/(2L) on 1000 unit-variance laws; "
        f"Rademacher E = {e_rad:.6f}"
    )


def test_criterion_12_mgf_monotonicity(density_runs):
    rep = density_runs[0.10]
    s_grid = rep.s_grid
    assert set(abs(s) for s in s_grid) == {0.5, 1.0, 2.0}
    diffs = rep.mgf_chunks[1:31] - rep.mgf_chunks[0:30]
    dm = diffs.mean(axis=2)
    dse = diffs.std(axis=2, ddof=1) / math.sqrt(diffs.shape[2])
    assert np.all(dm <= 3 * dse)
    print(
        "\n[criterion 12] PASS: empirical mgf non-increasing over depths 1-30 "
        f"at s in {sorted(set(abs(s) for s in s_grid))} (max step {dm.max():.2e})"
    )
