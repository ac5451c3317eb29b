import math

import numpy as np
import pytest

from treecast import (
    DomainError,
    QbpConfig,
    ResourceBudgetError,
    ThresholdRow,
    ThresholdTable,
    brute_force_tree,
    eps_critical,
    make_params,
    powerlaw_fit,
    qbp_evolve,
    quantize_symmetric,
    threshold_scan,
)


def eps_for_lambda(lam: float) -> float:
    return (1.0 - lam / math.sqrt(2.0)) / 2.0


class TestConfig:
    def test_leaf_flip_identity(self):
        cfg = QbpConfig(L=64, epsilon=eps_for_lambda(1.05))
        assert (1 - 2 * cfg.delta0) ** 2 == pytest.approx(cfg.A, abs=1e-12)

    @pytest.mark.parametrize("lam", [1.001, 1.01, 1.05, 1.1])
    def test_fixed_point_identities(self, lam):
        cfg = QbpConfig(L=64, epsilon=eps_for_lambda(lam))
        # A solves t = phi(lam^2 t) / lam with phi(t) = t (1 - t/2)
        lhs = (lam**2 * cfg.A) * (1 - lam**2 * cfg.A / 2) / lam
        assert lhs == pytest.approx(cfg.A, abs=1e-12)
        # B solves t = psi(lam^2 t) with psi(t) = t (1 - t/4)
        rhs = (lam**2 * cfg.B) * (1 - lam**2 * cfg.B / 4)
        assert rhs == pytest.approx(cfg.B, abs=1e-12)
        assert cfg.A < cfg.B  # holds for lam <= 1.2

    def test_interval_ordering_small_lambda(self):
        for lam in (1.001, 1.05, 1.1, 1.15, 1.2):
            cfg = QbpConfig(L=16, epsilon=eps_for_lambda(lam))
            assert cfg.A < cfg.B

    def test_l_min_formula(self):
        lam = 1.02
        cfg = QbpConfig(L=2048, epsilon=eps_for_lambda(lam))
        assert cfg.L_min == pytest.approx(lam**3 / (2 * (lam - 1) ** 2), rel=1e-12)

    def test_rejects_supercritical(self):
        with pytest.raises(DomainError):
            QbpConfig(L=8, epsilon=eps_critical(2) + 0.01)
        with pytest.raises(DomainError):
            QbpConfig(L=8, epsilon=eps_for_lambda(1.0))

    def test_explicit_delta0(self):
        cfg = QbpConfig(L=8, epsilon=0.0, delta0=0.0)
        assert cfg.delta0 == 0.0
        with pytest.raises(DomainError):
            QbpConfig(L=8, epsilon=0.1, delta0=0.6)


class TestQuantizer:
    def test_extremes(self):
        for L in (2, 3, 4, 7, 16):
            assert quantize_symmetric(-1.0, L) == 1
            assert quantize_symmetric(1.0, L) == L

    def test_interior_example(self):
        assert quantize_symmetric(0.3, 4) == 3

    def test_boundary_nearer_zero(self):
        assert quantize_symmetric(0.5, 4) == 3
        assert quantize_symmetric(-0.5, 4) == 2

    def test_zero_tie_lower_index(self):
        assert quantize_symmetric(0.0, 4) == 2
        assert quantize_symmetric(0.0, 6) == 3

    def test_reflection_symmetry(self):
        rng = np.random.default_rng(22)
        for L in (2, 4, 5, 16):
            for s in rng.uniform(-1, 1, 200):
                if s == 0.0:
                    continue
                assert quantize_symmetric(-s, L) == L + 1 - quantize_symmetric(s, L)

    def test_range_error(self):
        with pytest.raises(DomainError):
            quantize_symmetric(1.1, 4)


class TestEvolve:
    def test_noiseless_broadcast_is_perfect(self):
        cfg = QbpConfig(L=4, epsilon=0.0, delta0=0.0)
        traj = qbp_evolve(cfg, 10)
        assert np.all(traj.sigma2 == 1.0)

    def test_level_zero_moment(self):
        cfg = QbpConfig(L=64, epsilon=eps_for_lambda(1.05))
        traj = qbp_evolve(cfg, 1)
        assert traj.sigma2[0] == pytest.approx(cfg.A, abs=1e-12)

    def test_two_symbols_die_near_threshold(self):
        cfg = QbpConfig(L=2, epsilon=eps_critical(2) - 0.001)
        traj = qbp_evolve(cfg, 500, record_pairs=False)
        assert traj.sigma2[-1] < 1e-8

    def test_envelope_at_small_alphabet(self):
        # the interval also holds empirically well below L_min at lambda = 1.02
        cfg = QbpConfig(L=64, epsilon=eps_for_lambda(1.02))
        traj = qbp_evolve(cfg, 200, record_pairs=False)
        assert np.all(traj.sigma2 >= cfg.A - 1e-9)
        assert np.all(traj.sigma2 <= cfg.B + 1e-9)

    def test_invariant_interval_moderate_lambda(self):
        lam = 1.05
        cfg = QbpConfig(L=max(64, math.ceil(lam**3 / (2 * (lam - 1) ** 2))),
                        epsilon=eps_for_lambda(lam))
        traj = qbp_evolve(cfg, 200, record_pairs=False)
        assert np.all(traj.sigma2 >= cfg.A - 1e-9)
        assert np.all(traj.sigma2 <= cfg.B + 1e-9)

    def test_reflection_symmetry_of_pairs(self):
        cfg = QbpConfig(L=16, epsilon=0.1)
        traj = qbp_evolve(cfg, 30)
        for pair in traj.trajectory.pairs:
            assert np.all(
                np.abs(pair.minus.probs - pair.plus.probs[::-1]) <= 1e-12
            )

    def test_jensen_and_quantization_gap(self):
        cfg = QbpConfig(L=32, epsilon=0.12)
        traj = qbp_evolve(cfg, 50, record_pairs=False)
        hat = traj.hat_sigma2[1:]
        post = traj.sigma2[1:]
        assert np.all(post <= hat + 1e-12)
        assert np.all(hat - post <= 1.0 / cfg.L**2 + 1e-12)

    def test_tracks_brute_force_at_large_L(self):
        # noiseless leaves so both recursions start from the same law
        for eps in (0.1, 0.12):
            cfg = QbpConfig(L=2048, epsilon=eps, delta0=0.0)
            traj = qbp_evolve(cfg, 3, record_pairs=False)
            for depth in (1, 2, 3):
                exact = brute_force_tree(make_params(2, eps), depth).scores
                assert traj.sigma2[depth] == pytest.approx(
                    exact.second_moment, abs=1e-3
                )

    def test_budget(self):
        with pytest.raises(ResourceBudgetError):
            qbp_evolve(QbpConfig(L=8192, epsilon=0.1), 2)

    def test_csv(self):
        traj = qbp_evolve(QbpConfig(L=8, epsilon=0.1), 3, record_pairs=False)
        lines = traj.to_csv().splitlines()
        assert lines[0] == "level,sigma2"
        assert len(lines) == 5


class TestThresholdScan:
    def test_small_scan_monotone(self):
        table = threshold_scan([4, 8], probe_depth=300, bisect_tol=5e-4)
        assert table.rows[0].L == 4 and table.rows[1].L == 8
        assert table.rows[0].eps_of_L < table.rows[1].eps_of_L
        assert all(r.eps_of_L < table.eps_c for r in table.rows)

    def test_achievability_point(self):
        # at lambda = 1.05 the interval argument wants L >= ceil(L_min) = 232;
        # the scanned threshold for that L must reach the lambda = 1.05 noise
        lam = 1.05
        L = math.ceil(lam**3 / (2 * (lam - 1) ** 2))
        table = threshold_scan([L], probe_depth=400, bisect_tol=5e-4)
        assert table.rows[0].eps_of_L >= eps_for_lambda(lam)

    def test_threads_do_not_change_output(self):
        a = threshold_scan([4, 8], probe_depth=200, bisect_tol=1e-3, threads=1)
        b = threshold_scan([4, 8], probe_depth=200, bisect_tol=1e-3, threads=4)
        assert a.to_csv() == b.to_csv()

    def test_bisect_tol_floor(self):
        with pytest.raises(DomainError):
            threshold_scan([4], bisect_tol=1e-9)

    def test_table_validation(self):
        with pytest.raises(DomainError):
            ThresholdTable(
                rows=(ThresholdRow(8, 0.1, 5, 0.2), ThresholdRow(4, 0.09, 5, 0.2)),
                eps_c=eps_critical(2),
            )


class TestPowerlawFit:
    def _table(self, gaps, Ls=(4, 8, 16, 32, 64)):
        ec = eps_critical(2)
        rows = tuple(
            ThresholdRow(L, ec - g, 10, 0.1) for L, g in zip(Ls, gaps)
        )
        return ThresholdTable(rows=rows, eps_c=ec)

    def test_recovers_planted_power(self):
        Ls = (4, 8, 16, 32, 64)
        fit = powerlaw_fit(self._table([L**-2.0 for L in Ls], Ls))
        assert fit.slope == pytest.approx(-2.0, abs=1e-9)
        assert fit.r2 == pytest.approx(1.0, abs=1e-9)

    def test_constant_gap(self):
        fit = powerlaw_fit(self._table([0.01] * 5))
        assert fit.slope == pytest.approx(0.0, abs=1e-12)
        assert fit.r2 == 1.0

    def test_needs_four_rows(self):
        ec = eps_critical(2)
        rows = tuple(ThresholdRow(L, ec - 0.01, 3, 0.1) for L in (4, 8, 16))
        with pytest.raises(DomainError):
            powerlaw_fit(ThresholdTable(rows=rows, eps_c=ec))

    def test_csv(self):
        table = self._table([0.04, 0.02, 0.01, 0.005, 0.0025])
        lines = table.to_csv().splitlines()
        assert lines[0] == "L,eps_of_L,eps_c,gap,iters"
        assert len(lines) == 6
