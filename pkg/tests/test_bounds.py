import math

import numpy as np
import pytest

from ltisid import (
    BoundConfig,
    NoiseModel,
    StateSpace,
    SystemStats,
    UnstableSystemError,
    bound_full,
    bound_simple,
    build_hankel,
    corollary_robustness_bounds,
    hankel_perturbation_bounds,
    hokalman_robustness_bounds,
    horizon_condition,
    infinite_operator_bounds,
    markov_params,
    random_system,
    rank_n_approx,
    split_hankel,
    system_stats,
    tail_spectral_bound,
)
from ltisid.markov import MarkovParams


def threshold(c, T, q, N):
    return c * T * q * math.log(2 * T * q) ** 2 * math.log(2 * N * q) ** 2


def manual_stats(rho=0.5, phi=1.0, sigma_e=0.0, noise_map_norm=0.0, noise_map_fro=0.0,
                 trunc_gain=0.0, horizon=4):
    return SystemStats(rho=rho, phi=phi, phi_tau=0, state_cov=np.eye(1),
                       state_cov_norm=1.0, sigma_e=sigma_e,
                       noise_map_norm=noise_map_norm, noise_map_fro=noise_map_fro,
                       trunc_gain=trunc_gain, horizon=horizon)


class TestBoundSimple:
    def test_zero_noise_zero_output_matrix(self):
        sys_ = StateSpace(0.5 * np.eye(2), np.ones((2, 1)), np.zeros((1, 2)), 0.0)
        noise = NoiseModel(1.0, 0.0, 0.0)
        stats = system_stats(sys_, noise, T=4)
        report = bound_simple(stats, noise, (1, 2, 1), T=4, N=1000)
        assert report.total == 0.0
        assert report.total_frob == 0.0

    def test_scalar_formula(self):
        noise = NoiseModel(sigma_u=1.0, sigma_z=1.0)
        stats = manual_stats(rho=0.5, sigma_e=0.0, horizon=2)
        report = bound_simple(stats, noise, (1, 1, 1), T=2, N=1000)
        N0 = threshold(1.0, 2, 3, 1000)
        assert report.N0 == pytest.approx(N0, rel=1e-12)
        assert report.total == pytest.approx(math.sqrt(N0 / 1000), rel=1e-12)
        # report components always recombine into the total
        assert report.total == pytest.approx(
            (report.R_z + report.R_w + report.R_e) / (noise.sigma_u * math.sqrt(1000)), rel=1e-12)

    def test_doubling_ratio(self):
        noise = NoiseModel(sigma_u=1.0, sigma_z=1.0)
        stats = manual_stats(rho=0.5, horizon=2)
        for N in (500, 2000, 8000):
            a = bound_simple(stats, noise, (1, 1, 1), T=2, N=N).total
            b = bound_simple(stats, noise, (1, 1, 1), T=2, N=2 * N).total
            assert 1.30 <= a / b <= 1.42

    def test_frobenius_variant(self):
        noise = NoiseModel(sigma_u=2.0, sigma_w=0.5, sigma_z=1.0)
        stats = manual_stats(rho=0.5, sigma_e=0.3, noise_map_norm=1.5, noise_map_fro=2.5, horizon=3)
        m, n, p = 2, 3, 1
        report = bound_simple(stats, noise, (m, n, p), T=3, N=4000)
        expected = ((1.0 + 0.3) * math.sqrt(m) + 0.5 * 2.5) / 2.0 * math.sqrt(report.N0 / 4000)
        assert report.total_frob == pytest.approx(expected, rel=1e-12)

    def test_applicability_conditions(self):
        noise = NoiseModel(sigma_u=1.0, sigma_z=1.0)
        stats = manual_stats(rho=0.5, horizon=2)
        small = bound_simple(stats, noise, (1, 1, 1), T=2, N=100)
        assert not small.applicable  # N below the polylog threshold
        big = bound_simple(stats, noise, (1, 1, 1), T=2, N=10 ** 7)
        assert big.applicable
        hot = bound_simple(manual_stats(rho=0.9999, horizon=2), noise, (1, 1, 1), T=2, N=10 ** 7)
        assert not hot.applicable  # rho^T > 0.99


class TestBoundFull:
    def test_measurement_component(self):
        noise = NoiseModel(sigma_u=1.0, sigma_z=1.0)
        stats = manual_stats(rho=0.5, horizon=18)
        report = bound_full(stats, noise, (2, 5, 3), T=18, N=2000)
        assert report.R_z == pytest.approx(8 * math.sqrt(56), rel=1e-12)

    def test_only_measurement_survives(self):
        noise = NoiseModel(sigma_u=2.0, sigma_z=1.0)
        stats = manual_stats(rho=0.5, sigma_e=0.0, noise_map_norm=0.0, horizon=6)
        report = bound_full(stats, noise, (2, 5, 3), T=6, N=500)
        expected = 8 * math.sqrt(6 * 3 + 2) / (2.0 * math.sqrt(500))
        assert report.total == pytest.approx(expected, rel=1e-12)
        assert report.R_w == 0.0 and report.R_e == 0.0

    def test_components_match_formulas(self):
        noise = NoiseModel(sigma_u=1.0, sigma_w=0.4, sigma_z=0.7)
        stats = manual_stats(rho=0.6, sigma_e=0.2, noise_map_norm=1.8, horizon=6)
        m, n, p = 2, 5, 3
        N = 3000
        report = bound_full(stats, noise, (m, n, p), T=6, N=N)
        Nw = threshold(1.0, 6, p + n, N)
        assert report.Nw == pytest.approx(Nw, rel=1e-12)
        assert report.R_w == pytest.approx(0.4 * 1.8 * max(math.sqrt(Nw), Nw / math.sqrt(N)), rel=1e-12)
        assert report.R_e == pytest.approx(
            1.0 * 0.2 * math.sqrt((1 + m * 6 / (N * (1 - 0.6 ** 6))) * (6 * p + m)), rel=1e-12)
        assert report.total == pytest.approx((report.R_z + report.R_w + report.R_e) / math.sqrt(N), rel=1e-12)

    def test_unstable_rejected(self):
        noise = NoiseModel(sigma_u=1.0, sigma_z=1.0)
        with pytest.raises(UnstableSystemError):
            bound_full(manual_stats(rho=1.2), noise, (1, 1, 1), T=4, N=100)

    def test_monotone_in_samples(self):
        noise = NoiseModel(sigma_u=1.0, sigma_w=0.3, sigma_z=0.5)
        stats = manual_stats(rho=0.7, sigma_e=0.4, noise_map_norm=2.0, horizon=6)
        grid = [2 ** k for k in range(5, 16)]
        full = [bound_full(stats, noise, (2, 5, 3), T=6, N=N).total for N in grid]
        simple = [bound_simple(stats, noise, (2, 5, 3), T=6, N=N).total for N in grid]
        assert all(b <= a for a, b in zip(full, full[1:]))
        assert all(b <= a for a, b in zip(simple, simple[1:]))
        assert all(v >= 0 for v in full + simple)


class TestTailSpectralBound:
    def test_zero_output_matrix(self):
        sys_ = StateSpace(0.5 * np.eye(2), np.ones((2, 1)), np.zeros((1, 2)), 0.0)
        noise = NoiseModel(1.0, 0.0, 0.0)
        stats = system_stats(sys_, noise, T=4)
        assert tail_spectral_bound(stats, sys_, 4) == 0.0

    def test_scalar_value(self):
        sys_ = StateSpace(0.5, 1.0, 1.0, 0.0)
        stats = system_stats(sys_, NoiseModel(), T=3)
        assert tail_spectral_bound(stats, sys_, 3) == pytest.approx(0.5, rel=1e-12)

    def test_dominates_numeric_tail(self):
        for seed in range(5):
            sys_ = random_system(2, 5, 3, 0.9, seed=seed)
            T = 6
            stats = system_stats(sys_, NoiseModel(), T=T)
            total = 0.0
            P = np.linalg.matrix_power(sys_.A, T - 1) @ sys_.B
            for _ in range(3000):
                term = np.linalg.norm(sys_.C @ P, 2)
                total += term
                if term < 1e-16 * max(total, 1e-300):
                    break
                P = sys_.A @ P
            bound = tail_spectral_bound(stats, sys_, T)
            assert total <= bound * (1 + 1e-9)


class TestHorizonCondition:
    def test_fast_decay_small_horizon(self):
        stats = manual_stats(rho=0.01)
        T = horizon_condition(stats, (1, 1, 1), N=1000, eps0=0.5)
        assert T <= 5

    def test_minimality(self):
        cfg = BoundConfig()
        for rho, N, eps0 in ((0.5, 1000, 0.5), (0.9, 5000, 0.1), (0.25, 200, 0.3)):
            stats = manual_stats(rho=rho)
            T = horizon_condition(stats, (2, 5, 3), N=N, eps0=eps0, cfg=cfg)

            def rhs(t):
                return (cfg.c0_abs + math.log(N / t + t * (1 + 2 / 3)) - math.log(eps0)) / (-math.log(rho))

            assert T >= rhs(T)
            if T > 1:
                assert (T - 1) < rhs(T - 1)

    def test_halving_eps_increment(self):
        stats = manual_stats(rho=0.5)
        T1 = horizon_condition(stats, (1, 1, 1), N=1000, eps0=0.5)
        T2 = horizon_condition(stats, (1, 1, 1), N=1000, eps0=0.25)
        assert T2 >= T1
        assert T2 - T1 <= math.ceil(math.log(2) / (-math.log(0.5))) + 1

    def test_monotone_in_decay(self):
        dims = (1, 1, 1)
        T_slow = horizon_condition(manual_stats(rho=0.5), dims, N=1000, eps0=0.5)
        T_fast = horizon_condition(manual_stats(rho=0.25), dims, N=1000, eps0=0.5)
        assert T_slow >= T_fast

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            horizon_condition(manual_stats(rho=0.5), (1, 1, 1), N=1000, eps0=1.5)
        with pytest.raises(UnstableSystemError):
            horizon_condition(manual_stats(rho=0.0), (1, 1, 1), N=1000, eps0=0.5)


class TestHankelPerturbation:
    def test_zero_error(self):
        assert hankel_perturbation_bounds(4, 3, 0.0) == (0.0, 0.0)

    def test_paper_shape_values(self):
        bh, bl = hankel_perturbation_bounds(9, 8, 0.1)
        assert bh == pytest.approx(0.3, rel=1e-12)
        assert bl == pytest.approx(2 * 0.1 * math.sqrt(8), rel=1e-12)

    def test_empirical_dominance(self):
        rng = np.random.default_rng(100)
        T1, T2, n = 6, 5, 5
        for seed in range(50):
            sys_ = random_system(2, 5, 3, 0.9, seed=seed)
            params = markov_params(sys_, T1 + T2 + 1)
            pert = MarkovParams.from_matrix(
                params.matrix + 0.05 * rng.standard_normal(params.matrix.shape), params.p)
            err = np.linalg.norm(params.matrix - pert.matrix, 2)
            bh, bl = hankel_perturbation_bounds(T1, T2, err)
            H = build_hankel(params, T1, T2 + 1).matrix
            Hp = build_hankel(pert, T1, T2 + 1).matrix
            assert np.linalg.norm(H - Hp, 2) <= bh * (1 + 1e-12)
            L = rank_n_approx(split_hankel(build_hankel(params, T1, T2 + 1))[0].matrix, n)
            Lp = rank_n_approx(split_hankel(build_hankel(pert, T1, T2 + 1))[0].matrix, n)
            assert np.linalg.norm(L - Lp, 2) <= bl * (1 + 1e-12)


class TestRobustnessBounds:
    def test_zero_perturbation(self):
        rb = hokalman_robustness_bounds(1.0, 5, 2.0, 0.0, 0.0)
        assert rb.bound_CB == 0.0
        assert rb.bound_A == 0.0
        assert rb.applicable

    def test_factor_bound_value(self):
        rb = hokalman_robustness_bounds(1.0, 5, 2.0, 0.0, 0.01)
        assert rb.bound_CB == pytest.approx(0.5, rel=1e-12)

    def test_state_bound_formula(self):
        s, n, normH, errH, errL = 0.8, 4, 3.0, 0.05, 0.1
        rb = hokalman_robustness_bounds(s, n, normH, errH, errL)
        expected = 14 * math.sqrt(n) / s * (math.sqrt(errL / s) * (normH + errH) + errH)
        assert rb.bound_A == pytest.approx(expected, rel=1e-12)

    def test_applicability_flag(self):
        assert not hokalman_robustness_bounds(1.0, 5, 2.0, 0.0, 0.6).applicable
        assert hokalman_robustness_bounds(1.0, 5, 2.0, 0.0, 0.5).applicable

    def test_corollary_variant(self):
        s, n, normH, errH = 1.0, 5, 2.0, 0.2
        rb = corollary_robustness_bounds(s, n, normH, errH)
        assert rb.bound_CB == pytest.approx(5 * math.sqrt(n * errH), rel=1e-12)
        assert rb.bound_A == pytest.approx(50 * math.sqrt(n * errH) * normH / s ** 1.5, rel=1e-12)
        assert rb.applicable
        assert not corollary_robustness_bounds(s, n, normH, 0.3).applicable


class TestInfiniteOperatorBounds:
    def test_vanishing_noise(self):
        out = infinite_operator_bounds(NoiseModel(1.0, 0.0, 0.0), (2, 5, 3), T=6, N=2000, eps0=1e-12)
        assert out.bound_G <= 1e-10
        assert out.applicable

    def test_reference_value(self):
        out = infinite_operator_bounds(NoiseModel(1.0, 0.0, 1.0), (2, 5, 3), T=6, N=2000, eps0=0.5)
        assert out.bound_G == pytest.approx(0.85, rel=1e-12)
        assert out.bound_H == pytest.approx(6 * 0.85, rel=1e-12)

    def test_ratio_is_horizon(self):
        out = infinite_operator_bounds(NoiseModel(2.0, 0.0, 0.3), (1, 2, 1), T=9, N=500, eps0=0.2)
        assert out.bound_H / out.bound_G == pytest.approx(9.0, rel=1e-12)

    def test_process_noise_flagged(self):
        out = infinite_operator_bounds(NoiseModel(1.0, 0.1, 0.0), (2, 5, 3), T=6, N=2000, eps0=0.5)
        assert not out.applicable


class TestBoundConfig:
    def test_positive_required(self):
        with pytest.raises(ValueError):
            BoundConfig(c_abs=0.0)
        with pytest.raises(ValueError):
            BoundConfig(C_abs=-1.0)

    def test_constants_scale_thresholds(self):
        noise = NoiseModel(sigma_u=1.0, sigma_z=1.0)
        stats = manual_stats(rho=0.5, horizon=2)
        base = bound_simple(stats, noise, (1, 1, 1), T=2, N=1000)
        scaled = bound_simple(stats, noise, (1, 1, 1), T=2, N=1000, cfg=BoundConfig(c_abs=4.0))
        assert scaled.N0 == pytest.approx(4 * base.N0, rel=1e-12)
        assert scaled.total == pytest.approx(2 * base.total, rel=1e-12)
