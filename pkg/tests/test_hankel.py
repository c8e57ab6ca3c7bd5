import numpy as np
import pytest

from ltisid import (
    MarkovParams,
    RankDeficientError,
    StateSpace,
    build_hankel,
    build_padded_hankel,
    clip_singular_values,
    hankel_shape,
    ho_kalman,
    markov_params,
    random_system,
    rank_n_approx,
    split_hankel,
    suggest_order,
)


def random_blocks(T, m=2, p=3, seed=0):
    rng = np.random.default_rng(seed)
    return MarkovParams(tuple(rng.standard_normal((m, p)) for _ in range(T)))


class TestBuildHankel:
    def test_two_by_two_layout(self):
        params = random_blocks(4)
        H = build_hankel(params, 2, 2)
        np.testing.assert_array_equal(H.block(0, 0), params.blocks[1])
        np.testing.assert_array_equal(H.block(0, 1), params.blocks[2])
        np.testing.assert_array_equal(H.block(1, 0), params.blocks[2])
        np.testing.assert_array_equal(H.block(1, 1), params.blocks[3])

    def test_single_block_skips_feedthrough(self):
        params = random_blocks(2)
        H = build_hankel(params, 1, 1)
        np.testing.assert_array_equal(H.matrix, params.blocks[1])

    def test_zero_blocks(self):
        params = MarkovParams(tuple(np.zeros((2, 3)) for _ in range(5)))
        assert np.all(build_hankel(params, 2, 3).matrix == 0.0)

    def test_shape_overflow_rejected(self):
        with pytest.raises(ValueError):
            build_hankel(random_blocks(4), 2, 3)

    def test_hankel_structure(self):
        H = build_hankel(random_blocks(9), 4, 5)
        for i in range(4):
            for j in range(5):
                for i2 in range(4):
                    j2 = i + j - i2
                    if 0 <= j2 < 5:
                        np.testing.assert_array_equal(H.block(i, j), H.block(i2, j2))

    def test_dense_view_shape(self):
        H = build_hankel(random_blocks(9), 4, 5)
        assert H.matrix.shape == (4 * 2, 5 * 3)


class TestPaddedHankel:
    def test_single_block(self):
        params = random_blocks(1)
        H = build_padded_hankel(params, 1)
        np.testing.assert_array_equal(H.matrix, params.blocks[0])

    def test_zero_input(self):
        params = MarkovParams(tuple(np.zeros((1, 2)) for _ in range(3)))
        assert np.all(build_padded_hankel(params, 5).matrix == 0.0)

    def test_layout_starts_at_feedthrough(self):
        params = random_blocks(3)
        H = build_padded_hankel(params, 4)
        np.testing.assert_array_equal(H.block(0, 0), params.blocks[0])
        np.testing.assert_array_equal(H.block(0, 1), params.blocks[1])
        np.testing.assert_array_equal(H.block(1, 1), params.blocks[2])
        assert np.all(H.block(3, 3) == 0.0)
        assert np.all(H.block(0, 3) == 0.0)

    def test_norm_independent_of_padding(self):
        params = random_blocks(5, seed=3)
        n1 = np.linalg.norm(build_padded_hankel(params, 10).matrix, 2)
        n2 = np.linalg.norm(build_padded_hankel(params, 20).matrix, 2)
        assert n1 == pytest.approx(n2, rel=1e-12)

    def test_too_small_padding_rejected(self):
        with pytest.raises(ValueError):
            build_padded_hankel(random_blocks(5), 4)


class TestSplitHankel:
    def test_two_columns(self):
        params = random_blocks(3)
        H = build_hankel(params, 1, 2)
        left, right = split_hankel(H)
        np.testing.assert_array_equal(left.matrix, params.blocks[1])
        np.testing.assert_array_equal(right.matrix, params.blocks[2])

    def test_single_column_rejected(self):
        with pytest.raises(ValueError):
            split_hankel(build_hankel(random_blocks(2), 1, 1))

    def test_submatrix_norms(self):
        H = build_hankel(random_blocks(9, seed=5), 4, 5)
        left, right = split_hankel(H)
        norm = np.linalg.norm(H.matrix, 2)
        assert np.linalg.norm(left.matrix, 2) <= norm + 1e-12
        assert np.linalg.norm(right.matrix, 2) <= norm + 1e-12

    def test_shifted_half_equals_observability_times_controllability(self):
        sys_ = random_system(2, 4, 3, 0.9, seed=6)
        T1, T2 = 4, 3
        params = markov_params(sys_, T1 + T2 + 1)
        _, right = split_hankel(build_hankel(params, T1, T2 + 1))
        obs = np.vstack([sys_.C @ np.linalg.matrix_power(sys_.A, i) for i in range(T1)])
        ctrl = np.hstack([np.linalg.matrix_power(sys_.A, j) @ sys_.B for j in range(T2)])
        np.testing.assert_allclose(right.matrix, obs @ sys_.A @ ctrl, atol=1e-10)


class TestRankNApprox:
    def test_low_rank_fixed_point(self):
        rng = np.random.default_rng(7)
        M = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
        np.testing.assert_allclose(rank_n_approx(M, 2), M, atol=1e-12)
        np.testing.assert_allclose(rank_n_approx(M, 4), M, atol=1e-12)

    def test_full_rank_identity(self):
        rng = np.random.default_rng(8)
        M = rng.standard_normal((4, 6))
        np.testing.assert_allclose(rank_n_approx(M, 4), M, atol=1e-12)

    def test_diagonal_truncation(self):
        M = np.diag([3.0, 2.0, 1.0])
        np.testing.assert_allclose(rank_n_approx(M, 2), np.diag([3.0, 2.0, 0.0]), atol=1e-12)

    def test_truncation_optimality(self):
        rng = np.random.default_rng(9)
        M = rng.standard_normal((8, 11))
        s = np.linalg.svd(M, compute_uv=False)
        for n in (1, 3, 7):
            err = np.linalg.norm(M - rank_n_approx(M, n), 2)
            assert err == pytest.approx(s[n], abs=1e-10)

    def test_invalid_rank(self):
        with pytest.raises(ValueError):
            rank_n_approx(np.eye(3), 0)
        with pytest.raises(ValueError):
            rank_n_approx(np.eye(3), 4)


class TestHoKalman:
    def test_exact_pipeline_reproduces_markov_parameters(self):
        sys_ = random_system(2, 5, 3, 0.9, seed=10)
        T = 18
        params = markov_params(sys_, T)
        result = ho_kalman(params, 5, 9, 8)
        rebuilt = markov_params(result.to_statespace(), 2 * T)
        truth = markov_params(sys_, 2 * T)
        for got, want in zip(rebuilt.blocks, truth.blocks):
            err = np.linalg.norm(got - want, 2)
            assert err <= 1e-8 * max(1.0, np.linalg.norm(want, 2))

    def test_scalar_hand_svd(self):
        # 2x2 Hankel [[6, 3], [3, 1.5]] of the scalar system (0.5, 2, 3, 1)
        params = markov_params(StateSpace(0.5, 2.0, 3.0, 1.0), 4)
        result = ho_kalman(params, n=1, T1=2, T2=1)
        assert result.A[0, 0] == pytest.approx(0.5, rel=1e-10)
        assert (result.C @ result.B)[0, 0] == pytest.approx(6.0, rel=1e-10)
        assert result.D[0, 0] == 1.0

    def test_zero_input_rank_deficient(self):
        params = MarkovParams(tuple(np.zeros((2, 3)) for _ in range(6)))
        with pytest.raises(RankDeficientError) as err:
            ho_kalman(params, 1, 3, 2)
        assert err.value.achieved == 0

    def test_shape_precondition(self):
        params = random_blocks(6)
        with pytest.raises(ValueError):
            ho_kalman(params, 2, 3, 3)  # T1 + T2 + 1 != 6
        with pytest.raises(ValueError):
            ho_kalman(params, 9, 3, 2)  # order too large for the split

    def test_balanced_factors(self):
        sys_ = random_system(2, 4, 3, 0.9, seed=11)
        params = markov_params(sys_, 12)
        result = ho_kalman(params, 4, 6, 5)
        sig = np.diag(result.sigma)
        np.testing.assert_allclose(result.obs_factor.T @ result.obs_factor, sig, atol=1e-10)
        np.testing.assert_allclose(result.ctrl_factor @ result.ctrl_factor.T, sig, atol=1e-10)
        np.testing.assert_allclose(result.obs_factor @ result.ctrl_factor,
                                   rank_n_approx(split_hankel(build_hankel(params, 6, 6))[0].matrix, 4),
                                   atol=1e-10 * np.linalg.norm(result.obs_factor @ result.ctrl_factor, 2))

    def test_factor_corners_match_realization(self):
        sys_ = random_system(2, 4, 3, 0.9, seed=12)
        params = markov_params(sys_, 12)
        result = ho_kalman(params, 4, 6, 5)
        np.testing.assert_array_equal(result.C, result.obs_factor[:2])
        np.testing.assert_array_equal(result.B, result.ctrl_factor[:, :3])
        assert result.sigma_min == result.sigma[-1]
        assert np.all(np.diff(result.sigma) <= 0)

    def test_sign_convention_deterministic(self):
        params = markov_params(random_system(2, 4, 3, 0.9, seed=13), 12)
        r1 = ho_kalman(params, 4, 6, 5)
        r2 = ho_kalman(params, 4, 6, 5)
        np.testing.assert_array_equal(r1.A, r2.A)
        np.testing.assert_array_equal(r1.obs_factor, r2.obs_factor)
        for k in range(4):
            col = r1.obs_factor[:, k]
            lead = col[np.abs(col) > 1e-12 * np.abs(col).max()][0]
            assert lead > 0

    def test_noisy_input_still_runs(self):
        params = random_blocks(12, seed=14)
        result = ho_kalman(params, 4, 6, 5)
        assert result.A.shape == (4, 4)
        assert result.sigma_min > 0


class TestClipSingularValues:
    def test_no_op_below_bound(self):
        rng = np.random.default_rng(15)
        M = 0.5 * rng.standard_normal((4, 4)) / 4
        np.testing.assert_allclose(clip_singular_values(M, 0.99), M, atol=1e-12)

    def test_diagonal_clip(self):
        out = clip_singular_values(np.diag([2.0, 0.5]), 0.99)
        np.testing.assert_allclose(out, np.diag([0.99, 0.5]), atol=1e-12)

    def test_norm_contract(self):
        rng = np.random.default_rng(16)
        for _ in range(10):
            M = rng.standard_normal((5, 3)) * rng.uniform(0.1, 4.0)
            out = clip_singular_values(M, 0.99)
            assert np.linalg.norm(out, 2) <= 0.99 + 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(17)
        M = rng.standard_normal((4, 4))
        once = clip_singular_values(M, 0.8)
        twice = clip_singular_values(once, 0.8)
        np.testing.assert_allclose(twice, once, atol=1e-12)

    def test_invalid_bound(self):
        with pytest.raises(ValueError):
            clip_singular_values(np.eye(2), 0.0)


class TestOrderSuggestion:
    def test_exact_order_recovered(self):
        sys_ = random_system(2, 5, 3, 0.9, seed=18)
        params = markov_params(sys_, 18)
        assert suggest_order(params, 9, 9) == 5

    def test_zero_params(self):
        params = MarkovParams(tuple(np.zeros((2, 3)) for _ in range(6)))
        assert suggest_order(params, 3, 3) == 0


class TestHankelShape:
    def test_half_policy(self):
        assert hankel_shape(18) == (9, 8)
        assert hankel_shape(6) == (3, 2)
        assert hankel_shape(12) == (6, 5)
        assert hankel_shape(7) == (4, 2)

    def test_split_feeds_realization(self):
        for T in (6, 7, 12, 18):
            T1, T2 = hankel_shape(T)
            assert T1 + T2 + 1 == T
            assert T1 >= 1 and T2 >= 1

    def test_balanced_policy(self):
        T1, T2 = hankel_shape(18, m=2, p=3, policy="balanced")
        assert T1 + T2 + 1 == 18
        # dense row/column counts as close as the grid allows
        assert abs(2 * T1 - 3 * (T2 + 1)) <= 2

    def test_too_short(self):
        with pytest.raises(ValueError):
            hankel_shape(2)

    def test_unknown_policy(self):
        with pytest.raises(ValueError):
            hankel_shape(6, policy="golden")
