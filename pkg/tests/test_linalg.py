import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import exhaustive_sparse_ls, sparse_code_instance
from sparsestyle.errors import DataError
from sparsestyle.linalg import (
    SparsityBudget,
    hard_threshold,
    iterate_hard_threshold,
    sparse_code,
    sparse_code_rows,
    spectral_norm,
    svd,
)


class TestSparsityBudget:
    def test_fraction_resolves_with_floor_of_one(self):
        assert SparsityBudget(fraction=0.1).resolve(60) == 6
        assert SparsityBudget(fraction=0.1).resolve(10) == 1
        assert SparsityBudget(fraction=0.01).resolve(10) == 1

    def test_half_rounds_up(self):
        assert SparsityBudget(fraction=0.25).resolve(10) == 3

    def test_count_is_capped_by_length(self):
        assert SparsityBudget(count=5).resolve(3) == 3

    @pytest.mark.parametrize("kwargs", [{}, {"count": 1, "fraction": 0.5}, {"count": 0}, {"fraction": 0.0}, {"fraction": 1.5}])
    def test_invalid(self, kwargs):
        with pytest.raises(DataError):
            SparsityBudget(**kwargs)

    def test_coerce(self):
        assert SparsityBudget.coerce(3) == SparsityBudget(count=3)
        assert SparsityBudget.coerce(0.3) == SparsityBudget(fraction=0.3)


class TestHardThreshold:
    def test_top_k(self):
        np.testing.assert_array_equal(hard_threshold([3, 1, -2, 0.5], 2), [3, 0, -2, 0])

    def test_ties_keep_lower_index(self):
        np.testing.assert_array_equal(hard_threshold([1, -1, 1], 2), [1, -1, 0])

    def test_rows(self):
        out = hard_threshold(np.array([[1.0, 5.0, 2.0], [4.0, 0.0, -6.0]]), 1)
        np.testing.assert_array_equal(out, [[0, 5, 0], [0, 0, -6]])


class TestSpectralNorm:
    def test_diagonal(self):
        assert spectral_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0, rel=1e-12)

    def test_rank_one(self):
        rng = np.random.default_rng(0)
        u, v = rng.standard_normal(4), rng.standard_normal(6)
        assert spectral_norm(np.outer(u / np.linalg.norm(u), v / np.linalg.norm(v))) == pytest.approx(1.0, rel=1e-12)

    def test_matches_own_svd_and_numpy(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            M = rng.standard_normal((5, 5))
            s = spectral_norm(M)
            assert s == pytest.approx(svd(M).singular_values[0], rel=1e-6)
            assert s == pytest.approx(np.linalg.norm(M, 2), rel=1e-6)

    def test_zero(self):
        assert spectral_norm(np.zeros((3, 2))) == 0.0


class TestSparseCode:
    def test_identity_full_budget(self):
        y = np.array([0.3, -1.0, 2.0, 5.0])
        np.testing.assert_allclose(sparse_code(np.eye(4), y, SparsityBudget(count=4)), y, atol=1e-12)

    def test_identity_top_two(self):
        x = sparse_code(np.eye(4), np.array([3.0, 1.0, -2.0, 0.5]), 2)
        np.testing.assert_allclose(x, [3, 0, -2, 0], atol=1e-12)

    def test_random_6x8_near_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            D, y = rng.standard_normal((6, 8)), rng.standard_normal(6)
            x = sparse_code(D, y, 2)
            assert np.count_nonzero(x) <= 2
            assert np.sum((y - D @ x) ** 2) <= 1.1 * exhaustive_sparse_ls(D, y, 2) + 1e-12

    def test_support_never_exceeds_budget(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            D, y, k = sparse_code_instance(rng)
            assert np.count_nonzero(sparse_code(D, y, k)) <= k
            assert np.count_nonzero(sparse_code(D, y, k, refine=False)) <= k

    def test_full_budget_iteration_is_monotone(self):
        rng = np.random.default_rng(5)
        D, y = rng.standard_normal((7, 5)), rng.standard_normal(7)
        it = iterate_hard_threshold(D, y, 5)
        objs = [np.sum((y - D @ next(it)) ** 2) for _ in range(100)]
        assert np.all(np.diff(objs) <= 1e-12)

    def test_unrefined_iteration_converges_to_least_squares(self):
        rng = np.random.default_rng(6)
        D, y = rng.standard_normal((8, 4)), rng.standard_normal(8)
        x = sparse_code(D, y, 4, iters=5000, tol=1e-14, refine=False)
        np.testing.assert_allclose(x, np.linalg.lstsq(D, y, rcond=None)[0], atol=1e-6)

    def test_errors(self):
        with pytest.raises(DataError):
            sparse_code(np.zeros((3, 3)), np.ones(3), 1)
        with pytest.raises(DataError):
            sparse_code(np.eye(3), np.array([1.0, np.nan, 0.0]), 1)
        with pytest.raises(DataError):
            sparse_code(np.eye(3), np.ones(3), 1, iters=0)


class TestSparseCodeRows:
    def test_rows_respect_budget_and_start_is_not_worsened(self):
        rng = np.random.default_rng(7)
        D, Y = rng.standard_normal((10, 4)), rng.standard_normal((10, 30))
        X0 = hard_threshold(np.linalg.lstsq(D, Y, rcond=None)[0], 3)
        X = sparse_code_rows(D, Y, SparsityBudget(fraction=0.1), X0=X0)
        assert np.all(np.count_nonzero(X, axis=1) <= 3)
        assert np.sum((Y - D @ X) ** 2) <= np.sum((Y - D @ X0) ** 2) + 1e-9

    def test_identity_full_budget(self):
        Y = np.random.default_rng(8).standard_normal((4, 5))
        np.testing.assert_allclose(sparse_code_rows(np.eye(4), Y, 1.0), Y, atol=1e-10)


class TestSvd:
    def test_diagonal(self):
        res = svd(np.diag([1.0, -4.0, 2.0]))
        np.testing.assert_allclose(res.singular_values, [4, 2, 1], atol=1e-14)

    def test_orthogonal(self):
        Q = np.linalg.qr(np.random.default_rng(9).standard_normal((6, 6)))[0]
        np.testing.assert_allclose(svd(Q).singular_values, np.ones(6), atol=1e-12)

    @pytest.mark.parametrize("shape", [(8, 5), (5, 8), (1, 4), (4, 1), (7, 7)])
    def test_contract_and_numpy_agreement(self, shape):
        M = np.random.default_rng(10).standard_normal(shape)
        res = svd(M)
        r = min(shape)
        assert res.U.shape == (shape[0], r) and res.Vt.shape == (r, shape[1])
        np.testing.assert_allclose(res.U.T @ res.U, np.eye(r), atol=1e-10)
        np.testing.assert_allclose(res.Vt @ res.Vt.T, np.eye(r), atol=1e-10)
        assert np.linalg.norm(res.reconstruct() - M) <= 1e-10 * np.linalg.norm(M)
        np.testing.assert_allclose(res.singular_values, np.linalg.svd(M, compute_uv=False), rtol=1e-10)

    def test_sign_convention(self):
        res = svd(np.random.default_rng(11).standard_normal((6, 4)))
        for col in res.U.T:
            assert col[np.argmax(np.abs(col))] > 0

    def test_rank_deficient_completes_basis(self):
        rng = np.random.default_rng(12)
        M = np.outer(rng.standard_normal(5), rng.standard_normal(4))
        res = svd(M)
        np.testing.assert_allclose(res.U.T @ res.U, np.eye(4), atol=1e-10)
        np.testing.assert_allclose(res.Vt @ res.Vt.T, np.eye(4), atol=1e-10)
        np.testing.assert_allclose(res.reconstruct(), M, atol=1e-12)

    def test_truncation(self):
        M = np.random.default_rng(13).standard_normal((6, 5))
        res = svd(M, rank=2)
        assert res.U.shape == (6, 2) and res.singular_values.shape == (2,)

    def test_zero_matrix(self):
        res = svd(np.zeros((3, 2)))
        np.testing.assert_array_equal(res.singular_values, [0, 0])
        np.testing.assert_allclose(res.U.T @ res.U, np.eye(2), atol=1e-12)

    def test_non_finite(self):
        with pytest.raises(DataError):
            svd(np.array([[1.0, np.inf]]))

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
                  elements=st.floats(-1e3, 1e3, allow_nan=False, allow_subnormal=False)))
    def test_property_reconstruction(self, M):
        res = svd(M)
        assert np.all(np.diff(res.singular_values) <= 1e-12 * max(1.0, res.singular_values[0]))
        assert np.linalg.norm(res.reconstruct() - M) <= 1e-9 * max(np.linalg.norm(M), 1e-300) + 1e-12
