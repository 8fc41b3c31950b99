import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from fracwr import toeplitz
from fracwr.fractional import l1_kernel
from fracwr.toeplitz import (
    CirculantEmbedding,
    LowerToeplitz,
    SingularToeplitzError,
    fast_matvec,
    forward_substitution_inverse,
    invert_first_column,
    naive_matvec,
    solve_lower_toeplitz,
)

finite = st.floats(min_value=-10, max_value=10, allow_nan=False)


def _diag_dominant(rng, m):
    col = rng.standard_normal(m) / np.arange(1, m + 1) ** 2
    col[0] = 2.0 + np.abs(col[1:]).sum()
    return col


class TestMatvec:
    def test_identity(self, rng):
        x = rng.standard_normal(9)
        np.testing.assert_allclose(fast_matvec(np.eye(9)[0], x), x, atol=1e-15)

    def test_small_example(self):
        np.testing.assert_allclose(fast_matvec([1.0, 2.0, 3.0], [1.0, 1.0, 1.0]), [1.0, 3.0, 6.0])

    @pytest.mark.parametrize("m", [1, 2, 3, 17, 100, 1024])
    def test_against_naive(self, rng, m):
        col, x = rng.standard_normal((2, m))
        ref = naive_matvec(col, x)
        got = fast_matvec(LowerToeplitz(col), x)
        assert np.abs(got - ref).max() <= 1e-12 * np.abs(ref).max()

    @given(hnp.arrays(float, st.integers(1, 64), elements=finite), st.data())
    def test_columns_of_dense(self, col, data):
        m = col.size
        i = data.draw(st.integers(0, m - 1))
        e = np.zeros(m)
        e[i] = 1.0
        np.testing.assert_allclose(fast_matvec(col, e), toeplitz.dense(col)[:, i], atol=1e-12)

    def test_stacked_lines(self, rng):
        col = rng.standard_normal(12)
        x = rng.standard_normal((3, 4, 12))
        emb = CirculantEmbedding.from_column(col)
        np.testing.assert_allclose(emb.matvec(x), naive_matvec(col, x), atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            CirculantEmbedding.from_column([1.0, 2.0]).matvec(np.ones(3))

    def test_lower_toeplitz_validation(self):
        with pytest.raises(ValueError):
            LowerToeplitz(np.ones((2, 2)))
        t = LowerToeplitz([1.0, 2.0])
        assert t.shifted(3.0).diagonal == 4.0
        assert t.diagonal == 1.0


class TestInverse:
    def test_two_by_two(self):
        np.testing.assert_allclose(invert_first_column([2.0, 1.0]), [0.5, -0.25])

    def test_identity(self):
        e = np.eye(40)[0]
        np.testing.assert_allclose(invert_first_column(e), e, atol=1e-15)

    def test_shifted_kernel(self):
        h = np.pi / 257
        col = l1_kernel(0.4, 1 / 32, 32).r.copy()
        col[0] += 2 / h**2
        ref = forward_substitution_inverse(col)
        np.testing.assert_allclose(invert_first_column(col), ref, rtol=0, atol=1e-11 * np.abs(ref).max())

    @pytest.mark.parametrize("m", [1, 5, 16, 31, 64, 200, 512])
    @pytest.mark.parametrize("base", [1, 4, 16])
    def test_against_forward_substitution(self, rng, m, base):
        col = _diag_dominant(rng, m)
        ref = forward_substitution_inverse(col)
        assert np.abs(invert_first_column(col, base) - ref).max() <= 1e-11 * np.abs(ref).max()

    @pytest.mark.parametrize("delta", [0.1, 0.4, 0.7, 1.0])
    @pytest.mark.parametrize("m", [64, 1000])
    def test_inverse_consistency(self, rng, delta, m):
        col = l1_kernel(delta, 1.0 / m, m).r.copy()
        col[0] += 2.0 * 64**2
        b = rng.standard_normal(m)
        x = solve_lower_toeplitz(LowerToeplitz(col), b)
        assert np.abs(fast_matvec(col, x) - b).max() <= 1e-10 * np.abs(b).max()

    def test_singular(self):
        with pytest.raises(SingularToeplitzError):
            invert_first_column([0.0, 1.0])
        with pytest.raises(SingularToeplitzError):
            forward_substitution_inverse([0.0])

    def test_bad_base_size(self):
        with pytest.raises(ValueError):
            invert_first_column([1.0, 1.0], base_size=3)

    @given(st.integers(1, 96), st.integers(0, 2**31))
    def test_product_is_identity(self, m, seed):
        col = _diag_dominant(np.random.default_rng(seed), m)
        g = invert_first_column(col)
        e = np.zeros(m)
        e[0] = 1.0
        np.testing.assert_allclose(naive_matvec(col, g), e, atol=1e-11)


class TestSolve:
    def test_identity(self, rng):
        b = rng.standard_normal(8)
        np.testing.assert_allclose(solve_lower_toeplitz(np.eye(8)[0], b), b, atol=1e-15)

    def test_hand_solve(self):
        np.testing.assert_allclose(solve_lower_toeplitz([2.0, 1.0], [2.0, 3.0]), [1.0, 1.0])

    def test_random_system(self, rng):
        col = _diag_dominant(rng, 256)
        b = rng.standard_normal(256)
        ref = np.linalg.solve(toeplitz.dense(col), b)
        inv = invert_first_column(col)
        for got in (
            solve_lower_toeplitz(col, b),
            solve_lower_toeplitz(col, b, inv),
            solve_lower_toeplitz(col, b, CirculantEmbedding.from_column(inv)),
        ):
            assert np.abs(got - ref).max() <= 1e-10 * np.abs(ref).max()


def test_matvec_scaling():
    """time(2M) / time(M) <= 2.8 for every doubling from M = 2^14 up to 2^18."""
    rng = np.random.default_rng(1)
    sizes = [2**k for k in range(14, 19)]
    cases = [(CirculantEmbedding.from_column(rng.standard_normal(m)), rng.standard_normal(m)) for m in sizes]
    best = np.full(len(sizes), np.inf)
    # interleaved rounds so a slow spell on the machine hits every size alike
    for _ in range(40):
        for k, (emb, x) in enumerate(cases):
            t = time.perf_counter()
            emb.matvec(x)
            best[k] = min(best[k], time.perf_counter() - t)
    ratios = best[1:] / best[:-1]
    assert ratios.max() <= 2.8, ratios
