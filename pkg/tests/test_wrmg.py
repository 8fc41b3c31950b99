import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracwr import problems, toeplitz
from fracwr.sama import tau_for_lambda
from fracwr.fractional import ProblemSpec, SpaceTimeFunction, SpaceTimeGrid, l1_kernel
from fracwr.wrmg import (
    ConvergenceHistory,
    CycleConfig,
    GridHierarchy,
    dense_spatial_laplacian,
    effective_rhs,
    measure_asymptotic_factor,
    prolong,
    restrict,
    smooth,
    smooth_red_black_1d,
    smooth_red_black_2d,
    solve,
    wrmg_cycle,
)


def _dense_operator(level):
    a = dense_spatial_laplacian(level.dim, level.n, level.h)
    t = toeplitz.dense(level.kernel.r)
    return np.kron(np.eye(a.shape[0]), t) + np.kron(a, np.eye(level.kernel.m_steps))


def _color_rows(level, color, m):
    mask = np.zeros(level.grid.spatial_shape, dtype=bool)
    mask[color] = True
    return np.flatnonzero(np.repeat(mask.ravel(), m))


def _dense_block_gauss_seidel(level, u, f):
    """One red-black sweep as block Gauss-Seidel on the assembled system."""
    a = _dense_operator(level)
    m = level.kernel.m_steps
    x, b = u.ravel().copy(), f.ravel()
    for color in level.colors:
        rows = _color_rows(level, color, m)
        rest = np.setdiff1d(np.arange(x.size), rows)
        x[rows] = np.linalg.solve(a[np.ix_(rows, rows)], b[rows] - a[np.ix_(rows, rest)] @ x[rest])
    return x.reshape(u.shape)


def _dense_transfer(dim, n_fine, m):
    nc = (n_fine + 1) // 2 - 1
    p1 = np.zeros((n_fine, nc))
    for j in range(nc):
        p1[2 * j : 2 * j + 3, j] = [0.5, 1.0, 0.5]
    p = p1 if dim == 1 else np.kron(p1, p1)
    r = p.T / 2**dim
    eye = np.eye(m)
    return np.kron(p, eye), np.kron(r, eye)


def _smoother_matrix(level):
    a = _dense_operator(level)
    m = level.kernel.m_steps
    s = np.eye(a.shape[0])
    for color in level.colors:
        rows = _color_rows(level, color, m)
        g = np.eye(a.shape[0])
        g[rows] -= np.linalg.solve(a[np.ix_(rows, rows)], a[rows])
        s = g @ s
    return s


def _grid(dim, n, m, delta=0.5, length=1.0, t_final=1.0):
    return SpaceTimeGrid(dim, length, n, t_final, m)


class TestSmoother:
    @pytest.mark.parametrize("first_color", ["odd", "even"])
    def test_dense_gauss_seidel_1d(self, rng, first_color):
        hier = GridHierarchy(_grid(1, 3, 2), 0.4, coarsest_n=3, first_color=first_color)
        lev = hier.finest
        u, f = rng.standard_normal((2,) + lev.grid.shape)
        ref = _dense_block_gauss_seidel(lev, u, f)
        got = smooth_red_black_1d(lev, u.copy(), f)
        assert np.abs(got - ref).max() <= 1e-12 * max(1.0, np.abs(ref).max())

    @pytest.mark.parametrize("first_color", ["odd", "even"])
    def test_dense_gauss_seidel_2d(self, rng, first_color):
        hier = GridHierarchy(_grid(2, 3, 2), 0.7, coarsest_n=3, first_color=first_color)
        lev = hier.finest
        u, f = rng.standard_normal((2,) + lev.grid.shape)
        ref = _dense_block_gauss_seidel(lev, u, f)
        got = smooth_red_black_2d(lev, u.copy(), f)
        assert np.abs(got - ref).max() <= 1e-12 * max(1.0, np.abs(ref).max())

    @given(st.sampled_from([1, 2]), st.floats(0.1, 1.0), st.integers(0, 2**31))
    @settings(max_examples=20)
    def test_dense_gauss_seidel_property(self, dim, delta, seed):
        rng = np.random.default_rng(seed)
        hier = GridHierarchy(_grid(dim, 7 if dim == 1 else 3, 5), delta, coarsest_n=7)
        lev = hier.finest
        u, f = rng.standard_normal((2,) + lev.grid.shape)
        ref = _dense_block_gauss_seidel(lev, u, f)
        got = smooth(lev, u.copy(), f)
        assert np.abs(got - ref).max() <= 1e-11 * max(1.0, np.abs(ref).max())

    def test_zero_fixed_point(self):
        lev = GridHierarchy(_grid(1, 15, 4), 0.3).finest
        u = np.zeros(lev.grid.shape)
        smooth(lev, u, np.zeros_like(u), 3)
        assert np.all(u == 0)

    @pytest.mark.parametrize("dim", [1, 2])
    def test_exact_solution_fixed_point(self, rng, dim):
        lev = GridHierarchy(_grid(dim, 7, 6), 0.6).finest
        f = rng.standard_normal(lev.grid.shape)
        u = np.linalg.solve(_dense_operator(lev), f.ravel()).reshape(f.shape)
        out = smooth(lev, u.copy(), f, 2)
        assert np.abs(out - u).max() <= 1e-11 * np.abs(u).max()

    def test_dimension_guards(self):
        lev1 = GridHierarchy(_grid(1, 3, 2), 0.5).finest
        lev2 = GridHierarchy(_grid(2, 3, 2), 0.5).finest
        with pytest.raises(ValueError):
            smooth_red_black_2d(lev1, np.zeros((3, 2)), np.zeros((3, 2)))
        with pytest.raises(ValueError):
            smooth_red_black_1d(lev2, np.zeros((3, 3, 2)), np.zeros((3, 3, 2)))


class TestTransfer:
    def test_restrict_constant(self):
        r = restrict(np.full((15, 3), 2.5))
        np.testing.assert_allclose(r, 2.5)

    def test_restrict_hat(self):
        fine = np.zeros((7, 1))
        fine[3] = 1.0
        np.testing.assert_allclose(restrict(fine)[:, 0], [0.0, 0.5, 0.0])

    def test_restrict_zero(self):
        assert np.all(restrict(np.zeros((7, 7, 2))) == 0)

    def test_prolong_linear_exact(self):
        grid = _grid(1, 7, 2)
        coarse = grid.coarsened()
        c = np.outer(3.0 * coarse.x, [1.0, -2.0])
        fine = prolong(c)
        xf = grid.x
        # the left Dirichlet value agrees with 3x; the right one does not
        np.testing.assert_allclose(fine[:-1], np.outer(3.0 * xf, [1.0, -2.0])[:-1])

    def test_prolong_spike(self):
        c = np.zeros((3, 1))
        c[1] = 1.0
        np.testing.assert_allclose(prolong(c)[:, 0], [0, 0, 0.5, 1, 0.5, 0, 0])

    def test_prolong_zero(self):
        assert np.all(prolong(np.zeros((3, 3, 4))) == 0)

    def test_full_weighting_is_scaled_adjoint(self, rng):
        for dim in (1, 2):
            shape = (7,) * dim + (2,)
            p, r = _dense_transfer(dim, 7, 2)
            e = rng.standard_normal(((3,) * dim) + (2,))
            v = rng.standard_normal(shape)
            np.testing.assert_allclose(prolong(e).ravel(), p @ e.ravel(), atol=1e-14)
            np.testing.assert_allclose(restrict(v).ravel(), r @ v.ravel(), atol=1e-14)

    def test_space_time_function_wrappers(self, rng):
        grid = _grid(1, 7, 3)
        f = SpaceTimeFunction(grid, rng.standard_normal(grid.shape))
        c = restrict(f)
        assert c.grid == grid.coarsened()
        assert prolong(c).grid.n_interior == 7

    def test_no_coarser_level(self):
        with pytest.raises(ValueError):
            restrict(np.zeros((1, 2)))


class TestCycle:
    @pytest.mark.parametrize("dim, cycle, nu", [(1, "W", (1, 1)), (1, "V", (0, 1)), (2, "W", (1, 0)), (2, "V", (1, 1))])
    def test_two_grid_matrix(self, rng, dim, cycle, nu):
        n, m = 7, 4
        hier = GridHierarchy(_grid(dim, n, m, length=2.0), 0.4, coarsest_n=3)
        assert len(hier) == 2
        fine, coarse = hier[0], hier[1]
        cfg = CycleConfig(cycle, *nu)
        a, ac = _dense_operator(fine), _dense_operator(coarse)
        p, r = _dense_transfer(dim, n, m)
        s = _smoother_matrix(fine)
        cgc = np.eye(a.shape[0]) - p @ np.linalg.solve(ac, r @ a)
        e2g = np.linalg.matrix_power(s, nu[1]) @ cgc @ np.linalg.matrix_power(s, nu[0])
        err = rng.standard_normal(fine.grid.shape)
        got = wrmg_cycle(hier, err.copy(), np.zeros_like(err), cfg)
        ref = (e2g @ err.ravel()).reshape(err.shape)
        assert np.abs(got - ref).max() <= 1e-12 * np.abs(err).max()

    def test_coarsest_direct_solve(self, rng):
        lev = GridHierarchy(_grid(2, 3, 5), 0.5, coarsest_n=3).finest
        f = rng.standard_normal(lev.grid.shape)
        ref = np.linalg.solve(_dense_operator(lev), f.ravel()).reshape(f.shape)
        np.testing.assert_allclose(lev.direct_solve(f), ref, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("dim", [1, 2])
    def test_exact_solution_fixed_point(self, rng, dim):
        hier = GridHierarchy(_grid(dim, 15 if dim == 1 else 7, 8), 0.3)
        lev = hier.finest
        f = rng.standard_normal(lev.grid.shape)
        u = np.linalg.solve(_dense_operator(lev), f.ravel()).reshape(f.shape)
        out = wrmg_cycle(hier, u.copy(), f, CycleConfig("V", 1, 1))
        assert np.abs(out - u).max() <= 1e-11 * np.abs(u).max()

    def test_state_shape_checked(self):
        hier = GridHierarchy(_grid(1, 7, 4), 0.5)
        with pytest.raises(ValueError):
            wrmg_cycle(hier, np.zeros((3, 4)), np.zeros((3, 4)), CycleConfig())

    def test_hierarchy_depth(self):
        hier = GridHierarchy(_grid(1, 63, 2), 0.5)
        assert [lev.n for lev in hier.levels] == [63, 31, 15, 7, 3, 1]
        assert [lev.coarsest for lev in hier.levels] == [False] * 5 + [True]
        hier3 = GridHierarchy(_grid(1, 63, 2), 0.5, coarsest_n=3)
        assert hier3[len(hier3) - 1].n == 3


class TestSolve:
    def test_backward_euler_oracle(self):
        # delta = 1: the L1 scheme is implicit Euler, march it level by level
        p = problems.mittag_leffler_1d(1.0, 63, 40)
        sol, hist = solve(p, CycleConfig(tol=1e-13, max_iters=40))
        assert hist.converged
        h, tau = p.grid.h, p.grid.tau
        a = dense_spatial_laplacian(1, 63, h)
        lhs = np.eye(63) / tau + a
        u = p.initial_values().copy()
        ref = np.empty(p.grid.shape)
        for m in range(p.grid.m_steps):
            u = np.linalg.solve(lhs, u / tau)
            ref[:, m] = u
        assert np.abs(sol.values - ref).max() <= 1e-9

    def test_discrete_solution_matches_dense(self):
        p = problems.manufactured_2d(0.4, 7, 6)
        sol, hist = solve(p, CycleConfig(nu1=1, nu2=1, tol=1e-13))
        hier = GridHierarchy(p.grid, p.delta)
        ref = np.linalg.solve(_dense_operator(hier.finest), effective_rhs(p).ravel())
        np.testing.assert_allclose(sol.values.ravel(), ref, rtol=1e-10, atol=1e-12)

    def test_discretisation_error_is_small(self):
        sol, _ = solve(problems.mittag_leffler_1d(0.7, 127, 512), CycleConfig())
        p = problems.mittag_leffler_1d(0.7, 127, 512)
        assert np.abs(sol.values - p.exact_values()).max() < 3e-3

    def test_tol_one_stops_immediately(self):
        _, hist = solve(problems.mittag_leffler_1d(0.5, 15, 8), CycleConfig(tol=1.0))
        assert hist.iterations == 0 and hist.converged

    def test_budget_exhaustion(self):
        _, hist = solve(problems.mittag_leffler_1d(0.5, 63, 16), CycleConfig(max_iters=2))
        assert hist.iterations == 2 and not hist.converged

    def test_nonlinear_rejected(self):
        with pytest.raises(ValueError):
            solve(problems.porous_media(0.5, 7, 4), CycleConfig())

    @pytest.mark.parametrize("delta", [0.1, 0.4, 0.7, 1.0])
    def test_h_independence(self, delta):
        counts = []
        for nx in (128, 256, 512):
            h = np.pi / nx
            # lambda = tau^delta Gamma(2 - delta) / h^2 stays fixed while refining
            tau = tau_for_lambda(2.0, delta, h)
            grid = SpaceTimeGrid(1, np.pi, nx - 1, 64 * tau, 64)
            p = ProblemSpec(grid, delta, rhs=lambda x, t: 0 * x * t, initial=np.sin)
            counts.append(solve(p, CycleConfig())[1].iterations)
        assert max(counts) - min(counts) <= 2, counts

    @pytest.mark.parametrize("dim, nx", [(1, 128), (2, 32)])
    def test_delta_robustness(self, dim, nx):
        name = "mittag-leffler-1d" if dim == 1 else "manufactured-2d"
        cfg = CycleConfig(nu1=0 if dim == 1 else 1, nu2=1)
        counts = [solve(problems.build(name, d, nx - 1, nx), cfg)[1].iterations for d in (0.1, 0.4, 0.7, 1.0)]
        assert max(counts) - min(counts) <= 2, counts


class TestHistory:
    def test_factors_and_mean(self):
        h = ConvergenceHistory(residuals=[1.0, 0.5, 0.05, 0.005])
        np.testing.assert_allclose(h.factors, [0.5, 0.1, 0.1])
        assert h.mean_factor == pytest.approx(0.1)
        assert h.iterations == 3

    def test_empty(self):
        assert np.isnan(ConvergenceHistory(residuals=[1.0]).mean_factor)

    @given(st.lists(st.floats(1e-3, 1.0), min_size=2, max_size=20))
    def test_mean_is_geometric_tail(self, factors):
        res = np.cumprod([1.0] + factors)
        h = ConvergenceHistory(residuals=list(res))
        assert h.mean_factor == pytest.approx(np.prod(factors[1:]) ** (1 / (len(factors) - 1)), rel=1e-9)


class TestAsymptoticFactor:
    def test_deterministic(self):
        hier = GridHierarchy(_grid(1, 63, 16), 0.4)
        cfg = CycleConfig("W", 0, 1)
        a = measure_asymptotic_factor(hier, cfg, 30, 5, seed=3)
        b = measure_asymptotic_factor(hier, cfg, 30, 5, seed=3)
        assert a == b and 0.0 < a < 0.2

    def test_window_validated(self):
        hier = GridHierarchy(_grid(1, 7, 2), 0.4)
        with pytest.raises(ValueError):
            measure_asymptotic_factor(hier, CycleConfig(), 5, 6)


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(cycle="F"), dict(nu1=0, nu2=0), dict(tol=0.0), dict(tol=2.0), dict(max_iters=-1), dict(coarsest_n=0), dict(first_color="red")],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            CycleConfig(**kwargs)

    def test_gamma(self):
        assert CycleConfig("v").gamma == 1 and CycleConfig("w").gamma == 2
