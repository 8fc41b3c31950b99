"""Linear multigrid waveform relaxation.

Red-black (zebra-in-time) line smoothing, coarsening in space only, full
weighting and (bi)linear interpolation, V- and W-cycles, in one and two space
dimensions.  The time direction is never coarsened: every level carries the
full ``M`` time levels and shares the same fractional kernel.

Internally a grid function on a level is a plain array with the spatial axes
first and the time axis last.  Coarse-level defect equations have zero
initial history, so a level operator is exactly ``T_M (x) I + I (x) A_h``;
the initial-layer term of the fine problem is folded into its right-hand side.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import toeplitz
from .fractional import (
    FractionalKernel,
    ProblemSpec,
    SpaceTimeFunction,
    SpaceTimeGrid,
    apply_laplacian,
    max_norm,
)

__all__ = [
    "CycleConfig",
    "ConvergenceHistory",
    "Level",
    "GridHierarchy",
    "smooth_red_black_1d",
    "smooth_red_black_2d",
    "smooth",
    "restrict",
    "prolong",
    "wrmg_cycle",
    "solve",
    "initial_iterate",
    "effective_rhs",
    "measure_asymptotic_factor",
    "dense_spatial_laplacian",
]


@dataclass(frozen=True)
class CycleConfig:
    cycle: str = "V"
    nu1: int = 0
    nu2: int = 1
    tol: float = 1e-10
    max_iters: int = 100
    coarsest_n: int = 1
    first_color: str = "odd"

    def __post_init__(self):
        object.__setattr__(self, "cycle", self.cycle.upper())
        if self.first_color not in ("odd", "even"):
            raise ValueError("first_color must be 'odd' or 'even'")
        if self.cycle not in ("V", "W"):
            raise ValueError(f"cycle must be 'V' or 'W', got {self.cycle!r}")
        if self.nu1 < 0 or self.nu2 < 0 or self.nu1 + self.nu2 < 1:
            raise ValueError("need nu1, nu2 >= 0 with nu1 + nu2 >= 1")
        # tol == 1 is accepted and stops before the first cycle
        if not 0.0 < self.tol <= 1.0:
            raise ValueError(f"tol must lie in (0, 1], got {self.tol!r}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if self.coarsest_n < 1:
            raise ValueError("coarsest_n must be at least 1")

    @property
    def gamma(self) -> int:
        return 1 if self.cycle == "V" else 2


@dataclass
class ConvergenceHistory:
    """Residual max-norms ``res_0, res_1, ...`` and cumulative wall time."""

    residuals: List[float] = field(default_factory=list)
    seconds: List[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return max(len(self.residuals) - 1, 0)

    @property
    def factors(self) -> List[float]:
        r = self.residuals
        return [r[k + 1] / r[k] if r[k] > 0 else 0.0 for k in range(len(r) - 1)]

    @property
    def mean_factor(self) -> float:
        """Geometric mean of the reduction factors after the first iteration.

        The first cycle acts on the start-up residual; with a single iteration
        its factor is returned.
        """
        f = self.factors
        if not f:
            return float("nan")
        tail = f[1:] if len(f) > 1 else f
        if min(tail) <= 0.0:
            return 0.0
        return float(np.exp(np.mean(np.log(tail))))

    @property
    def wall_time(self) -> float:
        return self.seconds[-1] if self.seconds else 0.0


def dense_spatial_laplacian(dim: int, n: int, h: float) -> np.ndarray:
    """Dense ``A_h`` on ``n`` interior points per axis (row-major in 2D)."""
    a1 = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h**2
    if dim == 1:
        return a1
    eye = np.eye(n)
    return np.kron(a1, eye) + np.kron(eye, a1)


class Level:
    """One grid of the hierarchy with its cached Toeplitz data."""

    def __init__(
        self,
        grid: SpaceTimeGrid,
        kernel: FractionalKernel,
        coarsest: bool,
        first_color: str = "odd",
    ):
        self.grid = grid
        self.dim = grid.dim
        self.h = grid.h
        self.n = grid.n_interior
        self.kernel = kernel
        self.coarsest = coarsest
        self.time_op = toeplitz.CirculantEmbedding.from_column(kernel.r)
        self.diag = 2.0 * self.dim / self.h**2
        line = kernel.line_matrix(self.diag)
        self.line_inverse = toeplitz.CirculantEmbedding.from_column(
            toeplitz.invert_first_column(line)
        )
        # colours are named by the parity of the 1-based point index n (n + l in 2d);
        # even points coincide with the coarse grid
        if self.dim == 1:
            even, odd = np.arange(1, self.n, 2), np.arange(0, self.n, 2)
        else:
            i, j = np.indices((self.n, self.n))
            even = (i + j) % 2 == 0
            odd = ~even
        if first_color not in ("odd", "even"):
            raise ValueError("first_color must be 'odd' or 'even'")
        self.first_color = first_color
        self.colors = [odd, even] if first_color == "odd" else [even, odd]
        if coarsest:
            a = dense_spatial_laplacian(self.dim, self.n, self.h)
            w, q = np.linalg.eigh(a)
            self.eigvecs = q
            self.mode_inverses = np.stack(
                [toeplitz.invert_first_column(kernel.line_matrix(wj)) for wj in w]
            )
            m = kernel.m_steps
            self._mode_eigs = np.fft.rfft(self.mode_inverses, n=2 * m, axis=-1)

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.time_op.matvec(u) + apply_laplacian(u, self.h)

    def residual(self, u: np.ndarray, f: np.ndarray) -> np.ndarray:
        return f - self.apply(u)

    def direct_solve(self, f: np.ndarray) -> np.ndarray:
        """Exact solve by diagonalising ``A_h``: one Toeplitz solve per mode."""
        m = self.kernel.m_steps
        flat = f.reshape(-1, m)
        modes = self.eigvecs.T @ flat
        y = np.fft.irfft(np.fft.rfft(modes, n=2 * m, axis=-1) * self._mode_eigs, n=2 * m, axis=-1)
        return (self.eigvecs @ y[:, :m]).reshape(f.shape)


class GridHierarchy:
    """Spatially coarsened grids sharing ``tau`` and ``M``, finest first."""

    def __init__(
        self,
        grid: SpaceTimeGrid,
        delta: float,
        coarsest_n: int = 1,
        first_color: str = "odd",
    ):
        kernel = grid.kernel(delta)
        self.delta = delta
        self.kernel = kernel
        grids = [grid]
        while grids[-1].n_interior > coarsest_n and grids[-1].can_coarsen():
            grids.append(grids[-1].coarsened())
        self.levels = [
            Level(g, kernel, k == len(grids) - 1, first_color) for k, g in enumerate(grids)
        ]

    @classmethod
    def for_problem(cls, problem: ProblemSpec, config: CycleConfig) -> "GridHierarchy":
        return cls(problem.grid, problem.delta, config.coarsest_n, config.first_color)

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, k) -> Level:
        return self.levels[k]

    @property
    def finest(self) -> Level:
        return self.levels[0]


def _stage(level: Level, u: np.ndarray, f: np.ndarray, color) -> None:
    # correction form: same result as solving the line system, smaller rounding floor
    # the time operator is only needed on the points being relaxed
    defect = f[color] - level.time_op.matvec(u[color]) - apply_laplacian(u, level.h)[color]
    u[color] += level.line_inverse.matvec(defect)


def smooth(level: Level, u: np.ndarray, f: np.ndarray, sweeps: int = 1) -> np.ndarray:
    """Red-black waveform relaxation in place, colours in ``level.colors`` order."""
    for _ in range(sweeps):
        for color in level.colors:
            _stage(level, u, f, color)
    return u


def smooth_red_black_1d(level: Level, u: np.ndarray, f: np.ndarray, sweeps: int = 1) -> np.ndarray:
    """Zebra-in-time sweeps over the two colours, each time line solved exactly."""
    if level.dim != 1:
        raise ValueError("smooth_red_black_1d needs a 1-d level")
    return smooth(level, u, f, sweeps)


def smooth_red_black_2d(level: Level, u: np.ndarray, f: np.ndarray, sweeps: int = 1) -> np.ndarray:
    """Chessboard sweeps over the parity classes of ``n + l``."""
    if level.dim != 2:
        raise ValueError("smooth_red_black_2d needs a 2-d level")
    return smooth(level, u, f, sweeps)


def _restrict_axis(r: np.ndarray, axis: int) -> np.ndarray:
    r = np.moveaxis(r, axis, 0)
    out = 0.25 * (r[0:-2:2] + 2.0 * r[1:-1:2] + r[2::2])
    return np.moveaxis(out, 0, axis)


def _prolong_axis(e: np.ndarray, axis: int) -> np.ndarray:
    e = np.moveaxis(e, axis, 0)
    nc = e.shape[0]
    out = np.zeros((2 * nc + 1,) + e.shape[1:])
    out[1::2] = e
    out[2:-1:2] = 0.5 * (e[:-1] + e[1:])
    out[0] = 0.5 * e[0]
    out[-1] = 0.5 * e[-1]
    return np.moveaxis(out, 0, axis)


def restrict(fine: np.ndarray, dim: Optional[int] = None) -> np.ndarray:
    """Full weighting in space, level by level in time."""
    if isinstance(fine, SpaceTimeFunction):
        grid = fine.grid
        return SpaceTimeFunction(grid.coarsened(), restrict(fine.values, grid.dim))
    dim = fine.ndim - 1 if dim is None else dim
    if (fine.shape[0] + 1) % 2 or fine.shape[0] < 3:
        raise ValueError(f"no coarser level below N={fine.shape[0]}")
    out = fine
    for axis in range(dim):
        out = _restrict_axis(out, axis)
    return out


def prolong(coarse: np.ndarray, dim: Optional[int] = None) -> np.ndarray:
    """Linear (1-d) or bilinear (2-d) interpolation in space."""
    if isinstance(coarse, SpaceTimeFunction):
        grid = coarse.grid
        fine_grid = SpaceTimeGrid(
            grid.dim, grid.length, 2 * grid.n_interior + 1, grid.t_final, grid.m_steps
        )
        return SpaceTimeFunction(fine_grid, prolong(coarse.values, grid.dim))
    dim = coarse.ndim - 1 if dim is None else dim
    out = coarse
    for axis in range(dim):
        out = _prolong_axis(out, axis)
    return out


def _cycle(hierarchy: GridHierarchy, k: int, u: np.ndarray, f: np.ndarray, config: CycleConfig):
    level = hierarchy[k]
    if level.coarsest:
        return level.direct_solve(f)
    smooth(level, u, f, config.nu1)
    rc = restrict(level.residual(u, f), level.dim)
    ec = np.zeros_like(rc)
    for _ in range(config.gamma):
        ec = _cycle(hierarchy, k + 1, ec, rc, config)
    u += prolong(ec, level.dim)
    smooth(level, u, f, config.nu2)
    return u


def wrmg_cycle(
    hierarchy: GridHierarchy, state: np.ndarray, rhs: np.ndarray, config: CycleConfig
) -> np.ndarray:
    """One multigrid waveform relaxation cycle on the finest level (in place).

    ``rhs`` must already contain the initial-layer contribution, see
    :func:`effective_rhs`.
    """
    if state.shape != hierarchy.finest.grid.shape:
        raise ValueError("state does not match the finest grid")
    out = _cycle(hierarchy, 0, state, rhs, config)
    if out is not state:
        state[...] = out
    return state


def effective_rhs(problem: ProblemSpec, kernel: Optional[FractionalKernel] = None) -> np.ndarray:
    """``f`` plus the known initial-layer term ``scale * d_m * g``."""
    kernel = problem.kernel() if kernel is None else kernel
    return problem.rhs_values() + problem.initial_values()[..., None] * kernel.initial_weights


def initial_iterate(problem: ProblemSpec) -> np.ndarray:
    """Constant-in-time extension of the initial data."""
    g = problem.initial_values()
    return np.repeat(g[..., None], problem.grid.m_steps, axis=-1)


def solve(
    problem: ProblemSpec,
    config: CycleConfig,
    hierarchy: Optional[GridHierarchy] = None,
    u0: Optional[np.ndarray] = None,
    callback=None,
):
    """Iterate cycles until ``||res_k|| <= tol * ||res_0||`` (max-norm) or ``max_iters``.

    Returns ``(solution, history)``; ``history.converged`` is False when the
    iteration budget ran out.
    """
    if not problem.linear:
        raise ValueError("solve() handles linear problems; use fas.solve_nonlinear")
    start = time.perf_counter()
    if hierarchy is None:
        hierarchy = GridHierarchy.for_problem(problem, config)
    f = effective_rhs(problem, hierarchy.kernel)
    u = initial_iterate(problem) if u0 is None else np.array(u0, dtype=float)
    fine = hierarchy.finest
    history = ConvergenceHistory()
    res0 = max_norm(fine.residual(u, f))
    history.residuals.append(res0)
    history.seconds.append(time.perf_counter() - start)
    target = config.tol * res0
    history.converged = res0 <= target or res0 == 0.0
    while not history.converged and history.iterations < config.max_iters:
        wrmg_cycle(hierarchy, u, f, config)
        res = max_norm(fine.residual(u, f))
        history.residuals.append(res)
        history.seconds.append(time.perf_counter() - start)
        if callback is not None:
            callback(history.iterations, u)
        history.converged = res <= target
    solution = SpaceTimeFunction(problem.grid, u, problem.initial_values())
    return solution, history


def measure_asymptotic_factor(
    hierarchy: GridHierarchy,
    config: CycleConfig,
    iterations: int = 100,
    window: int = 10,
    seed: int = 0,
) -> float:
    """Asymptotic error reduction of the cycle.

    Zero right-hand side and zero initial layer, so the iterate is the error.
    Starts from uniform(-1, 1) noise and returns the geometric mean of
    ``||e_{k+1}|| / ||e_k||`` (max-norm) over the last ``window`` cycles.  The
    error is renormalised after each cycle to stay clear of underflow.
    """
    if not 1 <= window <= iterations:
        raise ValueError("need 1 <= window <= iterations")
    rng = np.random.default_rng(seed)
    fine = hierarchy.finest
    e = rng.uniform(-1.0, 1.0, fine.grid.shape)
    f = np.zeros_like(e)
    logs = []
    for _ in range(iterations):
        before = max_norm(e)
        wrmg_cycle(hierarchy, e, f, config)
        after = max_norm(e)
        if after == 0.0:
            return 0.0
        logs.append(np.log(after / before))
        e /= after
    return float(np.exp(np.mean(logs[-window:])))
