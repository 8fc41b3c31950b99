"""L1 discretisation of the Caputo derivative and the space-time operator.

Grid functions carry interior spatial points only (homogeneous Dirichlet
values are implicit) and time levels ``1..M`` along the last array axis.  The
value at ``t_0`` lives in a separate ``initial`` array so the unknown vector of
a solve contains exactly the ``N*M`` (or ``N*N*M``) unknowns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import toeplitz

__all__ = [
    "FractionalKernel",
    "SpaceTimeGrid",
    "SpaceTimeFunction",
    "ProblemSpec",
    "gamma_fn",
    "l1_kernel",
    "l1_weights",
    "mittag_leffler",
    "apply_laplacian",
    "apply_space_time_operator",
    "residual",
    "max_norm",
]


def gamma_fn(x: float) -> float:
    """Gamma function for positive arguments.

    Delegates to :func:`math.gamma`, which is accurate to a few ulp on the
    range ``[0.5, 3]`` where every kernel constant is evaluated.
    """
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise ValueError(f"gamma_fn is defined here for x > 0 only, got {x!r}")
    return math.gamma(x)


def l1_weights(delta: float, count: int) -> np.ndarray:
    """Return ``d_0..d_count`` with ``d_0 = 0`` and ``d_k = k^(1-d) - (k-1)^(1-d)``.

    The difference is evaluated as ``-k^a * expm1(a * log1p(-1/k))`` so the
    slowly decaying tail keeps full relative accuracy.
    """
    a = 1.0 - delta
    d = np.zeros(count + 1)
    if count >= 1:
        d[1] = 1.0
    if count >= 2:
        k = np.arange(2, count + 1, dtype=float)
        d[2:] = -(k**a) * np.expm1(a * np.log1p(-1.0 / k))
    return d


@dataclass(frozen=True)
class FractionalKernel:
    """First column of the lower-triangular Toeplitz time operator ``T_M``."""

    delta: float
    tau: float
    m_steps: int
    r: np.ndarray = field(repr=False)

    @property
    def scale(self) -> float:
        """``tau^-delta / Gamma(2 - delta)``."""
        return self.tau ** (-self.delta) / gamma_fn(2.0 - self.delta)

    @property
    def d(self) -> np.ndarray:
        return l1_weights(self.delta, self.m_steps)

    @property
    def initial_weights(self) -> np.ndarray:
        """Coefficients of ``u_0`` in ``D_M u_m``, negated: ``scale * d_m``."""
        return self.scale * self.d[1:]

    @property
    def matrix(self) -> toeplitz.LowerToeplitz:
        return toeplitz.LowerToeplitz(self.r)

    def line_matrix(self, sigma: float) -> toeplitz.LowerToeplitz:
        """``T_M + sigma * I``, the matrix of one time line in the smoother."""
        return self.matrix.shifted(sigma)


def l1_kernel(delta: float, tau: float, m_steps: int) -> FractionalKernel:
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta!r}")
    if not tau > 0.0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    if int(m_steps) != m_steps or m_steps < 1:
        raise ValueError(f"m_steps must be a positive integer, got {m_steps!r}")
    m_steps = int(m_steps)
    d = l1_weights(delta, m_steps)
    scale = tau ** (-delta) / gamma_fn(2.0 - delta)
    r = scale * np.diff(d)
    r.setflags(write=False)
    return FractionalKernel(float(delta), float(tau), m_steps, r)


def mittag_leffler(delta: float, z: float) -> float:
    """One-parameter Mittag-Leffler function ``E_delta(z)`` for ``-1.5 <= z <= 0``.

    Summed as a power series.  For small ``delta`` and ``|z| > 1`` the terms
    grow far beyond the result before decaying, so the series is summed in
    extended precision with enough guard digits to absorb the cancellation.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta!r}")
    if not -1.5 <= z <= 0.0:
        raise ValueError(f"z must lie in [-1.5, 0], got {z!r}")
    if z == 0.0:
        return 1.0
    # log10 of the largest term, scanning until the terms decay for good
    biggest, k = 0.0, 0
    logz = math.log10(-z)
    while True:
        k += 1
        lt = k * logz - math.lgamma(delta * k + 1.0) / math.log(10.0)
        biggest = max(biggest, lt)
        if lt < biggest - 20.0 and lt < -20.0:
            break
    if biggest < 1.0:
        total, term_k = 0.0, 0
        while True:
            term = z**term_k / math.gamma(delta * term_k + 1.0)
            total += term
            if abs(term) < 1e-16 * (1.0 + abs(total)) and term_k > 1:
                return total
            term_k += 1
    import mpmath

    with mpmath.workdps(int(biggest) + 25):
        zz = mpmath.mpf(z)
        dd = mpmath.mpf(delta)
        total = mpmath.mpf(0)
        term_k = 0
        while True:
            term = zz**term_k / mpmath.gamma(dd * term_k + 1)
            total += term
            if abs(term) < mpmath.mpf(10) ** (-30) * (1 + abs(total)) and term_k > 1:
                return float(total)
            term_k += 1


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform grid on ``[0, L]^dim x [0, T]`` with ``N`` interior points per axis."""

    dim: int
    length: float
    n_interior: int
    t_final: float
    m_steps: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError("dim must be 1 or 2")
        if self.n_interior < 1 or self.m_steps < 1:
            raise ValueError("need at least one interior point and one time step")
        if not (self.length > 0 and self.t_final > 0):
            raise ValueError("length and t_final must be positive")

    @property
    def h(self) -> float:
        return self.length / (self.n_interior + 1)

    @property
    def tau(self) -> float:
        return self.t_final / self.m_steps

    @property
    def x(self) -> np.ndarray:
        """Interior coordinates ``x_n = n h``, ``n = 1..N``."""
        return self.h * np.arange(1, self.n_interior + 1)

    @property
    def t(self) -> np.ndarray:
        """Time levels ``t_m = m tau``, ``m = 1..M``."""
        return self.tau * np.arange(1, self.m_steps + 1)

    @property
    def spatial_shape(self) -> tuple:
        return (self.n_interior,) * self.dim

    @property
    def shape(self) -> tuple:
        return self.spatial_shape + (self.m_steps,)

    def mesh(self):
        """Broadcastable coordinate arrays ``(x[, y], t)`` over interior points."""
        x = self.x
        t = self.t
        if self.dim == 1:
            return x[:, None], t[None, :]
        return x[:, None, None], x[None, :, None], t[None, None, :]

    def spatial_mesh(self):
        x = self.x
        if self.dim == 1:
            return (x,)
        return x[:, None], x[None, :]

    def can_coarsen(self) -> bool:
        return self.n_interior >= 3 and (self.n_interior + 1) % 2 == 0

    def coarsened(self) -> "SpaceTimeGrid":
        if not self.can_coarsen():
            raise ValueError(f"grid with N={self.n_interior} has no coarser level")
        return SpaceTimeGrid(
            self.dim, self.length, (self.n_interior + 1) // 2 - 1, self.t_final, self.m_steps
        )

    def kernel(self, delta: float) -> FractionalKernel:
        return l1_kernel(delta, self.tau, self.m_steps)


def max_norm(values) -> float:
    values = np.asarray(values)
    return float(np.max(np.abs(values))) if values.size else 0.0


@dataclass
class SpaceTimeFunction:
    """Grid function on interior points, time levels ``1..M`` on the last axis."""

    grid: SpaceTimeGrid
    values: np.ndarray
    initial: Optional[np.ndarray] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values have shape {self.values.shape}, grid expects {self.grid.shape}"
            )
        if self.initial is None:
            self.initial = np.zeros(self.grid.spatial_shape)
        else:
            self.initial = np.asarray(self.initial, dtype=float)
            if self.initial.shape != self.grid.spatial_shape:
                raise ValueError("initial layer does not match the spatial grid")

    @classmethod
    def zeros(cls, grid: SpaceTimeGrid) -> "SpaceTimeFunction":
        return cls(grid, np.zeros(grid.shape))

    def max_norm(self) -> float:
        return max_norm(self.values)

    def copy(self) -> "SpaceTimeFunction":
        return SpaceTimeFunction(self.grid, self.values.copy(), self.initial.copy())


@dataclass
class ProblemSpec:
    """Time-fractional diffusion problem on a :class:`SpaceTimeGrid`.

    Callbacks are vectorised over numpy arrays: ``rhs(x, t)`` / ``rhs(x, y, t)``,
    ``initial(x)`` / ``initial(x, y)``.  ``kind`` is one of ``"linear-1d"``,
    ``"linear-2d"`` or ``"nonlinear-1d"``; the nonlinear kind solves
    ``D_t u = (D(u) u_x)_x + c u_x + f``.
    """

    grid: SpaceTimeGrid
    delta: float
    rhs: Callable
    initial: Callable
    exact: Optional[Callable] = None
    kind: str = "linear-1d"
    diffusion_coef: Optional[Callable] = None
    diffusion_deriv: Optional[Callable] = None
    convection: float = 0.0
    name: str = ""

    def __post_init__(self):
        kinds = {"linear-1d": 1, "linear-2d": 2, "nonlinear-1d": 1}
        if self.kind not in kinds:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if kinds[self.kind] != self.grid.dim:
            raise ValueError(f"kind {self.kind!r} needs a {kinds[self.kind]}-d grid")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError(f"delta must lie in (0, 1], got {self.delta!r}")
        if self.kind == "nonlinear-1d":
            if self.diffusion_coef is None:
                raise ValueError("nonlinear-1d problems need diffusion_coef")
        elif self.diffusion_coef is not None or self.convection:
            raise ValueError("linear problems take no diffusion_coef or convection")

    @property
    def linear(self) -> bool:
        return self.kind != "nonlinear-1d"

    def kernel(self) -> FractionalKernel:
        return self.grid.kernel(self.delta)

    def rhs_values(self) -> np.ndarray:
        return np.broadcast_to(self.rhs(*self.grid.mesh()), self.grid.shape).astype(float)

    def initial_values(self) -> np.ndarray:
        g = self.initial(*self.grid.spatial_mesh())
        return np.broadcast_to(g, self.grid.spatial_shape).astype(float)

    def exact_values(self) -> np.ndarray:
        if self.exact is None:
            raise ValueError(f"problem {self.name or self.kind!r} has no exact solution")
        return np.broadcast_to(self.exact(*self.grid.mesh()), self.grid.shape).astype(float)

    def source(self) -> SpaceTimeFunction:
        return SpaceTimeFunction(self.grid, self.rhs_values())


def apply_laplacian(u: np.ndarray, h: float) -> np.ndarray:
    """Apply ``A_h = -Delta_h`` (zero Dirichlet) to every time level of ``u``.

    ``u`` has one or two spatial axes followed by the time axis. Summing
    neighbour differences rather than ``2u - u_lo - u_hi`` keeps the rounding
    error proportional to the local variation of ``u``.
    """
    out = np.zeros_like(u, dtype=float)
    for axis in range(u.ndim - 1):
        pad = [(0, 0)] * u.ndim
        pad[axis] = (1, 1)
        up = np.pad(u, pad)
        n = u.shape[axis]
        lo = np.take(up, np.arange(0, n), axis=axis)
        hi = np.take(up, np.arange(2, n + 2), axis=axis)
        out += (u - lo) + (u - hi)
    return out / h**2


def _check(kernel: FractionalKernel, grid: SpaceTimeGrid, values: np.ndarray):
    if values.shape != grid.shape:
        raise ValueError(f"function of shape {values.shape} on grid of shape {grid.shape}")
    if kernel.m_steps != grid.m_steps or not math.isclose(kernel.tau, grid.tau, rel_tol=1e-12):
        raise ValueError("kernel does not match the grid's time discretisation")


def apply_space_time_operator(
    problem: ProblemSpec, kernel: FractionalKernel, u: SpaceTimeFunction
) -> SpaceTimeFunction:
    """``(T_M (x) I + I (x) A_h) u`` minus the initial-layer term ``scale * d_m * u_0``."""
    if not problem.linear:
        raise ValueError("apply_space_time_operator needs a linear problem")
    if u.grid != problem.grid:
        raise ValueError("function lives on a different grid than the problem")
    _check(kernel, problem.grid, u.values)
    out = toeplitz.fast_matvec(kernel.r, u.values)
    out += apply_laplacian(u.values, problem.grid.h)
    out -= u.initial[..., None] * kernel.initial_weights
    return SpaceTimeFunction(problem.grid, out)


def residual(
    problem: ProblemSpec, kernel: FractionalKernel, u: SpaceTimeFunction, f: SpaceTimeFunction
) -> SpaceTimeFunction:
    """Defect ``f - A u``; use ``.max_norm()`` on the result for its size."""
    if f.values.shape != u.values.shape:
        raise ValueError("right-hand side and iterate have different shapes")
    au = apply_space_time_operator(problem, kernel, u)
    return SpaceTimeFunction(problem.grid, f.values - au.values)
