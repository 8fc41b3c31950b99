"""Nonlinear waveform relaxation multigrid (FAS) for 1d porous-media flow.

The model is ``D_t u = (D(u) u_x)_x + c u_x + f`` with zero Dirichlet data.
Diffusion uses arithmetic-mean coefficients at the half points and the
convection term a first-order upwind difference.  Smoothing is a nonlinear
red-black Gauss-Seidel in which every line in time is solved by marching
forward, one scalar equation per time level.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy.optimize import brentq

from . import toeplitz
from .fractional import FractionalKernel, ProblemSpec, SpaceTimeFunction, max_norm
from .wrmg import (
    ConvergenceHistory,
    CycleConfig,
    GridHierarchy,
    Level,
    effective_rhs,
    initial_iterate,
    prolong,
    restrict,
)

__all__ = [
    "NonlinearLineSystem",
    "ScalarSolveError",
    "NewtonOptions",
    "inject",
    "nonlinear_residual",
    "nonlinear_smooth_red_black",
    "fas_cycle",
    "solve_nonlinear",
]


class ScalarSolveError(RuntimeError):
    """A pointwise nonlinear equation could not be solved."""

    def __init__(self, n: int, m: int, reason: str):
        super().__init__(f"scalar solve failed at point n={n}, time level m={m}: {reason}")
        self.n = n
        self.m = m


@dataclass(frozen=True)
class NewtonOptions:
    """Inner solver settings; ``tol`` is relative to the size of the terms in the equation."""

    tol: float = 1e-12
    max_iters: int = 50
    max_halvings: int = 30


@dataclass(frozen=True)
class NonlinearLineSystem:
    """Discrete operator ``T_M u - S_h(u)`` on one grid level."""

    kernel: FractionalKernel
    h: float
    diffusion: Callable
    diffusion_deriv: Callable
    convection: float = 0.0
    upwind: str = "forward"

    def __post_init__(self):
        if self.upwind not in ("forward", "backward"):
            raise ValueError("upwind must be 'forward' or 'backward'")

    @classmethod
    def for_level(cls, problem: ProblemSpec, level: Level, upwind: str = "forward"):
        deriv = problem.diffusion_deriv
        if deriv is None:
            deriv = _numeric_derivative(problem.diffusion_coef)
        return cls(level.kernel, level.h, problem.diffusion_coef, deriv, problem.convection, upwind)

    def local(self, v, left, right):
        """Spatial term at a point with value ``v`` and frozen neighbours, and its ``v``-derivative."""
        h2 = self.h * self.h
        dv = self.diffusion(v)
        ddv = self.diffusion_deriv(v)
        a_p = 0.5 * (self.diffusion(right) + dv)
        a_m = 0.5 * (self.diffusion(left) + dv)
        s = (a_p * (right - v) - a_m * (v - left)) / h2
        ds = (0.5 * ddv * (right - v) - a_p - 0.5 * ddv * (v - left) - a_m) / h2
        c = self.convection / self.h
        if self.upwind == "forward":
            s = s + c * (right - v)
            ds = ds - c
        else:
            s = s + c * (v - left)
            ds = ds + c
        return s, ds

    def spatial_term(self, u: np.ndarray) -> np.ndarray:
        up = np.pad(u, ((1, 1), (0, 0)))
        s, _ = self.local(u, up[:-2], up[2:])
        return s

    def apply(self, u: np.ndarray) -> np.ndarray:
        return toeplitz.fast_matvec(self.kernel.r, u) - self.spatial_term(u)


def _numeric_derivative(fn: Callable) -> Callable:
    def deriv(u):
        step = 1e-6 * (1.0 + np.abs(u))
        return (fn(u + step) - fn(u - step)) / (2 * step)

    return deriv


def inject(fine: np.ndarray) -> np.ndarray:
    """Injection onto the coarse points (odd 0-based indices)."""
    return fine[1::2].copy()


def nonlinear_residual(
    problem: ProblemSpec,
    kernel: FractionalKernel,
    u: SpaceTimeFunction,
    upwind: str = "forward",
) -> SpaceTimeFunction:
    """``f - (D_M u - S_h(u))`` including the initial-layer term."""
    if problem.kind != "nonlinear-1d":
        raise ValueError("nonlinear_residual needs a nonlinear-1d problem")
    if u.values.shape != problem.grid.shape:
        raise ValueError(f"function of shape {u.values.shape} on grid of shape {problem.grid.shape}")
    deriv = problem.diffusion_deriv or _numeric_derivative(problem.diffusion_coef)
    system = NonlinearLineSystem(
        kernel, problem.grid.h, problem.diffusion_coef, deriv, problem.convection, upwind
    )
    f = effective_rhs(problem, kernel)
    return SpaceTimeFunction(problem.grid, f - system.apply(u.values))


def _solve_points(system, r0, target, v, left, right, opts: NewtonOptions, idx, m):
    """Solve ``r0 v - S(v) = target`` for a vector of independent points."""
    v = v.copy()

    def phi(v):
        s, ds = system.local(v, left, right)
        return r0 * v - s - target, r0 - ds

    def scale(v):
        return np.abs(r0 * v) + np.abs(target) + (np.abs(v) + np.abs(left) + np.abs(right)) * (
            system.diffusion(v) / system.h**2 + abs(system.convection) / system.h
        )

    f, df = phi(v)
    todo = np.abs(f) > opts.tol * scale(v)
    for _ in range(opts.max_iters):
        if not todo.any():
            # one more Newton step takes the converged roots down to rounding level
            ok = df > 0
            polished = v - np.where(ok, f / np.where(ok, df, 1.0), 0.0)
            fp, _ = phi(polished)
            return np.where(np.abs(fp) <= np.abs(f), polished, v)
        step = np.where(todo & (df > 0), f / np.where(df > 0, df, 1.0), 0.0)
        lam = np.ones_like(v)
        trial = v - step
        ft, dft = phi(trial)
        for _ in range(opts.max_halvings):
            worse = todo & (np.abs(ft) > np.abs(f))
            if not worse.any():
                break
            lam = np.where(worse, 0.5 * lam, lam)
            trial = np.where(worse, v - lam * step, trial)
            ft, dft = phi(trial)
        v = np.where(todo, trial, v)
        f, df = np.where(todo, ft, f), np.where(todo, dft, df)
        todo = np.abs(f) > opts.tol * scale(v)
    for i in np.flatnonzero(todo):
        v[i] = _bracketed_root(system, r0, target[i], v[i], left[i], right[i], idx[i], m)
    return v


def _bracketed_root(system, r0, target, v, left, right, n, m):
    def g(x):
        s, _ = system.local(np.float64(x), left, right)
        return float(r0 * x - s - target)

    width = 1.0 + abs(v)
    lo, hi = v - width, v + width
    for _ in range(80):
        if g(lo) * g(hi) <= 0.0:
            return brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        width *= 2.0
        lo, hi = v - width, v + width
    raise ScalarSolveError(n + 1, m + 1, "no sign change found around the current value")


def nonlinear_smooth_red_black(
    level: Level,
    system: NonlinearLineSystem,
    u: np.ndarray,
    f: np.ndarray,
    sweeps: int = 1,
    options: NewtonOptions = NewtonOptions(),
) -> np.ndarray:
    """Nonlinear red-black line relaxation in place, colours in ``level.colors`` order.

    Points of one colour are independent; each line is solved by forward
    time-marching with a safeguarded Newton iteration per time level and a
    bracketing fallback.
    """
    if level.dim != 1:
        raise ValueError("the nonlinear smoother is one-dimensional")
    r = system.kernel.r
    n, m_steps = u.shape
    for _ in range(sweeps):
        for idx in level.colors:
            if len(idx) == 0:
                continue
            up = np.pad(u, ((1, 1), (0, 0)))
            left, right = up[idx], up[idx + 2]
            for m in range(m_steps):
                hist = u[idx, :m] @ r[m:0:-1] if m else 0.0
                target = f[idx, m] - hist
                u[idx, m] = _solve_points(
                    system, r[0], target, u[idx, m], left[:, m], right[:, m], options, idx, m
                )
    return u


def _coarsest_solve(level, system, u, f, max_sweeps=50, rtol=1e-14):
    ref = max(max_norm(f), max_norm(system.apply(u)), 1e-300)
    for _ in range(max_sweeps):
        nonlinear_smooth_red_black(level, system, u, f)
        if level.n == 1 or max_norm(f - system.apply(u)) <= rtol * ref:
            break
    return u


def _fas(hierarchy, systems, k, u, f, config):
    level, system = hierarchy[k], systems[k]
    if level.coarsest:
        return _coarsest_solve(level, system, u, f)
    nonlinear_smooth_red_black(level, system, u, f, config.nu1)
    res = f - system.apply(u)
    uc = inject(u)
    fc = restrict(res, 1) + systems[k + 1].apply(uc)
    vc = uc.copy()
    for _ in range(config.gamma):
        vc = _fas(hierarchy, systems, k + 1, vc, fc, config)
    u += prolong(vc - uc, 1)
    nonlinear_smooth_red_black(level, system, u, f, config.nu2)
    return u


def build_systems(problem: ProblemSpec, hierarchy: GridHierarchy, upwind: str = "forward") -> List:
    return [NonlinearLineSystem.for_level(problem, lev, upwind) for lev in hierarchy.levels]


def fas_cycle(
    hierarchy: GridHierarchy,
    systems: List[NonlinearLineSystem],
    state: np.ndarray,
    rhs: np.ndarray,
    config: CycleConfig,
) -> np.ndarray:
    """One FAS cycle on the finest level (in place); ``rhs`` includes the initial layer."""
    if state.shape != hierarchy.finest.grid.shape:
        raise ValueError("state does not match the finest grid")
    if len(systems) != len(hierarchy):
        raise ValueError("need one nonlinear system per level")
    _fas(hierarchy, systems, 0, state, rhs, config)
    return state


def solve_nonlinear(
    problem: ProblemSpec,
    config: CycleConfig = CycleConfig(),
    upwind: str = "forward",
    u0: Optional[np.ndarray] = None,
    callback=None,
):
    """FAS iteration until ``||res_k|| <= tol ||res_0||`` (max-norm) or ``max_iters``."""
    if problem.kind != "nonlinear-1d":
        raise ValueError("solve_nonlinear needs a nonlinear-1d problem")
    start = time.perf_counter()
    hierarchy = GridHierarchy.for_problem(problem, config)
    systems = build_systems(problem, hierarchy, upwind)
    f = effective_rhs(problem, hierarchy.kernel)
    u = initial_iterate(problem) if u0 is None else np.array(u0, dtype=float)
    history = ConvergenceHistory()
    res0 = max_norm(f - systems[0].apply(u))
    history.residuals.append(res0)
    history.seconds.append(time.perf_counter() - start)
    target = config.tol * res0
    history.converged = res0 == 0.0 or res0 <= target
    while not history.converged and history.iterations < config.max_iters:
        fas_cycle(hierarchy, systems, u, f, config)
        res = max_norm(f - systems[0].apply(u))
        history.residuals.append(res)
        history.seconds.append(time.perf_counter() - start)
        if callback is not None:
            callback(history.iterations, u)
        history.converged = res <= target
    return SpaceTimeFunction(problem.grid, u, problem.initial_values()), history
