"""Built-in test problems."""

from __future__ import annotations

import math

import numpy as np

from .fractional import ProblemSpec, SpaceTimeGrid, mittag_leffler

__all__ = ["mittag_leffler_1d", "manufactured_2d", "porous_media", "PROBLEMS", "build"]


def mittag_leffler_1d(delta: float, n_interior: int, m_steps: int) -> ProblemSpec:
    """``f = 0``, ``g = sin x`` on ``[0, pi] x [0, 1]``; ``u = E_delta(-t^delta) sin x``."""
    grid = SpaceTimeGrid(1, math.pi, n_interior, 1.0, m_steps)

    def exact(x, t):
        t = np.asarray(t, dtype=float)
        e = np.vectorize(lambda s: mittag_leffler(delta, -(s**delta)))(t)
        return e * np.sin(x)

    return ProblemSpec(
        grid,
        delta,
        rhs=lambda x, t: np.zeros(np.broadcast(x, t).shape),
        initial=np.sin,
        exact=exact,
        kind="linear-1d",
        name="mittag-leffler-1d",
    )


def manufactured_2d(delta: float, n_interior: int, m_steps: int) -> ProblemSpec:
    """``u = t^2 sin(pi x / 2) sin(pi y / 2)`` on ``(0, 2)^2 x [0, 1]``."""
    grid = SpaceTimeGrid(2, 2.0, n_interior, 1.0, m_steps)
    g3 = math.gamma(3.0 - delta)

    def rhs(x, y, t):
        return (2.0 * t ** (2.0 - delta) / g3 + (1.0 + math.pi**2 / 2.0) * t**2) * (
            np.sin(math.pi * x / 2.0) * np.sin(math.pi * y / 2.0)
        )

    def exact(x, y, t):
        return t**2 * np.sin(math.pi * x / 2.0) * np.sin(math.pi * y / 2.0)

    return ProblemSpec(
        grid,
        delta,
        rhs=rhs,
        initial=lambda x, y: np.zeros(np.broadcast(x, y).shape),
        exact=exact,
        kind="linear-2d",
        name="manufactured-2d",
    )


def porous_media(
    delta: float, n_interior: int, m_steps: int, convection: float = 1.0
) -> ProblemSpec:
    """``D(u) = 1 + u^2``, ``f = 1``, zero data on ``[0, 1] x [0, 1]``."""
    grid = SpaceTimeGrid(1, 1.0, n_interior, 1.0, m_steps)
    return ProblemSpec(
        grid,
        delta,
        rhs=lambda x, t: np.ones(np.broadcast(x, t).shape),
        initial=lambda x: np.zeros_like(x),
        kind="nonlinear-1d",
        diffusion_coef=lambda u: 1.0 + u * u,
        diffusion_deriv=lambda u: 2.0 * u,
        convection=convection,
        name="porous-media",
    )


PROBLEMS = {
    "mittag-leffler-1d": mittag_leffler_1d,
    "manufactured-2d": manufactured_2d,
    "porous-media": porous_media,
}


def build(name: str, delta: float, n_interior: int, m_steps: int) -> ProblemSpec:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    return factory(delta, n_interior, m_steps)
