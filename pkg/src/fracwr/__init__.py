"""Multigrid waveform relaxation for the time-fractional heat equation."""

from .fractional import (
    FractionalKernel,
    ProblemSpec,
    SpaceTimeFunction,
    SpaceTimeGrid,
    apply_space_time_operator,
    gamma_fn,
    l1_kernel,
    mittag_leffler,
    residual,
)
from .wrmg import CycleConfig, GridHierarchy, solve

__version__ = "0.1.0"
