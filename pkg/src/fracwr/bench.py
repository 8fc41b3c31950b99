"""Experiment harness: configs, solver runs, SAMA sweeps, order and timing studies.

Grid sizes follow the table convention ``nx x nt``: ``nx`` spatial
subdivisions (``nx - 1`` interior points per axis) and ``nt`` time steps.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Iterable, List, Optional, Sequence, TextIO

import numpy as np

from . import fas, problems, sama, wrmg
from .fractional import SpaceTimeGrid, gamma_fn, max_norm

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ConvergenceReport",
    "OrderRow",
    "TimingRow",
    "COMMANDS",
    "parse_config_file",
    "run_solve",
    "run_order_study",
    "run_sama_sweep",
    "run_complexity",
    "complexity_ok",
    "measured_factor",
    "write_csv",
    "report_rows",
]

COMMANDS = ("solve1d", "solve2d", "solve-nonlinear", "sama", "order-study", "complexity")

SOLVE_HEADER = ["iter", "residual_maxnorm", "factor", "cumulative_seconds"]
SAMA_HEADER = [
    "delta",
    "lambda_exp",
    "lambda",
    "M",
    "nu1",
    "nu2",
    "predicted_rho",
    "smoothing_mu",
    "measured_rho",
]
ORDER_HEADER = ["M", "tau", "error_maxnorm", "observed_order"]
TIMING_HEADER = ["axis", "nx", "nt", "iterations", "seconds", "seconds_per_iter", "ratio"]

DEFAULT_PROBLEM = {
    "solve1d": "mittag-leffler-1d",
    "solve2d": "manufactured-2d",
    "solve-nonlinear": "porous-media",
    "order-study": "mittag-leffler-1d",
    "complexity": "mittag-leffler-1d",
    "sama": None,
}


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit status 2)."""


def _int_list(value) -> List[int]:
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    if isinstance(value, (int, np.integer)):
        return [int(value)]
    text = str(value).strip()
    if not text:
        return []
    return [int(v) for v in text.replace(";", ",").split(",") if v.strip()]


def parse_exponent_range(text: str) -> List[float]:
    """``"lo..hi"`` or ``"lo..hi:step"`` to an inclusive list; ``""`` gives ``[]``."""
    text = str(text).strip()
    if not text:
        return []
    step = 1.0
    if ":" in text:
        text, s = text.split(":", 1)
        step = float(s)
    if ".." in text:
        lo, hi = (float(v) for v in text.split("..", 1))
    else:
        lo = hi = float(text)
    if step <= 0 or hi < lo:
        raise ConfigError(f"bad exponent range {text!r}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + k * step for k in range(count)]


@dataclass
class ExperimentConfig:
    command: str
    problem: Optional[str] = None
    delta: float = 0.5
    nx: List[int] = field(default_factory=lambda: [64])
    ny: Optional[int] = None
    nt: List[int] = field(default_factory=lambda: [64])
    cycle: str = "V"
    nu1: Optional[int] = None
    nu2: Optional[int] = None
    tol: float = 1e-10
    max_iters: int = 100
    coarsest_n: int = 1
    seed: int = 0
    out: Optional[str] = None
    dump: Optional[str] = None
    lambda_exp: str = "-8..8:2"
    theta_samples: int = 64
    dim: int = 1
    measure: bool = False
    measure_nx: int = 256
    upwind: str = "forward"
    repeats: int = 3

    def __post_init__(self):
        self.nx = _int_list(self.nx)
        self.nt = _int_list(self.nt)
        if self.problem is None:
            self.problem = DEFAULT_PROBLEM.get(self.command)
        if self.nu1 is None:
            self.nu1 = 1 if self.command == "solve2d" else 0
        if self.nu2 is None:
            self.nu2 = 1

    @classmethod
    def from_mapping(cls, command: str, values: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(values) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(command=command, **values)

    @property
    def lambda_exponents(self) -> List[float]:
        return parse_exponent_range(self.lambda_exp)

    def cycle_config(self) -> wrmg.CycleConfig:
        return wrmg.CycleConfig(
            self.cycle, self.nu1, self.nu2, self.tol, self.max_iters, self.coarsest_n
        )

    def validate(self) -> "ExperimentConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.command in COMMANDS, f"unknown command {self.command!r}")
        need(0.0 < self.delta <= 1.0, "delta must lie in (0, 1]")
        self.cycle = str(self.cycle).upper()
        need(self.cycle in ("V", "W"), "cycle must be v or w")
        need(self.nu1 >= 0 and self.nu2 >= 0 and self.nu1 + self.nu2 >= 1, "need nu1 + nu2 >= 1")
        need(0.0 < self.tol <= 1.0, "tol must lie in (0, 1]")
        need(self.max_iters >= 0, "max-iters must be non-negative")
        need(self.coarsest_n >= 1, "coarsest-n must be positive")
        need(self.theta_samples >= 1, "theta-samples must be positive")
        need(self.dim in (1, 2), "dim must be 1 or 2")
        need(self.upwind in ("forward", "backward"), "upwind must be forward or backward")
        need(self.repeats >= 1, "repeats must be positive")
        need(all(m >= 1 for m in self.nt) and self.nt, "nt must list positive step counts")
        need(all(n >= 2 for n in self.nx) and self.nx, "nx must list subdivision counts >= 2")
        if self.command != "sama":
            need(self.problem in problems.PROBLEMS, f"unknown problem {self.problem!r}")
        if self.command in ("solve1d", "solve2d", "solve-nonlinear"):
            need(len(self.nx) == 1 and len(self.nt) == 1, f"{self.command} takes one nx and one nt")
            n = self.nx[0]
            need(n > 2 and n & (n - 1) == 0, "nx must be a power of two for the multigrid hierarchy")
            if self.ny is not None:
                need(self.command == "solve2d", "ny only applies to solve2d")
                need(self.ny == n, "the 2d solver needs a square grid (ny == nx)")
            kind = problems.PROBLEMS[self.problem](self.delta, 1, 1).kind
            wanted = {"solve1d": "linear-1d", "solve2d": "linear-2d", "solve-nonlinear": "nonlinear-1d"}
            need(kind == wanted[self.command], f"problem {self.problem!r} does not fit {self.command}")
        if self.command == "order-study":
            need(len(self.nx) == 1, "order-study uses one spatial grid")
        if self.command == "sama" and self.measure:
            need(self.measure_nx > 2 and self.measure_nx & (self.measure_nx - 1) == 0,
                 "measure-nx must be a power of two")
        parse_exponent_range(self.lambda_exp) if self.command == "sama" else None
        return self


def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


@dataclass
class ConvergenceReport:
    residuals: List[float]
    seconds: List[float]
    converged: bool
    grid: str

    @classmethod
    def from_history(cls, history: wrmg.ConvergenceHistory, grid: str) -> "ConvergenceReport":
        return cls(list(history.residuals), list(history.seconds), history.converged, grid)

    @property
    def iterations(self) -> int:
        return max(len(self.residuals) - 1, 0)

    @property
    def factors(self) -> List[float]:
        r = self.residuals
        return [r[k + 1] / r[k] if r[k] > 0 else 0.0 for k in range(len(r) - 1)]

    @property
    def mean_factor(self) -> float:
        return wrmg.ConvergenceHistory(self.residuals, self.seconds).mean_factor

    @property
    def wall_time(self) -> float:
        return self.seconds[-1] if self.seconds else 0.0

    def summary(self) -> str:
        return (
            f"{self.grid}: {self.iterations} iterations, mean factor {self.mean_factor:.3f}, "
            f"{self.wall_time:.2f}s, {'converged' if self.converged else 'NOT converged'}"
        )


def report_rows(report: ConvergenceReport) -> List[list]:
    rows = []
    factors = [None] + report.factors
    for k, (res, sec) in enumerate(zip(report.residuals, report.seconds)):
        fac = "" if factors[k] is None else f"{factors[k]:.6f}"
        rows.append([k, f"{res:.6e}", fac, f"{sec:.6f}"])
    return rows


def write_csv(target, header: Sequence[str], rows: Iterable[Sequence], title: str) -> None:
    """Write one ``#`` comment line with a timestamp, the header, then the rows."""
    stamp = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
    own = isinstance(target, str)
    fh: TextIO = open(target, "w", encoding="utf-8", newline="") if own else target
    try:
        fh.write(f"# fracwr {title} generated {stamp}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if own:
            fh.close()


def _problem(config: ExperimentConfig, nx: int, nt: int):
    factory = problems.PROBLEMS[config.problem]
    return factory(config.delta, nx - 1, nt)


def run_solve(config: ExperimentConfig):
    """Run the solver matching ``config.command``; returns ``(report, solution)``."""
    config.validate()
    nx, nt = config.nx[0], config.nt[0]
    problem = _problem(config, nx, nt)
    cycle = config.cycle_config()
    if problem.kind == "nonlinear-1d":
        solution, history = fas.solve_nonlinear(problem, cycle, upwind=config.upwind)
    else:
        solution, history = wrmg.solve(problem, cycle)
    shape = "x".join([str(nx)] * problem.grid.dim + [str(nt)])
    grid = f"{problem.name} delta={config.delta:g} {shape} {cycle.cycle}({cycle.nu1},{cycle.nu2})"
    return ConvergenceReport.from_history(history, grid), solution


@dataclass(frozen=True)
class OrderRow:
    m_steps: int
    tau: float
    error: float
    order: Optional[float]


def run_order_study(config: ExperimentConfig) -> List[OrderRow]:
    """Max-norm errors against the exact solution along the ``nt`` ladder at fixed ``nx``."""
    config.validate()
    rows: List[OrderRow] = []
    cycle = config.cycle_config()
    for nt in sorted(config.nt):
        problem = _problem(config, config.nx[0], nt)
        if problem.exact is None:
            raise ConfigError(f"problem {config.problem!r} has no exact solution")
        if problem.kind == "nonlinear-1d":
            raise ConfigError("order-study needs a linear problem")
        solution, _ = wrmg.solve(problem, cycle)
        err = max_norm(solution.values - problem.exact_values())
        order = None
        if rows:
            prev = rows[-1]
            order = math.log(prev.error / err) / math.log(nt / prev.m_steps)
        rows.append(OrderRow(nt, problem.grid.tau, err, order))
    return rows


def measured_factor(
    delta: float,
    lam: float,
    m_steps: int,
    nx: int = 256,
    dim: int = 1,
    cycle: str = "W",
    nu1: int = 0,
    nu2: int = 1,
    seed: int = 0,
    iterations: int = 100,
    window: int = 10,
) -> float:
    """Asymptotic factor of a multilevel cycle on the unit square/interval for a given ``lambda``."""
    h = 1.0 / nx
    tau = (lam * h * h / gamma_fn(2.0 - delta)) ** (1.0 / delta)
    grid = SpaceTimeGrid(dim, 1.0, nx - 1, tau * m_steps, m_steps)
    hierarchy = wrmg.GridHierarchy(grid, delta)
    cfg = wrmg.CycleConfig(cycle, nu1, nu2)
    return wrmg.measure_asymptotic_factor(hierarchy, cfg, iterations, window, seed)


def run_sama_sweep(config: ExperimentConfig) -> List[sama.SweepRow]:
    config.validate()
    rows = []
    for m in config.nt:
        sweep = sama.convergence_factor_sweep(
            config.dim,
            config.delta,
            config.lambda_exponents,
            m,
            config.nu1,
            config.nu2,
            config.theta_samples,
        )
        for row in sweep:
            measured = None
            if config.measure:
                measured = measured_factor(
                    config.delta,
                    row.lam,
                    m,
                    config.measure_nx,
                    config.dim,
                    config.cycle,
                    config.nu1,
                    config.nu2,
                    config.seed,
                )
            rows.append(sama.SweepRow(**{**asdict(row), "measured_rho": measured}))
    return rows


def sama_rows(rows: List[sama.SweepRow]) -> List[list]:
    def opt(v):
        return "" if v is None else f"{v:.6f}"

    return [
        [
            f"{r.delta:g}",
            f"{r.lambda_exponent:g}",
            f"{r.lam:.6e}",
            r.m_steps,
            r.nu1,
            r.nu2,
            f"{r.predicted_rho:.6f}",
            opt(r.smoothing_mu),
            opt(r.measured_rho),
        ]
        for r in rows
    ]


@dataclass(frozen=True)
class TimingRow:
    axis: str
    nx: int
    nt: int
    iterations: int
    seconds: float
    ratio: Optional[float]

    @property
    def seconds_per_iter(self) -> float:
        return self.seconds / max(self.iterations, 1)


def _time_solve(config: ExperimentConfig, nx: int, nt: int):
    problem = _problem(config, nx, nt)
    cycle = config.cycle_config()
    best, iters = math.inf, 0
    for _ in range(config.repeats):
        start = time.perf_counter()
        if problem.kind == "nonlinear-1d":
            _, hist = fas.solve_nonlinear(problem, cycle, upwind=config.upwind)
        else:
            _, hist = wrmg.solve(problem, cycle)
        best = min(best, time.perf_counter() - start)
        iters = hist.iterations
    return best, iters


def run_complexity(config: ExperimentConfig) -> List[TimingRow]:
    """Best-of-``repeats`` solve times along the ``nt`` ladder (first ``nx``) and the ``nx`` ladder (first ``nt``).

    A ladder with a single entry is skipped, so a single-point config yields one row.
    """
    config.validate()
    rows: List[TimingRow] = []
    ladders = []
    if len(config.nt) > 1 or len(config.nx) == 1:
        ladders.append(("M", [(config.nx[0], m) for m in config.nt]))
    if len(config.nx) > 1:
        ladders.append(("N", [(n, config.nt[0]) for n in config.nx]))
    for axis, points in ladders:
        prev = None
        for nx, nt in points:
            sec, iters = _time_solve(config, nx, nt)
            rows.append(TimingRow(axis, nx, nt, iters, sec, None if prev is None else sec / prev))
            prev = sec
    return rows


def complexity_ok(rows: List[TimingRow], m_limit: float = 2.8, n_limit: float = 2.3, m_min: int = 2**12):
    """Envelope check: per-doubling time ratios for ``M >= m_min`` and for ``N``."""
    ok = True
    for prev, row in zip(rows, rows[1:]):
        if row.ratio is None or prev.axis != row.axis:
            continue
        if row.axis == "M" and prev.nt >= m_min and row.nt == 2 * prev.nt:
            ok &= row.ratio <= m_limit
        if row.axis == "N" and row.nx == 2 * prev.nx:
            ok &= row.ratio <= n_limit
    return ok


def timing_rows(rows: List[TimingRow]) -> List[list]:
    return [
        [
            r.axis,
            r.nx,
            r.nt,
            r.iterations,
            f"{r.seconds:.6f}",
            f"{r.seconds_per_iter:.6f}",
            "" if r.ratio is None else f"{r.ratio:.4f}",
        ]
        for r in rows
    ]


def order_rows(rows: List[OrderRow]) -> List[list]:
    return [
        [r.m_steps, f"{r.tau:.6e}", f"{r.error:.6e}", "" if r.order is None else f"{r.order:.4f}"]
        for r in rows
    ]


def csv_text(header, rows, title) -> str:
    buf = io.StringIO()
    write_csv(buf, header, rows, title)
    return buf.getvalue()
