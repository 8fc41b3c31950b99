"""Semi-algebraic mode analysis of the red-black waveform two-grid method.

Space is treated by exponential Fourier analysis and time exactly: every
Fourier harmonic carries a full ``M x M`` lower-triangular Toeplitz block, so
the symbols are dense ``kM x kM`` matrices (``k = 2`` in 1d, ``4`` in 2d).

Harmonics are ordered ``[theta0, theta1]`` in 1d and
``[theta00, theta11, theta10, theta01]`` in 2d, so the pairs coupled by the
red-black pattern are adjacent.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import toeplitz
from .fractional import gamma_fn, l1_kernel

__all__ = [
    "FrequencySample",
    "SymbolMatrix",
    "SweepRow",
    "spatial_symbol",
    "transfer_symbols",
    "fine_grid_symbol",
    "coarse_grid_symbol",
    "smoother_symbol",
    "two_grid_symbol",
    "tau_for_lambda",
    "theta_samples",
    "two_grid_factor",
    "smoothing_factor",
    "convergence_factor_sweep",
]


def _sign(x: float) -> float:
    # theta = 0 pairs with -pi/h
    return -1.0 if x < 0 else 1.0


@dataclass(frozen=True)
class FrequencySample:
    """A low frequency in ``Theta_2h`` together with its aliasing harmonics."""

    dim: int
    theta: tuple
    h: float = 1.0

    def __post_init__(self):
        theta = tuple(float(t) for t in np.atleast_1d(self.theta))
        if self.dim not in (1, 2) or len(theta) != self.dim:
            raise ValueError("theta must have one entry per spatial dimension (1 or 2)")
        bound = math.pi / (2 * self.h) * (1 + 1e-12)
        if any(not -bound < t <= bound for t in theta):
            raise ValueError(f"theta {theta} outside the low-frequency box (-pi/2h, pi/2h]")
        object.__setattr__(self, "theta", theta)

    @property
    def harmonics(self) -> list:
        """All coupled frequencies, low frequency first."""
        shift = [_sign(t) * math.pi / self.h for t in self.theta]
        if self.dim == 1:
            return [self.theta, (self.theta[0] - shift[0],)]
        tx, ty = self.theta
        return [
            (tx, ty),
            (tx - shift[0], ty - shift[1]),
            (tx - shift[0], ty),
            (tx, ty - shift[1]),
        ]

    @property
    def size(self) -> int:
        return 2**self.dim


@dataclass
class SymbolMatrix:
    entries: np.ndarray
    tag: str

    def spectral_radius(self) -> float:
        """Largest eigenvalue modulus from a dense eigensolve."""
        eig = np.linalg.eigvals(self.entries)
        if not np.all(np.isfinite(eig)):
            raise np.linalg.LinAlgError(f"eigenvalue computation failed for {self.tag} symbol")
        return float(np.max(np.abs(eig)))


def spatial_symbol(dim: int, h: float, theta) -> float:
    """Eigenvalue of the ``-Delta_h`` stencil on ``exp(i theta . x)``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (dim,):
        raise ValueError("theta must have one entry per spatial dimension")
    if np.any(np.abs(theta) > math.pi / h * (1 + 1e-12)):
        raise ValueError("theta outside (-pi/h, pi/h]")
    return float(np.sum(4.0 / h**2 * np.sin(theta * h / 2) ** 2))


def transfer_symbols(dim: int, h: float, harmonics: Sequence, m_steps: Optional[int] = None):
    """Full-weighting restriction row and linear prolongation column.

    Both carry ``prod (1 + cos(theta_axis h)) / 2`` per harmonic. With
    ``m_steps`` the weights are expanded to the block matrices of shape
    ``(M, kM)`` and ``(kM, M)``; otherwise the weight vectors are returned.
    """
    w = np.array([np.prod([(1 + math.cos(t * h)) / 2 for t in th]) for th in harmonics])
    if any(len(th) != dim for th in harmonics):
        raise ValueError("harmonic dimension mismatch")
    if m_steps is None:
        return w, w.copy()
    eye = np.eye(m_steps)
    rest = np.kron(w[None, :], eye)
    return rest, rest.T.copy()


def _time_block(delta: float, tau: float, m_steps: int) -> np.ndarray:
    return toeplitz.dense(l1_kernel(delta, tau, m_steps).r)


def _lower_inverse(col: np.ndarray) -> np.ndarray:
    return toeplitz.dense(toeplitz.invert_first_column(col))


def fine_grid_symbol(dim, h, tau, delta, m_steps, sample: FrequencySample) -> SymbolMatrix:
    """Block diagonal ``diag(T_M + A_h(theta^alpha) I)``."""
    t = _time_block(delta, tau, m_steps)
    k = sample.size
    out = np.zeros((k * m_steps, k * m_steps))
    for a, th in enumerate(sample.harmonics):
        sl = slice(a * m_steps, (a + 1) * m_steps)
        out[sl, sl] = t + spatial_symbol(dim, h, th) * np.eye(m_steps)
    return SymbolMatrix(out, "temporal-block")


def coarse_grid_symbol(dim, h, tau, delta, m_steps, sample: FrequencySample) -> SymbolMatrix:
    """Coarse-grid correction ``I - P A_2h(theta)^-1 R A_h``."""
    m = m_steps
    r = l1_kernel(delta, tau, m).r
    fine = fine_grid_symbol(dim, h, tau, delta, m, sample).entries
    coarse_col = r.copy()
    # a low frequency per unit length is unchanged on the doubled mesh
    coarse_col[0] += spatial_symbol(dim, 2 * h, sample.theta)
    coarse_inv = _lower_inverse(coarse_col)
    rest, prol = transfer_symbols(dim, h, sample.harmonics, m)
    out = np.eye(sample.size * m) - prol @ (coarse_inv @ (rest @ fine))
    return SymbolMatrix(out, "coarse-grid-correction")


def _half_sweeps(s_blocks: list, m: int):
    """Red (even points) and black half-sweep matrices for one coupled pair."""
    eye = np.eye(m)
    s0, s1 = s_blocks
    red = 0.5 * np.block([[s0 + eye, s1 - eye], [s0 - eye, s1 + eye]])
    black = 0.5 * np.block([[s0 + eye, -s1 + eye], [-s0 + eye, s1 + eye]])
    return red, black


def smoother_symbol(
    dim,
    h,
    tau,
    delta,
    m_steps,
    sample: FrequencySample,
    first_color: str = "odd",
    splitting: Optional[tuple] = None,
) -> SymbolMatrix:
    """Red-black zebra-in-time smoother symbol.

    The point splitting is ``M_h = 2 dim / h^2`` and ``N_h = M_h - A_h``;
    ``splitting=(m_hat, n_hat_fn)`` overrides both, with ``n_hat_fn(theta)``
    returning the remainder symbol. ``first_color`` names the parity relaxed
    first, matching :class:`fracwr.wrmg.CycleConfig`.
    """
    if first_color not in ("odd", "even"):
        raise ValueError("first_color must be 'odd' or 'even'")
    m = m_steps
    r = l1_kernel(delta, tau, m).r
    if splitting is None:
        m_hat = 2.0 * dim / h**2

        def n_hat(th):
            return m_hat - spatial_symbol(dim, h, th)
    else:
        m_hat, n_hat = splitting
    col = r.copy()
    col[0] += m_hat
    m_inv = _lower_inverse(col)
    blocks = [n_hat(th) * m_inv for th in sample.harmonics]
    k = sample.size
    red = np.zeros((k * m, k * m))
    black = np.zeros_like(red)
    for p in range(0, k, 2):
        rp, bp = _half_sweeps(blocks[p : p + 2], m)
        sl = slice(p * m, (p + 2) * m)
        red[sl, sl] = rp
        black[sl, sl] = bp
    sweep = red @ black if first_color == "odd" else black @ red
    return SymbolMatrix(sweep, "smoother")


def two_grid_symbol(
    dim,
    h,
    tau,
    delta,
    m_steps,
    sample: FrequencySample,
    nu1: int = 0,
    nu2: int = 1,
    first_color: str = "odd",
) -> SymbolMatrix:
    """``S^nu2 C S^nu1`` on the harmonic space of ``sample``."""
    if nu1 < 0 or nu2 < 0:
        raise ValueError("smoothing counts must be non-negative")
    corr = coarse_grid_symbol(dim, h, tau, delta, m_steps, sample).entries
    if nu1 + nu2:
        s = smoother_symbol(dim, h, tau, delta, m_steps, sample, first_color).entries
        corr = np.linalg.matrix_power(s, nu2) @ corr @ np.linalg.matrix_power(s, nu1)
    return SymbolMatrix(corr, "two-grid")


def tau_for_lambda(lam: float, delta: float, h: float = 1.0) -> float:
    """Time step realising ``lambda = tau^delta Gamma(2 - delta) / h^2``."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    return (lam * h**2 / gamma_fn(2.0 - delta)) ** (1.0 / delta)


def theta_samples(dim: int, samples: int = 64, h: float = 1.0, symmetric: bool = True) -> list:
    """Uniform low frequencies ``-pi/2h + k pi/(h n)``, ``k = 1..n`` per axis.

    With ``symmetric`` only one representative per orbit of the reflections
    ``theta -> -theta`` (and the axis swap in 2d) is kept; these leave every
    spectrum unchanged.
    """
    if samples < 1:
        raise ValueError("need at least one theta sample")
    axis = -math.pi / (2 * h) + math.pi / (h * samples) * np.arange(1, samples + 1)
    axis[np.isclose(axis, 0.0, atol=1e-14)] = 0.0
    if dim == 1:
        pts = [(t,) for t in axis]
    elif dim == 2:
        pts = list(itertools.product(axis, axis))
    else:
        raise ValueError("dim must be 1 or 2")
    if not symmetric:
        return [FrequencySample(dim, p, h) for p in pts]
    seen = {}
    for p in pts:
        key = tuple(sorted(round(abs(t), 12) for t in p))
        if key not in seen:
            seen[key] = tuple(abs(t) for t in p)
    return [FrequencySample(dim, p, h) for p in seen.values()]


def two_grid_factor(
    dim,
    delta,
    lam,
    m_steps,
    nu1=0,
    nu2=1,
    samples: int = 64,
    first_color: str = "odd",
    h: float = 1.0,
) -> float:
    """``sup_theta rho(T(theta))`` over the sampled low frequencies."""
    tau = tau_for_lambda(lam, delta, h)
    return max(
        two_grid_symbol(dim, h, tau, delta, m_steps, s, nu1, nu2, first_color).spectral_radius()
        for s in theta_samples(dim, samples, h)
    )


def smoothing_factor(
    dim,
    delta,
    lam,
    m_steps,
    nu: int = 1,
    samples: int = 64,
    first_color: str = "odd",
    h: float = 1.0,
) -> float:
    """``sup_theta rho(Q S^nu)^(1/nu)``, ``Q`` projecting onto the high harmonics.

    This is the usual smoothing measure for pattern smoothers, which couple a
    low frequency with its high harmonics and so have no scalar symbol on the
    high frequencies alone.
    """
    if nu < 1:
        raise ValueError("smoothing factor needs nu >= 1")
    tau = tau_for_lambda(lam, delta, h)
    best = 0.0
    for s in theta_samples(dim, samples, h):
        sm = smoother_symbol(dim, h, tau, delta, m_steps, s, first_color).entries
        q = np.ones(sm.shape[0])
        q[:m_steps] = 0.0
        rho = SymbolMatrix(q[:, None] * np.linalg.matrix_power(sm, nu), "smoother").spectral_radius()
        best = max(best, rho ** (1.0 / nu))
    return best


@dataclass(frozen=True)
class SweepRow:
    delta: float
    lam: float
    m_steps: int
    nu1: int
    nu2: int
    predicted_rho: float
    smoothing_mu: Optional[float] = None
    measured_rho: Optional[float] = None

    @property
    def lambda_exponent(self) -> float:
        return math.log2(self.lam)


def convergence_factor_sweep(
    dim: int,
    delta: float,
    lambda_exponents: Iterable[float],
    m_steps: int,
    nu1: int = 0,
    nu2: int = 1,
    theta_samples: int = 64,
    first_color: str = "odd",
    smoothing: bool = True,
) -> list:
    """Predicted two-grid factors (and smoothing factors) for ``lambda = 2^e``."""
    rows = []
    for e in lambda_exponents:
        lam = 2.0 ** float(e)
        rho = two_grid_factor(dim, delta, lam, m_steps, nu1, nu2, theta_samples, first_color)
        mu = None
        if smoothing and nu1 + nu2 > 0:
            mu = smoothing_factor(dim, delta, lam, m_steps, nu1 + nu2, theta_samples, first_color)
        rows.append(SweepRow(delta, lam, m_steps, nu1, nu2, rho, mu))
    return rows
