"""Lower-triangular Toeplitz kernels.

A lower-triangular Toeplitz matrix is stored through its first column only.
Products are formed by embedding the matrix in a circulant of order ``2M``
(the first column zero-padded to length ``2M``) and diagonalising it with the
FFT.  Inverses are built by the divide-and-conquer doubling recursion, whose
result is again lower-triangular Toeplitz and therefore again a single column.

All routines accept stacked right-hand sides: the time index is always the
*last* axis, every leading axis is an independent line.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

__all__ = [
    "LowerToeplitz",
    "CirculantEmbedding",
    "SingularToeplitzError",
    "dense",
    "naive_matvec",
    "forward_substitution_inverse",
    "fast_matvec",
    "invert_first_column",
    "solve_lower_toeplitz",
    "BASE_SIZE",
]

#: Order of the diagonal block that the inversion recursion solves directly.
BASE_SIZE = 16


class SingularToeplitzError(ValueError):
    """Raised for a lower-triangular Toeplitz matrix with a zero diagonal."""


@dataclass(frozen=True)
class LowerToeplitz:
    """Lower-triangular Toeplitz matrix given by its first column.

    Entry ``(i, j)`` equals ``first_col[i - j]`` for ``i >= j`` and zero above
    the diagonal (zero-based indexing).
    """

    first_col: np.ndarray

    def __post_init__(self):
        col = np.asarray(self.first_col, dtype=float)
        if col.ndim != 1 or col.size == 0:
            raise ValueError("first_col must be a non-empty 1-d sequence")
        col = col.copy()
        col.setflags(write=False)
        object.__setattr__(self, "first_col", col)

    @property
    def size(self) -> int:
        return self.first_col.size

    @property
    def diagonal(self) -> float:
        return float(self.first_col[0])

    def shifted(self, sigma: float) -> "LowerToeplitz":
        """Return ``T + sigma * I``."""
        col = self.first_col.copy()
        col[0] += sigma
        return LowerToeplitz(col)

    def embedding(self) -> "CirculantEmbedding":
        return CirculantEmbedding.from_column(self.first_col)

    def to_dense(self) -> np.ndarray:
        return dense(self.first_col)


@dataclass(frozen=True)
class CirculantEmbedding:
    """Eigenvalues of the ``2M x 2M`` circulant ``[[T, R], [R, T]]``.

    Only the half spectrum (real FFT) is stored because the circulant is real.
    """

    size: int
    eigenvalues: np.ndarray = field(repr=False)

    @classmethod
    def from_column(cls, first_col) -> "CirculantEmbedding":
        col = np.asarray(first_col, dtype=float)
        m = col.size
        # circulant first column is [t_1..t_M, 0..0]; the zero half builds R_M
        eig = sfft.rfft(col, n=2 * m)
        eig.setflags(write=False)
        return cls(m, eig)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.size:
            raise ValueError(
                f"last axis has length {x.shape[-1]}, expected {self.size}"
            )
        m = self.size
        y = sfft.irfft(sfft.rfft(x, n=2 * m, axis=-1) * self.eigenvalues, n=2 * m, axis=-1)
        return y[..., :m]


def dense(first_col) -> np.ndarray:
    """Dense lower-triangular Toeplitz matrix with the given first column."""
    col = np.asarray(first_col, dtype=float)
    m = col.size
    i, j = np.indices((m, m))
    out = np.zeros((m, m))
    mask = i >= j
    out[mask] = col[(i - j)[mask]]
    return out


def naive_matvec(first_col, x) -> np.ndarray:
    """O(M^2) reference product, used as an oracle."""
    col = np.asarray(first_col, dtype=float)
    x = np.asarray(x, dtype=float)
    m = col.size
    y = np.zeros_like(x)
    for i in range(m):
        y[..., i] = x[..., : i + 1] @ col[i::-1]
    return y


def forward_substitution_inverse(first_col) -> np.ndarray:
    """First column of ``T^{-1}`` by forward substitution, O(M^2)."""
    col = np.asarray(first_col, dtype=float)
    if col[0] == 0.0:
        raise SingularToeplitzError("zero diagonal")
    m = col.size
    g = np.zeros(m)
    g[0] = 1.0 / col[0]
    for i in range(1, m):
        g[i] = -(col[1 : i + 1] @ g[i - 1 :: -1]) / col[0]
    return g


def _as_embedding(T) -> CirculantEmbedding:
    if isinstance(T, CirculantEmbedding):
        return T
    if isinstance(T, LowerToeplitz):
        return T.embedding()
    return CirculantEmbedding.from_column(T)


def fast_matvec(T, x) -> np.ndarray:
    """Product ``T @ x`` along the last axis of ``x`` in O(M log M).

    ``T`` may be a :class:`LowerToeplitz`, a precomputed
    :class:`CirculantEmbedding`, or a raw first column.
    """
    return _as_embedding(T).matvec(x)


def _full_toeplitz_matvec(col_2k: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``P @ g`` for the lower-left block of a lower Toeplitz matrix of order 2k.

    ``P[i, j] = col_2k[k + i - j]`` with ``col_2k`` the first 2k column entries.
    """
    k = g.size
    # linear convolution of col_2k[1:] with g, then keep the k rows of P
    n = sfft.next_fast_len(3 * k)
    conv = sfft.irfft(sfft.rfft(col_2k[1:], n) * sfft.rfft(g, n), n)
    return conv[k - 1 : 2 * k - 1]


def invert_first_column(T, base_size: int = BASE_SIZE) -> np.ndarray:
    """First column of ``T^{-1}`` by divide and conquer.

    With ``T_{2k} = [[T_k, 0], [P_k, T_k]]`` the inverse is
    ``[[T_k^{-1}, 0], [-T_k^{-1} P_k T_k^{-1}, T_k^{-1}]]``; starting from a
    forward-substitution inverse of the leading ``base_size`` block, each
    doubling costs a handful of FFTs.

    Orders that are not a power of two are zero-padded to the next power of
    two; the leading block of the padded inverse is the wanted inverse.
    """
    col = np.asarray(T.first_col if isinstance(T, LowerToeplitz) else T, dtype=float)
    if col.ndim != 1 or col.size == 0:
        raise ValueError("expected a non-empty first column")
    if col[0] == 0.0:
        raise SingularToeplitzError("zero diagonal: matrix is singular")
    if base_size < 1 or base_size & (base_size - 1):
        raise ValueError("base_size must be a power of two")
    m = col.size
    p = 1 << (m - 1).bit_length()
    if p != m:
        col = np.concatenate([col, np.zeros(p - m)])
    k = min(base_size, p)
    g = forward_substitution_inverse(col[:k])
    while k < p:
        y = _full_toeplitz_matvec(col[: 2 * k], g)
        lower = -CirculantEmbedding.from_column(g).matvec(y)
        g = np.concatenate([g, lower])
        k *= 2
    return g[:m]


def solve_lower_toeplitz(T, b, precomputed_inverse=None) -> np.ndarray:
    """Solve ``T x = b`` along the last axis of ``b``.

    ``precomputed_inverse`` may be the inverse first column or its
    :class:`CirculantEmbedding`; the solve is then a single fast product.
    """
    if precomputed_inverse is None:
        precomputed_inverse = invert_first_column(T)
    return fast_matvec(precomputed_inverse, b)
