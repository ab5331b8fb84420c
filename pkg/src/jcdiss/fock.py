"""Truncated Fock-space operators, Kronecker products and row-major vectorization.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. The vec convention
stacks rows, so that ``vectorize(E @ X @ F) == kron(E, F.T) @ vectorize(X)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ExpmConvergenceError(ArithmeticError):
    """Raised when the scaled Taylor series in :func:`expm` fails to settle."""


@dataclass(frozen=True)
class TruncationConfig:
    """Fock cutoff ``dim`` (levels 0..dim-1) and the boundary ``margin``.

    Identities involving the creation operator are only asserted on
    span{|0>, ..., |dim-1-margin>}.
    """

    dim: int
    margin: int = 2

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"dim must be an integer >= 2, got {self.dim!r}")
        if int(self.margin) != self.margin or self.margin < 0:
            raise ValueError(f"margin must be a nonnegative integer, got {self.margin!r}")
        if self.margin > self.dim - 2:
            raise ValueError(f"margin {self.margin} exceeds dim - 2 = {self.dim - 2}")

    @property
    def kept(self) -> int:
        """Number of levels on which boundary-sensitive identities hold."""
        return self.dim - self.margin


def _dim(cfg) -> int:
    return cfg.dim if isinstance(cfg, TruncationConfig) else int(cfg)


def annihilation(cfg) -> np.ndarray:
    """Lowering operator ``a`` with ``a[n-1, n] = sqrt(n)``."""
    d = _dim(cfg)
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1).astype(complex)


def creation(cfg) -> np.ndarray:
    return dagger(annihilation(cfg))


def number(cfg) -> np.ndarray:
    d = _dim(cfg)
    return np.diag(np.arange(d, dtype=float)).astype(complex)


def identity(cfg) -> np.ndarray:
    return np.eye(_dim(cfg), dtype=complex)


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``(A x B)[i*p + k, j*q + l] = A[i, j] * B[k, l]``."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def vectorize(x: np.ndarray) -> np.ndarray:
    """Row-major stacking ``(x00, x01, ...; x10, x11, ...; ...)``."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"vectorize expects a square matrix, got shape {x.shape}")
    return np.array(x, dtype=complex).reshape(-1)


def unvectorize(v: np.ndarray, dim: int) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] != dim * dim:
        raise ValueError(f"vector of shape {v.shape} cannot be reshaped to {dim}x{dim}")
    return np.array(v, dtype=complex).reshape(dim, dim)


def _check_square(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def expm(m: np.ndarray, max_terms: int = 60) -> np.ndarray:
    """Matrix exponential by scaling and squaring around a Taylor kernel.

    The matrix is scaled by ``2**-s`` until its 1-norm drops below 0.5, the
    series is summed until the next term is negligible at double precision and
    the result is squared ``s`` times.
    """
    m = _check_square(m)
    n = m.shape[0]
    if not np.all(np.isfinite(m)):
        raise ValueError("expm input contains NaN or Inf")
    norm = np.linalg.norm(m, 1) if n else 0.0
    s = 0 if norm < 0.5 else int(math.ceil(math.log2(norm / 0.5)))
    scaled = m / (2.0**s)

    result = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, max_terms + 1):
        term = term @ scaled / k
        result += term
        if np.abs(term).max(initial=0.0) <= 1e-17 * np.abs(result).max(initial=1.0):
            break
    else:
        raise ExpmConvergenceError(f"Taylor kernel did not converge in {max_terms} terms")
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(s):
            result = result @ result
    if not np.all(np.isfinite(result)):
        raise ExpmConvergenceError("matrix exponential overflowed")
    return result


def expm_blockwise(m: np.ndarray, labels) -> np.ndarray:
    """``expm`` of a matrix that never couples indices with different ``labels``.

    Each label class (a conserved charge) is exponentiated separately.
    """
    m = _check_square(m)
    labels = np.asarray(labels)
    if labels.shape != (m.shape[0],):
        raise ValueError("one label per row is required")
    if np.any(m[labels[:, None] != labels[None, :]] != 0):
        raise ValueError("matrix couples different label classes")
    out = np.zeros_like(m)
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        out[np.ix_(idx, idx)] = expm(m[np.ix_(idx, idx)])
    return out


def window_indices(big: int, small: int, blocks: int = 1) -> np.ndarray:
    """Positions of the ``small``-level vec indices inside a ``big``-level vec.

    With ``blocks > 1`` the vector is a stack of that many ``big**2`` pieces.
    """
    nm = np.arange(small)
    one = (nm[:, None] * big + nm[None, :]).reshape(-1)
    return np.concatenate([b * big * big + one for b in range(blocks)])


def projector_indices(cfg: TruncationConfig, blocks: int = 1) -> np.ndarray:
    """Vec indices of |n><m| with n, m below the margin, in each of ``blocks`` pieces."""
    return window_indices(cfg.dim, cfg.kept, blocks)


def projected(m: np.ndarray, cfg: TruncationConfig, blocks: int = 1) -> np.ndarray:
    """Compress a (super)operator to the margin-projected subspace on both sides."""
    idx = projector_indices(cfg, blocks)
    return np.asarray(m)[np.ix_(idx, idx)]


def random_matrix(rng: np.random.Generator, n: int, m: int | None = None) -> np.ndarray:
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
