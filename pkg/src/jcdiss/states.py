"""Atom-cavity density matrices in 2x2 block form and their stacked vec form.

Block index 0 is the excited atomic level (sigma_3 = +1), index 1 the ground
level. The vectorized state stacks vec(rho00), vec(rho01), vec(rho10), vec(rho11).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import vectorize

BLOCK_ORDER = ((0, 0), (0, 1), (1, 0), (1, 1))


@dataclass(frozen=True)
class VectorizedState:
    block_dim: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.shape != (4 * self.block_dim**2,):
            raise ValueError(
                f"expected length 4*{self.block_dim}^2 = {4 * self.block_dim**2}, got {data.shape}"
            )
        object.__setattr__(self, "data", data)

    def block(self, k: int) -> np.ndarray:
        n = self.block_dim**2
        return self.data[k * n : (k + 1) * n]

    def to_blocks(self) -> "BlockDensityMatrix":
        d = self.block_dim
        return BlockDensityMatrix(self.data.reshape(2, 2, d, d))

    def __sub__(self, other: "VectorizedState") -> np.ndarray:
        return self.data - other.data


@dataclass(frozen=True)
class BlockDensityMatrix:
    """``blocks[i, j]`` holds rho_ij, each a D x D matrix."""

    blocks: np.ndarray

    def __post_init__(self):
        b = np.array(self.blocks, dtype=complex)
        if b.ndim != 4 or b.shape[:2] != (2, 2) or b.shape[2] != b.shape[3]:
            raise ValueError(f"blocks must have shape (2, 2, D, D), got {b.shape}")
        object.__setattr__(self, "blocks", b)

    @property
    def dim(self) -> int:
        return self.blocks.shape[2]

    @classmethod
    def from_blocks(cls, r00, r01, r10, r11) -> "BlockDensityMatrix":
        return cls(np.array([[r00, r01], [r10, r11]], dtype=complex))

    @classmethod
    def from_full(cls, rho: np.ndarray) -> "BlockDensityMatrix":
        rho = np.asarray(rho, dtype=complex)
        d = rho.shape[0] // 2
        if rho.shape != (2 * d, 2 * d):
            raise ValueError(f"full matrix must be 2D x 2D, got {rho.shape}")
        return cls(rho.reshape(2, d, 2, d).transpose(0, 2, 1, 3))

    def full(self) -> np.ndarray:
        d = self.dim
        return self.blocks.transpose(0, 2, 1, 3).reshape(2 * d, 2 * d)

    def vectorize(self) -> VectorizedState:
        return VectorizedState(self.dim, np.concatenate([vectorize(self.blocks[i, j]) for i, j in BLOCK_ORDER]))

    def __getitem__(self, ij):
        return self.blocks[ij]


def qubit_state(kind: str) -> np.ndarray:
    """Amplitudes (excited, ground)."""
    if kind == "excited":
        return np.array([1.0, 0.0], dtype=complex)
    if kind == "ground":
        return np.array([0.0, 1.0], dtype=complex)
    if kind == "plus":
        return np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)
    raise ValueError(f"unknown qubit state {kind!r}")


def fock_density(n: int, dim: int) -> np.ndarray:
    if not 0 <= n < dim:
        raise ValueError(f"Fock level {n} outside truncation 0..{dim - 1}")
    rho = np.zeros((dim, dim), dtype=complex)
    rho[n, n] = 1.0
    return rho


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Fock amplitudes of |alpha>, cut at ``dim`` levels and renormalized."""
    amps = np.ones(dim, dtype=complex)
    for n in range(1, dim):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    return amps / np.linalg.norm(amps)


def coherent_leakage(alpha: complex, dim: int) -> float:
    """Poisson weight of |alpha> above the cutoff, 1 - sum_{n<D} p(n)."""
    lam = abs(alpha) ** 2
    total = sum(math.exp(-lam + n * math.log(lam) - math.lgamma(n + 1)) for n in range(dim)) if lam > 0 else 1.0
    return max(0.0, 1.0 - total)


def thermal_density(nbar: float, dim: int) -> np.ndarray:
    if nbar < 0:
        raise ValueError("thermal occupancy must be nonnegative")
    q = nbar / (1.0 + nbar)
    p = q ** np.arange(dim)
    return np.diag(p / p.sum()).astype(complex)


def product_state(qubit: np.ndarray, cavity: np.ndarray) -> BlockDensityMatrix:
    """|q><q| (x) cavity, where ``cavity`` is an amplitude vector or a density matrix."""
    cavity = np.asarray(cavity, dtype=complex)
    if cavity.ndim == 1:
        cavity = np.outer(cavity, cavity.conj())
    q = np.outer(qubit, np.conj(qubit))
    return BlockDensityMatrix(q[:, :, None, None] * cavity[None, None, :, :])


def random_density(rng: np.random.Generator, dim: int, support: int, rank: int | None = None) -> BlockDensityMatrix:
    """Random atom-cavity state whose cavity part lives on levels 0..support-1."""
    k = 2 * support
    rank = k if rank is None else rank
    g = rng.standard_normal((k, rank)) + 1j * rng.standard_normal((k, rank))
    small = g @ g.conj().T
    small /= np.trace(small).real
    full = np.zeros((2 * dim, 2 * dim), dtype=complex)
    idx = np.concatenate([np.arange(support), dim + np.arange(support)])
    full[np.ix_(idx, idx)] = small
    return BlockDensityMatrix.from_full(full)
