"""Damped Jaynes-Cummings model on a truncated Fock space.

Builds the Hamiltonian blocks, the su(1,1) generators, the coherent
superoperator X, the dissipator L (and Y = diag(L, L, L, L)) and the full
generator -iX + Y acting on the stacked vec state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fock import TruncationConfig, annihilation, creation, identity, kron, number

# SWAP permutes the middle two of the four D^2-blocks; S = S^-1.
SWAP = (0, 2, 1, 3)


@dataclass(frozen=True)
class ModelParams:
    omega0: float
    Omega: float
    mu: float
    nu: float
    trunc: TruncationConfig = field(default_factory=lambda: TruncationConfig(5))

    def __post_init__(self):
        for name in ("omega0", "Omega", "mu", "nu"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.nu < 0:
            raise ValueError(f"requires nu >= 0, got nu={self.nu}")
        if not self.mu > self.nu:
            raise ValueError(f"requires mu > nu, got mu={self.mu}, nu={self.nu}")

    @property
    def dim(self) -> int:
        return self.trunc.dim

    def with_dim(self, dim: int) -> "ModelParams":
        margin = min(self.trunc.margin, dim - 2)
        return ModelParams(self.omega0, self.Omega, self.mu, self.nu, TruncationConfig(dim, margin))


@dataclass(frozen=True)
class HamiltonianBlocks:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray


@dataclass(frozen=True)
class Su11Generators:
    Kp: np.ndarray
    Km: np.ndarray
    K3: np.ndarray
    K0: np.ndarray


def hamiltonian_blocks(p: ModelParams) -> HamiltonianBlocks:
    a, n, one = annihilation(p.trunc), number(p.trunc), identity(p.trunc)
    return HamiltonianBlocks(
        A=p.omega0 / 2 * one + p.omega0 * n,
        B=p.Omega * a,
        C=p.Omega * creation(p.trunc),
        D=-p.omega0 / 2 * one + p.omega0 * n,
    )


def su11_generators(cfg: TruncationConfig) -> Su11Generators:
    a, ad, n, one = annihilation(cfg), creation(cfg), number(cfg), identity(cfg)
    return Su11Generators(
        Kp=kron(ad, a.T),
        Km=kron(a, ad.T),
        K3=0.5 * (kron(n, one) + kron(one, n) + kron(one, one)),
        K0=kron(n, one) - kron(one, n),
    )


def assemble(blocks) -> np.ndarray:
    """4x4 grid of equally sized blocks (``None`` for zero) -> dense matrix."""
    size = next(b for row in blocks for b in row if b is not None).shape[0]
    zero = np.zeros((size, size), dtype=complex)
    return np.block([[zero if b is None else b for b in row] for row in blocks])


def block_of(m: np.ndarray, i: int, j: int) -> np.ndarray:
    n = m.shape[0] // 4
    return m[i * n : (i + 1) * n, j * n : (j + 1) * n]


def conjugate_by_swap(m: np.ndarray) -> np.ndarray:
    """S M S for the block swap S."""
    n = m.shape[0] // 4
    perm = np.concatenate([np.arange(k * n, (k + 1) * n) for k in SWAP])
    return m[np.ix_(perm, perm)]


def shift_ops(cfg: TruncationConfig):
    """The four one-leg shift superoperators a(x)1, a^dag(x)1, 1(x)a^T, 1(x)(a^dag)^T."""
    a, ad, one = annihilation(cfg), creation(cfg), identity(cfg)
    return kron(a, one), kron(ad, one), kron(one, a.T), kron(one, ad.T)


def x_parts(p: ModelParams):
    """X split into three pairwise commuting parts (diagonal, right-leg, left-leg)."""
    g = su11_generators(p.trunc)
    a1, ad1, one_aT, one_adT = shift_ops(p.trunc)
    w, om = p.omega0, p.Omega
    eye = np.eye(p.dim**2, dtype=complex)
    diag = assemble(
        [
            [w * g.K0, None, None, None],
            [None, w * eye + w * g.K0, None, None],
            [None, None, -w * eye + w * g.K0, None],
            [None, None, None, w * g.K0],
        ]
    )
    right = -om * assemble(
        [
            [None, one_adT, None, None],
            [one_aT, None, None, None],
            [None, None, None, one_adT],
            [None, None, one_aT, None],
        ]
    )
    left = om * conjugate_by_swap(
        assemble(
            [
                [None, a1, None, None],
                [ad1, None, None, None],
                [None, None, None, a1],
                [None, None, ad1, None],
            ]
        )
    )
    return diag, right, left


def build_x(p: ModelParams) -> np.ndarray:
    g = su11_generators(p.trunc)
    a1, ad1, one_aT, one_adT = shift_ops(p.trunc)
    w, om = p.omega0, p.Omega
    eye = np.eye(p.dim**2, dtype=complex)
    return assemble(
        [
            [w * g.K0, -om * one_adT, om * a1, None],
            [-om * one_aT, w * eye + w * g.K0, None, om * a1],
            [om * ad1, None, -w * eye + w * g.K0, -om * one_adT],
            [None, om * ad1, -om * one_aT, w * g.K0],
        ]
    )


def build_l(p: ModelParams) -> np.ndarray:
    g = su11_generators(p.trunc)
    eye = np.eye(p.dim**2, dtype=complex)
    return p.nu * g.Kp + p.mu * g.Km - (p.mu + p.nu) * g.K3 + (p.mu - p.nu) / 2 * eye


def build_y(p: ModelParams) -> np.ndarray:
    return kron(np.eye(4), build_l(p))


def full_generator(p: ModelParams) -> np.ndarray:
    return -1j * build_x(p) + build_y(p)


def excitation_charge(dim: int) -> np.ndarray:
    """Conserved label of every stacked-vec index under -iX + Y.

    For |n><m| in block (i, j) it is (n + [i excited]) - (m + [j excited]).
    """
    n = np.repeat(np.arange(dim), dim)
    m = np.tile(np.arange(dim), dim)
    return np.concatenate([(n + (i == 0)) - (m + (j == 0)) for i, j in ((0, 0), (0, 1), (1, 0), (1, 1))])


def leg_charge(dim: int) -> np.ndarray:
    """n - m for every vec index of a single D^2 block; conserved by L."""
    return np.repeat(np.arange(dim), dim) - np.tile(np.arange(dim), dim)
