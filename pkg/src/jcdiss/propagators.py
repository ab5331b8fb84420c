"""Closed-form factors of the second-order Zassenhaus propagator.

    rho(t) ~ exp(-i t^2/2 [X, Y]) exp(tY) exp(-itX) rho(0)

Conventions on the truncated Fock space:

* ``exp(-itX)`` uses the spectra of the truncated ``a a^dag`` and ``a^dag a``,
  which makes it equal to the exponential of the truncated X.
* ``exp(tY)`` is the disentangled product, which equals the untruncated
  ``exp(tL)`` restricted to the first D levels (it only uses matrix elements
  inside the window).
* ``exp(-i t^2/2 [X, Y])`` relies on its two anti-block parts commuting, which
  only holds away from the cutoff. It is therefore evaluated on a padded
  space, large enough that the power series in ``PQ`` cannot reach the padded
  boundary, and restricted back to the window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .fock import annihilation, commutator, creation, expm_blockwise, identity, kron, number, window_indices
from .model import (
    ModelParams,
    assemble,
    build_x,
    build_y,
    conjugate_by_swap,
    excitation_charge,
    su11_generators,
)
from .states import BlockDensityMatrix, VectorizedState

SERIES_TOL = 1e-14
SERIES_LIMIT = 30.0


class SeriesConvergenceError(ArithmeticError):
    """The PQ power series would need beta^2 ||PQ|| > 30; reduce t or D."""


@dataclass(frozen=True)
class EfgValues:
    E: float
    F: float
    G: float
    t: float
    log_F: float


def efg(t: float, mu: float, nu: float) -> EfgValues:
    """Disentangling functions E(t), F(t), G(t) for mu > nu >= 0, t >= 0."""
    if not mu > nu:
        raise ValueError(f"requires mu > nu, got mu={mu}, nu={nu}")
    if t < 0:
        raise ValueError("efg is defined for t >= 0")
    x = 0.5 * (mu - nu) * t
    tau = math.tanh(x)
    # E and G written over cosh(x) to stay finite for large t
    den = (mu - nu) + (mu + nu) * tau
    e = 2.0 * mu * tau / den
    g = 2.0 * nu * tau / den
    log_cosh = x + math.log1p(math.exp(-2.0 * x)) - math.log(2.0)
    log_f = log_cosh + math.log(den / (mu - nu))
    f = math.exp(log_f) if log_f < 700 else math.inf
    return EfgValues(E=e, F=f, G=g, t=t, log_F=log_f)


@dataclass(frozen=True)
class PropagatorFactor:
    """A linear map on stacked vec states of block dimension ``block_dim``.

    ``action`` maps an array of shape (4 D^2, k) to the same shape.
    """

    block_dim: int
    action: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    @property
    def size(self) -> int:
        return 4 * self.block_dim**2

    def apply(self, state):
        if isinstance(state, VectorizedState):
            if state.block_dim != self.block_dim:
                raise ValueError(f"state has block dim {state.block_dim}, factor {self.block_dim}")
            return VectorizedState(self.block_dim, self.action(state.data[:, None])[:, 0])
        v = np.asarray(state, dtype=complex)
        if v.shape[0] != self.size:
            raise ValueError(f"expected leading dimension {self.size}, got {v.shape}")
        if v.ndim == 1:
            return self.action(v[:, None])[:, 0]
        return self.action(v)

    def matrix(self) -> np.ndarray:
        return self.action(np.eye(self.size, dtype=complex))

    @classmethod
    def from_matrix(cls, m: np.ndarray, block_dim: int, label: str = "") -> "PropagatorFactor":
        m = np.asarray(m, dtype=complex)
        return cls(block_dim, lambda v: m @ v, label)

    def then(self, other: "PropagatorFactor") -> "PropagatorFactor":
        """``other`` applied after ``self``."""
        return PropagatorFactor(self.block_dim, lambda v: other.action(self.action(v)), f"{other.label}*{self.label}")


# ---------------------------------------------------------------------------
# exp(-itX)


def _cos_sqrt(alpha: float, z: np.ndarray) -> np.ndarray:
    return np.cos(alpha * np.sqrt(z))


def _sinc_sqrt(alpha: float, z: np.ndarray) -> np.ndarray:
    """sin(alpha sqrt z) / sqrt z, with the value alpha at z = 0."""
    r = np.sqrt(z)
    out = np.full(z.shape, float(alpha))
    nz = r > 0
    out[nz] = np.sin(alpha * r[nz]) / r[nz]
    return out


def _x_leg_ops(p: ModelParams, t: float):
    cfg = p.trunc
    a, ad = annihilation(cfg), creation(cfg)
    alpha = p.Omega * t
    n_low = np.diag(ad @ a).real  # a^dag a
    n_up = np.diag(a @ ad).real  # a a^dag; top entry is 0 at the cutoff
    c1, c0 = np.diag(_cos_sqrt(alpha, n_up)), np.diag(_cos_sqrt(alpha, n_low))
    s1, s0 = np.diag(_sinc_sqrt(alpha, n_up)), np.diag(_sinc_sqrt(alpha, n_low))
    legs = {
        "c1": c1,
        "c0": c0,
        "s1a": s1 @ a,
        "s0ad": s0 @ ad,
        "s1adT": s1 @ ad.T,
        "s0aT": s0 @ a.T,
    }
    ph_left = np.diag(np.exp(-1j * t * p.omega0 * np.arange(p.dim)))
    ph_right = np.diag(np.exp(1j * t * p.omega0 * np.arange(p.dim)))
    return legs, ph_left, ph_right


# (row, col, coefficient, left-leg op, right-leg op); rows 1 and 2 also carry
# the scalar phases exp(-it w0) and exp(+it w0).
_X_ENTRIES = (
    (0, 0, 1, "c1", "c1"),
    (0, 1, 1j, "c1", "s1adT"),
    (0, 2, -1j, "s1a", "c1"),
    (0, 3, 1, "s1a", "s1adT"),
    (1, 0, 1j, "c1", "s0aT"),
    (1, 1, 1, "c1", "c0"),
    (1, 2, 1, "s1a", "s0aT"),
    (1, 3, -1j, "s1a", "c0"),
    (2, 0, -1j, "s0ad", "c1"),
    (2, 1, 1, "s0ad", "s1adT"),
    (2, 2, 1, "c0", "c1"),
    (2, 3, 1j, "c0", "s1adT"),
    (3, 0, 1, "s0ad", "s0aT"),
    (3, 1, -1j, "s0ad", "c0"),
    (3, 2, 1j, "c0", "s0aT"),
    (3, 3, 1, "c0", "c0"),
)


def exp_itx_entries(p: ModelParams, t: float):
    """The sixteen D^2 x D^2 entries of exp(-itX) as (left, right) Kronecker legs.

    Returns a dict {(i, j): (coefficient, left, right)} with entry = coefficient * kron(left, right).
    """
    legs, ph_left, ph_right = _x_leg_ops(p, t)
    row_phase = (1.0, np.exp(-1j * t * p.omega0), np.exp(1j * t * p.omega0), 1.0)
    return {
        (i, j): (coef * row_phase[i], ph_left @ legs[lk], ph_right @ legs[rk])
        for i, j, coef, lk, rk in _X_ENTRIES
    }


def exp_itx_closed_form(p: ModelParams, t: float) -> PropagatorFactor:
    d = p.dim
    entries = exp_itx_entries(p, t)

    def action(v):
        k = v.shape[1]
        r = v.reshape(4, d, d, k)
        out = np.zeros_like(r)
        for (i, j), (coef, left, right) in entries.items():
            # kron(left, right) vec(rho) = vec(left rho right^T)
            out[i] += coef * np.einsum("ab,bck,dc->adk", left, r[j], right)
        return out.reshape(4 * d * d, k)

    return PropagatorFactor(d, action, "exp(-itX)")


# ---------------------------------------------------------------------------
# exp(tY)


def nilpotent_exp(op: np.ndarray, c: complex):
    """exp(c * op) for nilpotent ``op``; returns (matrix, number of nonzero terms)."""
    n = op.shape[0]
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for j in range(1, n + 2):
        term = term @ op * (c / j)
        if not np.any(term):
            return out, j
        out += term
    raise ArithmeticError("operator is not nilpotent")


def exp_tl_product(p: ModelParams, t: float) -> np.ndarray:
    """exp(tL) = e^{(mu-nu)t/2} exp(G K+) exp(-2 log F K3) exp(E K-) as a dense D^2 x D^2 matrix."""
    if t < 0:
        raise ValueError("exp(tY) is only defined forward in time (t >= 0)")
    f = efg(t, p.mu, p.nu)
    g = su11_generators(p.trunc)
    raise_, _ = nilpotent_exp(g.Kp, f.G)
    lower, _ = nilpotent_exp(g.Km, f.E)
    middle = np.exp(-2.0 * f.log_F * np.diag(g.K3).real)
    return np.exp(0.5 * (p.mu - p.nu) * t) * (raise_ * middle[None, :]) @ lower


def exp_ty_closed_form(p: ModelParams, t: float) -> PropagatorFactor:
    d = p.dim
    etl = exp_tl_product(p, t)

    def action(v):
        k = v.shape[1]
        return np.einsum("ab,jbk->jak", etl, v.reshape(4, d * d, k)).reshape(4 * d * d, k)

    return PropagatorFactor(d, action, "exp(tY)")


# ---------------------------------------------------------------------------
# [X, Y] and exp(-i t^2/2 [X, Y])


@dataclass(frozen=True)
class DissipationMixedOps:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray


def _mixed(mu, nu, a, ad, one, kr):
    c = 0.5 * (mu + nu)
    return (
        -nu * kr(ad, one) + c * kr(one, ad.T),
        mu * kr(a, one) - c * kr(one, a.T),
        nu * kr(one, a.T) - c * kr(a, one),
        -mu * kr(one, ad.T) + c * kr(ad, one),
    )


def dissipation_mixed_ops(p: ModelParams) -> DissipationMixedOps:
    cfg = p.trunc
    return DissipationMixedOps(*_mixed(p.mu, p.nu, annihilation(cfg), creation(cfg), identity(cfg), kron))


def mixed_products(p: ModelParams):
    """AB, BA, CD, DC written out term by term (as listed after the block formula)."""
    cfg = p.trunc
    a, ad, n, one = annihilation(cfg), creation(cfg), number(cfg), identity(cfg)
    aad = a @ ad
    mu, nu, c = p.mu, p.nu, 0.5 * (p.mu + p.nu)
    kp, km = kron(ad, a.T), kron(a, ad.T)
    ab = -mu * nu * kron(n, one) + c * nu * kp + mu * c * km - c**2 * kron(one, aad)
    ba = -mu * nu * kron(aad, one) + mu * c * km + c * nu * kp - c**2 * kron(one, n)
    cd = -mu * nu * kron(one, n) + c * nu * kp + mu * c * km - c**2 * kron(aad, one)
    dc = -mu * nu * kron(one, aad) + mu * c * km + c * nu * kp - c**2 * kron(n, one)
    return ab, ba, cd, dc


def _antiblock_pairs(p_op, q_op, pairs):
    grid = [[None] * 4 for _ in range(4)]
    for u, w in pairs:
        grid[u][w] = p_op
        grid[w][u] = q_op
    return grid


def commutator_parts(p: ModelParams):
    """The two commuting pieces of [X, Y]: Omega*antiblock(A, B) and Omega*S antiblock(C, D) S."""
    ops = dissipation_mixed_ops(p)
    first = p.Omega * assemble(_antiblock_pairs(ops.A, ops.B, ((0, 1), (2, 3))))
    second = p.Omega * conjugate_by_swap(assemble(_antiblock_pairs(ops.C, ops.D, ((0, 1), (2, 3)))))
    return first, second


def commutator_xy(p: ModelParams) -> np.ndarray:
    first, second = commutator_parts(p)
    return first + second


def _sparse_ladder(dim):
    a = sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, format="csr", dtype=complex)
    return a, a.conj().T.tocsr(), sp.identity(dim, dtype=complex, format="csr")


def _norm_bound(m) -> float:
    # max(||.||_1, ||.||_inf) bounds the spectral norm
    a = abs(m)
    return float(max(a.sum(axis=0).max(), a.sum(axis=1).max()))


def _mixed_sparse(p: ModelParams, dim: int):
    a, ad, one = _sparse_ladder(dim)
    A, B, C, D = (m.tocsr() for m in _mixed(p.mu, p.nu, a, ad, one, sp.kron))
    return A, B, C, D


def _pq_norm(p: ModelParams, dim: int) -> float:
    A, B, C, D = _mixed_sparse(p, dim)
    return max(_norm_bound(A @ B), _norm_bound(B @ A), _norm_bound(C @ D), _norm_bound(D @ C))


def commutator_series_plan(p: ModelParams, t: float):
    """(number of series terms, padding levels) for exp(-i t^2/2 [X, Y]).

    Each application of PQ moves a state at most two Fock levels up, so the
    k-th series term only sees PQ on the first D + 2k levels. The term bound
    uses that level-dependent norm; the padding keeps every reachable level
    away from the truncation edge.
    """
    beta = p.Omega * t * t / 2.0
    x_window = beta**2 * _pq_norm(p, p.dim)
    if x_window > SERIES_LIMIT:
        raise SeriesConvergenceError(
            f"beta^2 ||PQ|| = {x_window:.3g} exceeds {SERIES_LIMIT}; reduce t or the truncation"
        )
    bound, k = max(1.0, abs(beta)), 0
    while bound >= SERIES_TOL or k < 1:
        k += 1
        if k > 200:
            raise SeriesConvergenceError("PQ series did not reach tolerance in 200 terms")
        # +2 keeps the norm estimate clear of the boundary row of the truncated ladder
        bound *= beta**2 * _pq_norm(p, p.dim + 2 * k + 2) / ((2 * k - 1) * (2 * k))
    return k, 2 * k + 2


def _cos_series(z, w, beta, terms):
    """cos(beta sqrt(Z)) w as an even power series in Z."""
    acc, zk, coef = w.copy(), w, 1.0
    for k in range(1, terms + 1):
        zk = z @ zk
        coef *= -(beta**2) / ((2 * k - 1) * (2 * k))
        acc += coef * zk
    return acc


def _sinc_series(z, w, beta, terms):
    """Z^{-1/2} sin(beta sqrt(Z)) w as a power series in Z."""
    coef = beta
    acc, zk = coef * w, w
    for k in range(1, terms + 1):
        zk = z @ zk
        coef *= -(beta**2) / ((2 * k) * (2 * k + 1))
        acc += coef * zk
    return acc


def _antiblock_exp(pq, qp, p_op, q_op, u, w, beta, terms):
    """exp(-i beta [[0, P], [Q, 0]]) applied to (u, w)."""
    u_new = _cos_series(pq, u, beta, terms) - 1j * _sinc_series(pq, p_op @ w, beta, terms)
    w_new = -1j * _sinc_series(qp, q_op @ u, beta, terms) + _cos_series(qp, w, beta, terms)
    return u_new, w_new


def exp_commutator_closed_form(p: ModelParams, t: float) -> PropagatorFactor:
    d = p.dim
    beta = p.Omega * t * t / 2.0
    if beta == 0:
        return PropagatorFactor(d, lambda v: v.copy(), "exp(-i t^2/2 [X,Y])")
    terms, pad = commutator_series_plan(p, t)
    big = d + pad
    A, B, C, D = _mixed_sparse(p, big)
    AB, BA, CD, DC = (A @ B).tocsr(), (B @ A).tocsr(), (C @ D).tocsr(), (D @ C).tocsr()
    win = window_indices(big, d)

    def action(v):
        k = v.shape[1]
        blocks = np.zeros((4, big * big, k), dtype=complex)
        blocks[:, win, :] = v.reshape(4, d * d, k)
        # first part pairs blocks (0,1), (2,3); the S-conjugated part pairs (0,2), (1,3)
        for i, j in ((0, 1), (2, 3)):
            blocks[i], blocks[j] = _antiblock_exp(AB, BA, A, B, blocks[i], blocks[j], beta, terms)
        for i, j in ((0, 2), (1, 3)):
            blocks[i], blocks[j] = _antiblock_exp(CD, DC, C, D, blocks[i], blocks[j], beta, terms)
        return blocks[:, win, :].reshape(4 * d * d, k)

    return PropagatorFactor(d, action, "exp(-i t^2/2 [X,Y])")


# ---------------------------------------------------------------------------
# Zassenhaus composition


def third_order_generator(p: ModelParams) -> np.ndarray:
    """-(1/6)(2[[A,B],B] + [[A,B],A]) with A = -iX, B = Y (multiply by t^3)."""
    a_op = sp.csr_matrix(-1j * build_x(p))
    b_op = sp.csr_matrix(build_y(p))
    ab = a_op @ b_op - b_op @ a_op
    c3 = -(2.0 * (ab @ b_op - b_op @ ab) + (ab @ a_op - a_op @ ab)) / 6.0
    return c3.toarray()


# Nested commutators reach three levels past the window; the extra levels keep
# the truncated dissipator's boundary row out of their reach.
THIRD_ORDER_PAD = 4


def third_order_factor(p: ModelParams, t: float, pad: int = THIRD_ORDER_PAD) -> PropagatorFactor:
    """exp(t^3 C3), built on dim + pad levels and restricted to the window."""
    big = p.with_dim(p.dim + pad)
    m = expm_blockwise(t**3 * third_order_generator(big), excitation_charge(big.dim))
    idx = window_indices(big.dim, p.dim, 4)
    return PropagatorFactor.from_matrix(m[np.ix_(idx, idx)], p.dim, "exp(t^3 C3)")


def zassenhaus_factors(p: ModelParams, t: float, order: int = 2):
    """Factors in application order (rightmost first)."""
    if order not in (2, 3):
        raise ValueError(f"order must be 2 or 3, got {order}")
    if t < 0:
        raise ValueError("propagation requires t >= 0")
    factors = [exp_itx_closed_form(p, t), exp_ty_closed_form(p, t), exp_commutator_closed_form(p, t)]
    if order == 3:
        factors.append(third_order_factor(p, t))
    return factors


def zassenhaus_propagate(p: ModelParams, t: float, rho0, order: int = 2):
    """Approximate exp(t(-iX + Y)) rho0; accepts and returns VectorizedState (or BlockDensityMatrix)."""
    as_blocks = isinstance(rho0, BlockDensityMatrix)
    state = rho0.vectorize() if as_blocks else rho0
    if not isinstance(state, VectorizedState):
        state = VectorizedState(p.dim, state)
    for f in zassenhaus_factors(p, t, order):
        state = f.apply(state)
    return state.to_blocks() if as_blocks else state


# ---------------------------------------------------------------------------
# operator-form reconstructions


def rho_tilde1(p: ModelParams, t: float, rho0: BlockDensityMatrix) -> BlockDensityMatrix:
    """exp(-itX) applied in operator form, block by block."""
    cfg = p.trunc
    a, ad = annihilation(cfg), creation(cfg)
    alpha = p.Omega * t
    n_low = np.diag(ad @ a).real
    n_up = np.diag(a @ ad).real
    c1, c0 = np.diag(_cos_sqrt(alpha, n_up)), np.diag(_cos_sqrt(alpha, n_low))
    s1, s0 = np.diag(_sinc_sqrt(alpha, n_up)), np.diag(_sinc_sqrt(alpha, n_low))
    em = np.diag(np.exp(-1j * t * p.omega0 * np.arange(p.dim)))
    ep = np.diag(np.exp(1j * t * p.omega0 * np.arange(p.dim)))
    ph = np.exp(-1j * t * p.omega0)
    r00, r01, r10, r11 = rho0[0, 0], rho0[0, 1], rho0[1, 0], rho0[1, 1]

    b00 = (
        em @ c1 @ r00 @ ep @ c1
        + 1j * em @ c1 @ r01 @ ad @ ep @ s1
        - 1j * em @ s1 @ a @ r10 @ ep @ c1
        + em @ s1 @ a @ r11 @ ad @ ep @ s1
    )
    b01 = ph * (
        1j * em @ c1 @ r00 @ a @ ep @ s0
        + em @ c1 @ r01 @ ep @ c0
        + em @ s1 @ a @ r10 @ a @ ep @ s0
        - 1j * em @ s1 @ a @ r11 @ ep @ c0
    )
    b10 = np.conj(ph) * (
        -1j * em @ s0 @ ad @ r00 @ ep @ c1
        + em @ s0 @ ad @ r01 @ ad @ ep @ s1
        + em @ c0 @ r10 @ ep @ c1
        + 1j * em @ c0 @ r11 @ ad @ ep @ s1
    )
    b11 = (
        em @ s0 @ ad @ r00 @ a @ ep @ s0
        - 1j * em @ s0 @ ad @ r01 @ ep @ c0
        + 1j * em @ c0 @ r10 @ a @ ep @ s0
        + em @ c0 @ r11 @ ep @ c0
    )
    return BlockDensityMatrix.from_blocks(b00, b01, b10, b11)


def rho_tilde_operator_series(p: ModelParams, t: float, rho1: BlockDensityMatrix) -> BlockDensityMatrix:
    """exp(tL) applied to each block through the normal-ordered operator series."""
    if t < 0:
        raise ValueError("exp(tY) is only defined forward in time (t >= 0)")
    cfg = p.trunc
    a, ad = annihilation(cfg), creation(cfg)
    f = efg(t, p.mu, p.nu)
    damp = np.diag(np.exp(-f.log_F * np.arange(p.dim)))
    scale = math.exp(0.5 * (p.mu - p.nu) * t - f.log_F)
    out = np.empty_like(rho1.blocks)
    for i in range(2):
        for j in range(2):
            inner = np.zeros((p.dim, p.dim), dtype=complex)
            am, adm = np.eye(p.dim, dtype=complex), np.eye(p.dim, dtype=complex)
            for m in range(p.dim):
                inner += f.E**m / math.factorial(m) * am @ rho1[i, j] @ adm
                am, adm = a @ am, adm @ ad
            mid = damp @ inner @ damp
            outer = np.zeros_like(mid)
            an, adn = np.eye(p.dim, dtype=complex), np.eye(p.dim, dtype=complex)
            for n in range(p.dim):
                outer += f.G**n / math.factorial(n) * adn @ mid @ an
                adn, an = ad @ adn, an @ a
            out[i, j] = scale * outer
    return BlockDensityMatrix(out)
