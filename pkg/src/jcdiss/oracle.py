"""Reference propagation that shares no code with the closed forms.

Two routes: a fixed-step RK4 on the four coupled block equations (operator
form, no vectorization), and a dense matrix exponential of the vectorized
generator. ``fit_error_order`` measures the Zassenhaus error against the latter.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .fock import annihilation, creation, expm_blockwise, identity, number, window_indices
from .model import ModelParams, excitation_charge, full_generator, hamiltonian_blocks
from .states import BlockDensityMatrix, VectorizedState

# extra Fock levels used when the oracle must stand in for the untruncated dynamics
DEFAULT_PAD = 10


@dataclass(frozen=True)
class IntegrationPlan:
    t_end: float
    steps: int
    record_every: int = 1

    def __post_init__(self):
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not 1 <= self.record_every <= self.steps:
            raise ValueError("record_every must lie in 1..steps")

    @property
    def h(self) -> float:
        return self.t_end / self.steps


@dataclass(frozen=True)
class ErrorFit:
    t_values: list
    errors: list
    slope: float
    intercept: float
    r_squared: float
    degenerate: bool = False
    asymptotic: bool = True
    notes: list = field(default_factory=list)


def master_rhs(p: ModelParams, rho: np.ndarray, ops=None) -> np.ndarray:
    """Right-hand side of the master equation for blocks ``rho[i, j]``.

    ``a a^dag`` is taken as N + 1, the same identity that turns the dissipator
    into its su(1,1) form.
    """
    if ops is None:
        ops = _rhs_ops(p)
    A, B, C, D, a, ad, n, n1 = ops
    r00, r01, r10, r11 = rho[0, 0], rho[0, 1], rho[1, 0], rho[1, 1]

    def diss(r):
        return p.mu * (a @ r @ ad - 0.5 * (n @ r + r @ n)) + p.nu * (ad @ r @ a - 0.5 * (n1 @ r + r @ n1))

    out = np.empty_like(rho)
    out[0, 0] = -1j * (A @ r00 + B @ r10 - r00 @ A - r01 @ C) + diss(r00)
    out[0, 1] = -1j * (A @ r01 + B @ r11 - r00 @ B - r01 @ D) + diss(r01)
    out[1, 0] = -1j * (C @ r00 + D @ r10 - r10 @ A - r11 @ C) + diss(r10)
    out[1, 1] = -1j * (C @ r01 + D @ r11 - r10 @ B - r11 @ D) + diss(r11)
    return out


def _rhs_ops(p: ModelParams):
    h = hamiltonian_blocks(p)
    n = number(p.trunc)
    return h.A, h.B, h.C, h.D, annihilation(p.trunc), creation(p.trunc), n, n + identity(p.trunc)


def generator_norm_estimate(p: ModelParams) -> float:
    d = p.dim
    x_est = abs(p.omega0) * d + 2 * abs(p.Omega) * math.sqrt(d)
    y_est = (p.mu + p.nu) * 2 * d
    return x_est + y_est


def rk4_master(p: ModelParams, rho0: BlockDensityMatrix, plan: IntegrationPlan):
    """Classic RK4 on the block equations; returns [(t, BlockDensityMatrix), ...] including t = 0."""
    h = plan.h
    if h * generator_norm_estimate(p) > 0.1:
        warnings.warn(
            f"RK4 step h={h:.3g} is large for generator norm ~{generator_norm_estimate(p):.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    ops = _rhs_ops(p)
    rho = rho0.blocks.copy()
    out = [(0.0, BlockDensityMatrix(rho))]
    for step in range(1, plan.steps + 1):
        k1 = master_rhs(p, rho, ops)
        k2 = master_rhs(p, rho + 0.5 * h * k1, ops)
        k3 = master_rhs(p, rho + 0.5 * h * k2, ops)
        k4 = master_rhs(p, rho + h * k3, ops)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if step % plan.record_every == 0 or step == plan.steps:
            out.append((step * h, BlockDensityMatrix(rho)))
    return out


def propagator_matrix(p: ModelParams, t: float, pad: int = 0) -> np.ndarray:
    """exp(t(-iX + Y)) on the stacked vec space, optionally from a padded truncation."""
    big = p.with_dim(p.dim + pad) if pad else p
    m = expm_blockwise(t * full_generator(big), excitation_charge(big.dim))
    if pad:
        idx = window_indices(big.dim, p.dim, 4)
        m = m[np.ix_(idx, idx)]
    return m


def expm_propagate(p: ModelParams, rho0, t: float, pad: int = 0):
    """exp(t(-iX + Y)) rho0.

    With ``pad > 0`` the generator is built on dim + pad levels and the result
    restricted back to the first dim levels, approximating untruncated dynamics.
    """
    as_blocks = isinstance(rho0, BlockDensityMatrix)
    state = rho0.vectorize() if as_blocks else rho0
    if not isinstance(state, VectorizedState):
        state = VectorizedState(p.dim, state)
    out = VectorizedState(p.dim, propagator_matrix(p, t, pad) @ state.data)
    return out.to_blocks() if as_blocks else out


def fit_error_order(p: ModelParams, rho0, t_values, order: int = 2, pad: int = DEFAULT_PAD) -> ErrorFit:
    """Least-squares slope of log(error) against log(t) for the Zassenhaus propagator."""
    from .propagators import zassenhaus_propagate

    t_values = [float(t) for t in t_values]
    if len(t_values) < 4:
        raise ValueError("need at least 4 time values")
    if any(t <= 0 for t in t_values) or any(b <= a for a, b in zip(t_values, t_values[1:])):
        raise ValueError("time values must be positive and strictly increasing")
    if t_values[-1] / t_values[0] < 4:
        raise ValueError("time values must span at least two octaves")

    state = rho0.vectorize() if isinstance(rho0, BlockDensityMatrix) else rho0
    errors = []
    for t in t_values:
        approx = zassenhaus_propagate(p, t, state, order)
        exact = expm_propagate(p, state, t, pad)
        errors.append(float(np.linalg.norm(approx.data - exact.data)))

    notes = []
    if max(errors) < 1e-12:
        notes.append("errors at round-off level; no slope can be fitted")
        return ErrorFit(t_values, errors, math.nan, math.nan, math.nan, degenerate=True, asymptotic=False, notes=notes)
    res = stats.linregress(np.log(t_values), np.log(errors))
    r2 = float(res.rvalue**2)
    asymptotic = r2 >= 0.98 and max(errors) < 1e-2
    if not asymptotic:
        notes.append(f"non-asymptotic regime (r^2={r2:.4f}, max error={max(errors):.3g})")
    return ErrorFit(t_values, errors, float(res.slope), float(res.intercept), r2, asymptotic=asymptotic, notes=notes)
