"""Damped Jaynes-Cummings dynamics via vectorized superoperators and Zassenhaus splitting."""
from .fock import TruncationConfig, expm, kron, unvectorize, vectorize
from .model import ModelParams, build_l, build_x, build_y, full_generator
from .observables import DiagnosticsRow, diagnostics
from .oracle import ErrorFit, IntegrationPlan, expm_propagate, fit_error_order, rk4_master
from .propagators import (
    commutator_xy,
    efg,
    exp_commutator_closed_form,
    exp_itx_closed_form,
    exp_ty_closed_form,
    zassenhaus_propagate,
)
from .states import BlockDensityMatrix, VectorizedState

__all__ = [
    "BlockDensityMatrix",
    "DiagnosticsRow",
    "ErrorFit",
    "IntegrationPlan",
    "ModelParams",
    "TruncationConfig",
    "VectorizedState",
    "build_l",
    "build_x",
    "build_y",
    "commutator_xy",
    "diagnostics",
    "efg",
    "exp_commutator_closed_form",
    "exp_itx_closed_form",
    "exp_ty_closed_form",
    "expm",
    "expm_propagate",
    "fit_error_order",
    "full_generator",
    "kron",
    "rk4_master",
    "unvectorize",
    "vectorize",
    "zassenhaus_propagate",
]
