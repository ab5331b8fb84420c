"""Diagnostics on block density matrices."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .states import BlockDensityMatrix

LEAKAGE_LEVELS = 2


@dataclass(frozen=True)
class DiagnosticsRow:
    time: float
    trace: complex
    herm_defect: float
    purity: float
    pop_excited: float
    pop_ground: float
    mean_photons: float
    leakage: float
    fidelity: Optional[float] = None
    err_norm: Optional[float] = None

    def as_record(self) -> dict:
        rec = asdict(self)
        tr = rec.pop("trace")
        rec = {"time": rec.pop("time"), "trace_re": tr.real, "trace_im": tr.imag, **rec}
        return rec


def overlap_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Re tr(rho sigma) / sqrt(tr rho^2 tr sigma^2); not the Uhlmann fidelity."""
    num = np.trace(rho @ sigma).real
    den = math.sqrt(max(np.trace(rho @ rho).real, 0.0) * max(np.trace(sigma @ sigma).real, 0.0))
    return float(num / den) if den > 0 else math.nan


def diagnostics(
    rho: BlockDensityMatrix,
    oracle_rho: BlockDensityMatrix | None = None,
    time: float = 0.0,
) -> DiagnosticsRow:
    if oracle_rho is not None and oracle_rho.dim != rho.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {oracle_rho.dim}")
    b = rho.blocks
    d = rho.dim
    full = rho.full()
    pop_e = np.trace(b[0, 0])
    pop_g = np.trace(b[1, 1])
    n = np.arange(d)
    photons = float(np.real(np.sum(n * (np.diag(b[0, 0]) + np.diag(b[1, 1])))))
    top = slice(d - LEAKAGE_LEVELS, d)
    leakage = float(abs(np.real(np.sum(np.diag(b[0, 0])[top] + np.diag(b[1, 1])[top]))))
    fidelity = err = None
    if oracle_rho is not None:
        fidelity = overlap_fidelity(full, oracle_rho.full())
        err = float(np.linalg.norm(rho.vectorize().data - oracle_rho.vectorize().data))
    return DiagnosticsRow(
        time=float(time),
        trace=complex(pop_e + pop_g),
        herm_defect=float(np.abs(full - full.conj().T).max()),
        purity=float(np.trace(full @ full).real),
        pop_excited=float(pop_e.real),
        pop_ground=float(pop_g.real),
        mean_photons=photons,
        leakage=leakage,
        fidelity=fidelity,
        err_norm=err,
    )
