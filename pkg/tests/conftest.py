import numpy as np
import pytest

from jcdiss.fock import TruncationConfig
from jcdiss.model import ModelParams


def standard_params(dim=5, **overrides):
    values = dict(omega0=1.0, Omega=0.5, mu=0.3, nu=0.1)
    values.update(overrides)
    return ModelParams(trunc=TruncationConfig(dim, min(2, dim - 2)), **values)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def std():
    return standard_params()


# The disentangled exp(tY) and the commutator series reproduce the dynamics of
# the untruncated mode restricted to the first D levels. Their reference is
# therefore expm on a larger truncation, cut back to the same window.
ORACLE_PAD = 16


def windowed_expm_l(p, t, pad=ORACLE_PAD):
    from jcdiss.fock import expm_blockwise, window_indices
    from jcdiss.model import build_l, leg_charge

    big = p.with_dim(p.dim + pad)
    m = expm_blockwise(t * build_l(big), leg_charge(big.dim))
    idx = window_indices(big.dim, p.dim)
    return m[np.ix_(idx, idx)]


def windowed_expm_commutator(p, t, pad=ORACLE_PAD, tol=1e-13):
    """Windowed expm of -i t^2/2 [X, Y], padding grown until two sizes agree."""
    from jcdiss.fock import expm_blockwise, window_indices
    from jcdiss.model import excitation_charge
    from jcdiss.propagators import commutator_xy

    def at(extra):
        big = p.with_dim(p.dim + extra)
        m = expm_blockwise(-0.5j * t * t * commutator_xy(big), excitation_charge(big.dim))
        idx = window_indices(big.dim, p.dim, 4)
        return m[np.ix_(idx, idx)]

    prev = at(pad)
    while True:
        pad += 8
        cur = at(pad)
        if np.abs(cur - prev).max() < tol:
            return cur
        if pad > 80:
            raise RuntimeError("padded oracle did not settle")
        prev = cur
