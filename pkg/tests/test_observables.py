import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import standard_params
from jcdiss.observables import diagnostics, overlap_fidelity
from jcdiss.oracle import IntegrationPlan, rk4_master
from jcdiss.states import (
    BlockDensityMatrix,
    coherent_amplitudes,
    coherent_leakage,
    fock_density,
    product_state,
    qubit_state,
    random_density,
    thermal_density,
)


class TestStates:
    def test_full_round_trip(self, rng):
        rho = random_density(rng, 4, 3)
        np.testing.assert_array_equal(BlockDensityMatrix.from_full(rho.full()).blocks, rho.blocks)
        np.testing.assert_array_equal(rho.vectorize().to_blocks().blocks, rho.blocks)

    def test_block_layout(self):
        rho = product_state(qubit_state("plus"), fock_density(1, 3))
        full = rho.full()
        assert full[1, 1] == pytest.approx(0.5)
        assert full[1, 4] == pytest.approx(0.5)  # rho01 entry |e,1><g,1|
        assert rho[0, 1][1, 1] == pytest.approx(0.5)

    @pytest.mark.parametrize(
        "cavity",
        [fock_density(2, 6), coherent_amplitudes(0.8 + 0.3j, 6), thermal_density(0.7, 6)],
    )
    @pytest.mark.parametrize("qubit", ["excited", "ground", "plus"])
    def test_product_states_physical(self, qubit, cavity):
        full = product_state(qubit_state(qubit), cavity).full()
        assert abs(np.trace(full) - 1) < 1e-12
        np.testing.assert_allclose(full, full.conj().T, atol=0)
        assert np.linalg.eigvalsh(full).min() > -1e-12

    def test_thermal_weights(self):
        w = np.diag(thermal_density(1.0, 4)).real
        np.testing.assert_allclose(w, np.array([8, 4, 2, 1]) / 15)

    def test_coherent_leakage(self):
        assert coherent_leakage(0.0, 5) == 0.0
        lam = 2.0
        expected = 1 - sum(math.exp(-lam) * lam**n / math.factorial(n) for n in range(6))
        assert coherent_leakage(math.sqrt(lam), 6) == pytest.approx(expected, rel=1e-12)

    def test_rejects(self):
        with pytest.raises(ValueError):
            fock_density(5, 5)
        with pytest.raises(ValueError):
            qubit_state("minus")
        with pytest.raises(ValueError):
            BlockDensityMatrix(np.zeros((2, 3, 4, 4)))


class TestDiagnostics:
    def test_mixed_qubit_vacuum(self):
        rho = BlockDensityMatrix.from_blocks(0.5 * fock_density(0, 4), np.zeros((4, 4)), np.zeros((4, 4)), 0.5 * fock_density(0, 4))
        row = diagnostics(rho)
        assert row.trace == pytest.approx(1.0)
        assert row.purity == pytest.approx(0.5)
        assert row.mean_photons == 0.0
        assert row.fidelity is None and row.err_norm is None

    def test_excited_vacuum(self):
        row = diagnostics(product_state(qubit_state("excited"), fock_density(0, 4)))
        assert row.pop_excited == 1.0 and row.pop_ground == 0.0
        assert row.purity == pytest.approx(1.0)

    def test_mean_photons_and_leakage(self):
        row = diagnostics(product_state(qubit_state("plus"), thermal_density(1.0, 4)))
        assert row.mean_photons == pytest.approx((0 * 8 + 1 * 4 + 2 * 2 + 3 * 1) / 15)
        assert row.leakage == pytest.approx(3 / 15)

    def test_oracle_columns(self, rng):
        rho = random_density(rng, 4, 3)
        row = diagnostics(rho, rho, time=0.5)
        assert row.fidelity == pytest.approx(1.0) and row.err_norm == 0.0 and row.time == 0.5
        with pytest.raises(ValueError, match="dimension"):
            diagnostics(rho, random_density(rng, 5, 3))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), support=st.integers(1, 4))
    def test_population_sum_and_round_trip(self, seed, support):
        rho = random_density(np.random.default_rng(seed), 4, support)
        row = diagnostics(rho)
        assert abs(row.pop_excited + row.pop_ground - row.trace.real) < 1e-12
        assert diagnostics(rho.vectorize().to_blocks()) == row

    def test_overlap_fidelity_bounds(self, rng):
        a, b = random_density(rng, 3, 3).full(), random_density(rng, 3, 3).full()
        assert 0 <= overlap_fidelity(a, b) <= 1
        assert math.isnan(overlap_fidelity(np.zeros((2, 2)), a[:2, :2]))

    def test_purity_drops_under_dissipation(self):
        p = standard_params(5)
        rho = product_state(qubit_state("excited"), fock_density(0, 5))
        final = rk4_master(p, rho, IntegrationPlan(1.0, 1000, 1000))[-1][1]
        assert diagnostics(final).purity < 1 - 1e-4

    def test_record_layout(self, rng):
        rec = diagnostics(random_density(rng, 3, 2), time=1.5).as_record()
        assert list(rec) == [
            "time", "trace_re", "trace_im", "herm_defect", "purity", "pop_excited",
            "pop_ground", "mean_photons", "leakage", "fidelity", "err_norm",
        ]  # fmt: skip
