import math
import warnings

import numpy as np
import pytest

from conftest import standard_params
from jcdiss.fock import TruncationConfig
from jcdiss.model import ModelParams
from jcdiss.oracle import IntegrationPlan, expm_propagate, fit_error_order, rk4_master
from jcdiss.propagators import zassenhaus_propagate
from jcdiss.states import fock_density, product_state, qubit_state, random_density

STUDY_TIMES = [0.025, 0.05, 0.1, 0.2, 0.4]


def final_state(p, rho, t, steps):
    return rk4_master(p, rho, IntegrationPlan(t, steps, steps))[-1][1]


class TestIntegrationPlan:
    def test_step(self):
        assert IntegrationPlan(1.0, 4).h == 0.25

    @pytest.mark.parametrize("args", [(-1.0, 4), (1.0, 0), (1.0, 4, 5), (1.0, 4, 0)])
    def test_rejects(self, args):
        with pytest.raises(ValueError):
            IntegrationPlan(*args)


class TestRk4:
    def test_zero_generator(self, rng):
        p = ModelParams(0.0, 0.0, 1e-9, 0.0, TruncationConfig(5))
        rho = random_density(rng, 5, 3)
        out = final_state(p, rho, 1.0, 100)
        assert np.abs(out.blocks - rho.blocks).max() < 1e-8

    def test_records(self, std, rng):
        with pytest.warns(RuntimeWarning):
            traj = rk4_master(std, random_density(rng, 5, 2), IntegrationPlan(1.0, 10, 5))
        assert [t for t, _ in traj] == pytest.approx([0.0, 0.5, 1.0])

    def test_step_warning(self, std, rng):
        with pytest.warns(RuntimeWarning, match="large"):
            rk4_master(std, random_density(rng, 5, 2), IntegrationPlan(1.0, 2))

    def test_agrees_with_expm(self, std, rng):
        rho = random_density(rng, 5, 3)
        err = np.abs(final_state(std, rho, 1.0, 1000).blocks - expm_propagate(std, rho, 1.0).blocks).max()
        assert err < 1e-8

    def test_step_halving_ratio(self, std, rng):
        rho = random_density(rng, 5, 3)
        exact = expm_propagate(std, rho, 1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            coarse = np.abs(final_state(std, rho, 1.0, 50).blocks - exact.blocks).max()
            fine = np.abs(final_state(std, rho, 1.0, 100).blocks - exact.blocks).max()
        assert 12 <= coarse / fine <= 20

    @pytest.mark.parametrize("method", ["rk4", "expm"])
    def test_physicality(self, rng, method):
        p = standard_params(12)
        rho = random_density(rng, 12, 2)
        out = final_state(p, rho, 1.0, 1000) if method == "rk4" else expm_propagate(p, rho, 1.0)
        full = out.full()
        assert abs(np.trace(full) - 1) < 1e-9
        assert np.abs(full - full.conj().T).max() < 1e-10

    def test_vacuum_rabi(self):
        p = ModelParams(1.0, 0.5, 1e-9, 0.0, TruncationConfig(5))
        rho = product_state(qubit_state("excited"), fock_density(0, 5))
        for t, state in rk4_master(p, rho, IntegrationPlan(6.0, 1200, 100)):
            assert np.trace(state[0, 0]).real == pytest.approx(math.cos(p.Omega * t) ** 2, abs=1e-6)


class TestExpmPropagate:
    def test_zero_time(self, std, rng):
        rho = random_density(rng, 5, 3)
        np.testing.assert_allclose(expm_propagate(std, rho, 0.0).blocks, rho.blocks, atol=1e-15)

    def test_semigroup(self, rng):
        p = standard_params(4)
        rho = random_density(rng, 4, 4).vectorize()
        two_step = expm_propagate(p, expm_propagate(p, rho, 0.3), 0.5)
        assert np.abs(two_step.data - expm_propagate(p, rho, 0.8).data).max() < 1e-9

    def test_padding_changes_only_boundary_physics(self, std, rng):
        p = ModelParams(1.0, 0.5, 0.3, 0.0, std.trunc)
        rho = random_density(rng, 5, 3)
        # without pumping nothing climbs past the cutoff, so padding is irrelevant
        a, b = expm_propagate(p, rho, 1.0), expm_propagate(p, rho, 1.0, pad=6)
        assert np.abs(a.blocks - b.blocks).max() < 1e-12


class TestErrorFit:
    # cavity support stays below D - 1 so the truncated coherent factor sees no boundary
    def test_second_order(self, std, rng):
        fit = fit_error_order(std, random_density(rng, 5, 3), STUDY_TIMES, order=2)
        assert 2.7 <= fit.slope <= 3.3
        assert fit.r_squared >= 0.98 and fit.asymptotic and not fit.degenerate

    def test_third_order(self, std, rng):
        fit = fit_error_order(std, random_density(rng, 5, 3), STUDY_TIMES, order=3)
        assert fit.slope >= 3.7

    def test_exact_case_degenerate(self, rng):
        p = standard_params(5, Omega=0.0)
        fit = fit_error_order(p, random_density(rng, 5, 5), STUDY_TIMES)
        assert max(fit.errors) < 1e-12
        assert fit.degenerate and math.isnan(fit.slope)

    def test_non_asymptotic_flag(self, std, rng):
        fit = fit_error_order(std, random_density(rng, 5, 5), [0.5, 1.0, 1.5, 2.0, 3.0])
        assert not fit.asymptotic and fit.notes

    @pytest.mark.parametrize("times", [[0.1, 0.2, 0.4], [0.1, 0.2, 0.3, 0.35], [0.1, 0.05, 0.2, 0.4], [0, 0.1, 0.2, 0.4]])
    def test_rejects(self, std, rng, times):
        with pytest.raises(ValueError):
            fit_error_order(std, random_density(rng, 5, 2), times)


def test_zassenhaus_accepts_block_form(std, rng):
    rho = random_density(rng, 5, 3)
    out = zassenhaus_propagate(std, 0.2, rho)
    np.testing.assert_allclose(out.vectorize().data, zassenhaus_propagate(std, 0.2, rho.vectorize()).data)
