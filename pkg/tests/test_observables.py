import warnings

import numpy as np
import pytest

from nprgflow.errors import InvalidObservablesError
from nprgflow.flow import STOP_SPINODAL, run_flow
from nprgflow.model import DimensionlessParams, ModelParams, harmonic_potential, sample
from nprgflow.observables import NearCriticalWarning, effective_couplings, susceptibility


def test_quadratic_reproduction():
    obs = effective_couplings(harmonic_potential(1.0))
    assert obs.omega_eff_sq == pytest.approx(1.0, rel=1e-12)
    assert abs(obs.lambda_eff) < 1e-8
    assert obs.valid and obs.chi == pytest.approx(1.0, rel=1e-12)


def test_quartic_coefficient():
    obs = effective_couplings(sample(lambda q: 0.5 * 2.0 * q**2 + 0.25 * q**4, 3.0, 301))
    assert obs.omega_eff_sq == pytest.approx(2.0, rel=1e-12)
    assert obs.lambda_eff == pytest.approx(0.25, rel=1e-8)


def test_fit_window_validation():
    grid = harmonic_potential(1.0)
    for bad in (4, 8):
        with pytest.raises(ValueError):
            effective_couplings(grid, bad)
    with pytest.raises(TypeError):
        effective_couplings(np.zeros(40))


def test_fit_and_stencil_disagreement_raises():
    # a strong q^6 term biases the three-term fit but not the stencil
    grid = sample(lambda q: 0.01 * q**2 + 1000.0 * q**6, 1.0, 101)
    with pytest.raises(InvalidObservablesError):
        effective_couplings(grid)


def test_near_critical_curvature_warns():
    with pytest.warns(NearCriticalWarning):
        obs = effective_couplings(harmonic_potential(1e-4))
    assert obs.near_critical and obs.valid


def test_spinodal_outcome_is_invalid():
    out = run_flow(DimensionlessParams(1.0, 60.0, 1e4))
    assert out.stop_reason == STOP_SPINODAL
    obs = effective_couplings(out)
    assert not obs.valid and obs.chi is None
    with pytest.raises(InvalidObservablesError):
        susceptibility(obs)


def test_fit_window_sensitivity_on_real_flow():
    out = run_flow(DimensionlessParams(1.0, 0.0, 1e4))
    values = [effective_couplings(out, w).omega_eff_sq for w in (7, 9, 13)]
    assert max(values) - min(values) < 1e-4 * values[1]


def test_susceptibility_units():
    obs = effective_couplings(harmonic_potential(4.0))
    assert susceptibility(obs) == pytest.approx(0.25, rel=1e-12)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = ModelParams(mass=2.0, hbar=1.0, omega0=3.0, lambda0=1.0, eta=0.0, cutoff=3e4)
    assert susceptibility(obs, params) == pytest.approx(0.25 / (2.0 * 9.0), rel=1e-12)
