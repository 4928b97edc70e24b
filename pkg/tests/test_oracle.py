import numpy as np
import pytest

from nprgflow.errors import BoxTooSmallError, InvalidParameterError, UnstableDifferenceError
from nprgflow.oracle import SpectralSettings, diagonalize, exact_susceptibility, spectral_result

# frozen from diagonalize / exact_susceptibility at the default settings
GAP = {1.0: 1.5057717049090777, 0.5: 1.0884415977362032, 0.3: 0.8166424419552207}
CHI = {1.0: 0.43353683496412837, 0.5: 0.8245310853176532, 0.3: 1.4497825971451819}


def harmonic(omega_sq):
    return lambda q: 0.5 * omega_sq * q**2


def test_harmonic_levels():
    levels = diagonalize(1.0, potential=harmonic(1.0)).eigenvalues
    # h^4 discretization error grows with the level index
    assert levels == pytest.approx([0.5, 1.5, 2.5, 3.5], abs=5e-9)


@pytest.mark.parametrize("omega_sq", [1.0, 4.0])
def test_harmonic_susceptibility(omega_sq):
    assert exact_susceptibility(1.0, potential=harmonic(omega_sq)) == pytest.approx(1.0 / omega_sq, rel=1e-8)


@pytest.mark.parametrize("lam", sorted(GAP))
def test_double_well_frozen_values(lam):
    result = spectral_result(lam)
    assert result.gap == pytest.approx(GAP[lam], rel=1e-10)
    assert result.chi_exact == pytest.approx(CHI[lam], rel=1e-8)
    assert result.ground < result.eigenvalues[1]


def test_gap_converged_under_refinement():
    fine = diagonalize(1.0, settings=SpectralSettings(box=10.0, points=4096)).gap
    assert fine == pytest.approx(GAP[1.0], rel=1e-6)


def test_deterministic():
    a = diagonalize(0.5).eigenvalues
    b = diagonalize(0.5).eigenvalues
    assert np.array_equal(a, b)


def test_box_checks():
    with pytest.raises(InvalidParameterError):
        diagonalize(0.1, settings=SpectralSettings(box=3.0))
    with pytest.raises(BoxTooSmallError):
        diagonalize(0.1, settings=SpectralSettings(box=3.3))


def test_unstable_tilt_difference():
    # a tilt comparable to the tunnelling splitting is far outside the linear regime
    with pytest.raises(UnstableDifferenceError):
        exact_susceptibility(0.1, SpectralSettings(tilt=0.05))


@pytest.mark.parametrize("kwargs", [dict(box=0.0), dict(points=100), dict(tilt=0.0), dict(eigencount=1)])
def test_settings_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        SpectralSettings(**kwargs)
