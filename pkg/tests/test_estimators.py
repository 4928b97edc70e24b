import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from nprgflow.estimators import CriticalPowerLaw, LocalizationSusceptibility


def synthetic(n=20):
    eta = np.linspace(0.0, 6.5, n)
    return eta.reshape(-1, 1), 2.0 * (7.0 - eta) ** -1.5


def test_power_law_regressor():
    X, y = synthetic()
    model = CriticalPowerLaw().fit(X, y)
    assert model.eta_c_ == pytest.approx(7.0, rel=1e-6)
    assert model.gamma_ == pytest.approx(1.5, rel=1e-6)
    assert model.amplitude_ == pytest.approx(2.0, rel=1e-6)
    assert np.allclose(model.predict(X), y, rtol=1e-6)
    assert model.score(X, y) > -1e-6


def test_regressor_params_and_clone():
    model = CriticalPowerLaw(span=3.0)
    assert model.get_params() == {"span": 3.0}
    copy = clone(model)
    assert copy.span == 3.0 and not hasattr(copy, "result_")
    with pytest.raises(NotFittedError):
        copy.predict([[1.0]])


def test_regressor_input_validation():
    X, y = synthetic()
    with pytest.raises(ValueError):
        CriticalPowerLaw().fit(X, -y)
    with pytest.raises(ValueError):
        CriticalPowerLaw().fit(np.hstack([X, X]), y)


def test_susceptibility_transformer():
    est = LocalizationSusceptibility(lam=1.0)
    out = est.fit_transform(np.array([[60.0], [0.0], [60.0]]))
    assert out.shape == (3, 1)
    assert np.isnan(out[0, 0]) and np.isnan(out[2, 0])
    assert out[1, 0] == pytest.approx(1.0 / 2.2559, rel=1e-4)
    with pytest.raises(NotFittedError):
        LocalizationSusceptibility().transform([[0.0]])


def test_pipeline_composition():
    pipe = make_pipeline(LocalizationSusceptibility(lam=1.0, t_max=40.0))
    assert pipe.get_params()["localizationsusceptibility__t_max"] == 40.0
