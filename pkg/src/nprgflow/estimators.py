"""scikit-learn style wrappers around the sweep and the critical fit.

``LocalizationSusceptibility`` maps a column of dissipation strengths to chi
(NaN where the flow was censored); ``CriticalPowerLaw`` fits chi(eta) to the
critical form and predicts from it. Both compose with sklearn pipelines.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .flow import FlowSettings
from .model import DEFAULT_CUTOFF, DEFAULT_N, DEFAULT_QMAX
from .scan import eta_sweep, fit_power_law


def _eta_column(X):
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single eta column, got {X.shape[1]} columns")
        X = X[:, 0]
    return X


class LocalizationSusceptibility(TransformerMixin, BaseEstimator):
    """Stateless transformer eta -> chi at fixed coupling ``lam``."""

    def __init__(self, lam=1.0, cutoff=DEFAULT_CUTOFF, qmax=DEFAULT_QMAX, grid_n=DEFAULT_N,
                 t_max=60.0, dt=1e-3, n_jobs=1):
        self.lam = lam
        self.cutoff = cutoff
        self.qmax = qmax
        self.grid_n = grid_n
        self.t_max = t_max
        self.dt = dt
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        _eta_column(X)
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        etas = _eta_column(X)
        order = np.argsort(etas)
        unique, inverse = np.unique(etas[order], return_inverse=True)
        table = eta_sweep(self.lam, unique, FlowSettings(t_max=self.t_max, dt=self.dt),
                          qmax=self.qmax, n=self.grid_n, cutbar=self.cutoff, n_jobs=self.n_jobs)
        chi = np.array([r.chi if r.converged else np.nan for r in table.records])
        out = np.empty_like(etas)
        out[order] = chi[inverse]
        return out.reshape(-1, 1)


class CriticalPowerLaw(RegressorMixin, BaseEstimator):
    """chi = amplitude_ |eta - eta_c_|^(-gamma_) fitted by the profiled search.

    ``span`` bounds the search for eta_c above the largest fitted eta
    (default: the eta range of the data).
    """

    def __init__(self, span=None):
        self.span = span

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        if X.shape[1] != 1:
            raise ValueError(f"expected a single eta column, got {X.shape[1]} columns")
        if np.any(y <= 0):
            raise ValueError("susceptibilities must be positive")
        self.result_ = fit_power_law(X[:, 0], y, self.span)
        self.eta_c_ = self.result_.eta_c
        self.gamma_ = self.result_.gamma
        self.amplitude_ = self.result_.amplitude
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        return self.result_.predict(_eta_column(X))

    def score(self, X, y, sample_weight=None):
        """Negative RMS residual in log chi (higher is better)."""
        X, y = check_X_y(X, y, dtype=float)
        res = np.log(y) - np.log(self.predict(X))
        return -float(np.sqrt(np.average(res * res, weights=sample_weight)))
