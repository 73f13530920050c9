"""scikit-learn compatible wrappers.

``DecoherenceRegressor`` fits the decoherence rate to asymmetry data and
predicts asymmetries; ``EntanglementFeatures`` maps times to entanglement
measures of the evolving singlet. Both follow the usual estimator contract
(constructor stores hyper-parameters only, ``fit`` returns ``self``, learned
state has a trailing underscore), so they can sit inside pipelines and grid
searches.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .constants import DEFAULT_CONSTANTS
from .entanglement import entanglement_report
from .evolution import KaonParams
from .fit import DEFAULT_LAMBDA_MAX, AsymmetryDataset, fit_lambda, model_asymmetry
from .observables import ZetaKind, ZetaModel

__all__ = ["DecoherenceRegressor", "EntanglementFeatures"]


def _check_times(X):
    X = check_array(X, dtype=float)
    if X.shape[1] != 2:
        raise ValueError(f"X must have two columns (t_l, t_r), got {X.shape[1]}")
    if np.any(X < 0):
        raise ValueError("times must be non-negative")
    return X


class DecoherenceRegressor(RegressorMixin, BaseEstimator):
    """Chi-square fit of the decoherence rate to measured asymmetries.

    Parameters
    ----------
    model : {"min", "sum", "single", "const"}
        zeta parameterization; see :class:`kaondecoh.observables.ZetaKind`.
    gamma_L, delta_m : float
        Kaon constants in Gamma_S units.
    lambda_max : float
        Upper edge of the rate search domain.
    dt_scale : float
        Rescaling of the time difference inside the QM asymmetry.

    Attributes
    ----------
    lambda_ : float
        Fitted rate (Gamma_S units).
    interval_ : tuple of float
        Delta chi^2 = 1 interval endpoints.
    zeta_ : float
        Fitted effective decoherence parameter.
    result_ : FitResult
        Full fit output.
    """

    def __init__(
        self,
        model="min",
        gamma_L=DEFAULT_CONSTANTS.gamma_L,
        delta_m=DEFAULT_CONSTANTS.delta_m,
        lambda_max=DEFAULT_LAMBDA_MAX,
        dt_scale=1.0,
    ):
        self.model = model
        self.gamma_L = gamma_L
        self.delta_m = delta_m
        self.lambda_max = lambda_max
        self.dt_scale = dt_scale

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.positive_only = True
        return tags

    def _params(self, lam=0.0):
        return KaonParams(gamma_L=self.gamma_L, delta_m=self.delta_m, lam=lam)

    def fit(self, X, y, sample_weight=None, sigma=None):
        """Fit on times ``X`` (columns t_l, t_r) and asymmetries ``y``.

        ``sigma`` gives per-point standard errors; ``sample_weight`` is
        interpreted as inverse variance when ``sigma`` is absent. Unit
        errors are used otherwise.
        """
        X, y = check_X_y(X, y, dtype=float, y_numeric=True)
        X = _check_times(X)
        if sigma is None:
            if sample_weight is not None:
                sample_weight = np.asarray(sample_weight, dtype=float)
                if np.any(sample_weight <= 0):
                    raise ValueError("sample weights must be positive")
                sigma = 1.0 / np.sqrt(sample_weight)
            else:
                sigma = np.ones_like(y)
        sigma = np.broadcast_to(np.asarray(sigma, dtype=float), y.shape)
        ds = AsymmetryDataset(X[:, 0], X[:, 1], y, sigma)
        self.result_ = fit_lambda(
            ds, self._params(), ZetaModel(ZetaKind(self.model)), lambda_max=self.lambda_max, dt_scale=self.dt_scale
        )
        self.lambda_ = self.result_.lambda_hat
        self.interval_ = (self.result_.lambda_err_lo, self.result_.lambda_err_hi)
        self.zeta_ = self.result_.zeta_hat
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "result_")
        X = _check_times(X)
        kind = ZetaKind(self.model)
        if kind is ZetaKind.CONSTANT:
            model, p = ZetaModel(kind, zeta=self.zeta_), self._params()
        else:
            model, p = ZetaModel(kind), self._params(self.lambda_)
        ds = AsymmetryDataset(X[:, 0], X[:, 1], np.zeros(len(X)), np.ones(len(X)))
        return model_asymmetry(ds, p, model, self.dt_scale)


class EntanglementFeatures(TransformerMixin, BaseEstimator):
    """Stateless transformer: time column -> entanglement measures.

    Output columns are given by ``columns``; any scalar field of
    :class:`kaondecoh.entanglement.EntanglementReport` may be named.
    """

    def __init__(self, lam=0.0, columns=("entropy", "loss_E", "loss_C", "zeta")):
        self.lam = lam
        self.columns = columns

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.input_tags.positive_only = True
        return tags

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        if X.shape[1] != 1:
            raise ValueError("expected a single column of times")
        if np.any(X < 0):
            raise ValueError("times must be non-negative")
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 1:
            raise ValueError("expected a single column of times")
        p = KaonParams(lam=self.lam)
        rows = []
        for t in X[:, 0]:
            rep = entanglement_report(t, p)
            rows.append([getattr(rep, c) for c in self.columns])
        return np.asarray(rows, dtype=float).reshape(len(X), len(self.columns))

    def get_feature_names_out(self, input_features=None):
        return np.asarray(self.columns, dtype=object)
