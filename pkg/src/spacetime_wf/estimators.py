"""Estimator-style wrappers (fit / predict / decision_function) around the detectors.

Parameters live in ``__init__`` and are exposed through ``get_params`` /
``set_params`` in the scikit-learn convention, without depending on it.
``fit`` stores the field under test; rows of X are query points.
"""
from __future__ import annotations

import inspect

import numpy as np

from .quantization.decay import DEFAULT_THRESHOLD
from .wavefront import WFQuery, dyadic, predict_points, test_hwf, test_qhwf, verify_correspondence, _map


class ParamsMixin:
    @classmethod
    def _param_names(cls):
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep=True):
        return {k: getattr(self, k) for k in self._param_names()}

    def set_params(self, **params):
        for k, v in params.items():
            if k not in self._param_names():
                raise ValueError(f"invalid parameter {k!r} for {type(self).__name__}")
            setattr(self, k, v)
        return self

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"

    def _check_fitted(self, attr):
        if not hasattr(self, attr):
            raise RuntimeError(f"{type(self).__name__} is not fitted; call fit first")


class HWFDetector(ParamsMixin):
    """Homogeneous wave front test of a GridField1D; X rows are (y, eta)."""

    def __init__(self, radius=0.5, shape=0.08, h_values=dyadic(2, 7), threshold=DEFAULT_THRESHOLD, jobs=1):
        self.radius, self.shape, self.h_values, self.threshold, self.jobs = radius, shape, h_values, threshold, jobs

    def fit(self, phi, y=None):
        self.phi_ = phi
        return self

    def _query(self, row):
        return WFQuery(tuple(row), self.radius, self.shape, self.h_values, self.threshold)

    def reports(self, X):
        self._check_fitted("phi_")
        rows = np.atleast_2d(np.asarray(X, dtype=float))
        self.reports_ = _map(lambda r: test_hwf(self.phi_, self._query(r)), list(rows), self.jobs)
        return self.reports_

    def decision_function(self, X):
        """Fitted decay slopes (large means regular)."""
        return np.array([r.slope for r in self.reports(X)])

    def predict(self, X):
        """True where the query point is detected singular (slope below threshold)."""
        return np.array([not r.rapid for r in self.reports(X)])


class QHWFDetector(ParamsMixin):
    """Quasi-homogeneous test of a SpacetimeField; X rows are (s, y, eta) or (s, y, sigma, eta)."""

    def __init__(self, radius=0.5, shape=0.08, h_values=dyadic(2, 7), threshold=DEFAULT_THRESHOLD, theta=2,
                 mode="full", field=None, jobs=1):
        self.radius, self.shape, self.h_values, self.threshold = radius, shape, h_values, threshold
        self.theta, self.mode, self.field, self.jobs = theta, mode, field, jobs

    def fit(self, u, y=None):
        self.u_ = u
        return self

    def _query(self, row):
        p = tuple(row) if len(row) == 4 else (row[0], row[1], None, row[2])
        return WFQuery(p, self.radius, self.shape, self.h_values, self.threshold, self.theta)

    def reports(self, X):
        self._check_fitted("u_")
        rows = [tuple(r) for r in np.atleast_2d(np.asarray(X, dtype=float))]
        self.reports_ = _map(lambda r: test_qhwf(self.u_, self._query(r), self.field, self.mode), rows, self.jobs)
        return self.reports_

    def decision_function(self, X):
        return np.array([r.slope for r in self.reports(X)])

    def predict(self, X):
        return np.array([not r.rapid for r in self.reports(X)])


class ScatteringMap(ParamsMixin):
    """(s, y, eta) -> (x_pm, xi_pm); the sign follows pm s < 0 unless ``direction`` is set."""

    def __init__(self, field=None, direction=None, tol=1e-10):
        self.field, self.direction, self.tol = field, direction, tol

    def fit(self, X=None, y=None):
        if self.field is None:
            raise ValueError("ScatteringMap needs a field")
        self.fitted_ = True
        return self

    def transform(self, X):
        self._check_fitted("fitted_")
        preds = predict_points(self.field, np.atleast_2d(X), "perturbed->free", direction=self.direction,
                               tol=self.tol)
        return np.array([[p.point[1], p.point[3]] for p in preds])


class CorrespondenceVerifier(ParamsMixin):
    """verify_correspondence as an estimator; ``score`` is the agreement rate."""

    def __init__(self, relation="free-initial", field=None, query=None, paired_query=None, r=None, hwf_set=None,
                 jobs=1):
        self.relation, self.field, self.query, self.paired_query = relation, field, query, paired_query
        self.r, self.hwf_set, self.jobs = r, hwf_set, jobs

    def fit(self, phi, u=None, u_free=None):
        self.phi_, self.u_, self.u_free_ = phi, u, u_free
        return self

    def verify(self, X):
        self._check_fitted("phi_")
        self.report_ = verify_correspondence(self.phi_, np.atleast_2d(X), self.relation, field=self.field,
                                             u=self.u_, u_free=self.u_free_, hwf_set=self.hwf_set,
                                             query=self.query, paired_query=self.paired_query, r=self.r,
                                             jobs=self.jobs)
        return self.report_

    def predict(self, X):
        """Predicted singular status per row (None where the point errored)."""
        return np.array([r.predicted_singular for r in self.verify(X).records], dtype=object)

    def score(self, X, y=None):
        return self.verify(X).agreement
