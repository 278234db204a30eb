"""scikit-learn transformer over chart points.

Maps rows of chart coordinates ``(n_samples, m)`` to per-point scalar
invariants, so the geometry pipeline composes with ``Pipeline`` and
``FunctionTransformer`` like any other feature extractor.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import quadrature
from .catalog import resolve
from .errors import ConfigError

DEFAULT_FEATURES = ("energy_density", "mean_curvature_norm", "tau_norm2", "trace_S2")


class GeometryFeatures(TransformerMixin, BaseEstimator):
    """Per-point fields (see ``quadrature.FIELDS``) of an immersion at chart points.

    Parameters
    ----------
    immersion : catalog name or definition-file path.
    params : parameter overrides for catalog entries.
    features : field ids to emit, one output column each.
    volume_weighted : multiply every column by the volume density sqrt(det g).
    """

    def __init__(self, immersion="sphere", params=None, features=DEFAULT_FEATURES, volume_weighted=False):
        self.immersion = immersion
        self.params = params
        self.features = features
        self.volume_weighted = volume_weighted

    def fit(self, X, y=None):
        spec = resolve(self.immersion, self.params)
        unknown = [f for f in self.features if f not in quadrature.FIELDS]
        if unknown:
            raise ConfigError(f"unknown feature(s) {unknown}")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != spec.m:
            raise ValueError(f"expected {spec.m} chart coordinates per row, got {X.shape[1]}")
        self.spec_ = spec
        self.n_features_in_ = spec.m
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} chart coordinates per row, got {X.shape[1]}")
        vals = quadrature.evaluate_fields(self.spec_, list(self.features), X)
        out = np.column_stack([np.asarray(vals[f], dtype=float) for f in self.features])
        if self.volume_weighted:
            out = out * vals["_vol"][:, None]
        return out

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "spec_")
        return np.asarray(list(self.features), dtype=object)
