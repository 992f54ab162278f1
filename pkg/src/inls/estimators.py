"""scikit-learn style wrappers around the classifier and the scenario harness.

``RegionClassifier`` maps rows ``(E_g(phi), |grad phi|^2)`` to threshold
regions; ``DichotomyEstimator`` runs full scenarios for rows ``(c, lam)`` of
scaled ground-state data and predicts verdicts. Both follow the usual
``fit`` / ``predict`` / ``transform`` / ``get_params`` conventions.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .classifier import ABOVE, BLOWUP, SCATTER, assess_region
from .coefficient import ProblemParams, check_conditions, make_coefficient
from .config import RunConfig
from .groundstate import build_ground_state


class RegionClassifier(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Threshold region of initial data from its energy and gradient norm.

    Parameters
    ----------
    b : float
        Singularity exponent in (0, 4/3).
    family : str
        Coefficient family name.
    family_params : dict or None
        Extra parameters of the family (``a``, ``d``, ``c``).
    """

    def __init__(self, b=1.0, family="PurePower", family_params=None):
        self.b = b
        self.family = family
        self.family_params = family_params

    def fit(self, X=None, y=None):
        params = ProblemParams(self.b)
        coef = make_coefficient(self.family, self.family_params, params)
        self.report_ = check_conditions(coef, params)
        self.ground_state_ = build_ground_state(params)
        self.classes_ = np.array([SCATTER, BLOWUP, ABOVE])
        if X is not None:
            self.n_features_in_ = check_array(X).shape[1]
        return self

    def _assess(self, X):
        check_is_fitted(self, "ground_state_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(f"expected 2 columns (energy, grad_norm_sq), got {X.shape[1]}")
        g = self.report_.gs_eff
        return [assess_region(e, g * k, self.ground_state_) for e, k in X]

    def predict(self, X):
        return np.array([a.region for a in self._assess(X)])

    def transform(self, X):
        """Signed margins ``(threshold_E - E, threshold_K - kinetic)`` per row."""
        return np.array([[a.margins["energy"], a.margins["kinetic"]] for a in self._assess(X)])


class DichotomyEstimator(BaseEstimator):
    """Predicts run verdicts for scaled ground-state data ``c * lam**0.5 * Q_b(lam r)``.

    ``base_config`` is a config mapping (same schema as the INI files) whose
    ``initial.profile`` must be ``ScaledGroundState``; each row of ``X`` sets
    ``c`` and ``lam``. Runs are not written to disk.
    """

    def __init__(self, base_config=None, refine=False):
        self.base_config = base_config
        self.refine = refine

    def fit(self, X=None, y=None):
        if self.base_config is None:
            raise ValueError("base_config is required")
        cfg = RunConfig.from_dict(self.base_config)
        if cfg.get("initial", "profile") != "ScaledGroundState":
            raise ValueError("base_config must use the ScaledGroundState profile")
        self.config_ = cfg
        return self

    def run(self, X):
        """Full run records, one per row."""
        from .harness import run_scenario

        check_is_fitted(self, "config_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 2:
            raise ValueError("expected 2 columns (c, lam)")
        return [
            run_scenario(self.config_.with_updates({"initial": {"c": float(c), "lam": float(lam)}}),
                         write=False, refine=self.refine)
            for c, lam in X
        ]

    def predict(self, X):
        return np.array([r.verdict.kind for r in self.run(X)])
