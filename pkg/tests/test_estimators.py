import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from inls.classifier import ABOVE, BLOWUP, SCATTER
from inls.estimators import DichotomyEstimator, RegionClassifier

from conftest import GRAD_B1, THRESHOLD_B1


def test_region_classifier_predicts_regions():
    X = np.array([
        [(0.9**2 / 2 - 0.9**4 / 4) * GRAD_B1, 0.81 * GRAD_B1],
        [(1.1**2 / 2 - 1.1**4 / 4) * GRAD_B1, 1.21 * GRAD_B1],
        [THRESHOLD_B1 + 1.0, 1.0],
    ])
    clf = RegionClassifier(b=1.0).fit(X)
    assert list(clf.predict(X)) == [SCATTER, BLOWUP, ABOVE]
    assert set(clf.classes_) == {SCATTER, BLOWUP, ABOVE}
    margins = clf.transform(X)
    assert margins.shape == (3, 2)
    assert margins[0, 1] == pytest.approx(0.19 * GRAD_B1)
    assert clf.n_features_in_ == 2


def test_params_and_clone():
    clf = RegionClassifier(b=0.5, family="Rational", family_params={"a": 1.0, "d": 0.0, "c": 1.0})
    assert clf.get_params() == {"b": 0.5, "family": "Rational", "family_params": {"a": 1.0, "d": 0.0, "c": 1.0}}
    twin = clone(clf).set_params(b=0.7)
    assert twin.b == 0.7 and clf.b == 0.5
    assert not hasattr(twin, "report_")


def test_unfitted_and_bad_input():
    with pytest.raises(NotFittedError):
        RegionClassifier().predict([[1.0, 1.0]])
    clf = RegionClassifier().fit()
    with pytest.raises(ValueError):
        clf.predict([[np.nan, 1.0]])
    with pytest.raises(ValueError):
        clf.predict([[1.0, 2.0, 3.0]])


def test_dichotomy_estimator_requires_scaled_profile():
    base = {"coefficient": {"b": 1.0}, "initial": {"profile": "Gaussian"}, "grid": {"r_max": 10.0, "n": 63}}
    with pytest.raises(ValueError):
        DichotomyEstimator(base).fit()
    with pytest.raises(ValueError):
        DichotomyEstimator().fit()
    with pytest.raises(NotFittedError):
        DichotomyEstimator(base).predict([[1.0, 1.0]])


def test_dichotomy_estimator_runs_rows():
    base = {
        "coefficient": {"b": 1.0},
        "initial": {"profile": "ScaledGroundState", "taper": 5.0, "taper_width": 10.0},
        "grid": {"r_max": 40.0, "n": 511},
        "controls": {"dt0": 0.002, "t_end": 0.02},
    }
    est = DichotomyEstimator(base).fit()
    runs = est.run([[0.5, 1.0], [2.0, 1.0]])
    assert [r.assessment.region for r in runs] == [SCATTER, BLOWUP]
    assert len(est.predict([[0.5, 1.0]])) == 1
