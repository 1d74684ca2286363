import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from tevp.estimators import ExactEigenvalueSearch, GeneralizedTransmissionModes, HerglotzRegressor
from tevp.geometry import circle, ellipse
from tevp.oracle import radial_eigenvalues
from tevp.scatter import HerglotzDensity, direction_grid, interior_fit_grid


def test_params_round_trip():
    est = GeneralizedTransmissionModes(kappa=12.0, Q=3.0, epsilon=0.2)
    assert est.get_params()["epsilon"] == 0.2
    c = clone(est).set_params(kappa=5.0)
    assert c.kappa == 5.0 and est.kappa == 12.0


def test_modes_estimator_on_circle():
    est = GeneralizedTransmissionModes(kappa=10.0, Q=2.0, epsilon=0.1).fit(circle(1.0, 256))
    assert est.multiplicity_ == len(est.modes_) > 0
    assert np.all(np.diff(est.eigenvalues_) <= 1e-12)
    pts = np.array([[0.1, 0.2], [-0.3, 0.0]])
    assert est.transform(pts).shape == (2, est.multiplicity_)


def test_modes_estimator_dense_fields():
    est = GeneralizedTransmissionModes(kappa=6.0, Q=2.0, epsilon=0.2).fit(ellipse(1.0, 0.7, 128))
    vals = est.transform(np.array([[0.0, 0.0], [0.2, 0.1]]), which="v")
    assert vals.shape == (2, est.multiplicity_)
    assert np.all(np.isfinite(vals))


def test_not_fitted():
    with pytest.raises(NotFittedError):
        GeneralizedTransmissionModes().transform(np.zeros((1, 2)))
    with pytest.raises(TypeError):
        GeneralizedTransmissionModes().fit(np.zeros((3, 2)))


def test_exact_search_estimator():
    est = ExactEigenvalueSearch(Q=2.0, kappa_range=(2.0, 6.0)).fit(circle(1.0, 128))
    ref = radial_eigenvalues(2, 1.0, 2.0, (2.0, 6.0))
    assert len(est.eigenvalues_) == len(ref)
    assert np.allclose(est.eigenvalues_, [k for _, k in ref], atol=1e-6)
    assert est.orders_ == [n for n, _ in ref]


def test_herglotz_regressor():
    pts, w = interior_fit_grid(circle(1.0, 64))
    dirs, dw = direction_grid(24)
    rng = np.random.default_rng(0)
    target = HerglotzDensity(3.0, dirs, dw, rng.normal(size=24) + 1j * rng.normal(size=24)).value(pts)
    reg = HerglotzRegressor(kappa=3.0, n_directions=24, alpha=1e-14).fit(pts, target, sample_weight=w)
    assert reg.eps_fit_ <= 1e-7
    assert reg.score(pts, target, sample_weight=w) == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(reg.predict(pts), target, atol=1e-6)
