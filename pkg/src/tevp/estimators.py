"""Estimator-style wrappers around the numerical pipeline."""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .geometry import BoundarySurface
from .scatter import herglotz_fit
from .spectral import build_system_perturbed, eig_window, search_exact_eigenvalues
from ._validation import check_points


def _check_surface(X):
    if not isinstance(X, BoundarySurface):
        raise TypeError(f"expected a BoundarySurface, got {type(X).__name__}")
    return X


class GeneralizedTransmissionModes(TransformerMixin, BaseEstimator):
    """Generalized transmission eigenpairs of a boundary at one wavenumber.

    Parameters
    ----------
    kappa : float
    Q : float
    epsilon : float
        Window parameter.
    representation : {"auto", "dense", "harmonic"}

    Attributes
    ----------
    system_ : TransmissionSystem
    pairs_ : EigenPairSet
    eigenvalues_ : ndarray
        All eigenvalues of A, descending.
    multiplicity_ : int
    """

    def __init__(self, kappa=10.0, Q=2.0, epsilon=0.1, representation="auto"):
        self.kappa = kappa
        self.Q = Q
        self.epsilon = epsilon
        self.representation = representation

    def fit(self, X, y=None):
        surface = _check_surface(X)
        self.system_ = build_system_perturbed(surface, self.kappa, self.Q, representation=self.representation)
        self.pairs_ = eig_window(self.system_.A, self.epsilon, self.system_)
        self.eigenvalues_ = self.pairs_.eigenvalues
        self.multiplicity_ = self.pairs_.multiplicity
        self.surface_ = surface
        return self

    @property
    def modes_(self):
        check_is_fitted(self, "pairs_")
        if "_modes" not in self.__dict__:
            self._modes = self.pairs_.modes()
        return self._modes

    def transform(self, X, which="u"):
        """Field values of every window mode at interior points, shape (n, m)."""
        check_is_fitted(self, "pairs_")
        pts = check_points(X, self.surface_.dim)
        if not self.modes_:
            return np.zeros((len(pts), 0), dtype=complex)
        return np.column_stack([m.field(which, pts) for m in self.modes_])


class ExactEigenvalueSearch(BaseEstimator):
    """Real transmission eigenvalues of a curve in a wavenumber range.

    Attributes
    ----------
    eigenvalues_ : ndarray
    orders_ : list
        Angular order per eigenvalue on circles, ``None`` otherwise.
    events_ : list
        Logged single-layer breakdowns.
    """

    def __init__(self, Q=2.0, kappa_range=(2.0, 12.0), scan_step=None, method="auto"):
        self.Q = Q
        self.kappa_range = kappa_range
        self.scan_step = scan_step
        self.method = method

    def fit(self, X, y=None):
        surface = _check_surface(X)
        res = search_exact_eigenvalues(surface, self.Q, self.kappa_range, self.scan_step, method=self.method)
        self.eigenvalues_ = np.array(res.values)
        self.orders_ = list(res.orders)
        self.residuals_ = np.array(res.residuals)
        self.events_ = list(res.events)
        return self


class HerglotzRegressor(RegressorMixin, BaseEstimator):
    """Tikhonov-regularized Herglotz-wave fit of sampled field values.

    Parameters
    ----------
    kappa : float
    n_directions : int
    alpha : float
        Tikhonov parameter.
    """

    def __init__(self, kappa=1.0, n_directions=32, alpha=1e-8):
        self.kappa = kappa
        self.n_directions = n_directions
        self.alpha = alpha

    def fit(self, X, y, sample_weight=None):
        pts = check_points(X, 2)
        self.density_ = herglotz_fit(pts, y, self.kappa, self.n_directions, self.alpha, weights=sample_weight)
        self.eps_fit_ = self.density_.eps_fit
        return self

    def predict(self, X):
        check_is_fitted(self, "density_")
        return self.density_.value(check_points(X, 2))

    def score(self, X, y, sample_weight=None):
        """Complex coefficient of determination ``1 - SS_res / SS_tot``."""
        y = np.asarray(y, dtype=complex)
        w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        res = np.sum(w * np.abs(self.predict(X) - y) ** 2)
        tot = np.sum(w * np.abs(y - np.average(y, weights=w)) ** 2)
        return float(1.0 - res / tot) if tot > 0 else 0.0
