"""Scikit-learn style front end for the closed-form solver."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .model import FactorModel
from .solver import solve_gmv_longshort, solve_lomv, verify_kkt


class LongOnlyMinVariance(BaseEstimator):
    """Long-only minimum variance portfolio under a one-factor risk model.

    The universe is passed to :meth:`fit` as an array of shape (p, 2) whose
    columns are the factor exposure (beta) and the idiosyncratic variance
    (delta2) of each asset.

    Parameters
    ----------
    sigma2 : float, default=1.0
        Variance of the common factor.

    Attributes
    ----------
    weights_ : ndarray of shape (p,)
        Optimal non-negative weights, summing to one.
    active_count_ : int
        Number of strictly positive weights.
    active_mask_ : ndarray of bool, shape (p,)
        True where the asset is held.
    threshold_beta_ : float
        Activity threshold in the canonical orientation; +inf when every
        asset is held.
    variance_ : float
        Variance of the fitted portfolio.

    Examples
    --------
    >>> import numpy as np
    >>> X = np.column_stack([[1.0, 2.0, 3.0], [1.0, 1.0, 1.0]])
    >>> est = LongOnlyMinVariance(sigma2=1.0).fit(X)
    >>> est.weights_
    array([1., 0., 0.])
    """

    def __init__(self, sigma2: float = 1.0):
        self.sigma2 = sigma2

    def fit(self, X, y=None):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != 2:
            raise ValueError(
                f"X must have shape (p, 2) with columns (beta, delta2), got {X.shape}"
            )
        model = FactorModel(self.sigma2, X[:, 0], X[:, 1])
        solution = solve_lomv(model)
        self.model_ = model
        self.solution_ = solution
        self.weights_ = solution.weights
        self.active_count_ = solution.k
        self.active_mask_ = solution.weights > 0
        self.threshold_beta_ = solution.threshold_beta
        self.variance_ = solution.variance
        self.n_features_in_ = 2
        return self

    def gmv_weights(self) -> np.ndarray:
        """Unconstrained (long-short) counterpart on the fitted universe."""
        self._check_fitted()
        return solve_gmv_longshort(self.model_)

    def kkt_certificate(self, tolerance: float = 1e-8):
        """Optimality certificate of the fitted weights."""
        self._check_fitted()
        return verify_kkt(self.model_, self.weights_, tolerance)

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError(
                "This LongOnlyMinVariance instance is not fitted yet; call fit first."
            )
