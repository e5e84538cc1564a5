"""Problem instances for the single-factor covariance model.

The covariance of asset returns is ``sigma2 * outer(betas, betas) + diag(delta2s)``:
a rank-one common-factor term plus strictly positive idiosyncratic variances.
Everything downstream (solver, simulation, diagnostics) works on a canonical
form of the instance: betas oriented so that sum(beta/delta2) >= 0, assets
sorted by beta ascending, and the two prefix-sum arrays the solver needs
accumulated in extended precision.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._validation import (
    as_1d_float_array,
    require_all_finite,
    require_index,
    require_positive_scalar,
)

#: Largest p for which the dense covariance may be materialized.
DENSE_MATERIALIZATION_CAP = 2000


@dataclass(frozen=True, eq=False)
class FactorModel:
    """A p-asset instance of the one-factor covariance model.

    Parameters
    ----------
    sigma2 : float
        Variance of the common factor, strictly positive.
    betas : array-like, shape (p,)
        Factor exposures; any sign, but not all zero.
    delta2s : array-like, shape (p,)
        Idiosyncratic variances, strictly positive.
    """

    sigma2: float
    betas: np.ndarray
    delta2s: np.ndarray

    def __post_init__(self):
        betas = as_1d_float_array("betas", self.betas)
        delta2s = as_1d_float_array("delta2s", self.delta2s)
        if betas.size == 0:
            raise ValueError("an instance needs at least one asset")
        if betas.size != delta2s.size:
            raise ValueError(
                f"betas and delta2s must have equal length, got {betas.size} != {delta2s.size}"
            )
        sigma2 = require_positive_scalar("sigma2", self.sigma2)
        require_all_finite("betas", betas)
        require_all_finite("delta2s", delta2s)
        if not np.all(delta2s > 0.0):
            raise ValueError("delta2s must be strictly positive")
        if not np.any(betas != 0.0):
            raise ValueError("betas must not be all zero")
        betas.setflags(write=False)
        delta2s.setflags(write=False)
        object.__setattr__(self, "sigma2", sigma2)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "delta2s", delta2s)

    @property
    def p(self) -> int:
        return self.betas.size


@dataclass(frozen=True, eq=False)
class SortedModel:
    """Canonically oriented, beta-sorted instance with prefix sums.

    ``base`` is the instance after orientation and sorting.  ``perm`` maps
    sorted position -> original asset index.  ``prefix_s1[i]`` accumulates
    beta_j/delta2_j and ``prefix_s2[i]`` accumulates beta_j^2/delta2_j over
    sorted positions j <= i, both in 80-bit extended precision: the solver
    decides the active cut from near-zero differences of these sums.
    ``flipped`` records whether the betas were negated.
    """

    base: FactorModel
    perm: np.ndarray
    prefix_s1: np.ndarray
    prefix_s2: np.ndarray
    flipped: bool

    def __post_init__(self):
        for name in ("perm", "prefix_s1", "prefix_s2"):
            arr = getattr(self, name)
            if arr.shape != (self.base.p,):
                raise ValueError(f"{name} must have shape ({self.base.p},)")
            arr.setflags(write=False)

    @property
    def p(self) -> int:
        return self.base.p


def canonicalize(model: FactorModel) -> SortedModel:
    """Orient and sort an instance, accumulating the solver's prefix sums.

    Negates every beta when sum(beta/delta2) < 0 (an exact zero keeps the
    orientation), sorts by beta ascending with a stable sort so tied betas
    keep their input order, and computes both prefix-sum arrays in one pass.
    The orientation test uses an exactly rounded float sum so the flip
    decision is deterministic.
    """

    ratios = model.betas / model.delta2s
    flipped = math.fsum(ratios) < 0.0
    betas = -model.betas if flipped else model.betas
    perm = np.argsort(betas, kind="stable")
    sorted_betas = betas[perm]
    sorted_delta2s = model.delta2s[perm]
    ratio_ext = sorted_betas.astype(np.longdouble) / sorted_delta2s
    prefix_s1 = np.cumsum(ratio_ext)
    prefix_s2 = np.cumsum(sorted_betas * ratio_ext)
    base = FactorModel(model.sigma2, sorted_betas, sorted_delta2s)
    return SortedModel(
        base=base, perm=perm, prefix_s1=prefix_s1, prefix_s2=prefix_s2, flipped=flipped
    )


@dataclass(frozen=True, eq=False)
class CovarianceView:
    """On-demand view of the covariance matrix implied by an instance.

    Entries are sigma2*beta_i*beta_j + delta2_i*[i==j].  The matrix is
    symmetric positive definite but is never formed densely above
    ``dense_cap`` assets; use the factor structure instead at scale.
    """

    model: "FactorModel | SortedModel"
    dense_cap: int = DENSE_MATERIALIZATION_CAP

    def _factor(self) -> FactorModel:
        if isinstance(self.model, SortedModel):
            return self.model.base
        return self.model

    @property
    def p(self) -> int:
        return self._factor().p

    def entry(self, i: int, j: int) -> float:
        m = self._factor()
        i = require_index("i", i, m.p)
        j = require_index("j", j, m.p)
        value = m.sigma2 * m.betas[i] * m.betas[j]
        if i == j:
            value += m.delta2s[i]
        return float(value)

    def materialize(self) -> np.ndarray:
        """Dense covariance matrix; refuses instances above ``dense_cap``."""
        m = self._factor()
        if m.p > self.dense_cap:
            raise ValueError(
                f"refusing to materialize a {m.p}x{m.p} covariance (cap {self.dense_cap})"
            )
        sigma = m.sigma2 * np.outer(m.betas, m.betas)
        sigma[np.diag_indices(m.p)] += m.delta2s
        return sigma


def covariance_entry(view: CovarianceView, i: int, j: int) -> float:
    """Single covariance entry sigma2*beta_i*beta_j + delta2_i*[i==j]."""
    return view.entry(i, j)
