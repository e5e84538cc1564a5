"""Closed-form long-only minimum variance solver.

After canonical orientation and sorting, the active assets of the long-only
minimum variance portfolio form a prefix of the beta-sorted universe.  The
prefix length is read off a computable sequence

    R_1 = 1/sigma2,
    R_{i+1} = R_i + (beta_i - beta_{i+1}) * C_i,      C_i = sum_{j<=i} beta_j/delta2_j,

which rises to a single peak and then falls, crossing zero at most once;
the active count k is the last index with R > 0.  The weights on the active
prefix then come from a rank-one (Woodbury) expression in O(k), and a
Karush-Kuhn-Tucker certificate can re-verify any candidate weights in O(p).

The telescoping recurrence above is used verbatim: each floating-point
increment has the exact sign of (beta_i - beta_{i+1}) * C_i, so the computed
sequence is unimodal and single-crossing *exactly*, not just approximately.
"""

import math
from dataclasses import dataclass

import numpy as np

from .model import FactorModel, SortedModel, canonicalize


class NumericalBreakdownError(RuntimeError):
    """Computed active weights were not strictly positive.

    Indicates floating-point breakdown on a knife-edge instance, not an
    invalid model; the KKT certificate is the arbiter in such cases.
    """


@dataclass(frozen=True, eq=False)
class RSequence:
    """The decision sequence of a sorted instance.

    ``values[i]`` holds R_{i+1} in 80-bit extended precision.  ``peak_index``
    is the first position whose beta/delta2 prefix sum is positive (the
    sequence is non-decreasing up to it and non-increasing after), clamped to
    the last position when no prefix sum is positive.  ``cross_index`` is the
    last position with a strictly positive value; the active count is
    ``cross_index + 1``.
    """

    values: np.ndarray
    peak_index: int
    cross_index: int

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def active_count(self) -> int:
        return self.cross_index + 1


def compute_r_sequence(sm: SortedModel) -> RSequence:
    """Evaluate the decision sequence of a canonical instance.

    O(p) prefix work plus an O(log p) bisection for the zero crossing on the
    non-increasing tail.  Positivity tests are exact comparisons: no
    tolerance band is applied (a tolerance would perturb the active count on
    knife-edge instances unpredictably).
    """

    p = sm.p
    first = np.longdouble(1.0) / np.longdouble(sm.base.sigma2)
    values = np.empty(p, dtype=np.longdouble)
    values[0] = first
    if p > 1:
        b = sm.base.betas.astype(np.longdouble)
        increments = (b[:-1] - b[1:]) * sm.prefix_s1[:-1]
        values[1:] = first + np.cumsum(increments)
    positive_prefix = np.nonzero(sm.prefix_s1 > 0)[0]
    peak_index = int(positive_prefix[0]) if positive_prefix.size else p - 1
    cross_index = _cross_index_bisect(values, peak_index)
    return RSequence(values=values, peak_index=peak_index, cross_index=cross_index)


def _cross_index_bisect(values: np.ndarray, peak_index: int) -> int:
    """Last strictly positive position, found on the non-increasing tail."""
    last = values.size - 1
    if values[last] > 0:
        return last
    lo, hi = peak_index, last  # values[lo] > 0 >= values[hi] maintained below
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if values[mid] > 0:
            lo = mid
        else:
            hi = mid
    return lo

def _cross_index_linear(values: np.ndarray) -> int:
    # Reference implementation kept to test the bisection path against.
    return int(np.nonzero(values > 0)[0][-1])


@dataclass(frozen=True, eq=False)
class LomvSolution:
    """Solution of the long-only problem.

    ``weights`` are in original asset order, non-negative, summing to one,
    with exactly ``k`` strictly positive entries.  ``threshold_beta`` is the
    activity threshold in the canonical orientation (an asset is active iff
    its oriented beta lies strictly below it); it is +inf when every asset
    is active.  ``variance`` is the portfolio variance w'Sigma w.
    """

    k: int
    weights: np.ndarray
    threshold_beta: float
    variance: float
    active_original_indices: frozenset

    def __post_init__(self):
        self.weights.setflags(write=False)


def portfolio_variance(model: FactorModel, weights: np.ndarray) -> float:
    """w'Sigma w via the factor decomposition sigma2*(b'w)^2 + sum(delta2*w^2)."""
    exposure = float(model.betas @ weights)
    idio = float(np.sum(model.delta2s * weights * weights))
    return model.sigma2 * exposure * exposure + idio


def _active_prefix_sums(sm: SortedModel, k: int):
    """(B, C) for the prefix of length k: B = 1/sigma2 + sum b^2/d2, C = sum b/d2."""
    big_b = np.longdouble(1.0) / np.longdouble(sm.base.sigma2) + sm.prefix_s2[k - 1]
    big_c = sm.prefix_s1[k - 1]
    return big_b, big_c


def solve_lomv(model: FactorModel) -> LomvSolution:
    """Exact long-only minimum variance portfolio of a one-factor instance.

    Canonicalizes, computes the decision sequence, takes the active count
    from its zero crossing, and evaluates the active weights from the
    rank-one inverse expression w_i ~ (1/delta2_i)*(1 - beta_i*C/B),
    normalized to sum one.  Runs in O(p log p) (the sort dominates).

    Raises
    ------
    NumericalBreakdownError
        If a computed active weight is not strictly positive, which signals
        numerical breakdown rather than an invalid instance.
    """

    sm = canonicalize(model)
    rseq = compute_r_sequence(sm)
    return solve_from_sequence(model, sm, rseq)


def solve_from_sequence(
    model: FactorModel, sm: SortedModel, rseq: RSequence
) -> LomvSolution:
    """Finish a solve from a precomputed canonical form and decision sequence."""
    p = sm.p
    k = rseq.active_count
    big_b, big_c = _active_prefix_sums(sm, k)
    if k < p:
        if not big_c > 0:
            raise NumericalBreakdownError(
                "active-prefix sum C is not positive although k < p"
            )
        threshold = float(big_b / big_c)
    else:
        threshold = math.inf

    inv_d2 = np.longdouble(1.0) / sm.base.delta2s[:k].astype(np.longdouble)
    shrink = big_c / big_b
    raw = inv_d2 * (np.longdouble(1.0) - sm.base.betas[:k] * shrink)
    if not np.all(raw > 0):
        raise NumericalBreakdownError(
            "computed active weights are not strictly positive; "
            "re-check the instance with verify_kkt"
        )
    active = np.asarray(raw / raw.sum(), dtype=float)

    weights = np.zeros(p)
    weights[sm.perm[:k]] = active
    return LomvSolution(
        k=k,
        weights=weights,
        threshold_beta=threshold,
        variance=portfolio_variance(model, weights),
        active_original_indices=frozenset(int(i) for i in sm.perm[:k]),
    )


def solve_gmv_longshort(model: FactorModel) -> np.ndarray:
    """Unconstrained (long-short) minimum variance weights, O(p).

    Evaluates Sigma^{-1} 1 through the rank-one inverse identity, so no
    dense matrix is formed; entries may be negative.  Weights sum to one.
    """

    betas = model.betas.astype(np.longdouble)
    inv_d2 = np.longdouble(1.0) / model.delta2s.astype(np.longdouble)
    big_b = np.longdouble(1.0) / np.longdouble(model.sigma2) + np.sum(betas * betas * inv_d2)
    big_c = np.sum(betas * inv_d2)
    raw = inv_d2 * (np.longdouble(1.0) - betas * (big_c / big_b))
    total = raw.sum()
    if not total > 0:
        raise NumericalBreakdownError("1'Sigma^{-1}1 evaluated non-positive")
    return np.asarray(raw / total, dtype=float)


def threshold_beta(solution: LomvSolution, sm: SortedModel) -> float:
    """Activity threshold of a solution: active iff oriented beta < threshold.

    Returns +inf when every asset is active (covers both the degenerate
    C = 0 case and an unconstrained solution that is already long-only).
    """

    if solution.k == sm.p:
        return math.inf
    big_b, big_c = _active_prefix_sums(sm, solution.k)
    return float(big_b / big_c)


@dataclass(frozen=True)
class KktCertificate:
    """Numerical optimality certificate for candidate long-only weights.

    The multiplier nu is reconstructed as -2*w'Sigma w and the inequality
    multipliers as lambda = 2*Sigma w + nu*1; a PASS requires the residuals
    within tolerance and both minima above -tolerance.  A FAIL verdict is
    data about the candidate, not an error.
    """

    stationarity_residual: float
    complementarity_residual: float
    min_lambda: float
    min_weight: float
    budget_residual: float
    nu: float
    tolerance: float
    passed: bool


def verify_kkt(
    model: FactorModel, weights, tolerance: float = 1e-8
) -> KktCertificate:
    """Check candidate weights against the first-order optimality system.

    Sigma w is evaluated through the factor structure in O(p); no dense
    covariance is formed at any size.
    """

    w = np.asarray(weights, dtype=float)
    if w.shape != (model.p,):
        raise ValueError(f"weights must have shape ({model.p},), got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    tol = float(tolerance)

    exposure = float(model.betas @ w)
    sigma_w = model.sigma2 * exposure * model.betas + model.delta2s * w
    variance = model.sigma2 * exposure * exposure + float(
        np.sum(model.delta2s * w * w)
    )
    nu = -2.0 * variance
    lam = 2.0 * sigma_w + nu

    stationarity = float(np.max(np.abs(2.0 * sigma_w - lam + nu)))
    complementarity = float(np.max(np.abs(lam * w)))
    min_lambda = float(lam.min())
    min_weight = float(w.min())
    budget = abs(float(w.sum()) - 1.0)
    passed = (
        stationarity <= tol
        and complementarity <= tol
        and budget <= tol
        and min_lambda >= -tol
        and min_weight >= -tol
    )
    return KktCertificate(
        stationarity_residual=stationarity,
        complementarity_residual=complementarity,
        min_lambda=min_lambda,
        min_weight=min_weight,
        budget_residual=budget,
        nu=nu,
        tolerance=tol,
        passed=passed,
    )


def extend_universe(
    model: FactorModel, new_betas, new_delta2s
) -> LomvSolution:
    """Solve the instance enlarged by extra assets.

    When every appended beta is >= the first inactive beta of the original
    solution, the active set and its weights are unchanged (the enlarged
    instance is still solved from scratch; the guarantee is a property, not
    an assumption).
    """

    betas = np.concatenate([model.betas, np.asarray(new_betas, dtype=float).ravel()])
    delta2s = np.concatenate(
        [model.delta2s, np.asarray(new_delta2s, dtype=float).ravel()]
    )
    return solve_lomv(FactorModel(model.sigma2, betas, delta2s))
