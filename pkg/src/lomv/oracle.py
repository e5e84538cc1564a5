"""Exhaustive ground-truth solver for small universes.

Enumerates every non-empty candidate active set of an arbitrary positive
definite covariance, solves the reduced unconstrained problem on each, keeps
the candidates whose reduced weights are all strictly positive, and returns
the feasible candidate of least variance.  The true solution's active set is
always among the strictly feasible candidates and attains the optimum, and
every candidate is feasible for the full problem, so the minimum over
candidates is the optimum.  Cost is exponential in p; this module exists
solely as ground truth for the closed-form solver.
"""

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .model import CovarianceView, FactorModel

#: Hard ceiling on exhaustive enumeration (2^p - 1 subsets).
SUBSET_ENUMERATION_CAP = 15

_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DenseCovariance:
    """Validated symmetric positive definite covariance matrix."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float, copy=True)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"covariance must be square, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValueError("covariance must be finite")
        scale = max(1.0, float(np.max(np.abs(entries))))
        if float(np.max(np.abs(entries - entries.T))) > _SYMMETRY_TOL * scale:
            raise ValueError("covariance must be symmetric")
        try:
            np.linalg.cholesky(entries)
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance must be positive definite") from exc
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def p(self) -> int:
        return self.entries.shape[0]


def covariance_from_model(model: FactorModel) -> DenseCovariance:
    """Materialize a factor instance into a dense validated covariance."""
    return DenseCovariance(CovarianceView(model).materialize())


@dataclass(frozen=True, eq=False)
class OracleResult:
    """Winner of the exhaustive search.

    ``variance`` is recomputed as w'Sigma w of the reported weights.
    ``candidates_examined`` counts every enumerated subset (2^p - 1).
    """

    weights: np.ndarray
    active_set: frozenset
    variance: float
    candidates_examined: int

    def __post_init__(self):
        self.weights.setflags(write=False)


def oracle_solve(
    cov: DenseCovariance, subset_cap: int = SUBSET_ENUMERATION_CAP
) -> OracleResult:
    """Brute-force long-only minimum variance solution.

    Subsets are enumerated exhaustively, grouped by size and solved with
    stacked Cholesky factorizations (no explicit inverses).  Ties in
    variance break to the lexicographically smallest index tuple, so the
    result does not depend on evaluation order.
    """

    p = cov.p
    if p > subset_cap:
        raise ValueError(f"p={p} exceeds the enumeration cap {subset_cap}")
    sigma = cov.entries

    best_var = float("inf")
    best_combo = None
    best_reduced = None
    examined = 0
    for size in range(1, p + 1):
        combos = np.array(
            list(itertools.combinations(range(p), size)), dtype=np.intp
        ).reshape(-1, size)
        examined += combos.shape[0]
        subs = sigma[combos[:, :, None], combos[:, None, :]]
        chol = np.linalg.cholesky(subs)
        rhs = np.ones((combos.shape[0], size, 1))
        halfway = np.linalg.solve(chol, rhs)
        solved = np.linalg.solve(np.swapaxes(chol, -2, -1), halfway)[:, :, 0]
        feasible = np.all(solved > 0.0, axis=1)
        if not feasible.any():
            continue
        variances = 1.0 / solved.sum(axis=1)
        rows = np.nonzero(feasible)[0]
        winner = rows[np.argmin(variances[rows])]  # first min: lexicographic in size
        var = float(variances[winner])
        combo = tuple(int(i) for i in combos[winner])
        if var < best_var or (var == best_var and combo < best_combo):
            best_var = var
            best_combo = combo
            best_reduced = solved[winner]
    if best_combo is None:  # cannot happen: singletons are always feasible
        raise AssertionError("no feasible candidate found")

    weights = np.zeros(p)
    weights[list(best_combo)] = best_reduced / best_reduced.sum()
    return OracleResult(
        weights=weights,
        active_set=frozenset(best_combo),
        variance=float(weights @ sigma @ weights),
        candidates_examined=examined,
    )


def random_factor_instance(
    rng: np.random.Generator, p_max: int = 12, p_min: int = 1
) -> FactorModel:
    """Random mixed-sign validation instance.

    Betas are standard normal shifted by a draw from {-0.5, 0, 1}; delta2
    is log-uniform on [0.01, 10]; sigma2 log-uniform on [0.1, 10]; p uniform
    on [p_min, p_max].  This is the instance family the solver/oracle
    cross-check runs on.
    """

    p = int(rng.integers(p_min, p_max + 1))
    shift = float(rng.choice([-0.5, 0.0, 1.0]))
    betas = rng.standard_normal(p) + shift
    if not np.any(betas != 0.0):  # vanishing chance; keep the instance valid
        betas[0] = 1.0
    delta2s = np.exp(rng.uniform(np.log(0.01), np.log(10.0), p))
    sigma2 = float(np.exp(rng.uniform(np.log(0.1), np.log(10.0))))
    return FactorModel(sigma2, betas, delta2s)


def oracle_restricted_weights(cov: DenseCovariance, subset) -> "np.ndarray | None":
    """Reduced unconstrained weights on a subset, embedded with zeros.

    Returns None when any reduced weight is non-positive (the subset cannot
    be the active set).  A singular reduced system cannot occur for a
    positive definite covariance and is surfaced as a linear-algebra error.
    """

    indices = sorted({int(i) for i in subset})
    if not indices:
        raise ValueError("subset must be non-empty")
    if indices[0] < 0 or indices[-1] >= cov.p:
        raise IndexError(f"subset indices out of range [0, {cov.p})")
    sub = cov.entries[np.ix_(indices, indices)]
    solved = cho_solve(cho_factor(sub), np.ones(len(indices)))
    if np.any(solved <= 0.0):
        return None
    weights = np.zeros(cov.p)
    weights[indices] = solved / solved.sum()
    return weights
