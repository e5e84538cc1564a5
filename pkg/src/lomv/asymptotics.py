"""Population-level analysis of the active ratio in large universes.

Classifies an exposure distribution into one of three regimes and computes
the limit (or the liminf/limsup pair when no limit exists) of the fraction
of active assets:

* negative mass, positive mean: G has a unique zero beta* > 0; the active
  ratio oscillates between F(beta*-) and F(beta*), which coincide exactly
  when beta* carries no atom.
* negative mass, zero mean: G stays positive, every asset is eventually
  active, the ratio tends to one.
* non-negative support: beta* is the left support endpoint and the limit
  is the atom mass there (zero for a continuous left edge).

Also provides the explicit cube-root upper bound on the limiting ratio in
terms of moment and concentration constants of the exposure family.
"""

import math
from dataclasses import dataclass

import numpy as np

from .distributions import (
    _SQRT_2PI,
    BetaDistribution,
    DiscreteDistribution,
    EmpiricalDistribution,
    NormalDistribution,
)

#: |mean| at or below this is treated as exactly zero (the trichotomy is
#: exact-arithmetic; this is the documented numerical reading of it).
MEAN_ZERO_TOL = 1e-12

#: Absolute bracket width for the bisection root of G.
ROOT_WIDTH = 1e-12

CASE_NEGATIVE_MASS_POSITIVE_MEAN = "negative-mass-positive-mean"
CASE_NEGATIVE_MASS_ZERO_MEAN = "negative-mass-zero-mean"
CASE_NONNEGATIVE_SUPPORT = "nonnegative-support"


@dataclass(frozen=True)
class GCurve:
    """Evaluator for the tail functional G of one distribution."""

    dist: BetaDistribution

    @property
    def method(self) -> str:
        return self.dist.g_method

    def __call__(self, y: float) -> float:
        return g_eval(self, y)


def make_g_curve(dist: BetaDistribution) -> GCurve:
    return GCurve(dist)


def g_eval(curve: GCurve, y: float) -> float:
    """G(y) for y >= 0 finite."""
    y = float(y)
    if not math.isfinite(y):
        raise ValueError(f"y must be finite, got {y!r}")
    if y < 0.0:
        raise ValueError(f"y must be >= 0, got {y!r}")
    return curve.dist.g(y)


@dataclass(frozen=True)
class AsymptoticReport:
    """Limiting behavior of the active ratio for one distribution.

    ``beta_star`` is +inf in the zero-mean regime (G never crosses zero and
    the supremum defining it runs over an empty set).  ``limit`` is None
    exactly when the distribution carries an atom at beta*, in which case
    ``liminf`` and ``limsup`` differ by that atom's mass.
    """

    case_label: str
    beta_star: float
    limit: "float | None"
    liminf: float
    limsup: float
    atom_at_beta_star: float


def classify_and_solve(dist: BetaDistribution) -> AsymptoticReport:
    """Classify a distribution and locate the G zero where one exists.

    The distribution is negated first when its mean is negative (the
    covariance is unchanged by the reflection); the report then refers to
    the oriented distribution.  A distribution that is a point mass at zero
    is rejected: it cannot arise from a valid instance.
    """

    mean = dist.mean()
    if mean < -MEAN_ZERO_TOL:
        dist = dist.negate()
        mean = dist.mean()
    if dist.mass_at(0.0) >= 1.0:
        raise ValueError("the point mass at zero is not a valid exposure distribution")

    negative_mass = dist.prob_negative()
    if negative_mass > 0.0 and abs(mean) <= MEAN_ZERO_TOL:
        return AsymptoticReport(
            case_label=CASE_NEGATIVE_MASS_ZERO_MEAN,
            beta_star=math.inf,
            limit=1.0,
            liminf=1.0,
            limsup=1.0,
            atom_at_beta_star=0.0,
        )
    if negative_mass > 0.0:
        beta_star = find_g_zero(dist)
        mass = dist.mass_at(beta_star)
        limsup = dist.cdf(beta_star)
        liminf = limsup - mass
        return AsymptoticReport(
            case_label=CASE_NEGATIVE_MASS_POSITIVE_MEAN,
            beta_star=beta_star,
            limit=limsup if mass == 0.0 else None,
            liminf=liminf,
            limsup=limsup,
            atom_at_beta_star=mass,
        )
    if not mean > MEAN_ZERO_TOL:
        # Non-negative support with zero mean forces the point mass at zero,
        # which was rejected above.
        raise AssertionError("unreachable: non-negative support with zero mean")
    beta_star = dist.support_left()
    mass = dist.mass_at(beta_star)
    return AsymptoticReport(
        case_label=CASE_NONNEGATIVE_SUPPORT,
        beta_star=beta_star,
        limit=mass,
        liminf=mass,
        limsup=mass,
        atom_at_beta_star=mass,
    )


def find_g_zero(dist: BetaDistribution) -> float:
    """Unique positive zero of G for a negative-mass, positive-mean distribution.

    Purely atomic kinds are solved exactly on the linear segments of their
    piecewise-linear G; continuous kinds by bracketed bisection, started at
    the moment-ratio bound second_moment/mean and doubled until the sign
    flips, then narrowed to an absolute width of ``ROOT_WIDTH``.
    """

    if isinstance(dist, DiscreteDistribution):
        return _atomic_g_zero(dist.locations, dist.masses)
    if isinstance(dist, EmpiricalDistribution):
        return _atomic_g_zero(dist.samples, None)
    return _bisect_g_zero(dist)


def _atomic_g_zero(locations, masses) -> float:
    """Exact zero of the piecewise-linear G of an atomic measure.

    On the segment [b_j, b_{j+1}) the function is A_j - y*S_j with
    A_j = sum(m*b^2) and S_j = sum(m*b) over atoms up to j; the zero is the
    first segment whose A/S ratio falls inside it.  Sums use exact rounding
    for small atom counts so a zero that sits exactly on an atom is returned
    exactly.
    """

    n = len(locations)
    if masses is None:
        weighted = [float(b) / n for b in locations]
        weighted_sq = [float(b) * float(b) / n for b in locations]
    else:
        weighted = [float(b) * float(m) for b, m in zip(locations, masses)]
        weighted_sq = [float(b) * float(b) * float(m) for b, m in zip(locations, masses)]

    if n <= 1024:
        slope_at = lambda j: math.fsum(weighted[: j + 1])
        level_at = lambda j: math.fsum(weighted_sq[: j + 1])
    else:
        slopes = np.cumsum(weighted)
        levels = np.cumsum(weighted_sq)
        slope_at = lambda j: float(slopes[j])
        level_at = lambda j: float(levels[j])

    for j in range(n):
        right = float(locations[j + 1]) if j + 1 < n else math.inf
        slope = slope_at(j)
        if slope > 0.0:
            candidate = level_at(j) / slope
            if candidate >= 0.0 and float(locations[j]) <= candidate < right:
                return candidate
    raise ValueError("G has no non-negative zero for this distribution")


def _bisect_g_zero(dist: BetaDistribution) -> float:
    if not dist.g(0.0) > 0.0:
        raise ValueError("G(0) must be positive in the negative-mass regime")
    hi = max(dist.second_moment() / dist.mean(), 1.0)
    for _ in range(64):
        if dist.g(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise ValueError("failed to bracket the zero of G")
    lo = 0.0
    while hi - lo > ROOT_WIDTH:
        mid = 0.5 * (lo + hi)
        if dist.g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ThetaBound:
    """Constants of the cube-root bound on the limiting active ratio.

    For a family with mean >= mu_lower > 0, second moment <= second_moment,
    E[X^2; X<=0] <= neg_second_moment, and concentration
    F(x+t) - F(x) <= concentration * t on x >= 0, the fraction of active
    assets in the limit is at most eps + theta^(1/3) * eps^(1/3) with
    eps = F(0).
    """

    mu_lower: float
    second_moment: float
    neg_second_moment: float
    concentration: float

    def __post_init__(self):
        for name in ("mu_lower", "second_moment", "neg_second_moment", "concentration"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and positive, got {value!r}")

    @property
    def theta(self) -> float:
        return (
            27.0
            * (
                self.neg_second_moment
                + self.second_moment * math.sqrt(self.neg_second_moment) / self.mu_lower
            )
            * self.concentration**2
        )

    def bound(self, epsilon: float) -> float:
        return theta_bound(self, epsilon)


def theta_bound(params: ThetaBound, epsilon: float) -> float:
    """eps + theta^(1/3) * eps^(1/3) for eps in (0, 1)."""
    epsilon = float(epsilon)
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon!r}")
    return epsilon + params.theta ** (1.0 / 3.0) * epsilon ** (1.0 / 3.0)


def normal_family_constants(mu: float, s: float) -> ThetaBound:
    """Closed-form bound constants for normal exposures with mean mu > 0.

    Second moment mu^2 + s^2; negative-tail second moment E[X^2; X<=0] in
    closed form (the restricted moment: this is what reproduces the
    published illustration values of the bound); concentration constant
    1/(s*sqrt(2*pi)), the supremum of the density.
    """

    dist = NormalDistribution(mu, s)
    return ThetaBound(
        mu_lower=mu,
        second_moment=dist.second_moment(),
        neg_second_moment=dist.neg_second_moment(),
        concentration=1.0 / (s * _SQRT_2PI),
    )


@dataclass(frozen=True)
class BoundCheck:
    """One row of verify_bound_on_family."""

    dist: BetaDistribution
    skipped: bool
    epsilon: float
    y_star: float
    f_at_y_star: float
    bound: float
    margin: float
    passed: bool


def verify_bound_on_family(dists, params) -> list:
    """Check F(y*) <= eps + theta^(1/3)*eps^(1/3) across a family.

    ``params`` is a single ThetaBound applied to every member or a sequence
    with one entry per member.  The caller asserts that the hypotheses hold
    with the given constants.  Members with F(0) = 0 exactly are skipped
    (the bound presumes positive negative-side mass).  A violated inequality
    is reported as a failed row, never raised.
    """

    dists = list(dists)
    if isinstance(params, ThetaBound):
        params = [params] * len(dists)
    params = list(params)
    if len(params) != len(dists):
        raise ValueError("need one ThetaBound per distribution")

    rows = []
    for dist, theta in zip(dists, params):
        epsilon = dist.cdf(0.0)
        if epsilon == 0.0:
            rows.append(
                BoundCheck(
                    dist=dist,
                    skipped=True,
                    epsilon=0.0,
                    y_star=math.nan,
                    f_at_y_star=math.nan,
                    bound=math.nan,
                    margin=math.nan,
                    passed=True,
                )
            )
            continue
        y_star = find_g_zero(dist)
        f_star = dist.cdf(y_star)
        bound = theta.bound(epsilon)
        rows.append(
            BoundCheck(
                dist=dist,
                skipped=False,
                epsilon=epsilon,
                y_star=y_star,
                f_at_y_star=f_star,
                bound=bound,
                margin=bound - f_star,
                passed=f_star <= bound,
            )
        )
    return rows
