"""Seeded simulation of finite-universe active ratios.

Each trial draws p exposures (and idiosyncratic variances), solves the
long-only problem, and records the active ratio k/p together with the zero
of the empirical counterpart of the G functional,

    G_p(y) = nu2/(p*sigma2) + (nu2/p) * sum_j (beta_j/delta2_j)*(beta_j - y)*[beta_j <= y],

where 1/nu2 = E[1/delta2].  The active count and the empirical zero are two
views of the same cut: k equals the number of betas strictly below the zero.
Trials are seeded individually from (seed, trial_index) with a counter-based
generator, so a trial's draw is identical whether it runs alone, in a batch,
serially, or from a thread pool.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._validation import require_positive_scalar
from .asymptotics import CASE_NEGATIVE_MASS_POSITIVE_MEAN, classify_and_solve
from .distributions import (
    BetaDistribution,
    DiscreteDistribution,
    EmpiricalDistribution,
    UniformDistribution,
)
from .model import FactorModel, canonicalize
from .solver import compute_r_sequence, _active_prefix_sums

MODE_LOW = "low"
MODE_HIGH = "high"
MODE_OTHER = "other"


@dataclass(frozen=True)
class ConstantDelta:
    """All assets share one idiosyncratic variance."""

    delta2: float

    def __post_init__(self):
        require_positive_scalar("delta2", self.delta2)

    @property
    def nu2(self) -> float:
        return self.delta2

    def sample(self, rng, size):
        return np.full(size, self.delta2)

    def to_json(self):
        return {"kind": "constant", "delta2": self.delta2}


@dataclass(frozen=True)
class IidDelta:
    """Idiosyncratic variances drawn iid from a positive-support distribution.

    nu2 is the harmonic-type scale 1/E[1/delta2], computed in closed form
    for discrete and uniform kinds and from the sample for empirical kinds.
    """

    dist: BetaDistribution

    def __post_init__(self):
        left = self.dist.support_left()
        if not left > 0.0:
            raise ValueError("delta2 distribution must have strictly positive support")
        object.__setattr__(self, "_nu2", 1.0 / self._mean_inverse())

    def _mean_inverse(self) -> float:
        d = self.dist
        if isinstance(d, DiscreteDistribution):
            return math.fsum(m / b for b, m in zip(d.locations, d.masses))
        if isinstance(d, UniformDistribution):
            return math.log(d.b / d.a) / (d.b - d.a)
        if isinstance(d, EmpiricalDistribution):
            return float(np.mean(1.0 / d.samples))
        raise ValueError(f"unsupported delta2 distribution kind {d.kind!r}")

    @property
    def nu2(self) -> float:
        return self._nu2

    def sample(self, rng, size):
        return self.dist.sample(rng, size)

    def to_json(self):
        return {"kind": "iid", "dist": self.dist.to_json()}


@dataclass(frozen=True)
class SimConfig:
    """One simulation batch: distribution, noise model, size, and seeding."""

    dist: BetaDistribution
    delta_model: "ConstantDelta | IidDelta"
    p: int
    trials: int
    seed: int
    sigma2: float = 1.0
    parallel: bool = False

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        require_positive_scalar("sigma2", self.sigma2)

    @property
    def nu2(self) -> float:
        return self.delta_model.nu2


@dataclass(frozen=True)
class BatchSummary:
    mean: float
    sd: float
    q05: float
    q50: float
    q95: float


@dataclass(frozen=True, eq=False)
class TrialBatch:
    """Per-trial outcomes of one batch.

    ``beta_star_p`` holds NaN where the realized sample had no empirical
    zero (non-positive slope), ``mode_labels`` is None unless a population
    beta* was supplied to compare each trial's block against.
    """

    active_ratios: np.ndarray
    ks: np.ndarray
    beta_star_p: np.ndarray
    g_p_at_beta_star: "np.ndarray | None"
    mode_labels: "tuple | None"
    summary: BatchSummary
    nu2: float

    def __post_init__(self):
        self.active_ratios.setflags(write=False)
        self.ks.setflags(write=False)
        self.beta_star_p.setflags(write=False)
        if self.g_p_at_beta_star is not None:
            self.g_p_at_beta_star.setflags(write=False)

    @property
    def trials(self) -> int:
        return self.active_ratios.size

    def mode_frequencies(self) -> "dict | None":
        if self.mode_labels is None:
            return None
        return {
            mode: self.mode_labels.count(mode) / len(self.mode_labels)
            for mode in (MODE_LOW, MODE_HIGH, MODE_OTHER)
        }


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based generator for one (seed, trial) pair.

    Philox streams keyed on the pair make every trial reproducible in
    isolation; batch membership and execution order cannot change a draw.
    """

    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence([int(seed), int(trial_index)]))
    )


def empirical_g(model: FactorModel, nu2: float, y: float) -> float:
    """Exact O(p) evaluation of the empirical functional G_p at y."""
    nu2 = require_positive_scalar("nu2", nu2)
    y = float(y)
    if not math.isfinite(y):
        raise ValueError("y must be finite")
    mask = model.betas <= y
    betas = model.betas[mask]
    tail = float(np.sum(betas / model.delta2s[mask] * (betas - y)))
    return nu2 / (model.p * model.sigma2) + nu2 / model.p * tail


def empirical_beta_star(model: FactorModel, nu2: "float | None" = None) -> "float | None":
    """Unique zero of the piecewise-linear G_p, exact on its segments.

    Requires sum(beta/delta2) > 0 for the realized sample; returns None
    otherwise (the empirical slope never turns negative, there is no zero).
    The location does not depend on nu2 (a positive scale factor); the
    argument is accepted for interface symmetry with empirical_g.
    """

    if nu2 is not None:
        require_positive_scalar("nu2", nu2)
    if not math.fsum(model.betas / model.delta2s) > 0.0:
        return None
    sm = canonicalize(model)
    rseq = compute_r_sequence(sm)
    k = rseq.active_count
    big_b, big_c = _active_prefix_sums(sm, k)
    if not big_c > 0:
        return None
    return float(big_b / big_c)


def _run_trial(config: SimConfig, index: int, population_beta_star):
    rng = trial_rng(config.seed, index)
    betas = config.dist.sample(rng, config.p)
    delta2s = config.delta_model.sample(rng, config.p)
    model = FactorModel(config.sigma2, betas, delta2s)
    sm = canonicalize(model)
    rseq = compute_r_sequence(sm)
    k = rseq.active_count

    if math.fsum(betas / delta2s) > 0.0:
        big_b, big_c = _active_prefix_sums(sm, k)
        zero = float(big_b / big_c) if big_c > 0 else math.nan
    else:
        zero = math.nan

    g_at_star = None
    mode = None
    if population_beta_star is not None:
        g_at_star = empirical_g(model, config.nu2, population_beta_star)
        if not np.any(betas == population_beta_star):
            mode = MODE_OTHER
        elif not math.isnan(zero) and zero > population_beta_star:
            mode = MODE_HIGH
        else:
            mode = MODE_LOW
    return k, zero, g_at_star, mode


def run_batch(config: SimConfig, population_beta_star: "float | None" = None) -> TrialBatch:
    """Run every trial of a batch and summarize the active ratios.

    With ``population_beta_star`` given, each trial also records G_p at that
    point and a mode label: ``high`` when the block of betas equal to it is
    wholly active (the empirical zero lies above it), ``low`` when wholly
    inactive, ``other`` when the sample has no such block.  Results are
    deterministic functions of (config, population_beta_star) regardless of
    the ``parallel`` flag.
    """

    indices = range(config.trials)
    if config.parallel and config.trials > 1:
        with ThreadPoolExecutor() as pool:
            outcomes = list(
                pool.map(lambda t: _run_trial(config, t, population_beta_star), indices)
            )
    else:
        outcomes = [_run_trial(config, t, population_beta_star) for t in indices]

    ks = np.array([k for k, _, _, _ in outcomes], dtype=np.intp)
    ratios = ks / float(config.p)
    zeros = np.array([z for _, z, _, _ in outcomes])
    if population_beta_star is None:
        g_values = None
        modes = None
    else:
        g_values = np.array([g for _, _, g, _ in outcomes])
        modes = tuple(m for _, _, _, m in outcomes)

    q05, q50, q95 = np.quantile(ratios, [0.05, 0.50, 0.95])
    summary = BatchSummary(
        mean=float(ratios.mean()),
        sd=float(ratios.std(ddof=1)) if config.trials > 1 else 0.0,
        q05=float(q05),
        q50=float(q50),
        q95=float(q95),
    )
    return TrialBatch(
        active_ratios=ratios,
        ks=ks,
        beta_star_p=zeros,
        g_p_at_beta_star=g_values,
        mode_labels=modes,
        summary=summary,
        nu2=config.nu2,
    )


def nonconvergence_experiment(
    config: SimConfig, beta_star: "float | None" = None
) -> TrialBatch:
    """Batch labelled against the population zero of an atomic distribution.

    Derives beta* from the configured distribution unless supplied.  When
    the zero sits on an atom, trials split into a low mode (block inactive,
    ratio near the cdf just below the atom) and a high mode (block active,
    ratio near the cdf at the atom); a distribution with no atom at its zero
    labels every trial ``other``.
    """

    if beta_star is None:
        report = classify_and_solve(config.dist)
        if report.case_label != CASE_NEGATIVE_MASS_POSITIVE_MEAN:
            raise ValueError(
                "the experiment needs a negative-mass positive-mean distribution; "
                f"got {report.case_label}"
            )
        beta_star = report.beta_star
    return run_batch(config, population_beta_star=beta_star)
