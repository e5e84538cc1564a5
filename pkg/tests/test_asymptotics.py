import math

import numpy as np
import pytest

from lomv import (
    DiscreteDistribution,
    EmpiricalDistribution,
    NormalDistribution,
    ThetaBound,
    UniformDistribution,
    classify_and_solve,
    find_g_zero,
    g_eval,
    make_g_curve,
    normal_family_constants,
    theta_bound,
    verify_bound_on_family,
)
from lomv.asymptotics import (
    CASE_NEGATIVE_MASS_POSITIVE_MEAN,
    CASE_NEGATIVE_MASS_ZERO_MEAN,
    CASE_NONNEGATIVE_SUPPORT,
)
from lomv.distributions import g_quadrature

FOUR_ATOM = DiscreteDistribution(((-1.0, 0.05), (1.0, 0.15), (2.0, 0.30), (5.0, 0.50)))

ALL_KINDS = [
    NormalDistribution(1.0, 0.4),
    FOUR_ATOM,
    UniformDistribution(-0.5, 2.0),
    EmpiricalDistribution(np.linspace(-0.4, 2.2, 41)),
]


class TestGEval:
    def test_validates_argument(self):
        curve = make_g_curve(NormalDistribution(1.0, 0.4))
        with pytest.raises(ValueError):
            g_eval(curve, -0.5)
        with pytest.raises(ValueError):
            g_eval(curve, math.inf)

    def test_method_tags(self):
        assert make_g_curve(NormalDistribution(1, 0.4)).method == "closed-form-normal"
        assert make_g_curve(FOUR_ATOM).method == "closed-form-discrete"
        assert make_g_curve(UniformDistribution(0, 1)).method == "quadrature"

    def test_g_zero_is_nonnegative(self):
        for dist in ALL_KINDS:
            curve = make_g_curve(dist)
            assert g_eval(curve, 0.0) >= 0.0

    def test_lipschitz_on_compact(self, rng):
        for dist in ALL_KINDS:
            curve = make_g_curve(dist)
            bound = abs(dist.mean()) + math.sqrt(dist.second_moment()) + 1.0
            ys = rng.uniform(0.0, 3.0, (40, 2))
            for y1, y2 in ys:
                gap = abs(g_eval(curve, y1) - g_eval(curve, y2))
                assert gap <= bound * abs(y1 - y2) + 1e-12

    def test_concavity_midpoint_grid(self):
        for dist in ALL_KINDS:
            curve = make_g_curve(dist)
            grid = np.linspace(0.0, 4.0, 41)
            for y1, y2 in zip(grid[:-2], grid[2:]):
                mid = 0.5 * (y1 + y2)
                assert g_eval(curve, mid) >= 0.5 * (
                    g_eval(curve, y1) + g_eval(curve, y2)
                ) - 1e-8

    def test_discrete_piecewise_slopes(self):
        # slope on a segment is minus the mass-weighted sum of atoms below it
        locs = FOUR_ATOM.locations
        masses = FOUR_ATOM.masses
        for j, (lo, hi) in enumerate(zip(locs[1:-1], locs[2:]), start=1):
            y1 = float(lo) + 0.1 * (float(hi) - float(lo))
            y2 = float(lo) + 0.9 * (float(hi) - float(lo))
            slope = (FOUR_ATOM.g(y2) - FOUR_ATOM.g(y1)) / (y2 - y1)
            expected = -math.fsum(m * b for b, m in zip(locs[: j + 1], masses[: j + 1]))
            assert slope == pytest.approx(expected, abs=1e-12)


class TestClassify:
    def test_normal_wide(self):
        report = classify_and_solve(NormalDistribution(1.0, 0.4))
        assert report.case_label == CASE_NEGATIVE_MASS_POSITIVE_MEAN
        assert report.beta_star == pytest.approx(0.288, abs=1e-3)
        assert report.limsup == pytest.approx(0.038, abs=1e-3)
        assert report.limit == report.limsup
        assert report.atom_at_beta_star == 0.0

    def test_normal_narrow(self):
        report = classify_and_solve(NormalDistribution(1.0, 0.25))
        assert report.beta_star == pytest.approx(0.12, abs=0.005)
        assert report.limsup == pytest.approx(0.00021, abs=2e-5)

    def test_four_atom(self):
        report = classify_and_solve(FOUR_ATOM)
        assert report.case_label == CASE_NEGATIVE_MASS_POSITIVE_MEAN
        assert report.beta_star == 2.0
        assert report.liminf == pytest.approx(0.20)
        assert report.limsup == pytest.approx(0.50)
        assert report.atom_at_beta_star == pytest.approx(0.30)
        assert report.limit is None

    def test_symmetric_two_atom(self):
        report = classify_and_solve(DiscreteDistribution(((-1.0, 0.5), (1.0, 0.5))))
        assert report.case_label == CASE_NEGATIVE_MASS_ZERO_MEAN
        assert report.limit == 1.0
        assert report.beta_star == math.inf

    def test_point_mass(self):
        report = classify_and_solve(DiscreteDistribution(((1.0, 1.0),)))
        assert report.case_label == CASE_NONNEGATIVE_SUPPORT
        assert report.beta_star == 1.0
        assert report.limit == 1.0

    def test_positive_uniform(self):
        report = classify_and_solve(UniformDistribution(0.5, 1.5))
        assert report.case_label == CASE_NONNEGATIVE_SUPPORT
        assert report.beta_star == 0.5
        assert report.limit == 0.0

    def test_negative_mean_is_mirrored(self):
        report = classify_and_solve(NormalDistribution(-1.0, 0.4))
        assert report.beta_star == pytest.approx(0.288, abs=1e-3)

    def test_rejects_point_mass_at_zero(self):
        with pytest.raises(ValueError):
            classify_and_solve(DiscreteDistribution(((0.0, 1.0),)))

    def test_case1_sign_change(self):
        for dist in [NormalDistribution(1.0, 0.4), FOUR_ATOM, UniformDistribution(-0.5, 2.0)]:
            report = classify_and_solve(dist)
            star = report.beta_star
            h = 1e-6 * (1.0 + star)
            assert dist.g(star - h) > 0.0
            assert dist.g(star + h) < 0.0

    def test_empirical_zero_is_exact_on_segments(self):
        dist = EmpiricalDistribution([-1.0, 1.0, 2.0, 2.0, 5.0])
        star = find_g_zero(dist)
        assert dist.g(star) == pytest.approx(0.0, abs=1e-15)
        assert dist.g(star + 1e-9) < 0.0


class TestThetaBound:
    def test_normal_published_values(self):
        wide = normal_family_constants(1.0, 0.4)
        eps_wide = NormalDistribution(1.0, 0.4).cdf(0.0)
        assert theta_bound(wide, eps_wide) == pytest.approx(0.15, abs=0.02)
        narrow = normal_family_constants(1.0, 0.25)
        eps_narrow = NormalDistribution(1.0, 0.25).cdf(0.0)
        assert theta_bound(narrow, eps_narrow) == pytest.approx(0.01, abs=0.02)

    def test_vanishes_with_epsilon(self):
        params = normal_family_constants(1.0, 0.4)
        assert theta_bound(params, 1e-30) < 1e-9
        with pytest.raises(ValueError):
            theta_bound(params, 0.0)
        with pytest.raises(ValueError):
            theta_bound(params, 1.0)

    def test_monotone_in_constants(self):
        base = ThetaBound(1.0, 1.16, 0.03, 1.0)
        eps = 0.01
        assert ThetaBound(1.0, 1.16, 0.06, 1.0).bound(eps) > base.bound(eps)
        assert ThetaBound(1.0, 2.0, 0.03, 1.0).bound(eps) > base.bound(eps)
        assert ThetaBound(1.0, 1.16, 0.03, 2.0).bound(eps) > base.bound(eps)
        assert ThetaBound(0.5, 1.16, 0.03, 1.0).bound(eps) > base.bound(eps)

    def test_rejects_bad_constants(self):
        with pytest.raises(ValueError):
            ThetaBound(0.0, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            ThetaBound(1.0, math.inf, 1.0, 1.0)


class TestVerifyBound:
    def test_normal_family_passes(self):
        dists = [NormalDistribution(1.0, s) for s in (0.4, 0.3, 0.25, 0.2)]
        params = [normal_family_constants(1.0, s) for s in (0.4, 0.3, 0.25, 0.2)]
        rows = verify_bound_on_family(dists, params)
        assert all(row.passed for row in rows)
        assert not any(row.skipped for row in rows)
        assert all(row.margin > 0 for row in rows)

    def test_zero_epsilon_is_skipped(self):
        rows = verify_bound_on_family(
            [UniformDistribution(0.5, 1.5)], ThetaBound(1.0, 1.1, 0.01, 1.0)
        )
        assert rows[0].skipped and rows[0].passed

    def test_four_atom_with_caller_constants(self):
        params = ThetaBound(
            mu_lower=FOUR_ATOM.mean(),
            second_moment=FOUR_ATOM.second_moment(),
            neg_second_moment=FOUR_ATOM.neg_second_moment(),
            concentration=1.0,
        )
        rows = verify_bound_on_family([FOUR_ATOM], params)
        assert rows[0].passed
        assert rows[0].epsilon == pytest.approx(0.05)
        assert rows[0].y_star == 2.0
        assert rows[0].f_at_y_star == pytest.approx(0.50)

    def test_params_length_mismatch(self):
        with pytest.raises(ValueError):
            verify_bound_on_family([FOUR_ATOM], [])


def test_normal_g_agrees_with_quadrature_everywhere():
    dist = NormalDistribution(1.0, 0.4)
    for y in np.linspace(0.0, 3.4, 35):
        assert dist.g(float(y)) == pytest.approx(g_quadrature(dist, float(y)), abs=1e-9)
