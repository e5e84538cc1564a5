import math

import numpy as np
import pytest

from lomv import (
    DiscreteDistribution,
    FactorModel,
    NormalDistribution,
    UniformDistribution,
    canonicalize,
    classify_and_solve,
    compute_r_sequence,
    empirical_beta_star,
    empirical_g,
    nonconvergence_experiment,
    solve_lomv,
    trial_rng,
)
from lomv.montecarlo import ConstantDelta, IidDelta, SimConfig, run_batch

FOUR_ATOM = DiscreteDistribution(((-1.0, 0.05), (1.0, 0.15), (2.0, 0.30), (5.0, 0.50)))
NORMAL = NormalDistribution(1.0, 0.4)


def config(**kwargs):
    base = dict(
        dist=NORMAL,
        delta_model=ConstantDelta(0.5),
        p=500,
        trials=20,
        seed=7,
        sigma2=1.0,
    )
    base.update(kwargs)
    return SimConfig(**base)


class TestDeltaModels:
    def test_constant(self):
        model = ConstantDelta(0.5)
        assert model.nu2 == 0.5
        assert np.array_equal(model.sample(trial_rng(0, 0), 4), np.full(4, 0.5))
        with pytest.raises(ValueError):
            ConstantDelta(0.0)

    def test_iid_uniform_closed_form(self):
        model = IidDelta(UniformDistribution(0.5, 1.5))
        assert model.nu2 == pytest.approx(1.0 / (math.log(3.0) / 1.0))

    def test_iid_discrete_exact(self):
        model = IidDelta(DiscreteDistribution(((0.5, 0.5), (2.0, 0.5))))
        assert model.nu2 == pytest.approx(1.0 / (0.5 / 0.5 + 0.5 / 2.0))

    def test_iid_requires_positive_support(self):
        with pytest.raises(ValueError):
            IidDelta(UniformDistribution(-0.5, 1.5))
        with pytest.raises(ValueError):
            IidDelta(NormalDistribution(1.0, 0.1))


class TestSimConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            config(p=0)
        with pytest.raises(ValueError):
            config(trials=0)
        with pytest.raises(ValueError):
            config(seed=-1)
        with pytest.raises(ValueError):
            config(sigma2=0.0)


class TestRunBatch:
    def test_single_asset_ratio_is_one(self):
        batch = run_batch(config(p=1, trials=5))
        assert np.array_equal(batch.active_ratios, np.ones(5))

    def test_ratios_in_range(self):
        batch = run_batch(config())
        assert np.all(batch.active_ratios >= 1 / 500)
        assert np.all(batch.active_ratios <= 1.0)
        assert np.all(batch.ks >= 1)

    def test_reproducible_and_order_free(self):
        a = run_batch(config())
        b = run_batch(config())
        c = run_batch(config(parallel=True))
        assert np.array_equal(a.active_ratios, b.active_ratios)
        assert np.array_equal(a.active_ratios, c.active_ratios)
        assert np.array_equal(a.beta_star_p, c.beta_star_p)

    def test_trials_are_individually_addressable(self):
        # trial t draws the same sample no matter how many trials run
        five = run_batch(config(trials=5))
        three = run_batch(config(trials=3))
        assert np.array_equal(five.active_ratios[:3], three.active_ratios)

    def test_matches_direct_solve(self):
        batch = run_batch(config(trials=3))
        rng = trial_rng(7, 1)
        betas = NORMAL.sample(rng, 500)
        delta2s = ConstantDelta(0.5).sample(rng, 500)
        sol = solve_lomv(FactorModel(1.0, betas, delta2s))
        assert batch.ks[1] == sol.k

    def test_summary_quantiles(self):
        batch = run_batch(config(trials=50))
        ratios = batch.active_ratios
        assert batch.summary.mean == pytest.approx(float(ratios.mean()))
        assert batch.summary.q05 <= batch.summary.q50 <= batch.summary.q95


class TestEmpiricalG:
    def test_below_all_betas(self):
        model = FactorModel(2.0, [1.0, 2.0], [0.5, 0.5])
        assert empirical_g(model, 0.5, 0.0) == pytest.approx(0.5 / (2 * 2.0))

    def test_r_sequence_relation(self, rng):
        # (nu2/p) * R_i equals the empirical functional at the i-th sorted beta
        for _ in range(50):
            p = int(rng.integers(2, 60))
            betas = rng.normal(0.8, 0.6, p)
            delta2s = rng.uniform(0.2, 2.0, p)
            model = FactorModel(1.3, betas, delta2s)
            sm = canonicalize(model)
            if sm.flipped:
                continue
            rseq = compute_r_sequence(sm)
            nu2 = 0.7
            for i in (0, p // 2, p - 1):
                lhs = nu2 / p * float(rseq.values[i])
                rhs = empirical_g(model, nu2, float(sm.base.betas[i]))
                assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_four_atom_concentrates_near_bias(self):
        p = 10_000
        betas = FOUR_ATOM.sample(trial_rng(3, 0), p)
        model = FactorModel(1.0, betas, np.full(p, 0.1))
        value = empirical_g(model, 0.1, 2.0)
        bias = 0.1 / p
        clt_scale = 0.1 * math.sqrt(60.0 / p)  # Var of one summand is 60
        assert abs(value - bias) < 5 * clt_scale


class TestEmpiricalBetaStar:
    def test_consistency_with_active_count(self, rng):
        for _ in range(100):
            p = int(rng.integers(2, 80))
            betas = rng.normal(0.9, 0.5, p)
            delta2s = rng.uniform(0.2, 2.0, p)
            model = FactorModel(1.0, betas, delta2s)
            star = empirical_beta_star(model)
            if star is None:
                continue
            k = solve_lomv(model).k
            assert int(np.sum(betas < star)) == k

    def test_absent_when_slope_never_turns(self):
        model = FactorModel(1.0, [-1.0, 1.0], [1.0, 4.0])
        assert empirical_beta_star(model) is None

    def test_sign_of_g_orders_the_zero(self):
        report = classify_and_solve(FOUR_ATOM)
        batch = run_batch(
            config(dist=FOUR_ATOM, delta_model=ConstantDelta(0.1), p=2000, trials=40),
            population_beta_star=report.beta_star,
        )
        for g_value, zero in zip(batch.g_p_at_beta_star, batch.beta_star_p):
            if g_value > 0:
                assert zero > report.beta_star
            else:
                assert zero <= report.beta_star

    def test_upward_bias_of_the_zero(self):
        report = classify_and_solve(NORMAL)
        batch = run_batch(config(p=3000, trials=60), population_beta_star=report.beta_star)
        bias = np.mean(batch.g_p_at_beta_star)
        expected = 0.5 / 3000
        se = np.std(batch.g_p_at_beta_star, ddof=1) / math.sqrt(60)
        assert abs(bias - expected) < 5 * se
        above = batch.beta_star_p > report.beta_star
        positive = batch.g_p_at_beta_star > 0
        assert np.array_equal(above, positive)


class TestModes:
    def test_block_integrity(self):
        batch = run_batch(
            config(dist=FOUR_ATOM, delta_model=ConstantDelta(0.1), p=1000, trials=10)
        )
        for t in range(10):
            rng = trial_rng(7, t)
            betas = FOUR_ATOM.sample(rng, 1000)
            delta2s = ConstantDelta(0.1).sample(rng, 1000)
            sol = solve_lomv(FactorModel(1.0, betas, delta2s))
            for level in (-1.0, 1.0, 2.0, 5.0):
                block = sol.weights[betas == level]
                if block.size:
                    assert np.all(block > 0) or np.all(block == 0)

    def test_continuous_dist_labels_other(self):
        report = classify_and_solve(NORMAL)
        batch = nonconvergence_experiment(
            config(p=200, trials=10), beta_star=report.beta_star
        )
        assert set(batch.mode_labels) == {"other"}
        assert batch.mode_frequencies()["other"] == 1.0

    def test_four_atom_modes_partition(self):
        batch = nonconvergence_experiment(
            config(dist=FOUR_ATOM, delta_model=ConstantDelta(0.1), p=5000, trials=40)
        )
        freqs = batch.mode_frequencies()
        assert freqs["other"] == 0.0
        assert freqs["low"] + freqs["high"] == pytest.approx(1.0)
        for ratio, label in zip(batch.active_ratios, batch.mode_labels):
            center = 0.2 if label == "low" else 0.5
            assert abs(ratio - center) < 0.04

    def test_rejects_wrong_case(self):
        with pytest.raises(ValueError, match="negative-mass"):
            nonconvergence_experiment(config(dist=UniformDistribution(0.5, 1.5)))


class TestAsymptoticDirections:
    def test_case1_bias_ordering_small(self):
        means = {}
        for delta2 in (0.5, 0.1):
            for p in (500, 3000):
                batch = run_batch(
                    config(delta_model=ConstantDelta(delta2), p=p, trials=60, seed=13)
                )
                means[(delta2, p)] = batch.summary.mean
        limit = classify_and_solve(NORMAL).limsup
        assert means[(0.1, 500)] < means[(0.5, 500)]
        assert means[(0.1, 3000)] < means[(0.5, 3000)]
        assert means[(0.5, 3000)] < means[(0.5, 500)]
        assert means[(0.5, 3000)] > limit

    def test_case2_ratio_tends_to_one(self):
        sym = DiscreteDistribution(((-1.0, 0.5), (1.0, 0.5)))
        batch = run_batch(config(dist=sym, p=2000, trials=10))
        assert batch.summary.mean > 0.9

    def test_case3_ratio_tends_to_zero(self):
        uni = UniformDistribution(0.5, 1.5)
        small = run_batch(config(dist=uni, p=200, trials=10))
        large = run_batch(config(dist=uni, p=2000, trials=10))
        assert large.summary.mean < small.summary.mean
        assert large.summary.mean < 0.05
