import numpy as np
import pytest

from lomv import CovarianceView, FactorModel, canonicalize, covariance_entry
from lomv.oracle import random_factor_instance

from conftest import simple_model


class TestFactorModelValidation:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            FactorModel(1.0, [], [])

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            FactorModel(1.0, [1.0, 2.0], [1.0])

    @pytest.mark.parametrize("sigma2", [0.0, -1.0, np.nan, np.inf])
    def test_rejects_bad_sigma2(self, sigma2):
        with pytest.raises(ValueError):
            FactorModel(sigma2, [1.0], [1.0])

    @pytest.mark.parametrize("delta2", [0.0, -0.5, np.nan])
    def test_rejects_bad_delta2(self, delta2):
        with pytest.raises(ValueError):
            FactorModel(1.0, [1.0, 2.0], [1.0, delta2])

    def test_rejects_all_zero_betas(self):
        with pytest.raises(ValueError):
            FactorModel(1.0, [0.0, 0.0], [1.0, 1.0])

    def test_rejects_non_finite_betas(self):
        with pytest.raises(ValueError):
            FactorModel(1.0, [1.0, np.inf], [1.0, 1.0])

    def test_arrays_are_read_only(self):
        m = simple_model()
        with pytest.raises(ValueError):
            m.betas[0] = 5.0


class TestCanonicalize:
    def test_negative_sum_flips(self):
        sm = canonicalize(FactorModel(1.0, [-1.0, -2.0], [1.0, 1.0]))
        assert sm.flipped
        assert np.array_equal(sm.base.betas, [1.0, 2.0])

    def test_sorting_and_prefix(self):
        sm = canonicalize(FactorModel(1.0, [2.0, 1.0, 3.0], [1.0, 1.0, 1.0]))
        assert not sm.flipped
        assert np.array_equal(sm.base.betas, [1.0, 2.0, 3.0])
        assert np.allclose(np.asarray(sm.prefix_s1, dtype=float), [1.0, 3.0, 6.0])
        assert np.array_equal(sm.perm, [1, 0, 2])

    def test_zero_betas_permitted(self):
        sm = canonicalize(FactorModel(1.0, [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]))
        assert not sm.flipped
        assert np.array_equal(sm.base.betas, [0.0, 0.0, 1.0])
        assert np.allclose(np.asarray(sm.prefix_s1, dtype=float), [0.0, 0.0, 1.0])

    def test_exact_zero_sum_is_not_flipped(self):
        sm = canonicalize(FactorModel(1.0, [-1.0, 1.0], [1.0, 1.0]))
        assert not sm.flipped
        assert np.array_equal(sm.base.betas, [-1.0, 1.0])

    def test_idempotent(self, rng):
        for _ in range(50):
            model = random_factor_instance(rng)
            once = canonicalize(model)
            twice = canonicalize(once.base)
            assert not twice.flipped
            assert np.array_equal(once.base.betas, twice.base.betas)
            assert np.array_equal(once.base.delta2s, twice.base.delta2s)
            assert np.array_equal(
                np.asarray(once.prefix_s1), np.asarray(twice.prefix_s1)
            )
            assert np.array_equal(
                np.asarray(once.prefix_s2), np.asarray(twice.prefix_s2)
            )

    def test_negation_gives_same_content(self, rng):
        for _ in range(50):
            model = random_factor_instance(rng)
            mirrored = FactorModel(model.sigma2, -model.betas, model.delta2s)
            a = canonicalize(model)
            b = canonicalize(mirrored)
            assert np.array_equal(a.base.betas, b.base.betas)
            assert np.array_equal(a.base.delta2s, b.base.delta2s)
            assert np.array_equal(np.asarray(a.prefix_s1), np.asarray(b.prefix_s1))

    def test_prefix_invariants(self, rng):
        for _ in range(50):
            sm = canonicalize(random_factor_instance(rng))
            s1 = np.asarray(sm.prefix_s1, dtype=float)
            s2 = np.asarray(sm.prefix_s2, dtype=float)
            assert s1[-1] >= 0.0
            assert np.all(np.diff(s2) >= -1e-18)
            assert np.all(np.diff(sm.base.betas) >= 0.0)
            assert sorted(sm.perm.tolist()) == list(range(sm.p))
            # each increment recovers beta^2/delta2 up to round-off
            increments = np.diff(s2, prepend=0.0)
            expected = sm.base.betas**2 / sm.base.delta2s
            assert np.allclose(increments, expected, rtol=1e-10, atol=1e-12)


class TestCovarianceView:
    def test_entries(self):
        view = CovarianceView(FactorModel(1.0, [1.0, 2.0], [0.5, 0.5]))
        assert covariance_entry(view, 0, 0) == pytest.approx(1.5)
        assert covariance_entry(view, 0, 1) == pytest.approx(2.0)
        assert covariance_entry(view, 1, 1) == pytest.approx(4.5)

    def test_index_out_of_range(self):
        view = CovarianceView(simple_model())
        with pytest.raises(IndexError):
            view.entry(0, 3)

    def test_materialize_matches_entries(self):
        model = simple_model(sigma2=2.0, delta2s=[0.5, 1.0, 2.0])
        view = CovarianceView(model)
        dense = view.materialize()
        for i in range(3):
            for j in range(3):
                assert dense[i, j] == pytest.approx(view.entry(i, j))
        assert np.array_equal(dense, dense.T)
        np.linalg.cholesky(dense)

    def test_materialize_respects_cap(self):
        model = FactorModel(1.0, np.arange(1, 12, dtype=float), np.ones(11))
        view = CovarianceView(model, dense_cap=10)
        with pytest.raises(ValueError):
            view.materialize()

    def test_accepts_sorted_model(self):
        sm = canonicalize(simple_model())
        view = CovarianceView(sm)
        assert view.entry(0, 0) == pytest.approx(2.0)
