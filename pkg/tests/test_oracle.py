import numpy as np
import pytest

from lomv import (
    DenseCovariance,
    covariance_from_model,
    oracle_restricted_weights,
    oracle_solve,
    solve_lomv,
    verify_kkt,
)
from lomv.oracle import random_factor_instance

from conftest import simple_model


class TestDenseCovariance:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            DenseCovariance(np.array([[1.0, 0.5], [0.1, 1.0]]))

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError, match="positive definite"):
            DenseCovariance(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            DenseCovariance(np.ones((2, 3)))


class TestOracleSolve:
    def test_single_asset(self):
        result = oracle_solve(DenseCovariance(np.array([[2.5]])))
        assert np.array_equal(result.weights, [1.0])
        assert result.variance == pytest.approx(2.5)
        assert result.candidates_examined == 1

    def test_diagonal_two_assets(self):
        result = oracle_solve(DenseCovariance(np.diag([1.0, 3.0])))
        assert np.allclose(result.weights, [0.75, 0.25])
        assert result.variance == pytest.approx(0.75)
        assert result.candidates_examined == 3

    def test_matches_closed_form_solver(self):
        model = simple_model()
        result = oracle_solve(covariance_from_model(model))
        assert np.allclose(result.weights, [1.0, 0.0, 0.0], atol=1e-12)
        assert result.active_set == frozenset({0})
        assert result.candidates_examined == 7

    def test_rejects_oversized(self):
        cov = DenseCovariance(np.eye(4))
        with pytest.raises(ValueError, match="cap"):
            oracle_solve(cov, subset_cap=3)

    def test_winner_passes_kkt(self, rng):
        for _ in range(50):
            model = random_factor_instance(rng, p_max=7)
            result = oracle_solve(covariance_from_model(model))
            assert verify_kkt(model, result.weights, 1e-8).passed

    def test_adding_an_asset_never_hurts(self, rng):
        for _ in range(50):
            model = random_factor_instance(rng, p_max=7, p_min=2)
            full = oracle_solve(covariance_from_model(model))
            keep = list(range(model.p - 1))
            reduced = oracle_solve(
                DenseCovariance(
                    covariance_from_model(model).entries[np.ix_(keep, keep)]
                )
            )
            assert full.variance <= reduced.variance + 1e-12

    def test_agreement_with_solver(self, rng):
        for _ in range(200):
            model = random_factor_instance(rng)
            sol = solve_lomv(model)
            ref = oracle_solve(covariance_from_model(model))
            assert sol.active_original_indices == ref.active_set
            assert np.max(np.abs(sol.weights - ref.weights)) < 1e-9
            assert sol.variance == pytest.approx(ref.variance, rel=1e-12)


class TestRestrictedWeights:
    def test_full_subset_diagonal(self):
        cov = DenseCovariance(np.diag([1.0, 2.0, 4.0]))
        weights = oracle_restricted_weights(cov, {0, 1, 2})
        assert np.allclose(weights, [4 / 7, 2 / 7, 1 / 7])

    def test_singleton(self):
        cov = DenseCovariance(np.diag([1.0, 2.0, 4.0]))
        assert np.array_equal(oracle_restricted_weights(cov, [0]), [1.0, 0.0, 0.0])

    def test_infeasible_subset_returns_none(self):
        model = simple_model(betas=(1.0, 2.0), delta2s=(0.01, 0.01))
        cov = covariance_from_model(model)
        assert oracle_restricted_weights(cov, [0, 1]) is None

    def test_empty_subset_rejected(self):
        with pytest.raises(ValueError):
            oracle_restricted_weights(DenseCovariance(np.eye(2)), [])

    def test_out_of_range_rejected(self):
        with pytest.raises(IndexError):
            oracle_restricted_weights(DenseCovariance(np.eye(2)), [0, 5])
