"""Dice ensemble exactness, sampler contracts, and the hidden-variable bridge
into the diagonal convex-sum embedding."""

import time
from fractions import Fraction

import numpy as np
import pytest

from entcert.classical_models import (
    D1,
    D2,
    DicePairEnsemble,
    DiceType,
    FiniteLHVModel,
    analytic_moments,
    analytic_sems,
    dice_lhv_model,
    lhv_correlation,
    lhv_to_convex_sum,
    outcome_observable,
    paper_dice_ensemble,
    sample,
    sample_range,
)
from entcert.hilbert import HermitianOperator, conditional_covariance, lift_local
from entcert.rng import derive_seed
from entcert.states import negativity, to_density
from entcert.inequalities import chsh_s


class TestAnalyticMoments:
    def test_headline_ensemble_is_exact(self):
        m = analytic_moments(paper_dice_ensemble())
        assert m.e_a == Fraction(5, 8)
        assert m.e_b == Fraction(5, 8)
        assert m.e_ab == Fraction(19, 48)
        assert m.covariance == Fraction(1, 192)

    def test_single_pair_has_zero_covariance(self):
        e = DicePairEnsemble(((Fraction(1), D1, D1),))
        assert analytic_moments(e).covariance == 0

    def test_weights_must_sum_exactly(self):
        with pytest.raises(ValueError):
            DicePairEnsemble(((Fraction(1, 4), D1, D1), (Fraction(1, 2), D2, D2)))

    def test_dice_probability_range(self):
        DiceType(Fraction(1))  # deterministic faces allowed
        DiceType(Fraction(0))
        with pytest.raises(ValueError):
            DiceType(Fraction(3, 2))


class TestSampler:
    def test_same_seed_reproduces(self):
        e = paper_dice_ensemble()
        assert np.array_equal(sample(e, 1000, 5), sample(e, 1000, 5))

    def test_different_seed_differs(self):
        e = paper_dice_ensemble()
        assert not np.array_equal(sample(e, 1000, 5), sample(e, 1000, 6))

    def test_partitioning_does_not_change_the_sequence(self):
        e = paper_dice_ensemble()
        full = sample(e, 1001, 9)
        pieces = np.concatenate(
            [sample_range(e, 0, 400, 9), sample_range(e, 400, 900, 9), sample_range(e, 900, 1001, 9)]
        )
        assert np.array_equal(full, pieces)

    def test_degenerate_dice_give_constant_pairs(self):
        ones = DiceType(Fraction(1))
        e = DicePairEnsemble(((Fraction(1), ones, ones),))
        draws = sample(e, 500, 3)
        assert (draws == 1).all()

    def test_zero_trials_rejected(self):
        with pytest.raises(ValueError):
            sample(paper_dice_ensemble(), 0, 1)

    def test_million_roll_means_within_four_sem(self):
        e = paper_dice_ensemble()
        m = analytic_moments(e)
        sems = analytic_sems(e, 10**6)
        draws = sample(e, 10**6, derive_seed(2024, 0))
        a = draws[:, 0].astype(float)
        b = draws[:, 1].astype(float)
        assert abs(a.mean() - float(m.e_a)) <= 4 * sems.sem_a
        assert abs(b.mean() - float(m.e_b)) <= 4 * sems.sem_b
        assert abs((a * b).mean() - float(m.e_ab)) <= 4 * sems.sem_ab


class TestEstimatorConsistency:
    def test_covariance_estimator_within_five_sem(self):
        # 100 seeded repetitions at n = 10^6; the delta-method SEM comes from
        # exact rational moments of the influence function
        e = paper_dice_ensemble()
        target = float(analytic_moments(e).covariance)
        sem = analytic_sems(e, 10**6).sem_cov
        hits = 0
        for rep in range(100):
            draws = sample(e, 10**6, derive_seed(777, rep))
            a = draws[:, 0].astype(float)
            b = draws[:, 1].astype(float)
            cov = (a * b).mean() - a.mean() * b.mean()
            hits += abs(cov - target) <= 5 * sem
        assert hits >= 99


class TestLHVModel:
    def test_validation(self):
        with pytest.raises(ValueError):
            FiniteLHVModel(np.array([0.5, 0.4]), np.array([0.5, 0.5]), np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            FiniteLHVModel(np.array([0.5, 0.5]), np.array([1.5, 0.5]), np.array([0.5, 0.5]))

    def test_dice_model_moments_match_fractions(self):
        model = dice_lhv_model(paper_dice_ensemble())
        e_a, e_b, e_ab = model.moments()
        assert e_a == pytest.approx(float(Fraction(5, 8)), abs=1e-15)
        assert e_b == pytest.approx(float(Fraction(5, 8)), abs=1e-15)
        assert e_ab == pytest.approx(float(Fraction(19, 48)), abs=1e-15)


class TestConvexSumBridge:
    def _lifted_outcomes(self, structure):
        a = lift_local(outcome_observable(), 0, structure)
        b = lift_local(outcome_observable(), 1, structure)
        return a, b

    def test_dice_covariance_through_quantum_path(self):
        s = lhv_to_convex_sum(dice_lhv_model(paper_dice_ensemble()))
        rho = to_density(s)
        a, b = self._lifted_outcomes(rho.structure)
        cov = conditional_covariance(rho, a, b)
        assert abs(cov - float(Fraction(1, 192))) <= 1e-12

    def test_dice_embedding_is_ppt(self):
        s = lhv_to_convex_sum(dice_lhv_model(paper_dice_ensemble()))
        assert s.n_terms == 2
        assert negativity(to_density(s)) <= 1e-9

    def test_single_lambda_gives_product_state(self):
        model = FiniteLHVModel(np.array([1.0]), np.array([0.3]), np.array([0.9]))
        s = lhv_to_convex_sum(model)
        assert s.n_terms == 1
        rho = to_density(s)
        assert negativity(rho) <= 1e-12
        assert np.allclose(
            rho.matrix, np.kron(np.diag([0.7, 0.3]), np.diag([0.1, 0.9])), atol=1e-15
        )

    def test_moment_bridge_on_random_models(self):
        rng = np.random.default_rng(83)
        for _ in range(50):
            k = int(rng.integers(1, 7))
            w = rng.random(k) + 1e-6
            w /= w.sum()
            model = FiniteLHVModel(w, rng.random(k), rng.random(k))
            rho = to_density(lhv_to_convex_sum(model))
            a, b = self._lifted_outcomes(rho.structure)
            e_a, e_b, e_ab = model.moments()
            from entcert.hilbert import expectation

            assert abs(expectation(rho, a) - e_a) <= 1e-12
            assert abs(expectation(rho, b) - e_b) <= 1e-12
            joint = HermitianOperator(a.matrix @ b.matrix)
            assert abs(expectation(rho, joint) - e_ab) <= 1e-12


class TestChshTameness:
    def test_random_lhv_models_respect_classical_bound(self):
        # four +-1-mapped settings (two per side) sharing one lambda weight
        rng = np.random.default_rng(89)
        for _ in range(200):
            k = int(rng.integers(1, 9))
            w = rng.random(k) + 1e-9
            w /= w.sum()
            pa, pa2, pb, pb2 = (rng.random(k) for _ in range(4))
            s = chsh_s(
                lhv_correlation(w, pa, pb),
                lhv_correlation(w, pa, pb2),
                lhv_correlation(w, pa2, pb),
                lhv_correlation(w, pa2, pb2),
            )
            assert s <= 2.0 + 1e-9
