"""Classical local models that mimic quantum correlations: the two-dice
ensemble with exact rational moments, general finite stochastic
hidden-variable models, and their embedding as diagonal convex-sum states.

Analytic dice moments are kept in exact rational arithmetic; the headline
values are fractions and should survive as such all the way into reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .hilbert import DensityOperator, HermitianOperator, density
from .rng import philox
from .states import ConvexSumState

#: Per-trial layout in the Philox stream: pair pick, left roll, right roll, one pad word.
DRAWS_PER_TRIAL = 4


@dataclass(frozen=True)
class DiceType:
    """A die labelled with 0/1 faces; success_probability = P(face shows 1).

    Degenerate dice (all faces equal) are allowed; they are useful as
    deterministic limits in tests.
    """

    success_probability: Fraction

    def __post_init__(self):
        p = Fraction(self.success_probability)
        if not 0 <= p <= 1:
            raise ValueError(f"success probability must lie in [0, 1], got {p}")
        object.__setattr__(self, "success_probability", p)


#: 1 written on three of six faces.
D1 = DiceType(Fraction(1, 2))
#: 1 written on four of six faces.
D2 = DiceType(Fraction(2, 3))


@dataclass(frozen=True)
class DicePairEnsemble:
    """Mixture of dice pairs shipped to the two parties."""

    pair_weights: tuple[tuple[Fraction, DiceType, DiceType], ...]

    def __post_init__(self):
        pairs = tuple((Fraction(w), l, r) for w, l, r in self.pair_weights)
        if not pairs:
            raise ValueError("ensemble needs at least one pair type")
        total = sum(w for w, _, _ in pairs)
        if total != 1:
            raise ValueError(f"weights must sum exactly to 1, got {total}")
        if any(w <= 0 for w, _, _ in pairs):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "pair_weights", pairs)


def paper_dice_ensemble() -> DicePairEnsemble:
    """(D1, D1) with weight 1/4 and (D2, D2) with weight 3/4."""
    return DicePairEnsemble(((Fraction(1, 4), D1, D1), (Fraction(3, 4), D2, D2)))


class DiceMoments(NamedTuple):
    e_a: Fraction
    e_b: Fraction
    e_ab: Fraction
    covariance: Fraction


def analytic_moments(ensemble: DicePairEnsemble) -> DiceMoments:
    """Exact mixture moments; rolls are independent within each pair type."""
    e_a = Fraction(0)
    e_b = Fraction(0)
    e_ab = Fraction(0)
    for w, left, right in ensemble.pair_weights:
        pl = left.success_probability
        pr = right.success_probability
        e_a += w * pl
        e_b += w * pr
        e_ab += w * pl * pr
    return DiceMoments(e_a, e_b, e_ab, e_ab - e_a * e_b)


class DiceSems(NamedTuple):
    sem_a: float
    sem_b: float
    sem_ab: float
    sem_cov: float


def analytic_sems(ensemble: DicePairEnsemble, n: int) -> DiceSems:
    """Standard errors of the four Monte Carlo estimators at sample size n.

    Means of 0/1 variables have Bernoulli variance; the covariance estimator's
    variance comes from its influence function AB - E(B) A - E(A) B, whose
    moments are exact rationals for dice outcomes.
    """
    if n < 1:
        raise ValueError("sample size must be at least 1")
    m = analytic_moments(ensemble)
    var_a = m.e_a * (1 - m.e_a)
    var_b = m.e_b * (1 - m.e_b)
    var_ab = m.e_ab * (1 - m.e_ab)
    e_if = m.e_ab - 2 * m.e_a * m.e_b
    e_if2 = (
        m.e_ab
        + m.e_b**2 * m.e_a
        + m.e_a**2 * m.e_b
        - 2 * m.e_b * m.e_ab
        - 2 * m.e_a * m.e_ab
        + 2 * m.e_a * m.e_b * m.e_ab
    )
    var_cov = e_if2 - e_if**2
    return DiceSems(
        sem_a=math.sqrt(float(var_a) / n),
        sem_b=math.sqrt(float(var_b) / n),
        sem_ab=math.sqrt(float(var_ab) / n),
        sem_cov=math.sqrt(float(var_cov) / n),
    )


def sample(ensemble: DicePairEnsemble, n: int, seed: int) -> np.ndarray:
    """n paired rolls as an (n, 2) array of 0/1 outcomes, deterministic in seed.

    Each trial consumes one Philox counter step (DRAWS_PER_TRIAL doubles), so
    ``sample_range`` reproduces any sub-range of the same sequence exactly.
    """
    if n < 1:
        raise ValueError("need at least one trial")
    return sample_range(ensemble, 0, n, seed)


def sample_range(ensemble: DicePairEnsemble, start: int, stop: int, seed: int) -> np.ndarray:
    """Trials [start, stop) of the sequence that ``sample`` produces for this seed."""
    if not 0 <= start < stop:
        raise ValueError(f"invalid trial range [{start}, {stop})")
    cum = np.cumsum([float(w) for w, _, _ in ensemble.pair_weights])
    cum[-1] = 1.0
    p_left = np.array([float(l.success_probability) for _, l, _ in ensemble.pair_weights])
    p_right = np.array([float(r.success_probability) for _, _, r in ensemble.pair_weights])
    u = philox(seed, step_offset=start).random((stop - start, DRAWS_PER_TRIAL))
    pair_idx = np.searchsorted(cum, u[:, 0], side="right")
    out = np.empty((stop - start, 2), dtype=np.uint8)
    out[:, 0] = u[:, 1] < p_left[pair_idx]
    out[:, 1] = u[:, 2] < p_right[pair_idx]
    return out


@dataclass(frozen=True)
class FiniteLHVModel:
    """Finite local stochastic hidden-variable model.

    A hidden value lambda is drawn with ``lambda_weights``; each side then
    outputs 1 with its own per-lambda probability, independently.
    """

    lambda_weights: np.ndarray
    response_a: np.ndarray
    response_b: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.lambda_weights, dtype=float)
        pa = np.asarray(self.response_a, dtype=float)
        pb = np.asarray(self.response_b, dtype=float)
        if not (w.shape == pa.shape == pb.shape) or w.ndim != 1 or w.size == 0:
            raise ValueError("weights and responses must be equal-length 1-D arrays")
        if abs(w.sum() - 1.0) > 1e-12 or (w < 0).any():
            raise ValueError("lambda weights must be non-negative and sum to 1")
        if (pa < 0).any() or (pa > 1).any() or (pb < 0).any() or (pb > 1).any():
            raise ValueError("response probabilities must lie in [0, 1]")
        for name, arr in (("lambda_weights", w), ("response_a", pa), ("response_b", pb)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def moments(self) -> tuple[float, float, float]:
        """(E_A, E_B, E_AB) under the model; sides are independent given lambda."""
        w, pa, pb = self.lambda_weights, self.response_a, self.response_b
        return float(w @ pa), float(w @ pb), float(w @ (pa * pb))


def dice_lhv_model(ensemble: DicePairEnsemble) -> FiniteLHVModel:
    """The dice ensemble read as an LHV model: lambda = which pair type was sent."""
    return FiniteLHVModel(
        lambda_weights=np.array([float(w) for w, _, _ in ensemble.pair_weights]),
        response_a=np.array([float(l.success_probability) for _, l, _ in ensemble.pair_weights]),
        response_b=np.array([float(r.success_probability) for _, _, r in ensemble.pair_weights]),
    )


def outcome_observable() -> HermitianOperator:
    """Observable reading off the recorded outcome: diag(0, 1) on one site."""
    return HermitianOperator(np.diag([0.0, 1.0]).astype(complex))


def _bernoulli_density(p: float) -> DensityOperator:
    return density(np.diag([1.0 - p, p]).astype(complex), (2,))


def lhv_to_convex_sum(model: FiniteLHVModel) -> ConvexSumState:
    """Embed the model as a diagonal convex sum of product states.

    Outcome 0 maps to the first basis vector and 1 to the second, so the
    expectation of diag(0,1) on either side reproduces the model's outcome
    probabilities exactly.
    """
    terms = tuple(
        (float(w), _bernoulli_density(float(pa)), _bernoulli_density(float(pb)))
        for w, pa, pb in zip(model.lambda_weights, model.response_a, model.response_b)
    )
    return ConvexSumState(terms)


def lhv_correlation(weights, response_left, response_right) -> float:
    """Correlation of the +-1-mapped outcomes for one setting pair.

    E(XY) = sum_lambda w (2 p_x - 1)(2 p_y - 1), the building block of the
    CHSH combination for any local stochastic model.
    """
    w = np.asarray(weights, dtype=float)
    pl = np.asarray(response_left, dtype=float)
    pr = np.asarray(response_right, dtype=float)
    return float(w @ ((2.0 * pl - 1.0) * (2.0 * pr - 1.0)))
