"""Finite-sample simulation of a signal/device measurement chain.

A random experiment is modelled by a signal distribution p1(m), a device
distribution p2(n) and an outcome table A(m, n).  The probabilistic model
fixes the moments but not the device's internal protocol, so the same model
is sampled under several protocols: fully independent trials, or blocks that
freeze one side for N2 consecutive outputs.  Blocked sampling produces
samples whose naive standard errors are badly miscalibrated, which is the
failure mode the significance report and design-effect diagnostics expose.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .rng import WORDS_PER_STEP, philox
from .special import norm_sf

DIST_TOL = 1e-12
REJECTION_ALPHAS = (0.05, 0.01, 0.001)


class Variant(enum.Enum):
    IID = "iid"
    BLOCK_FIXED_M = "blockm"
    BLOCK_FIXED_N = "blockn"


@dataclass(frozen=True)
class SignalModel:
    """Signal distribution, device distribution, and the outcome table A(m, n)."""

    p1: np.ndarray
    p2: np.ndarray
    outcome: np.ndarray

    def __post_init__(self):
        p1 = np.asarray(self.p1, dtype=float)
        p2 = np.asarray(self.p2, dtype=float)
        table = np.asarray(self.outcome, dtype=float)
        if p1.ndim != 1 or p2.ndim != 1 or p1.size == 0 or p2.size == 0:
            raise ValueError("p1 and p2 must be non-empty 1-D distributions")
        for name, p in (("p1", p1), ("p2", p2)):
            if (p < 0).any() or abs(p.sum() - 1.0) > DIST_TOL:
                raise ValueError(f"{name} must be non-negative and sum to 1 within {DIST_TOL}")
        if table.shape != (p1.size, p2.size):
            raise ValueError(
                f"outcome table shape {table.shape} must cover every (m, n) pair "
                f"({p1.size}, {p2.size})"
            )
        for name, arr in (("p1", p1), ("p2", p2), ("outcome", table)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def default_loophole_model() -> SignalModel:
    """Frozen demonstration model with a strongly skewed signal distribution.

    m in 0..9 with truncated geometric weights (ratio 1/2), n a fair coin, and
    A(m, n) = (m + 1) n.  Per-block means then depend hard on the frozen m, so
    blocked protocols produce spectacularly non-homogeneous samples.
    """
    raw = 0.5 ** np.arange(10)
    p1 = raw / raw.sum()
    p2 = np.array([0.5, 0.5])
    m_vals = np.arange(1, 11, dtype=float)
    table = np.outer(m_vals, np.array([0.0, 1.0]))
    return SignalModel(p1=p1, p2=p2, outcome=table)


def theoretical_mean(model: SignalModel) -> float:
    """<A> = sum A(m,n) p1(m) p2(n)."""
    return float(model.p1 @ model.outcome @ model.p2)


def theoretical_sd(model: SignalModel) -> float:
    """Population standard deviation of A under the product distribution."""
    mean = theoretical_mean(model)
    second = float(model.p1 @ (model.outcome**2) @ model.p2)
    return math.sqrt(max(second - mean * mean, 0.0))


@dataclass(frozen=True)
class ProtocolSpec:
    """Sampling protocol: block count n1, block length n2, and the variant."""

    variant: Variant
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 1 or self.n2 < 1:
            raise ValueError("n1 and n2 must be positive")
        if self.variant is not Variant.IID and self.n2 <= 1:
            raise ValueError("block protocols require n2 > 1")

    @property
    def total(self) -> int:
        return self.n1 * self.n2

    @property
    def draws_per_block(self) -> int:
        if self.variant is Variant.IID:
            return 2 * self.n2
        return 1 + self.n2

    @property
    def steps_per_block(self) -> int:
        return -(-self.draws_per_block // WORDS_PER_STEP)


@dataclass(frozen=True)
class RunSample:
    """One generated sample with its block layout and provenance."""

    outcomes: np.ndarray
    block_starts: np.ndarray
    protocol: ProtocolSpec
    seed: int

    def __post_init__(self):
        outcomes = np.asarray(self.outcomes, dtype=float).copy()
        starts = np.asarray(self.block_starts, dtype=np.int64).copy()
        if outcomes.size != self.protocol.total:
            raise ValueError(
                f"sample length {outcomes.size} does not match n1*n2 = {self.protocol.total}"
            )
        expected = np.arange(self.protocol.n1, dtype=np.int64) * self.protocol.n2
        if not np.array_equal(starts, expected):
            raise ValueError("block boundaries inconsistent with the protocol")
        outcomes.setflags(write=False)
        starts.setflags(write=False)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "block_starts", starts)

    @property
    def n(self) -> int:
        return int(self.outcomes.size)

    def blocks(self) -> np.ndarray:
        return self.outcomes.reshape(self.protocol.n1, self.protocol.n2)


def _inverse_cdf(p: np.ndarray, u: np.ndarray) -> np.ndarray:
    cum = np.cumsum(p)
    cum[-1] = 1.0
    return np.searchsorted(cum, u, side="right")


def generate(model: SignalModel, protocol: ProtocolSpec, seed: int) -> RunSample:
    """Sample one run; deterministic in seed and independent of any partitioning."""
    outcomes = generate_block_range(model, protocol, seed, 0, protocol.n1)
    starts = np.arange(protocol.n1, dtype=np.int64) * protocol.n2
    return RunSample(outcomes=outcomes, block_starts=starts, protocol=protocol, seed=int(seed))


def generate_block_range(
    model: SignalModel, protocol: ProtocolSpec, seed: int, start: int, stop: int
) -> np.ndarray:
    """Outcomes of blocks [start, stop), bit-identical to the same slice of a full run.

    Each block occupies a fixed number of Philox counter steps, so workers can
    split a run by block ranges without changing the sequence.
    """
    if not 0 <= start < stop <= protocol.n1:
        raise ValueError(f"invalid block range [{start}, {stop})")
    n_blocks = stop - start
    gen = philox(seed, step_offset=start * protocol.steps_per_block)
    u = gen.random((n_blocks, protocol.steps_per_block * WORDS_PER_STEP))
    n2 = protocol.n2
    if protocol.variant is Variant.IID:
        m_idx = _inverse_cdf(model.p1, u[:, 0 : 2 * n2 : 2])
        n_idx = _inverse_cdf(model.p2, u[:, 1 : 2 * n2 : 2])
    elif protocol.variant is Variant.BLOCK_FIXED_M:
        m_idx = np.broadcast_to(_inverse_cdf(model.p1, u[:, :1]), (n_blocks, n2))
        n_idx = _inverse_cdf(model.p2, u[:, 1 : 1 + n2])
    else:
        n_idx = np.broadcast_to(_inverse_cdf(model.p2, u[:, :1]), (n_blocks, n2))
        m_idx = _inverse_cdf(model.p1, u[:, 1 : 1 + n2])
    return model.outcome[m_idx, n_idx].reshape(-1)


@dataclass(frozen=True)
class SignificanceReport:
    """Naive simple-random-sample significance summary for one run."""

    sample_mean: float
    theoretical_mean: float
    ratio: float
    naive_sem: float
    z_score: float
    h0_rejected_at: tuple[tuple[float, bool], ...]


def test_h0(sample: RunSample, model: SignalModel) -> SignificanceReport:
    """Test H0: sample mean consistent with the model mean, treating the
    sample as simple-random.

    The rejection flags are one-sided (sample mean above the model mean), the
    direction in which the blocked protocols blow up.  With a degenerate
    (constant) sample the naive SEM is zero and the z-score is zero when the
    means agree and +-inf otherwise.
    """
    if sample.n == 0:
        raise ValueError("empty sample")
    outcomes = sample.outcomes
    mean_s = float(outcomes.mean())
    theo = theoretical_mean(model)
    sd = float(outcomes.std(ddof=1)) if sample.n > 1 else 0.0
    sem = sd / math.sqrt(sample.n)
    if sem > 0.0:
        z = (mean_s - theo) / sem
    elif mean_s == theo:
        z = 0.0
    else:
        z = math.copysign(math.inf, mean_s - theo)
    ratio = mean_s / theo if theo != 0.0 else math.nan
    flags = tuple((alpha, norm_sf(z) < alpha) for alpha in REJECTION_ALPHAS)
    return SignificanceReport(
        sample_mean=mean_s,
        theoretical_mean=theo,
        ratio=ratio,
        naive_sem=sem,
        z_score=z,
        h0_rejected_at=flags,
    )


def design_effect(samples: list[RunSample]) -> float:
    """Ratio of the observed variance of run means to the naive SEM^2 average.

    Close to 1 for simple random sampling; grows like 1 + (N2 - 1) ICC when
    blocks share a frozen signal value.
    """
    if len(samples) < 30:
        raise ValueError(f"need at least 30 runs to estimate a design effect, got {len(samples)}")
    means = np.array([s.outcomes.mean() for s in samples])
    naive_var = np.array(
        [s.outcomes.var(ddof=1) / s.n if s.n > 1 else 0.0 for s in samples]
    )
    denom = float(naive_var.mean())
    if denom == 0.0:
        raise ValueError("all runs are constant; design effect undefined")
    return float(means.var(ddof=1)) / denom


def variance_decomposition(model: SignalModel, variant: Variant) -> tuple[float, float]:
    """(between-block, within-block) variance of A under the given protocol.

    Between is the variance of the conditional mean given the frozen side;
    within is the expected conditional variance.  IID has no frozen side.
    """
    table = model.outcome
    if variant is Variant.IID:
        return 0.0, theoretical_sd(model) ** 2
    if variant is Variant.BLOCK_FIXED_M:
        cond_mean = table @ model.p2
        cond_second = (table**2) @ model.p2
        weights = model.p1
    else:
        cond_mean = table.T @ model.p1
        cond_second = (table.T**2) @ model.p1
        weights = model.p2
    grand = float(weights @ cond_mean)
    between = float(weights @ (cond_mean - grand) ** 2)
    within = float(weights @ (cond_second - cond_mean**2))
    return between, within


def predicted_design_effect(model: SignalModel, protocol: ProtocolSpec) -> float:
    """1 + (N2 - 1) ICC with ICC = between / (between + within)."""
    between, within = variance_decomposition(model, protocol.variant)
    total = between + within
    if total == 0.0:
        return 1.0
    return 1.0 + (protocol.n2 - 1) * between / total


def predicted_mean_sd(model: SignalModel, protocol: ProtocolSpec) -> float:
    """Standard deviation of the run mean under the true blocked dependence."""
    between, within = variance_decomposition(model, protocol.variant)
    return math.sqrt(between / protocol.n1 + within / (protocol.n1 * protocol.n2))
