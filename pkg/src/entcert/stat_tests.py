"""Homogeneity and independence diagnostics for finite samples.

A sample qualifies as simple-random when trials are independent and
identically distributed; the battery here probes both conditions from four
angles: a contingency chi-square across bins, a two-sample KS between sample
halves, a one-way dispersion scan of bin means, and a lag-1 autocorrelation
check.  The audit aggregates them with a Bonferroni correction, which is
conservative but deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .special import chi2_sf, f_sf, kolmogorov_sf, norm_sf

MIN_EXPECTED_COUNT = 5.0
MAX_DISCRETE_CATEGORIES = 30
QUANTILE_CATEGORIES = 10


class DegenerateBinsError(ValueError):
    """Bins carry no within-bin variance, so a dispersion ratio is undefined."""


@dataclass(frozen=True)
class BinnedSample:
    """A sample partitioned into bins; every outcome sits in exactly one bin."""

    bins: tuple[np.ndarray, ...]
    binning: str  # "contiguous-equal" or "by-block"

    def __post_init__(self):
        if len(self.bins) < 2:
            raise ValueError("need at least 2 bins")
        if self.binning not in ("contiguous-equal", "by-block"):
            raise ValueError(f"unknown binning {self.binning!r}")
        frozen = []
        for b in self.bins:
            arr = np.asarray(b, dtype=float).copy()
            if arr.size == 0:
                raise ValueError("bins must be non-empty")
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "bins", tuple(frozen))

    @classmethod
    def from_contiguous(cls, outcomes, bin_count: int) -> "BinnedSample":
        arr = np.asarray(outcomes, dtype=float)
        if bin_count < 2:
            raise ValueError("need at least 2 bins")
        if arr.size < bin_count:
            raise ValueError("fewer outcomes than bins")
        return cls(bins=tuple(np.array_split(arr, bin_count)), binning="contiguous-equal")

    @classmethod
    def from_blocks(cls, sample) -> "BinnedSample":
        return cls(bins=tuple(sample.blocks()), binning="by-block")

    @property
    def n_total(self) -> int:
        return sum(b.size for b in self.bins)


@dataclass(frozen=True)
class TestResult:
    name: str
    statistic: float
    dof: float | None
    p_value: float


@dataclass(frozen=True)
class HomogeneityReport:
    entries: tuple[TestResult, ...]
    alpha: float
    bonferroni_alpha: float
    overall_homogeneous: bool


def _categorize(bins: tuple[np.ndarray, ...]) -> list[np.ndarray]:
    """Map outcomes to category codes, quantile-bucketing near-continuous data."""
    pooled = np.concatenate(bins)
    values = np.unique(pooled)
    if values.size > MAX_DISCRETE_CATEGORIES:
        edges = np.quantile(pooled, np.linspace(0.0, 1.0, QUANTILE_CATEGORIES + 1)[1:-1])
        edges = np.unique(edges)
        return [np.searchsorted(edges, b, side="right") for b in bins]
    return [np.searchsorted(values, b) for b in bins]


def chi_square_homogeneity(binned: BinnedSample, alpha: float = 0.05) -> TestResult:
    """Contingency chi-square of bins x outcome-categories.

    Rare categories are pooled until every expected cell count reaches 5 (or
    only two categories remain).  A constant sample scores 0 with p = 1.
    """
    codes = _categorize(binned.bins)
    n_cat = int(max(c.max() for c in codes)) + 1
    if n_cat == 1:
        return TestResult(name="chi_square_homogeneity", statistic=0.0, dof=None, p_value=1.0)
    counts = np.zeros((len(binned.bins), n_cat))
    for i, c in enumerate(codes):
        counts[i] = np.bincount(c, minlength=n_cat)

    # pool rarest categories until expected counts are adequate
    while counts.shape[1] > 2:
        col_totals = counts.sum(axis=0)
        row_totals = counts.sum(axis=1)
        expected_min = row_totals.min() * col_totals.min() / counts.sum()
        if expected_min >= MIN_EXPECTED_COUNT:
            break
        order = np.argsort(col_totals, kind="stable")
        keep, absorb = sorted((order[0], order[1]))
        counts[:, keep] += counts[:, absorb]
        counts = np.delete(counts, absorb, axis=1)

    total = counts.sum()
    expected = np.outer(counts.sum(axis=1), counts.sum(axis=0)) / total
    if (expected == 0).any():
        mask = counts.sum(axis=0) > 0
        counts = counts[:, mask]
        expected = np.outer(counts.sum(axis=1), counts.sum(axis=0)) / counts.sum()
    if counts.shape[1] < 2:
        return TestResult(name="chi_square_homogeneity", statistic=0.0, dof=None, p_value=1.0)
    statistic = float(((counts - expected) ** 2 / expected).sum())
    dof = (counts.shape[0] - 1) * (counts.shape[1] - 1)
    return TestResult(
        name="chi_square_homogeneity",
        statistic=statistic,
        dof=float(dof),
        p_value=chi2_sf(statistic, dof),
    )


def ks_two_sample(x, y) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov: max CDF gap and its asymptotic p-value."""
    xs = np.sort(np.asarray(x, dtype=float))
    ys = np.sort(np.asarray(y, dtype=float))
    if xs.size == 0 or ys.size == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([xs, ys])
    cdf_x = np.searchsorted(xs, pooled, side="right") / xs.size
    cdf_y = np.searchsorted(ys, pooled, side="right") / ys.size
    d = float(np.abs(cdf_x - cdf_y).max())
    en = math.sqrt(xs.size * ys.size / (xs.size + ys.size))
    p = kolmogorov_sf((en + 0.12 + 0.11 / en) * d)
    return d, p


@dataclass(frozen=True)
class BlockMeanScan:
    per_bin_means: np.ndarray
    statistic: float
    dof_between: float
    dof_within: float
    p_value: float


def block_mean_scan(binned: BinnedSample) -> BlockMeanScan:
    """One-way dispersion ratio of between-bin to within-bin variance."""
    for b in binned.bins:
        if b.size < 2:
            raise ValueError("every bin needs at least 2 outcomes")
    means = np.array([b.mean() for b in binned.bins])
    sizes = np.array([b.size for b in binned.bins], dtype=float)
    grand = float(np.concatenate(binned.bins).mean())
    ss_between = float(sizes @ (means - grand) ** 2)
    ss_within = float(sum(((b - m) ** 2).sum() for b, m in zip(binned.bins, means)))
    df_between = len(binned.bins) - 1
    df_within = int(sizes.sum()) - len(binned.bins)
    if ss_within == 0.0:
        raise DegenerateBinsError("zero within-bin variance everywhere")
    f = (ss_between / df_between) / (ss_within / df_within)
    means_frozen = means.copy()
    means_frozen.setflags(write=False)
    return BlockMeanScan(
        per_bin_means=means_frozen,
        statistic=float(f),
        dof_between=float(df_between),
        dof_within=float(df_within),
        p_value=f_sf(f, df_between, df_within),
    )


def lag1_autocorrelation(outcomes) -> TestResult:
    """Normal z-test of the lag-1 serial correlation being zero."""
    x = np.asarray(outcomes, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 outcomes")
    centered = x - x.mean()
    denom = float(centered @ centered)
    if denom == 0.0:
        return TestResult(name="lag1_autocorrelation", statistic=0.0, dof=None, p_value=1.0)
    r1 = float(centered[:-1] @ centered[1:]) / denom
    z = r1 * math.sqrt(x.size)
    return TestResult(
        name="lag1_autocorrelation",
        statistic=z,
        dof=None,
        p_value=2.0 * norm_sf(abs(z)),
    )


def simple_random_sample_audit(sample, bin_count: int, alpha: float = 0.05) -> HomogeneityReport:
    """Run the full homogeneity battery on one sample.

    ``sample`` is a RunSample or a plain outcome array.  Outcomes are split
    into ``bin_count`` contiguous near-equal bins.  The overall verdict is
    Bonferroni-corrected: inhomogeneous when any test's p < alpha / 4.  A
    constant sample is homogeneous by convention; bins that are individually
    constant but differ between each other count as maximal inhomogeneity.
    """
    outcomes = np.asarray(getattr(sample, "outcomes", sample), dtype=float)
    if outcomes.size < 10 * bin_count:
        raise ValueError(
            f"sample of {outcomes.size} too short for {bin_count} bins "
            f"(need >= {10 * bin_count})"
        )
    if np.all(outcomes == outcomes[0]):
        entries = tuple(
            TestResult(name=name, statistic=0.0, dof=None, p_value=1.0)
            for name in (
                "chi_square_homogeneity",
                "ks_halves",
                "block_mean_scan",
                "lag1_autocorrelation",
            )
        )
        return HomogeneityReport(
            entries=entries,
            alpha=alpha,
            bonferroni_alpha=alpha / len(entries),
            overall_homogeneous=True,
        )

    binned = BinnedSample.from_contiguous(outcomes, bin_count)
    entries = [chi_square_homogeneity(binned, alpha)]

    half = outcomes.size // 2
    d, p = ks_two_sample(outcomes[:half], outcomes[half:])
    entries.append(TestResult(name="ks_halves", statistic=d, dof=None, p_value=p))

    try:
        scan = block_mean_scan(binned)
        entries.append(
            TestResult(
                name="block_mean_scan",
                statistic=scan.statistic,
                dof=scan.dof_between,
                p_value=scan.p_value,
            )
        )
    except DegenerateBinsError:
        entries.append(
            TestResult(name="block_mean_scan", statistic=math.inf, dof=None, p_value=0.0)
        )

    entries.append(lag1_autocorrelation(outcomes))

    bonferroni = alpha / len(entries)
    homogeneous = all(e.p_value >= bonferroni for e in entries)
    return HomogeneityReport(
        entries=tuple(entries),
        alpha=alpha,
        bonferroni_alpha=bonferroni,
        overall_homogeneous=homogeneous,
    )
