"""CHSH evaluation and maximization, plus the squared-total-spin covariance
demonstration for two spin-1/2 sites.

Measurement settings are restricted to the z-x plane: for states with real
correlation matrices (the singlet, the Werner family, and every diagonal
mixture used here) the planar optimum coincides with the global one, and the
four-angle search then factorizes into two independent one-angle problems per
pair of receiver angles, which keeps a 1-degree scan cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .hilbert import (
    DensityOperator,
    DimensionMismatchError,
    HermitianOperator,
    IDENTITY_2,
    PAULI_X,
    PAULI_Z,
    eigen_hermitian,
    expectation,
)

CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
CLASSICAL_TOL = 1e-9
TSIRELSON_TOL = 1e-6
SPECTRUM_TOL = 1e-10


@dataclass(frozen=True)
class MeasurementSetting:
    """Single-site observable whose spectrum is confined to [-bound, bound]."""

    observable: HermitianOperator
    spectrum_bound: float = 1.0

    def __post_init__(self):
        values, _ = eigen_hermitian(self.observable)
        limit = self.spectrum_bound + SPECTRUM_TOL
        if values[0] < -limit or values[-1] > limit:
            raise ValueError(
                f"setting spectrum [{values[0]:.6f}, {values[-1]:.6f}] exceeds "
                f"bound {self.spectrum_bound}"
            )

    @property
    def dim(self) -> int:
        return self.observable.dim


@dataclass(frozen=True)
class CHSHConfig:
    """The four settings entering the CHSH expression: a, a' on site 0 and b, b' on site 1."""

    a: MeasurementSetting
    a_prime: MeasurementSetting
    b: MeasurementSetting
    b_prime: MeasurementSetting


@dataclass(frozen=True)
class CHSHReport:
    e_ab: float
    e_ab_prime: float
    e_a_prime_b: float
    e_a_prime_b_prime: float
    s_value: float
    classical_bound_violated: bool
    tsirelson_exceeded: bool


def _pair_correlation(rho: DensityOperator, left: MeasurementSetting, right: MeasurementSetting) -> float:
    return expectation(rho, HermitianOperator(np.kron(left.observable.matrix, right.observable.matrix)))


def chsh_s(e_ab: float, e_ab_prime: float, e_a_prime_b: float, e_a_prime_b_prime: float) -> float:
    """The CHSH combination |E(AB) - E(AB')| + |E(A'B) + E(A'B')|."""
    return abs(e_ab - e_ab_prime) + abs(e_a_prime_b + e_a_prime_b_prime)


def chsh_value(rho: DensityOperator, cfg: CHSHConfig) -> CHSHReport:
    """Evaluate the CHSH expression for a bipartite state at fixed settings."""
    if rho.structure.n_factors != 2:
        raise DimensionMismatchError("CHSH requires a bipartite state")
    d0, d1 = rho.structure.factor_dims
    for setting, want in ((cfg.a, d0), (cfg.a_prime, d0), (cfg.b, d1), (cfg.b_prime, d1)):
        if setting.dim != want:
            raise DimensionMismatchError(
                f"setting dim {setting.dim} incompatible with factor dim {want}"
            )
    e_ab = _pair_correlation(rho, cfg.a, cfg.b)
    e_ab_prime = _pair_correlation(rho, cfg.a, cfg.b_prime)
    e_a_prime_b = _pair_correlation(rho, cfg.a_prime, cfg.b)
    e_a_prime_b_prime = _pair_correlation(rho, cfg.a_prime, cfg.b_prime)
    s = chsh_s(e_ab, e_ab_prime, e_a_prime_b, e_a_prime_b_prime)
    return CHSHReport(
        e_ab=e_ab,
        e_ab_prime=e_ab_prime,
        e_a_prime_b=e_a_prime_b,
        e_a_prime_b_prime=e_a_prime_b_prime,
        s_value=s,
        classical_bound_violated=s > CLASSICAL_BOUND + CLASSICAL_TOL,
        tsirelson_exceeded=s > TSIRELSON_BOUND + TSIRELSON_TOL,
    )


def planar_spin_setting(theta: float) -> MeasurementSetting:
    """Spin observable cos(theta) sigma_z + sin(theta) sigma_x; eigenvalues +-1."""
    obs = HermitianOperator(math.cos(theta) * PAULI_Z + math.sin(theta) * PAULI_X)
    return MeasurementSetting(obs)


def _planar_correlation_grid(rho: DensityOperator, thetas: np.ndarray) -> np.ndarray:
    """E(theta_a, theta_b) over the grid, via the 2x2 z-x correlation block."""
    t = np.empty((2, 2))
    paulis = (PAULI_Z, PAULI_X)
    for i, si in enumerate(paulis):
        for j, sj in enumerate(paulis):
            t[i, j] = expectation(rho, HermitianOperator(np.kron(si, sj)))
    u = np.column_stack([np.cos(thetas), np.sin(thetas)])
    return u @ t @ u.T


def maximize_chsh(
    rho: DensityOperator, grid_step: float = math.pi / 180.0
) -> tuple[CHSHConfig, float]:
    """Best CHSH value over planar settings on a uniform angle grid.

    The CHSH expression splits as max_a |E(a,b)-E(a,b')| + max_a' |E(a',b)+E(a',b')|
    for each receiver pair (b, b'), so the search is quadratic rather than
    quartic in the grid size.  Ties resolve to the lexicographically smallest
    (a, a', b, b') tuple.
    """
    if rho.structure.factor_dims != (2, 2):
        raise DimensionMismatchError("grid maximization expects a two-qubit state")
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    n = max(4, int(round(2.0 * math.pi / grid_step)))
    thetas = np.arange(n) * grid_step
    e = _planar_correlation_grid(rho, thetas)

    chunk = max(1, min(n, (1 << 22) // max(n * n, 1)))
    m_diff = np.empty((n, n))
    m_sum = np.empty((n, n))
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        block = np.abs(e[:, lo:hi, None] - e[:, None, :])
        m_diff[lo:hi, :] = block.max(axis=0)
        block = np.abs(e[:, lo:hi, None] + e[:, None, :])
        m_sum[lo:hi, :] = block.max(axis=0)
    s_best = float((m_diff + m_sum).max())

    # lexicographic tie-break, one coordinate at a time
    idx_a = 0
    for idx_a in range(n):
        d1 = np.abs(e[idx_a, :, None] - e[idx_a, None, :])
        if float((d1 + m_sum).max()) == s_best:
            break
    d1 = np.abs(e[idx_a, :, None] - e[idx_a, None, :])
    idx_a2 = 0
    for idx_a2 in range(n):
        d2 = np.abs(e[idx_a2, :, None] + e[idx_a2, None, :])
        if float((d1 + d2).max()) == s_best:
            break
    d2 = np.abs(e[idx_a2, :, None] + e[idx_a2, None, :])
    flat = np.flatnonzero((d1 + d2).ravel() == s_best)
    idx_b, idx_b2 = divmod(int(flat[0]), n)

    cfg = CHSHConfig(
        a=planar_spin_setting(float(thetas[idx_a])),
        a_prime=planar_spin_setting(float(thetas[idx_a2])),
        b=planar_spin_setting(float(thetas[idx_b])),
        b_prime=planar_spin_setting(float(thetas[idx_b2])),
    )
    return cfg, s_best


def total_spin_squared(axis: str) -> HermitianOperator:
    """(S_axis (x) I + I (x) S_axis)^2 for two spin-1/2 sites, with S = sigma/2."""
    if axis == "z":
        local = PAULI_Z / 2.0
    elif axis == "x":
        local = PAULI_X / 2.0
    else:
        raise ValueError(f"axis must be 'z' or 'x', got {axis!r}")
    total = np.kron(local, IDENTITY_2) + np.kron(IDENTITY_2, local)
    return HermitianOperator(total @ total)


class TorreSpinCovariance(NamedTuple):
    covariance: float
    commutator_norm: float


def torre_spin_covariance(rho: DensityOperator) -> TorreSpinCovariance:
    """Covariance of the squared total-spin observables along z and x.

    These need not commute in general, so the joint moment uses the
    symmetrized (Jordan) product and the commutator norm is reported next to
    the value.
    """
    if rho.dim != 4:
        raise DimensionMismatchError("squared-spin covariance is defined for two qubits")
    f = total_spin_squared("z").matrix
    g = total_spin_squared("x").matrix
    sym = HermitianOperator((f @ g + g @ f) / 2.0)
    value = (
        expectation(rho, sym)
        - expectation(rho, HermitianOperator(f)) * expectation(rho, HermitianOperator(g))
    )
    comm_norm = float(np.abs(f @ g - g @ f).max())
    return TorreSpinCovariance(covariance=value, commutator_norm=comm_norm)
