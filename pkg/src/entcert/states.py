"""State classes: product states, convex sums of separables, and the named
entangled references (singlet, Werner family), plus the PPT-based
separability detector.

For two qubits the positive-partial-transpose criterion is exact, so
``negativity`` doubles as the separability oracle: it vanishes on every
convex sum of separables and is strictly positive on entangled states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import (
    DensityOperator,
    DimensionMismatchError,
    InvalidStateError,
    density,
    eigen_hermitian,
    partial_transpose,
    pure_state_density,
)

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class ProductState:
    """A fully uncorrelated state: one density operator per site."""

    factors: tuple[DensityOperator, ...]

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise InvalidStateError("a product state needs at least one factor")
        for f in factors:
            if f.structure.n_factors != 1:
                raise InvalidStateError("each factor must carry a single-site structure")
        object.__setattr__(self, "factors", factors)

    def to_density(self) -> DensityOperator:
        out = np.array([[1.0 + 0.0j]])
        dims = []
        for f in self.factors:
            out = np.kron(out, f.matrix)
            dims.append(f.dim)
        return density(out, tuple(dims))


@dataclass(frozen=True)
class ConvexSumState:
    """Weighted mixture of product states: sum_i p_i (rho_i (x) rho~_i)."""

    terms: tuple[tuple[float, DensityOperator, DensityOperator], ...]

    def __post_init__(self):
        terms = tuple((float(p), left, right) for p, left, right in self.terms)
        if not terms:
            raise InvalidStateError("a convex sum needs at least one term")
        weights = [p for p, _, _ in terms]
        if abs(sum(weights) - 1.0) > WEIGHT_TOL:
            raise InvalidStateError(f"weights sum to {sum(weights)!r}, expected 1")
        if len(terms) > 1 and any(not 0.0 < p < 1.0 for p in weights):
            raise InvalidStateError("every weight must lie strictly inside (0, 1)")
        dim_left = terms[0][1].dim
        dim_right = terms[0][2].dim
        for _, left, right in terms:
            if left.dim != dim_left or right.dim != dim_right:
                raise DimensionMismatchError("all terms must share left/right dimensions")
        object.__setattr__(self, "terms", terms)

    @property
    def n_terms(self) -> int:
        return len(self.terms)


def to_density(s: ConvexSumState) -> DensityOperator:
    """Materialize the convex sum as a bipartite density operator."""
    dim_left = s.terms[0][1].dim
    dim_right = s.terms[0][2].dim
    out = np.zeros((dim_left * dim_right, dim_left * dim_right), dtype=complex)
    for p, left, right in s.terms:
        out += p * np.kron(left.matrix, right.matrix)
    return density(out, (dim_left, dim_right))


def singlet() -> DensityOperator:
    """Projector onto (|01> - |10>)/sqrt(2), the two-qubit maximally entangled reference."""
    amp = 1.0 / np.sqrt(2.0)
    return pure_state_density([0.0, amp, -amp, 0.0], (2, 2))


def werner(w: float) -> DensityOperator:
    """w * singlet + (1 - w) * I/4; entangled exactly for w > 1/3."""
    w = float(w)
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"Werner parameter must lie in [0, 1], got {w}")
    mixed = np.eye(4, dtype=complex) / 4.0
    return density(w * singlet().matrix + (1.0 - w) * mixed, (2, 2))


def negativity(rho: DensityOperator) -> float:
    """Sum of |negative eigenvalues| of the partial transpose.

    Zero for every convex sum of separables; for two qubits zero iff separable.
    """
    if rho.structure.n_factors != 2:
        raise DimensionMismatchError("negativity requires a bipartite structure")
    values, _ = eigen_hermitian(partial_transpose(rho, 1))
    return float(-values[values < 0.0].sum())


def random_qubit_pure(rng: np.random.Generator) -> DensityOperator:
    """Pure qubit state from a normalized complex Gaussian vector."""
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return pure_state_density(v, (2,))


def random_qubit_density(rng: np.random.Generator, max_rank: int = 2) -> DensityOperator:
    """Mixed qubit state: convex combination of random pure states."""
    rank = int(rng.integers(1, max_rank + 1))
    weights = rng.random(rank)
    weights /= weights.sum()
    out = np.zeros((2, 2), dtype=complex)
    for w in weights:
        out += w * random_qubit_pure(rng).matrix
    return density(out, (2,))


def random_product_state(rng: np.random.Generator, n_sites: int = 2) -> ProductState:
    return ProductState(tuple(random_qubit_density(rng) for _ in range(n_sites)))


def random_convex_sum(rng: np.random.Generator, max_terms: int = 6) -> ConvexSumState:
    """Random mixture of random qubit product terms (for property tests)."""
    n = int(rng.integers(1, max_terms + 1))
    weights = rng.random(n) + 1e-3
    weights /= weights.sum()
    if n == 1:
        weights = np.array([1.0])
    terms = tuple(
        (float(w), random_qubit_density(rng), random_qubit_density(rng)) for w in weights
    )
    return ConvexSumState(terms)


def random_two_qubit_density(rng: np.random.Generator) -> DensityOperator:
    """Generic mixed two-qubit state from a Gaussian Wishart-like draw."""
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = g @ g.conj().T
    m /= m.trace().real
    return density(m, (2, 2))
