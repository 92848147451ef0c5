"""Exact small-dimension complex linear algebra for bipartite quantum states.

Matrices are dense numpy complex arrays in row-major order.  Operators are
validated at construction (hermiticity, unit trace, positivity) and treated as
immutable afterwards; every operation here is a pure function, so values can
be shared freely between workers.

The eigensolver is a cyclic Jacobi rotation scheme for complex Hermitian
matrices: at the dimensions this package works with (<= 16, with an 8-level
truncation for position-like observables) it converges unconditionally and
keeps the whole trust path inside this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
COMMUTATION_TOL = 1e-10
IMAG_TOL = 1e-10
BILINEAR_TOL = 1e-10

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


class DimensionMismatchError(ValueError):
    """Operands have incompatible shapes or factor dimensions."""


class NonHermitianError(ValueError):
    """Matrix fails the hermiticity tolerance."""


class NonCommutingError(ValueError):
    """Observable pair does not commute, so their joint moment is undefined."""


class InvalidStateError(ValueError):
    """Matrix fails the density-operator invariants."""


class InvariantViolation(RuntimeError):
    """An internal identity that must hold by construction failed."""


def as_matrix(entries) -> np.ndarray:
    """Coerce input to a 2-D complex array, rejecting anything else."""
    m = np.asarray(entries, dtype=complex)
    if m.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def _frozen(m: np.ndarray) -> np.ndarray:
    out = np.array(m, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TensorStructure:
    """Ordered factor dimensions of a tensor-product space."""

    factor_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        object.__setattr__(self, "factor_dims", dims)
        if not dims or any(d < 2 for d in dims):
            raise ValueError(f"factor dimensions must all be >= 2, got {dims}")

    @property
    def dim(self) -> int:
        total = 1
        for d in self.factor_dims:
            total *= d
        return total

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)


@dataclass(frozen=True)
class HermitianOperator:
    """A bounded observable: square matrix equal to its conjugate transpose."""

    matrix: np.ndarray
    hermiticity_tol: float = HERMITICITY_TOL

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"observable must be square, got {m.shape}")
        defect = np.abs(m - m.conj().T).max()
        if defect > self.hermiticity_tol:
            raise NonHermitianError(
                f"hermiticity defect {defect:.3e} exceeds tolerance {self.hermiticity_tol:.3e}"
            )
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DensityOperator:
    """Positive unit-trace Hermitian matrix carrying its tensor structure."""

    matrix: np.ndarray
    structure: TensorStructure
    psd_tol: float = PSD_TOL

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"state must be square, got {m.shape}")
        if m.shape[0] != self.structure.dim:
            raise DimensionMismatchError(
                f"matrix dim {m.shape[0]} does not match factor dims {self.structure.factor_dims}"
            )
        defect = np.abs(m - m.conj().T).max()
        if defect > HERMITICITY_TOL:
            raise NonHermitianError(f"state hermiticity defect {defect:.3e}")
        tr = m.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace {tr} is not 1 within {TRACE_TOL}")
        lowest = float(_jacobi_eigh(m, values_only=True)[0][0])
        if lowest < -self.psd_tol:
            raise InvalidStateError(
                f"minimum eigenvalue {lowest:.3e} below -psd_tol ({self.psd_tol:.1e})"
            )
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def density(matrix, factor_dims) -> DensityOperator:
    """Build a DensityOperator from raw entries and factor dimensions."""
    return DensityOperator(as_matrix(matrix), TensorStructure(tuple(factor_dims)))


def pure_state_density(vector, factor_dims) -> DensityOperator:
    """Projector |psi><psi| of a (normalized) state vector."""
    v = np.asarray(vector, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise InvalidStateError("cannot normalize the zero vector")
    v = v / norm
    return density(np.outer(v, v.conj()), factor_dims)


def position_operator(dim: int = 8) -> HermitianOperator:
    """Finite position-like observable: diagonal levels centered on zero.

    An unbounded position operator is represented by its dim-level truncation;
    the covariance identities exercised here are dimension-independent.
    """
    if dim < 2:
        raise ValueError("position truncation needs at least 2 levels")
    levels = np.arange(dim, dtype=float) - (dim - 1) / 2.0
    return HermitianOperator(np.diag(levels).astype(complex))


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product of two matrices; dimensions multiply."""
    return np.kron(as_matrix(a), as_matrix(b))


def lift_local(obs: HermitianOperator, site: int, structure: TensorStructure) -> HermitianOperator:
    """Embed a single-site observable as identity everywhere except ``site``."""
    if not 0 <= site < structure.n_factors:
        raise IndexError(f"site {site} out of range for {structure.n_factors} factors")
    if obs.dim != structure.factor_dims[site]:
        raise DimensionMismatchError(
            f"observable dim {obs.dim} does not match factor dim "
            f"{structure.factor_dims[site]} at site {site}"
        )
    out = np.array([[1.0 + 0.0j]])
    for k, d in enumerate(structure.factor_dims):
        out = np.kron(out, obs.matrix if k == site else np.eye(d, dtype=complex))
    return HermitianOperator(out, hermiticity_tol=obs.hermiticity_tol)


def _check_same_dim(rho: DensityOperator, obs: HermitianOperator):
    if rho.dim != obs.dim:
        raise DimensionMismatchError(f"state dim {rho.dim} vs observable dim {obs.dim}")


def expectation(rho: DensityOperator, obs: HermitianOperator) -> float:
    """E(A|rho) = Tr(rho A); the imaginary part must vanish to tolerance."""
    _check_same_dim(rho, obs)
    value = np.trace(rho.matrix @ obs.matrix)
    if abs(value.imag) > IMAG_TOL:
        raise InvariantViolation(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


def conditional_covariance(rho: DensityOperator, a: HermitianOperator, b: HermitianOperator) -> float:
    """cov(A, B|rho) = E(AB|rho) - E(A|rho) E(B|rho) for commuting observables.

    The joint moment uses the matrix product A B, which is only an observable
    when A and B commute; non-commuting pairs are rejected.
    """
    _check_same_dim(rho, a)
    _check_same_dim(rho, b)
    commutator = a.matrix @ b.matrix - b.matrix @ a.matrix
    defect = np.abs(commutator).max()
    if defect > COMMUTATION_TOL:
        raise NonCommutingError(
            f"commutator norm {defect:.3e} exceeds {COMMUTATION_TOL:.1e}; "
            "covariance is defined for jointly measurable pairs only"
        )
    joint = np.trace(rho.matrix @ a.matrix @ b.matrix)
    if abs(joint.imag) > IMAG_TOL:
        raise InvariantViolation(f"joint moment has imaginary part {joint.imag:.3e}")
    return float(joint.real) - expectation(rho, a) * expectation(rho, b)


def variance(rho: DensityOperator, a: HermitianOperator) -> float:
    """var(A|rho) = cov(A, A|rho); clipped of tiny negative round-off."""
    value = conditional_covariance(rho, a, a)
    if value < -IMAG_TOL:
        raise InvariantViolation(f"variance {value:.3e} is negative beyond round-off")
    return max(value, 0.0)


def covariance_bilinear(
    rho: DensityOperator,
    k: float,
    n: float,
    m: float,
    l: float,
    a: HermitianOperator,
    b: HermitianOperator,
) -> float:
    """cov(kA + nB, mA + lB|rho) for lifted locals A, B on a product state.

    Returns the covariance computed directly and asserts the bilinearity
    identity cov = k m var(A) + n l var(B), which holds exactly when rho is a
    product state and A, B live on distinct sites.
    """
    f = HermitianOperator(k * a.matrix + n * b.matrix)
    g = HermitianOperator(m * a.matrix + l * b.matrix)
    value = conditional_covariance(rho, f, g)
    reference = k * m * variance(rho, a) + n * l * variance(rho, b)
    residual = abs(value - reference)
    if residual > BILINEAR_TOL:
        raise InvariantViolation(
            f"bilinearity identity residual {residual:.3e} exceeds {BILINEAR_TOL:.1e}; "
            "inputs are not a product state with local observables"
        )
    return value


def eigen_hermitian(h: HermitianOperator) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvector columns of a Hermitian operator."""
    return _jacobi_eigh(h.matrix)


def partial_transpose(rho: DensityOperator, site: int) -> HermitianOperator:
    """Transpose one factor of a bipartite state; Hermitian and trace-preserving."""
    if rho.structure.n_factors != 2:
        raise DimensionMismatchError(
            f"partial transpose needs a bipartite structure, got {rho.structure.n_factors} factors"
        )
    if site not in (0, 1):
        raise IndexError(f"site must be 0 or 1, got {site}")
    d0, d1 = rho.structure.factor_dims
    t = rho.matrix.reshape(d0, d1, d0, d1)
    if site == 0:
        t = t.transpose(2, 1, 0, 3)
    else:
        t = t.transpose(0, 3, 2, 1)
    return HermitianOperator(t.reshape(d0 * d1, d0 * d1))


def _jacobi_eigh(matrix: np.ndarray, values_only: bool = False, max_sweeps: int = 64):
    """Cyclic Jacobi diagonalization of a complex Hermitian matrix.

    Sweeps zero every off-diagonal entry in turn until the off-diagonal mass
    is at round-off level; quadratic convergence makes a handful of sweeps
    enough at dim <= 64.
    """
    a = np.array(matrix, dtype=complex)
    n = a.shape[0]
    v = None if values_only else np.eye(n, dtype=complex)
    if n == 1:
        w = np.array([a[0, 0].real])
        return (w, v) if not values_only else (w, None)

    scale = max(np.abs(a).max(), 1e-300)
    stop = 1e-15 * scale
    for _ in range(max_sweeps):
        off = np.abs(a - np.diag(np.diagonal(a))).max()
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= stop:
                    continue
                phase = apq / mag
                tau = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                sign = 1.0 if tau >= 0 else -1.0
                t = sign / (abs(tau) + np.hypot(1.0, tau))
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # right multiply by the rotation: mixes columns p and q
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * np.conj(phase) * col_q
                a[:, q] = s * phase * col_p + c * col_q
                # left multiply by its adjoint: mixes rows p and q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * phase * row_q
                a[q, :] = s * np.conj(phase) * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                if v is not None:
                    v_p = v[:, p].copy()
                    v_q = v[:, q].copy()
                    v[:, p] = c * v_p - s * np.conj(phase) * v_q
                    v[:, q] = s * phase * v_p + c * v_q
    else:
        raise InvariantViolation("Jacobi eigensolver failed to converge")

    w = np.diagonal(a).real.copy()
    order = np.argsort(w, kind="stable")
    w = w[order]
    if values_only:
        return w, None
    return w, v[:, order]
