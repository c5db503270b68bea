"""Qudit states and figures of merit (fidelity, purity, projection probability)."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidState
from .numkernel import as_matrix, dagger, hermitian_residual, psd_sqrt

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
EIG_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector over the slit basis ``|0>, ..., |d-1>``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim != 1 or a.size < 1:
            raise InvalidState(f"amplitudes must be a non-empty vector, got shape {a.shape}")
        norm = float(np.vdot(a, a).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidState(f"state norm^2 is {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", _frozen(a))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def from_amplitudes(cls, amplitudes) -> "PureState":
        """Build a state from unnormalized amplitudes."""
        a = np.asarray(amplitudes, dtype=complex)
        n = np.linalg.norm(a)
        if n == 0:
            raise InvalidState("zero vector cannot be normalized")
        return cls(a / n)

    @classmethod
    def basis(cls, d: int, level: int) -> "PureState":
        a = np.zeros(d, dtype=complex)
        a[level] = 1.0
        return cls(a)

    @classmethod
    def uniform(cls, d: int, phases=None) -> "PureState":
        """``(1/sqrt(d)) sum_l exp(i phi_l) |l>``; all phases zero by default."""
        phi = np.zeros(d) if phases is None else np.asarray(phases, dtype=float)
        return cls(np.exp(1j * phi) / np.sqrt(d))

    def density(self) -> "DensityMatrix":
        return density_from_pure(self)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A valid density matrix: Hermitian, unit trace, positive semidefinite.

    Validity is checked on construction. Reconstructions that may violate it
    must go through ``tomography.make_physical`` first.
    """

    matrix: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise InvalidState(f"density matrix must be square, got shape {m.shape}")
        res = hermitian_residual(m)
        if res > HERMITIAN_TOL:
            raise InvalidState(f"not Hermitian (residual {res:.3e})")
        m = 0.5 * (m + dagger(m))
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidState(f"trace is {tr!r}, expected 1")
        lo = np.linalg.eigvalsh(m)[0]
        if lo < -EIG_TOL:
            raise InvalidState(f"negative eigenvalue {lo:.3e}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(np.eye(d) / d)

    @classmethod
    def normalized(cls, m, **metadata) -> "DensityMatrix":
        """Hermitize and divide by the trace before validating."""
        m = as_matrix(m)
        m = 0.5 * (m + dagger(m))
        return cls(m / np.trace(m).real, metadata=dict(metadata))


def density_from_pure(psi: PureState) -> DensityMatrix:
    a = psi.amplitudes
    return DensityMatrix(np.outer(a, a.conj()))


def _same_dim(a, b):
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions differ: {a.dim} vs {b.dim}")


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """Uhlmann fidelity ``Tr sqrt(sqrt(a) b sqrt(a))`` (not squared).

    Evaluated as the nuclear norm of ``sqrt(a) sqrt(b)``, which avoids taking
    square roots of round-off eigenvalues near zero.
    """
    _same_dim(a, b)
    s = np.linalg.svd(psd_sqrt(a.matrix) @ psd_sqrt(b.matrix), compute_uv=False)
    f = float(np.sum(s))
    return min(max(f, 0.0), 1.0)


def purity(rho: DensityMatrix) -> float:
    """``Tr rho^2``."""
    m = rho.matrix
    return float(np.real(np.vdot(m, m)))


def projection_probability(rho: DensityMatrix, phi: PureState) -> float:
    """``<phi| rho |phi>``, clamped to [0, 1]."""
    _same_dim(rho, phi)
    p = float(np.real(np.vdot(phi.amplitudes, rho.matrix @ phi.amplitudes)))
    return min(max(p, 0.0), 1.0)


def trace_distance(a, b) -> float:
    """Half the trace norm of the difference; accepts DensityMatrix or arrays."""
    ma = a.matrix if isinstance(a, DensityMatrix) else np.asarray(a)
    mb = b.matrix if isinstance(b, DensityMatrix) else np.asarray(b)
    diff = ma - mb
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + dagger(diff))))))


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Hilbert-Schmidt (Ginibre) random state of the given rank."""
    k = d if rank is None else rank
    g = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    m = g @ dagger(g)
    return DensityMatrix.normalized(m)


def random_pure_state(d: int, rng: np.random.Generator) -> PureState:
    return PureState.from_amplitudes(rng.normal(size=d) + 1j * rng.normal(size=d))
