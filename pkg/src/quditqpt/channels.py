"""Kraus channels, the chi-matrix representation, and the shift/depolarizing families.

Operator basis for chi: matrix units ``A_{a*d+b} = |a><b|``, so that

    E(rho) = sum_{m,n} chi[m, n] A_m rho A_n^dagger

and, equivalently, ``<i|E(|k><l|)|j> = chi[i*d+k, j*d+l]``.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping

import numpy as np

from .errors import (
    BadIndices,
    BadProbability,
    BadWeights,
    DimensionMismatch,
    InvalidChannel,
    NotPSD,
    ZeroTrace,
)
from .numkernel import as_matrix, dagger, hermitian_eig, hermitian_residual
from .states import DensityMatrix

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# AS -> sigma_x, PS -> sigma_z, APS -> sigma_y
SHIFT_KINDS = {"as": "x", "ps": "z", "aps": "y"}

COMPLETENESS_TOL = 1e-9


def _pauli(kind) -> np.ndarray:
    key = str(kind).lower().removeprefix("sigma_").removeprefix("sigma")
    try:
        return PAULI[key]
    except KeyError:
        raise ValueError(f"unknown Pauli kind {kind!r}") from None


def level_pairs(d: int) -> list[tuple[int, int]]:
    """All ``(nu, alpha)`` with ``0 <= nu < alpha < d`` in lexicographic order."""
    return list(combinations(range(d), 2))


def embed_pauli(d: int, nu: int, alpha: int, pauli) -> np.ndarray:
    """``G^dagger X G`` where ``G`` (2 x d) picks levels ``nu`` and ``alpha``.

    The result acts as the 2x2 Pauli ``X`` on ``span{|nu>, |alpha>}`` and
    annihilates every other level.
    """
    if not (0 <= nu < alpha <= d - 1):
        raise BadIndices(f"need 0 <= nu < alpha <= {d - 1}, got ({nu}, {alpha})")
    g = np.zeros((2, d), dtype=complex)
    g[0, nu] = 1.0
    g[1, alpha] = 1.0
    return dagger(g) @ _pauli(pauli) @ g


def shift_operator(d: int, nu: int, alpha: int, pauli) -> np.ndarray:
    """Unitary completion of :func:`embed_pauli`: identity outside the pair."""
    op = embed_pauli(d, nu, alpha, pauli)
    rest = np.ones(d)
    rest[[nu, alpha]] = 0.0
    return op + np.diag(rest)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Completely positive map ``rho -> sum_k E_k rho E_k^dagger``.

    ``operators`` is stored as an array of shape ``(K, d, d)``. The sum
    ``sum_k E_k^dagger E_k`` must not exceed the identity (trace
    non-increasing).
    """

    operators: np.ndarray
    weights: tuple | None = None
    label: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2] or ops.shape[0] == 0:
            raise InvalidChannel(f"operators must have shape (K, d, d), got {ops.shape}")
        if not np.all(np.isfinite(ops)):
            raise InvalidChannel("operators contain non-finite entries")
        ops = ops.copy()
        ops.setflags(write=False)
        object.__setattr__(self, "operators", ops)
        top = np.linalg.eigvalsh(self.completeness())[-1]
        if top > 1.0 + COMPLETENESS_TOL:
            raise InvalidChannel(f"sum E^dagger E has eigenvalue {top:.12f} > 1")

    @property
    def dim(self) -> int:
        return self.operators.shape[1]

    def __len__(self) -> int:
        return self.operators.shape[0]

    def completeness(self) -> np.ndarray:
        """``sum_k E_k^dagger E_k``."""
        return np.einsum("kji,kjl->il", self.operators.conj(), self.operators)

    def completeness_error(self) -> float:
        return float(np.max(np.abs(self.completeness() - np.eye(self.dim))))

    def is_trace_preserving(self, tol: float = COMPLETENESS_TOL) -> bool:
        return self.completeness_error() <= tol


def apply_operators(operators: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Raw ``sum_k E_k m E_k^dagger`` for any square matrix ``m`` (no normalization)."""
    return np.einsum("kij,jl,kml->im", operators, m, operators.conj())


def apply(ch: KrausChannel, rho: DensityMatrix) -> DensityMatrix:
    """Send ``rho`` through the channel.

    Trace-decreasing channels are renormalized; the pre-normalization trace is
    stored in ``result.metadata["trace"]``.
    """
    if ch.dim != rho.dim:
        raise DimensionMismatch(f"channel acts on d={ch.dim}, state has d={rho.dim}")
    out = apply_operators(ch.operators, rho.matrix)
    tr = float(np.trace(out).real)
    if tr < 1e-12:
        raise ZeroTrace(f"output trace {tr:.3e} too small to renormalize")
    return DensityMatrix.normalized(out, trace=tr)


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel(np.eye(d)[None], weights=(1.0,), label="identity")


def unitary_channel(u) -> KrausChannel:
    u = as_matrix(u)
    if np.max(np.abs(dagger(u) @ u - np.eye(u.shape[0]))) > 1e-10:
        raise InvalidChannel("operator is not unitary")
    return KrausChannel(u[None], weights=(1.0,), label="unitary")


def completely_depolarizing_channel(d: int) -> KrausChannel:
    """``rho -> Tr(rho) I/d`` via the d^2 operators ``|a><b| / sqrt(d)``."""
    ops = np.zeros((d * d, d, d), dtype=complex)
    for a in range(d):
        for b in range(d):
            ops[a * d + b, a, b] = 1.0 / np.sqrt(d)
    return KrausChannel(ops, label="completely-depolarizing")


def uniform_weights(d: int, pairs=None) -> tuple[float, dict]:
    """Equal weight for the identity and every listed pair (all pairs by default)."""
    pairs = level_pairs(d) if pairs is None else list(pairs)
    w = 1.0 / (len(pairs) + 1)
    return w, {pair: w for pair in pairs}


def uniform_from_level(d: int, level: int = 0) -> tuple[float, dict]:
    """Equal weight on identity and the pairs ``(level, alpha)``, ``alpha > level``."""
    return uniform_weights(d, [(level, a) for a in range(level + 1, d)])


def shift_channel(
    d: int,
    kind: str,
    weights: Mapping[tuple[int, int], float],
    identity_weight: float,
    completed: bool = True,
) -> KrausChannel:
    """Amplitude (AS), phase (PS) or amplitude-phase (APS) shift channel.

    Kraus operators are ``sqrt(p0) I`` plus ``sqrt(p) S`` for each weighted
    pair, where ``S`` is the shift operator on that pair. With
    ``completed=True`` (default) ``S`` is the unitary :func:`shift_operator`
    and normalized weights give a trace-preserving channel. With
    ``completed=False`` the bare :func:`embed_pauli` is used, which loses the
    population outside the pair.
    """
    try:
        pauli = SHIFT_KINDS[kind.lower()]
    except KeyError:
        raise ValueError(f"unknown shift kind {kind!r}; expected AS, PS or APS") from None
    items = sorted(weights.items())
    probs = [identity_weight] + [p for _, p in items]
    if any(p < 0 for p in probs):
        raise BadWeights("weights must be non-negative")
    if abs(sum(probs) - 1.0) > 1e-12:
        raise BadWeights(f"weights sum to {sum(probs)!r}, expected 1")
    make = shift_operator if completed else embed_pauli
    ops = [np.sqrt(identity_weight) * np.eye(d, dtype=complex)]
    ops += [np.sqrt(p) * make(d, nu, alpha, pauli) for (nu, alpha), p in items]
    return KrausChannel(
        np.array(ops),
        weights=tuple(probs),
        label=kind.upper(),
        metadata={"pairs": [pair for pair, _ in items], "completed": completed},
    )


def depolarizing_channel(d: int, p: float, completed: bool = True) -> KrausChannel:
    """Depolarizing channel: no error with probability ``1 - p``, otherwise a
    uniformly chosen sigma_x/y/z shift on a uniformly chosen level pair.

    ``completed=True`` uses the unitary shift operators, each error weighted
    ``p / (3 * C(d, 2))``. ``completed=False`` uses the bare embedded Paulis
    weighted ``p / (3 * (d - 1))``. Both are trace preserving and coincide at
    ``d = 2``.
    """
    if not 0.0 <= p <= 1.0:
        raise BadProbability(f"p must lie in [0, 1], got {p!r}")
    pairs = level_pairs(d)
    if completed:
        w, make = p / (3 * len(pairs)), shift_operator
    else:
        w, make = p / (3 * (d - 1)), embed_pauli
    ops = [np.sqrt(1.0 - p) * np.eye(d, dtype=complex)]
    for r in "xyz":
        ops += [np.sqrt(w) * make(d, nu, alpha, r) for nu, alpha in pairs]
    return KrausChannel(
        np.array(ops),
        weights=(1.0 - p,) + (w,) * (3 * len(pairs)),
        label="depolarizing",
        metadata={"p": p, "completed": completed},
    )


@dataclass(frozen=True, eq=False)
class ChiMatrix:
    """Process matrix in the matrix-unit basis; ``matrix`` has shape (d^2, d^2).

    Only Hermiticity is enforced here. Positivity is reported by
    :meth:`min_eigenvalue` because reconstructions from sampled data are
    generally not exactly positive.
    """

    matrix: np.ndarray
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        m = as_matrix(self.matrix)
        n = m.shape[0]
        d = int(round(np.sqrt(n)))
        if m.shape != (n, n) or d * d != n:
            raise DimensionMismatch(f"chi must be (d^2, d^2), got {m.shape}")
        res = hermitian_residual(m)
        if res > 1e-9:
            raise InvalidChannel(f"chi is not Hermitian (residual {res:.3e})")
        m = 0.5 * (m + dagger(m))
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def tensor(self) -> np.ndarray:
        """View as ``t[i, k, j, l] = chi[i*d+k, j*d+l]``."""
        d = self.dim
        return self.matrix.reshape(d, d, d, d)


def chi_from_kraus(ch: KrausChannel) -> ChiMatrix:
    """``chi = sum_k vec(E_k) vec(E_k)^dagger`` with row-major ``vec``."""
    vecs = ch.operators.reshape(len(ch), -1)
    return ChiMatrix(vecs.T @ vecs.conj(), metadata={"source": ch.label})


def chi_apply_raw(chi: ChiMatrix, m: np.ndarray) -> np.ndarray:
    """``sum_{mn} chi_mn A_m m A_n^dagger`` for any d x d matrix (no normalization)."""
    return np.einsum("ikjl,kl->ij", chi.tensor(), np.asarray(m, dtype=complex))


def chi_apply(chi: ChiMatrix, rho: DensityMatrix) -> DensityMatrix:
    """Predict the channel output from chi, renormalized like :func:`apply`."""
    if chi.dim != rho.dim:
        raise DimensionMismatch(f"chi acts on d={chi.dim}, state has d={rho.dim}")
    out = chi_apply_raw(chi, rho.matrix)
    tr = float(np.trace(out).real)
    if tr < 1e-12:
        raise ZeroTrace(f"output trace {tr:.3e} too small to renormalize")
    from .tomography import make_physical

    return make_physical(out, trace=tr)


def kraus_from_chi(chi: ChiMatrix, tol: float = 1e-8) -> KrausChannel:
    """Canonical Kraus operators from the eigendecomposition of chi.

    Eigenvalues in ``[-tol, 0]`` are dropped; more negative ones raise NotPSD.
    """
    w, v = hermitian_eig(chi.matrix, tol=1e-9)
    if w[-1] < -tol:
        raise NotPSD(f"chi has eigenvalue {w[-1]:.3e} below -{tol:.1e}")
    keep = w > tol
    if not np.any(keep):
        raise InvalidChannel("chi is zero")
    d = chi.dim
    ops = (v[:, keep] * np.sqrt(w[keep])).T.reshape(-1, d, d)
    return KrausChannel(ops, label="from-chi")
