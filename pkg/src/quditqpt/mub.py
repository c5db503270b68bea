"""Complete sets of mutually unbiased bases (MUBs) for prime d and d = 4."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import UnsupportedDimension
from .numkernel import fix_phase
from .states import DensityMatrix, PureState

# Two-qubit construction over GF(4), computational order |00>,|01>,|10>,|11>.
# Rows are basis vectors (before the 1/2 normalization).
_I = 1j
_GF4_TABLE = (
    ((1, 1, 1, 1), (1, 1, -1, -1), (1, -1, -1, 1), (1, -1, 1, -1)),
    ((1, -1, -_I, -_I), (1, -1, _I, _I), (1, 1, _I, -_I), (1, 1, -_I, _I)),
    ((1, -_I, -_I, -1), (1, -_I, _I, 1), (1, _I, _I, -1), (1, _I, -_I, 1)),
    ((1, -_I, -1, -_I), (1, -_I, 1, _I), (1, _I, -1, _I), (1, _I, 1, -_I)),
)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % k for k in range(2, int(n**0.5) + 1))


def supported(d: int) -> bool:
    return d == 4 or is_prime(d)


@dataclass(frozen=True, eq=False)
class MubSet:
    """``vectors[b, m]`` is the m-th vector of basis b (shape ``(d+1, d, d)``)."""

    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def n_bases(self) -> int:
        return self.vectors.shape[0]

    def state(self, b: int, m: int) -> PureState:
        return PureState(self.vectors[b, m])

    @property
    def bases(self) -> list[list[PureState]]:
        return [[self.state(b, m) for m in range(self.dim)] for b in range(self.n_bases)]

    def projector_array(self) -> np.ndarray:
        """``P[b, m] = |e_m^b><e_m^b|``, shape ``(d+1, d, d, d)``."""
        v = self.vectors
        return np.einsum("bmi,bmj->bmij", v, v.conj())


def _prime_bases(d: int) -> np.ndarray:
    j = np.arange(d)
    vecs = [np.eye(d, dtype=complex)]
    for b in range(1, d + 1):
        expo = (b * j[None, :] ** 2 + np.arange(d)[:, None] * j[None, :]) % d
        vecs.append(np.exp(2j * np.pi * expo / d) / np.sqrt(d))
    return np.array(vecs)


def _qubit_bases() -> np.ndarray:
    s = 1 / np.sqrt(2)
    return np.array(
        [
            [[1, 0], [0, 1]],
            [[s, s], [s, -s]],
            [[s, 1j * s], [s, -1j * s]],
        ],
        dtype=complex,
    )


def build_mubs(d: int) -> MubSet:
    """Return d+1 mutually unbiased bases, basis 0 being the computational one.

    Odd prime d uses ``<j|e_m^b> = w^(b j^2 + m j) / sqrt(d)`` for b = 1..d;
    d = 2 uses the eigenbases of sigma_z, sigma_x, sigma_y; d = 4 uses a fixed
    GF(4) table. Any other d raises UnsupportedDimension.
    """
    if d == 2:
        vecs = _qubit_bases()
    elif d == 4:
        vecs = np.concatenate([np.eye(4, dtype=complex)[None], np.array(_GF4_TABLE) / 2])
    elif is_prime(d):
        vecs = _prime_bases(d)
    else:
        raise UnsupportedDimension(f"no MUB construction for d={d} (need prime d or d=4)")
    vecs = np.array([fix_phase(basis.T).T for basis in vecs])
    mubs = MubSet(vecs)
    dev = unbiasedness_check(mubs)
    if dev > 1e-10:  # guards the hard-coded d=4 table
        raise RuntimeError(f"MUB construction for d={d} is not unbiased (deviation {dev:.2e})")
    return mubs


def unbiasedness_check(s: MubSet) -> float:
    """Max over cross-basis pairs of ``| |<e_i^a|e_j^b>|^2 - 1/d |``."""
    d = s.dim
    worst = 0.0
    for a, b in combinations(range(s.n_bases), 2):
        overlaps = np.abs(s.vectors[a].conj() @ s.vectors[b].T) ** 2
        worst = max(worst, float(np.max(np.abs(overlaps - 1.0 / d))))
    return worst


def orthonormality_error(s: MubSet) -> float:
    d = s.dim
    gram = np.einsum("bmi,bni->bmn", s.vectors.conj(), s.vectors)
    return float(np.max(np.abs(gram - np.eye(d))))


def mub_projectors(s: MubSet) -> list[DensityMatrix]:
    """All d(d+1) rank-one projectors, ordered basis-major."""
    return [DensityMatrix(p) for p in s.projector_array().reshape(-1, s.dim, s.dim)]
