"""Standard quantum process tomography on qudits.

Pipeline: prepare d^2 input states, send each through the channel, measure the
output in all d+1 MUBs, reconstruct each output by linear inversion, combine
the outputs into the action on matrix units, and read chi off by index
identity. :func:`recover` inverts the reconstructed process on a given output.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channels import ChiMatrix, KrausChannel, apply_operators
from .errors import (
    DimensionMismatch,
    IllConditioned,
    IncompleteRecords,
    InvalidState,
    MissingOutputs,
    NotHermitian,
    SingularBeyondRecovery,
)
from .mub import MubSet
from .numkernel import dagger, effective_rank, hermitian_residual, pseudo_inverse
from .states import DensityMatrix, PureState, fidelity

log = logging.getLogger(__name__)

DEFAULT_RECOVERY_RCOND = 1e-3


@dataclass(frozen=True, eq=False)
class PreparationBasis:
    """The d^2 input states and the expansion of matrix units over them.

    ``states[j]`` is the amplitude vector of input j and
    ``|k><l| = sum_j expansion[k*d+l, j] rho_j``.
    """

    states: np.ndarray
    expansion: np.ndarray

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.states.shape[0]

    def pure_states(self) -> list[PureState]:
        return [PureState(s) for s in self.states]

    def density_array(self) -> np.ndarray:
        return np.einsum("ji,jk->jik", self.states, self.states.conj())

    def density_matrices(self) -> list[DensityMatrix]:
        return [DensityMatrix(m) for m in self.density_array()]

    def condition_number(self) -> float:
        return float(np.linalg.cond(self.expansion))

    def expansion_residual(self) -> float:
        """Max entry error of ``sum_j expansion[kl, j] rho_j - |k><l|``."""
        d = self.dim
        rebuilt = np.einsum("nj,jab->nab", self.expansion, self.density_array())
        units = np.eye(d * d, dtype=complex).reshape(d * d, d, d)
        return float(np.max(np.abs(rebuilt - units)))


def preparation_basis(d: int) -> PreparationBasis:
    """``{|n>}``, ``{(|j>+|k>)/sqrt2}``, ``{(|j>+i|k>)/sqrt2}`` with analytic expansion.

    For j < k:
        |j><k| = rho_plus + i rho_iplus - (1+i)/2 (|j><j| + |k><k|)
        |k><j| = rho_plus - i rho_iplus - (1-i)/2 (|j><j| + |k><k|)
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    npairs = len(pairs)
    states = np.zeros((d * d, d), dtype=complex)
    states[:d] = np.eye(d)
    s = 1 / np.sqrt(2)
    for p, (j, k) in enumerate(pairs):
        states[d + p, [j, k]] = s, s
        states[d + npairs + p, [j, k]] = s, 1j * s
    expansion = np.zeros((d * d, d * d), dtype=complex)
    for n in range(d):
        expansion[n * d + n, n] = 1.0
    for p, (j, k) in enumerate(pairs):
        plus, iplus = d + p, d + npairs + p
        for row, sign in ((j * d + k, 1), (k * d + j, -1)):
            expansion[row, plus] = 1.0
            expansion[row, iplus] = sign * 1j
            expansion[row, j] = -(1 + sign * 1j) / 2
            expansion[row, k] = -(1 + sign * 1j) / 2
    return PreparationBasis(states, expansion)


@dataclass(frozen=True)
class MeasurementRecord:
    """One projective outcome: prep state, MUB index, outcome index.

    ``shots`` is None for exact probabilities.
    """

    prep_index: int
    basis: int
    outcome: int
    probability: float
    shots: int | None = None


def output_probabilities(out: np.ndarray, mubs: MubSet) -> np.ndarray:
    """``p[b, m] = <e_m^b| out |e_m^b>`` as a real array of shape (d+1, d)."""
    v = mubs.vectors
    return np.einsum("bmi,ij,bmj->bm", v.conj(), out, v).real


def simulate_measurements(
    ch: KrausChannel,
    prep: PreparationBasis,
    mubs: MubSet,
    shots: int | None = None,
    seed: int = 0,
) -> list[MeasurementRecord]:
    """Measure ``E(rho_j)`` in every MUB for every prep state.

    ``shots=None`` gives exact probabilities. Otherwise each (prep, basis) pair
    gets an independent multinomial draw of ``shots`` counts from a generator
    seeded with ``(seed, prep, basis)``, so results do not depend on order.
    """
    if not (ch.dim == prep.dim == mubs.dim):
        raise DimensionMismatch(f"dims differ: channel {ch.dim}, prep {prep.dim}, mubs {mubs.dim}")
    if shots is not None and shots < 1:
        raise ValueError("shots must be >= 1")
    records = []
    for j, rho in enumerate(prep.density_array()):
        out = apply_operators(ch.operators, rho)
        tr = np.trace(out).real
        if tr < 1e-12:
            raise InvalidState(f"prep state {j} is fully absorbed by the channel")
        probs = np.clip(output_probabilities(out / tr, mubs), 0.0, None)
        probs /= probs.sum(axis=1, keepdims=True)
        for b, row in enumerate(probs):
            if shots is None:
                est = row
            else:
                rng = np.random.default_rng([seed, j, b])
                est = rng.multinomial(shots, row) / shots
            records += [
                MeasurementRecord(j, b, m, float(p), shots) for m, p in enumerate(est)
            ]
    return records


def group_by_prep(records: Sequence[MeasurementRecord]) -> dict[int, list[MeasurementRecord]]:
    groups: dict[int, list[MeasurementRecord]] = {}
    for r in records:
        groups.setdefault(r.prep_index, []).append(r)
    return groups


def qst_raw(records: Sequence[MeasurementRecord], mubs: MubSet) -> np.ndarray:
    """Linear inversion ``sum_{b,k} p_bk |e_k^b><e_k^b| - I`` without repair."""
    d = mubs.dim
    probs = np.full((mubs.n_bases, d), np.nan)
    for r in records:
        probs[r.basis, r.outcome] = r.probability
    if np.isnan(probs).any():
        missing = int(np.isnan(probs).sum())
        raise IncompleteRecords(f"{missing} of {probs.size} MUB outcomes missing")
    est = np.einsum("bm,bmij->ij", probs, mubs.projector_array()) - np.eye(d)
    return 0.5 * (est + dagger(est))


def qst_linear_inversion(records: Sequence[MeasurementRecord], mubs: MubSet) -> DensityMatrix:
    """Reconstruct one output state from its MUB statistics."""
    return make_physical(qst_raw(records, mubs))


def make_physical(m, **metadata) -> DensityMatrix:
    """Closest unit-trace PSD matrix with the same eigenvectors.

    Negative eigenvalues are zeroed one at a time from the most negative up,
    and the accumulated deficit is spread uniformly over the eigenvalues still
    in play, until no eigenvalue is negative.
    """
    m = np.asarray(m, dtype=complex)
    res = hermitian_residual(m)
    if res > 1e-8:
        raise NotHermitian(f"cannot repair non-Hermitian matrix (residual {res:.3e})")
    m = 0.5 * (m + dagger(m))
    tr = np.trace(m).real
    if tr <= 0:
        raise InvalidState(f"trace {tr:.3e} is not positive")
    w, v = np.linalg.eigh(m / tr)
    if w[0] >= 0:
        return DensityMatrix(m / tr, metadata=dict(metadata))
    # w ascending; walk up from the most negative eigenvalue
    n = len(w)
    i = 0
    acc = 0.0
    while i < n and w[i] + acc / (n - i) < 0:
        acc += w[i]
        i += 1
    new = np.zeros_like(w)
    new[i:] = w[i:] + acc / (n - i)
    repaired = (v * new) @ dagger(v)
    return DensityMatrix(repaired, metadata={**metadata, "repaired": True})


def sqpt(outputs: Sequence[DensityMatrix], prep: PreparationBasis) -> ChiMatrix:
    """Reconstruct chi from one measured output state per preparation state.

    The anti-Hermitian part removed by the final symmetrization is reported in
    ``chi.metadata["antihermitian_residual"]`` (Frobenius norm).
    """
    d = prep.dim
    if len(outputs) != len(prep):
        raise MissingOutputs(f"expected {len(prep)} outputs, got {len(outputs)}")
    for rho in outputs:
        if rho.dim != d:
            raise DimensionMismatch(f"output has d={rho.dim}, prep basis has d={d}")
    expansion_res = prep.expansion_residual()
    if expansion_res > 1e-6:
        raise IllConditioned(f"preparation expansion residual {expansion_res:.3e}")
    out = np.array([rho.matrix for rho in outputs])
    # unit_out[k, l] = E(|k><l|)
    unit_out = np.einsum("nj,jab->nab", prep.expansion, out).reshape(d, d, d, d)
    # chi[i*d+k, j*d+l] = <i| E(|k><l|) |j>
    chi = np.transpose(unit_out, (2, 0, 3, 1)).reshape(d * d, d * d)
    anti = 0.5 * (chi - dagger(chi))
    return ChiMatrix(
        0.5 * (chi + dagger(chi)),
        metadata={
            "antihermitian_residual": float(np.linalg.norm(anti)),
            "expansion_residual": expansion_res,
        },
    )


def reshuffle(m: np.ndarray) -> np.ndarray:
    """``R[(a,b),(c,e)] = m[(a,c),(b,e)]``; an involution on d^2 x d^2 arrays."""
    n = m.shape[0]
    d = int(round(np.sqrt(n)))
    return np.transpose(m.reshape(d, d, d, d), (0, 2, 1, 3)).reshape(n, n)


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Superoperator on row-major vectorized matrices: ``vec(E(rho)) = T vec(rho)``."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def act(self, m: np.ndarray) -> np.ndarray:
        d = self.dim
        return (self.matrix @ np.asarray(m).reshape(-1)).reshape(d, d)

    def block(self, k: int) -> np.ndarray:
        """The d x d block at grid position ``divmod(k, d)``: ``(Xi_k)[i, j] = chi[k, i*d+j]``."""
        d = self.dim
        u, v = divmod(k, d)
        return self.matrix[u * d:(u + 1) * d, v * d:(v + 1) * d]

    def trace_condition_error(self) -> float:
        """Max deviation of ``sum_i T[(i,i),(k,l)]`` from ``delta_kl``."""
        d = self.dim
        rows = self.matrix[[i * d + i for i in range(d)]].sum(axis=0)
        return float(np.max(np.abs(rows - np.eye(d).reshape(-1))))


def transfer_from_chi(chi: ChiMatrix) -> TransferMatrix:
    return TransferMatrix(reshuffle(chi.matrix))


def recover(
    chi: ChiMatrix,
    rho_out: DensityMatrix,
    rcond: float = DEFAULT_RECOVERY_RCOND,
    strict: bool = False,
) -> DensityMatrix:
    """Estimate the pre-channel state from an output state.

    Applies the pseudo-inverse of the transfer matrix (singular values below
    ``rcond`` times the largest are dropped) and repairs the result with
    :func:`make_physical`. A rank-deficient transfer matrix triggers a warning,
    or SingularBeyondRecovery when ``strict`` is set. The effective rank is
    stored in ``result.metadata["effective_rank"]``.
    """
    if chi.dim != rho_out.dim:
        raise DimensionMismatch(f"chi acts on d={chi.dim}, state has d={rho_out.dim}")
    d = chi.dim
    t = transfer_from_chi(chi).matrix
    rank = effective_rank(t, rcond)
    if rank < d * d:
        msg = f"transfer matrix has effective rank {rank} < {d * d} at rcond={rcond:g}"
        if strict:
            raise SingularBeyondRecovery(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    est = (pseudo_inverse(t, rcond) @ rho_out.matrix.reshape(-1)).reshape(d, d)
    return make_physical(est, effective_rank=rank)


def process_fidelity(chi_a: ChiMatrix, chi_b: ChiMatrix) -> float:
    """Squared Uhlmann fidelity between the trace-normalized Choi states.

    chi in the matrix-unit basis is itself a Choi matrix (trace d for a
    trace-preserving channel).
    """
    if chi_a.dim != chi_b.dim:
        raise DimensionMismatch(f"dimensions differ: {chi_a.dim} vs {chi_b.dim}")
    a = _choi_state(chi_a)
    b = _choi_state(chi_b)
    return fidelity(a, b) ** 2


def _choi_state(chi: ChiMatrix) -> DensityMatrix:
    m = chi.matrix
    w = np.linalg.eigvalsh(m)[0]
    if w < -1e-8:
        # sampled reconstructions: project before comparing
        return make_physical(m)
    return DensityMatrix.normalized(m)


@dataclass
class QPTResult:
    chi: ChiMatrix
    records: list[MeasurementRecord]
    outputs: list[DensityMatrix]
    prep: PreparationBasis
    mubs: MubSet
    shots: int | None = None
    seed: int = 0
    extras: dict = field(default_factory=dict)


def run_qpt(
    ch: KrausChannel,
    mubs: MubSet,
    shots: int | None = None,
    seed: int = 0,
) -> QPTResult:
    """Full simulated SQPT of ``ch``: measure, reconstruct each output, solve for chi."""
    prep = preparation_basis(ch.dim)
    records = simulate_measurements(ch, prep, mubs, shots=shots, seed=seed)
    groups = group_by_prep(records)
    outputs = [qst_linear_inversion(groups[j], mubs) for j in range(len(prep))]
    chi = sqpt(outputs, prep)
    log.debug("sqpt d=%d shots=%s antihermitian=%.2e", ch.dim, shots, chi.metadata["antihermitian_residual"])
    return QPTResult(chi, records, outputs, prep, mubs, shots, seed)
