"""Dense complex-matrix primitives.

Everything here works on plain ``numpy`` arrays and returns new arrays; inputs
are never modified.
"""

import numpy as np

from .errors import NotHermitian, NotPSD, NotSquare

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-9


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise NotSquare(f"expected a 2-d array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_residual(m: np.ndarray) -> float:
    """Largest entry of ``|m - m^dagger|``."""
    return float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0


def check_hermitian(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise NotSquare(f"matrix of shape {a.shape} is not square")
    res = hermitian_residual(a)
    if res > tol:
        raise NotHermitian(f"max |m - m^dagger| = {res:.3e} exceeds {tol:.1e}")
    return a


def fix_phase(v: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rotate the columns of ``v`` so their first non-negligible entry is real positive."""
    v = np.array(v, dtype=complex, copy=True)
    vecs = v if v.ndim == 2 else v[:, None]
    for c in range(vecs.shape[1]):
        col = vecs[:, c]
        nz = np.flatnonzero(np.abs(col) > tol)
        if nz.size:
            lead = col[nz[0]]
            vecs[:, c] = col * (abs(lead) / lead)
    return v


def hermitian_eig(m, tol: float = HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues real and sorted in
    descending order; eigenvectors are the columns of the second array, each
    phase-fixed so its first non-zero component is real and positive.

    Raises NotSquare / NotHermitian when the input is not (numerically)
    Hermitian to within ``tol``.
    """
    a = check_hermitian(m, tol)
    h = 0.5 * (a + dagger(a))
    w, v = np.linalg.eigh(h)
    order = np.argsort(-w, kind="stable")
    return w[order], fix_phase(v[:, order])


def psd_sqrt(m, tol: float = PSD_TOL) -> np.ndarray:
    """Principal square root of a positive semidefinite Hermitian matrix.

    Eigenvalues in ``[-tol, 0)`` are treated as zero; anything more negative
    raises NotPSD. Positive eigenvalues at round-off level (below
    ``n * eps * max|w|``) are also zeroed so they do not become ~1e-8 roots.
    """
    w, v = hermitian_eig(m)
    if w.size and w[-1] < -tol:
        raise NotPSD(f"smallest eigenvalue {w[-1]:.3e} below -{tol:.1e}")
    floor = w.size * np.finfo(float).eps * (np.max(np.abs(w)) if w.size else 0.0)
    root = np.sqrt(np.where(w > floor, w, 0.0))
    s = (v * root) @ dagger(v)
    return 0.5 * (s + dagger(s))


def singular_values(m) -> np.ndarray:
    return np.linalg.svd(as_matrix(m), compute_uv=False)


def effective_rank(m, rcond: float = 1e-10) -> int:
    """Number of singular values above ``rcond`` times the largest one."""
    s = singular_values(m)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > rcond * s[0]))


def pseudo_inverse(m, rcond: float = 1e-10) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with a relative singular-value cutoff.

    Singular values at or below ``rcond * s_max`` are treated as zero. The zero
    matrix maps to the (transposed-shape) zero matrix.
    """
    if not 0.0 < rcond < 1.0:
        raise ValueError(f"rcond must lie in (0, 1), got {rcond}")
    a = as_matrix(m)
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[1], a.shape[0]), dtype=complex)
    keep = s > rcond * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (dagger(vh) * inv) @ dagger(u)
