import numpy as np
import pytest
from hypothesis import given, strategies as st

from quditqpt.errors import NotHermitian, NotPSD, NotSquare
from quditqpt.numkernel import effective_rank, hermitian_eig, psd_sqrt, pseudo_inverse

from conftest import random_hermitian


def test_eig_identity():
    w, v = hermitian_eig(np.eye(3))
    assert np.allclose(w, 1.0)
    assert np.allclose(v.conj().T @ v, np.eye(3))


def test_eig_diagonal_sorted_descending():
    w, v = hermitian_eig(np.diag([-1.0, 2.0]))
    assert np.allclose(w, [2.0, -1.0])
    assert np.allclose(np.abs(v), [[0, 1], [1, 0]])


def test_eig_round_trip(rng):
    m = random_hermitian(rng, 5)
    w, v = hermitian_eig(m)
    assert np.linalg.norm(v @ np.diag(w) @ v.conj().T - m) < 1e-9
    assert np.linalg.norm(v.conj().T @ v - np.eye(5)) < 1e-9
    assert np.all(np.diff(w) <= 0)


def test_eig_phase_fixed(rng):
    _, v = hermitian_eig(random_hermitian(rng, 4))
    for col in v.T:
        lead = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
        assert abs(lead.imag) < 1e-14 and lead.real > 0


def test_eig_errors():
    with pytest.raises(NotSquare):
        hermitian_eig(np.ones((2, 3)))
    with pytest.raises(NotHermitian):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


@given(st.integers(1, 6), st.integers(0, 2**31))
def test_eig_sum_equals_trace(d, seed):
    m = random_hermitian(np.random.default_rng(seed), d)
    w, _ = hermitian_eig(m)
    assert abs(w.sum() - np.trace(m).real) < 1e-9


def test_psd_sqrt_examples():
    assert np.allclose(psd_sqrt(np.eye(3)), np.eye(3))
    assert np.allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_psd_sqrt_round_trip(rng):
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho /= np.trace(rho)
    s = psd_sqrt(rho)
    assert np.linalg.norm(s @ s - rho) < 1e-8
    assert np.allclose(s, s.conj().T)
    assert np.linalg.eigvalsh(s).min() >= -1e-12
    assert np.linalg.norm(s @ rho - rho @ s) < 1e-8


def test_psd_sqrt_clips_tiny_negative():
    s = psd_sqrt(np.diag([1.0, -5e-10]))
    assert np.allclose(s, np.diag([1.0, 0.0]))


def test_psd_sqrt_rejects_negative():
    with pytest.raises(NotPSD):
        psd_sqrt(np.diag([1.0, -1e-6]))


def test_pinv_examples():
    assert np.allclose(pseudo_inverse(np.eye(3)), np.eye(3))
    assert np.allclose(pseudo_inverse(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))
    assert np.allclose(pseudo_inverse(np.zeros((2, 3))), np.zeros((3, 2)))


def test_pinv_matches_inverse(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.max(np.abs(pseudo_inverse(a) - np.linalg.inv(a))) < 1e-8
    assert np.max(np.abs(pseudo_inverse(pseudo_inverse(a)) - a)) < 1e-8


@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 4), st.integers(0, 2**31))
def test_pinv_moore_penrose(rows, cols, rank, seed):
    rng = np.random.default_rng(seed)
    k = min(rank, rows, cols)
    a = (rng.normal(size=(rows, k)) + 1j * rng.normal(size=(rows, k))) @ (
        rng.normal(size=(k, cols)) + 1j * rng.normal(size=(k, cols))
    )
    p = pseudo_inverse(a)
    assert np.allclose(a @ p @ a, a, atol=1e-8)
    assert np.allclose(p @ a @ p, p, atol=1e-8)
    assert np.allclose(a @ p, (a @ p).conj().T, atol=1e-8)
    assert np.allclose(p @ a, (p @ a).conj().T, atol=1e-8)


def test_pinv_rcond_validation():
    with pytest.raises(ValueError):
        pseudo_inverse(np.eye(2), rcond=0.0)


def test_effective_rank():
    assert effective_rank(np.diag([1.0, 1e-4, 1e-12]), rcond=1e-3) == 1
    assert effective_rank(np.diag([1.0, 1e-4, 1e-12]), rcond=1e-6) == 2
    assert effective_rank(np.zeros((2, 2))) == 0
