import numpy as np
import pytest

from quditqpt.errors import UnsupportedDimension
from quditqpt.mub import MubSet, build_mubs, is_prime, mub_projectors, orthonormality_error, unbiasedness_check


@pytest.mark.parametrize("d", [2, 3, 4, 5, 7, 11])
def test_mub_sets_are_complete_and_unbiased(d):
    s = build_mubs(d)
    assert s.n_bases == d + 1
    assert orthonormality_error(s) < 1e-12
    assert unbiasedness_check(s) < (1e-10 if d == 4 else 1e-12)
    # basis 0 is computational
    assert np.allclose(s.vectors[0], np.eye(d))


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_pairwise_overlaps_brute_force(d):
    s = build_mubs(d)
    for a in range(d + 1):
        for b in range(d + 1):
            for i in range(d):
                for j in range(d):
                    ov = abs(np.vdot(s.vectors[a, i], s.vectors[b, j])) ** 2
                    if a == b:
                        assert ov == pytest.approx(float(i == j), abs=1e-12)
                    else:
                        assert ov == pytest.approx(1 / d, abs=1e-10)


def test_qubit_bases_are_pauli_eigenbases():
    s = build_mubs(2)
    paulis = [np.diag([1, -1]), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]])]
    for b, p in enumerate(paulis):
        for m in range(2):
            v = s.vectors[b, m]
            assert np.allclose(p @ v, (1 - 2 * m) * v)


def test_prime_formula():
    d = 5
    s = build_mubs(d)
    w = np.exp(2j * np.pi / d)
    for b in range(1, d + 1):
        for m in range(d):
            expect = np.array([w ** (b * j * j + m * j) for j in range(d)]) / np.sqrt(d)
            assert np.allclose(s.vectors[b, m], expect)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_projectors_complete_per_basis(d):
    p = build_mubs(d).projector_array()
    assert np.max(np.abs(p.sum(axis=1) - np.eye(d))) < 1e-12
    assert len(mub_projectors(build_mubs(d))) == d * (d + 1)


@pytest.mark.parametrize("d", [1, 6, 8, 9, 10])
def test_unsupported_dimension(d):
    with pytest.raises(UnsupportedDimension):
        build_mubs(d)


def test_corrupted_set_detected():
    d = 3
    v = build_mubs(d).vectors.copy()
    v[1, 0] = [1, 0, 0]
    assert unbiasedness_check(MubSet(v)) >= 1 / d - 1 / d**2


def test_is_prime():
    assert [n for n in range(20) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19]
