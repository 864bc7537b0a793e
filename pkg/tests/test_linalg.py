import numpy as np
import pytest

from tpmcert import linalg
from tpmcert.exceptions import ValidationError

from oracles import random_unitary

RNG = np.random.default_rng(101)


def rand_complex(d):
    return RNG.standard_normal((d, d)) + 1j * RNG.standard_normal((d, d))


def test_kron_identity_cases():
    assert np.array_equal(linalg.kron(linalg.ID2, linalg.ID2), np.eye(4))
    assert np.allclose(
        linalg.kron(linalg.SIGMA_Z, linalg.ID2), np.diag([1, 1, -1, -1])
    )
    ket00 = np.kron(linalg.KET_0, linalg.KET_0)
    ket11 = np.kron(linalg.KET_1, linalg.KET_1)
    assert np.allclose(linalg.kron(linalg.SIGMA_X, linalg.SIGMA_X) @ ket00, ket11)


def test_kron_associativity_random():
    for _ in range(10):
        a, b, c = rand_complex(2), rand_complex(3), rand_complex(2)
        left = linalg.kron(linalg.kron(a, b), c)
        right = linalg.kron(a, linalg.kron(b, c))
        assert np.abs(left - right).max() < 1e-12


def test_partial_trace_bell_marginal():
    reduced = linalg.partial_trace(linalg.bell_state(), (2, 2), {1})
    assert np.abs(reduced - linalg.ID2 / 2).max() < 1e-12


def test_partial_trace_product_factorization():
    rho, sigma = rand_complex(2), rand_complex(3)
    got = linalg.partial_trace(linalg.kron(rho, sigma), (2, 3), {1})
    assert np.abs(got - rho * np.trace(sigma)).max() < 1e-12


def test_partial_trace_all_factors_is_trace():
    m = rand_complex(8)
    got = linalg.partial_trace(m, (2, 2, 2), {0, 1, 2})
    assert got.shape == (1, 1)
    assert abs(got[0, 0] - np.trace(m)) < 1e-12


def test_partial_trace_preserves_trace():
    m = rand_complex(8)
    for traced in ({0}, {1}, {2}, {0, 2}):
        got = linalg.partial_trace(m, (2, 2, 2), traced)
        assert abs(np.trace(got) - np.trace(m)) < 1e-12


def test_partial_trace_layout_mismatch():
    with pytest.raises(ValidationError):
        linalg.partial_trace(rand_complex(6), (2, 2), {0})


def test_partial_transpose_product_case():
    rho, sigma = rand_complex(2), rand_complex(2)
    got = linalg.partial_transpose(linalg.kron(rho, sigma), (2, 2), 1)
    assert np.abs(got - linalg.kron(rho, sigma.T)).max() < 1e-14


def test_partial_transpose_bell_spectrum():
    pt = linalg.partial_transpose(linalg.bell_state(), (2, 2), 1)
    eigs = np.sort(np.linalg.eigvalsh(pt))
    assert np.abs(eigs - np.array([-0.5, 0.5, 0.5, 0.5])).max() < 1e-12


def test_partial_transpose_involution_exact():
    m = rand_complex(8)
    twice = linalg.partial_transpose(
        linalg.partial_transpose(m, (2, 2, 2), 1), (2, 2, 2), 1
    )
    assert np.array_equal(twice, m)


def test_partial_transpose_preserves_trace_and_hermiticity():
    m = rand_complex(4)
    m = m + m.conj().T
    pt = linalg.partial_transpose(m, (2, 2), 0)
    assert abs(np.trace(pt) - np.trace(m)) < 1e-13
    assert linalg.is_hermitian(pt, 1e-13)


def test_vectorize_convention():
    v = linalg.vectorize(linalg.ID2).reshape(-1)
    assert np.allclose(v, [1, 0, 0, 1])
    v = linalg.vectorize(linalg.SIGMA_X).reshape(-1)
    assert np.allclose(v, [0, 1, 1, 0])


def test_vectorize_norm_is_hs_norm():
    for _ in range(5):
        u = random_unitary(RNG, 2)
        v = linalg.vectorize(u)
        assert abs((v.conj().T @ v)[0, 0] - 2.0) < 1e-12


def test_vectorize_round_trip_exact():
    u = rand_complex(3)
    assert np.array_equal(linalg.unvectorize(linalg.vectorize(u)), u)


def test_herm_eigenvalues_basics():
    assert np.allclose(linalg.herm_eigenvalues(linalg.ID2), [1, 1])
    assert np.allclose(linalg.herm_eigenvalues(linalg.SIGMA_Z), [-1, 1])
    pt = linalg.partial_transpose(linalg.bell_state(), (2, 2), 1)
    assert np.abs(linalg.herm_eigenvalues(pt) - [-0.5, 0.5, 0.5, 0.5]).max() < 1e-12


def test_herm_eigenvalues_sum_is_trace():
    m = rand_complex(8)
    m = m + m.conj().T
    eigs = linalg.herm_eigenvalues(m)
    assert abs(eigs.sum() - np.trace(m).real) < 1e-9
    assert np.all(np.diff(eigs) >= 0)


def test_herm_eigenvalues_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        linalg.herm_eigenvalues(rand_complex(3))
