import numpy as np
import pytest
from hypothesis import given, strategies as st

from povm_forge.linalg import (NotPsdError, fidelity, haar_unitary, hermitian_eigen, kron, make_rng,
                               matrix_sqrt_psd, numerical_rank, pseudo_inverse)

from conftest import random_hermitian, random_matrix, random_psd

seeds = st.integers(0, 2**32 - 1)


def test_pseudo_inverse_fixed_cases():
    assert np.allclose(pseudo_inverse(np.eye(4)), np.eye(4))
    assert np.allclose(pseudo_inverse(np.diag([1.0, 0.0])), np.diag([1.0, 0.0]))


def test_pseudo_inverse_rejects_non_finite():
    with pytest.raises(ValueError):
        pseudo_inverse(np.array([[1.0, np.nan], [0.0, 1.0]]))


@given(seed=seeds, rank=st.integers(1, 4), rows=st.integers(1, 6), cols=st.integers(1, 6))
def test_penrose_conditions(seed, rank, rows, cols):
    rng = make_rng(seed)
    rank = min(rank, rows, cols)
    m = random_matrix(rng, rows, rank) @ random_matrix(rng, rank, cols)
    p = pseudo_inverse(m)
    scale = max(1.0, np.linalg.norm(m) * np.linalg.norm(p))
    assert np.max(np.abs(m @ p @ m - m)) < 1e-8 * scale
    assert np.max(np.abs(p @ m @ p - p)) < 1e-8 * scale
    assert np.max(np.abs((m @ p).conj().T - m @ p)) < 1e-8 * scale
    assert np.max(np.abs((p @ m).conj().T - p @ m)) < 1e-8 * scale


def test_pseudo_inverse_with_known_rank(rng):
    m = random_matrix(rng, 4, 2) @ random_matrix(rng, 2, 4)
    assert numerical_rank(m) == 2
    assert np.allclose(pseudo_inverse(m, rank=2), pseudo_inverse(m), atol=1e-10)


def test_hermitian_eigen_examples():
    w, v = hermitian_eigen(np.diag([2.0, 1.0]))
    assert np.allclose(w, [1, 2])
    assert np.allclose(np.abs(v), [[0, 1], [1, 0]])
    w, _ = hermitian_eigen(np.array([[0, 1], [1, 0]]))
    assert np.allclose(w, [-1, 1])
    with pytest.raises(ValueError):
        hermitian_eigen(np.array([[0, 1], [0, 0]]))


@given(seed=seeds, d=st.integers(1, 8))
def test_hermitian_eigen_reconstruction(seed, d):
    h = random_hermitian(make_rng(seed), d)
    w, v = hermitian_eigen(h)
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(v @ np.diag(w) @ v.conj().T - h)) < 1e-9
    assert np.max(np.abs(v.conj().T @ v - np.eye(d))) < 1e-9
    assert abs(w.sum() - np.trace(h).real) < 1e-9


def test_matrix_sqrt_examples():
    assert np.allclose(matrix_sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))
    assert np.allclose(matrix_sqrt_psd(np.eye(3)), np.eye(3))
    assert np.allclose(matrix_sqrt_psd(np.diag([1.0, -1e-10])), np.diag([1.0, 0.0]))
    with pytest.raises(NotPsdError):
        matrix_sqrt_psd(np.diag([1.0, -1e-3]))


@given(seed=seeds, d=st.integers(1, 6), rank=st.integers(1, 6))
def test_matrix_sqrt_squares_back(seed, d, rank):
    p = random_psd(make_rng(seed), d, min(rank, d))
    s = matrix_sqrt_psd(p)
    assert np.max(np.abs(s @ s - p)) < 1e-8 * max(1.0, np.abs(p).max())
    assert np.linalg.eigvalsh(s).min() > -1e-8


def test_kron_examples(rng):
    assert np.array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    expected = np.zeros((4, 4))
    expected[1, 1] = 1
    assert np.array_equal(kron(p0, p1), expected)
    a, b, c, d = (random_matrix(rng, 2, 2) for _ in range(4))
    assert np.allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d))
    assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)), rtol=1e-14, atol=0)
    # with Gaussian-integer entries every product is exact, so recomputation agrees bit for bit
    ia, ib, ic = (np.round(m) for m in (a, b, c))
    assert np.array_equal(kron(kron(ia, ib), ic), kron(ia, kron(ib, ic)))


@given(seed=seeds, n=st.integers(1, 6))
def test_haar_unitary_is_unitary(seed, n):
    u = haar_unitary(n, make_rng(seed))
    assert np.allclose(u.conj().T @ u, np.eye(n), atol=1e-12)


def test_make_rng_is_deterministic():
    assert make_rng(5).random() == make_rng(5).random()
    assert isinstance(make_rng(5).bit_generator, np.random.Philox)


def test_fidelity_of_pure_states(rng):
    a, b = random_matrix(rng, 3, 1)[:, 0], random_matrix(rng, 3, 1)[:, 0]
    a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
    f = fidelity(np.outer(a, a.conj()), np.outer(b, b.conj()))
    assert f == pytest.approx(abs(np.vdot(a, b)) ** 2, abs=1e-9)
