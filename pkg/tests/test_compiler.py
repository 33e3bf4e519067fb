import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from povm_forge.compiler import (CROSS, CompileError, check_structure, compile_povm, embed_two_mode,
                                 mzi_matrix, zeroing_setting)
from povm_forge.linalg import haar_unitary, make_rng, numerical_rank, random_ket
from povm_forge.povm import Povm, computational_basis, random_rank1_povm, sic_povm_d4
from povm_forge.simulator import simulate, simulate_batch

shapes = st.sampled_from([(2, 2), (2, 3), (2, 4), (3, 3), (3, 5), (3, 9), (4, 4), (4, 7), (4, 16)])


def born(povm, kets):
    return np.real(np.einsum("ka,iab,kb->ik", kets.conj(), povm.elements, kets))


@given(alpha=st.floats(0, 2 * math.pi), beta=st.floats(0, 2 * math.pi))
def test_mzi_is_unitary(alpha, beta):
    c = mzi_matrix(alpha, beta)
    assert np.allclose(c.conj().T @ c, np.eye(2), atol=1e-12)


def test_embed_examples(rng):
    assert np.allclose(embed_two_mode(np.eye(2), 1, 4), np.eye(4))
    assert np.allclose(embed_two_mode(mzi_matrix(*CROSS), 4, 4), np.diag([1, 1, 1, 0]))
    c = haar_unitary(2, rng)
    u = embed_two_mode(c, 2, 4)
    expected = np.eye(4, dtype=complex)
    expected[1:3, 1:3] = c
    assert np.array_equal(u, expected)
    with pytest.raises(ValueError):
        embed_two_mode(c, 5, 4)


@given(seed=st.integers(0, 10**6), j=st.integers(1, 3))
def test_zeroing_residual(seed, j):
    xi = random_ket(4, make_rng(seed))
    st_ = zeroing_setting(xi, j)
    out = embed_two_mode(mzi_matrix(*st_), j, 4) @ xi
    assert abs(out[j - 1]) < 1e-10
    assert 0 <= st_.alpha < 2 * math.pi and 0 <= st_.beta < 2 * math.pi


def test_zeroing_special_inputs():
    for xi in ([1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 0]):
        xi = np.array(xi, dtype=complex)
        out = embed_two_mode(mzi_matrix(*zeroing_setting(xi, 1)), 1, 4) @ xi
        assert abs(out[0]) < 1e-10
    assert zeroing_setting(np.array([0, 1, 0, 0]), 1).beta == pytest.approx(math.pi)
    s = zeroing_setting(np.array([0.5, 0.5, 0.5, 0.5]), 2)
    assert abs(math.tan(s.beta / 2)) == pytest.approx(1.0)


@given(seed=st.integers(0, 10**6), shape=shapes)
def test_born_rule_equivalence(seed, shape):
    d, n = shape
    povm = random_rank1_povm(d, n, seed)
    prog, trace = compile_povm(povm)
    assert prog.n_modules == n - 1
    rng = make_rng(seed + 1)
    kets = np.array([random_ket(d, rng) for _ in range(10)])
    p = simulate_batch(prog, kets)
    assert np.max(np.abs(p - born(povm, kets))) < 1e-9
    assert np.max(np.abs(p.sum(axis=0) - 1)) < 1e-9
    assert check_structure(prog, trace) == []


@given(seed=st.integers(0, 10**6), shape=shapes)
def test_trace_invariants(seed, shape):
    d, n = shape
    prog, trace = compile_povm(random_rank1_povm(d, n, seed))
    for i, m in enumerate(trace.modules, start=1):
        assert numerical_rank(m.k) == m.l
        assert m.l <= n - i + 1
        assert np.linalg.norm(m.eta) == pytest.approx(1.0)
        assert 0 <= m.b


def test_computational_basis_d2():
    prog, _ = compile_povm(computational_basis(2))
    assert prog.n_modules == 1
    assert np.allclose(simulate(prog, np.array([0.6, 0.8])), [0.36, 0.64])


def test_sic_compiles_to_15_modules(rng):
    sic = sic_povm_d4()
    prog, trace = compile_povm(sic)
    assert prog.n_modules == 15
    kets = np.array([random_ket(4, rng) for _ in range(50)])
    assert np.max(np.abs(simulate_batch(prog, kets) - born(sic, kets))) < 1e-9
    assert trace.effective_dims[-4:] == [4, 3, 2, 1]


def test_projective_has_3_modules_and_vanishing_pattern():
    prog, _ = compile_povm(random_rank1_povm(4, 4, 2))
    assert prog.n_modules == 3
    c00 = np.abs(prog.c00())
    for i in range(1, 4):
        for j in range(4 - i + 1, 5):
            assert c00[i - 1, j - 1] < 1e-12


def test_compile_rejects_invalid_input():
    bad = Povm.from_rank1([0.5, 0.5], [[1, 0], [0, 1]])
    with pytest.raises(CompileError):
        compile_povm(bad)
    with pytest.raises(CompileError):
        compile_povm(Povm.from_elements([np.eye(2) / 2, np.eye(2) / 2]))


def test_repeated_outcome_is_supported():
    # the same ket twice with split weight: rank stays, coupling is partial
    k = np.array([[1, 0], [1, 0], [0, 1]], dtype=complex)
    povm = Povm.from_rank1([0.5, 0.5, 1.0], k)
    prog, _ = compile_povm(povm)
    assert np.allclose(simulate(prog, np.array([0.6, 0.8])), [0.18, 0.18, 0.64])
