import numpy as np
import pytest

from povm_forge.linalg import make_rng, random_ket
from povm_forge.povm import StateSet, gram_det, usd_state_sets, validate_povm
from povm_forge.tasks.discrimination import (UnambiguityError, discrimination_kets, mesd_min_error,
                                             mesd_optimize, usd_optimize)

USD_VALUES = [0.725927, 0.597354, 0.557468]
MESD_VALUES = [0.136415, 0.092089, 0.095345]


def two_states(overlap_angle):
    a = np.array([1.0, 0.0])
    b = np.array([np.cos(overlap_angle), np.sin(overlap_angle)])
    return StateSet(np.array([a, b], dtype=complex))


@pytest.mark.parametrize("idx", range(3))
def test_usd_reference_values(idx):
    res = usd_optimize(usd_state_sets()[idx])
    assert res.p_incn == pytest.approx(USD_VALUES[idx], abs=1e-5)
    assert validate_povm(res.povm).passed


@pytest.mark.parametrize("idx", range(3))
def test_usd_is_unambiguous(idx):
    states = usd_state_sets()[idx]
    res = usd_optimize(states)
    # outcome j never fires on state i != j
    probs = np.einsum("ia,jab,ib->ji", states.states.conj(), res.povm.elements[:-1], states.states).real
    off = probs - np.diag(np.diag(probs))
    assert np.max(np.abs(off)) < 1e-9
    assert np.linalg.eigvalsh(res.e_incn).min() >= -1e-8


def test_discrimination_kets_orthogonality():
    states = usd_state_sets()[0]
    phis = discrimination_kets(states)
    ov = np.abs(states.states.conj() @ phis.T)
    assert np.max(np.abs(ov - np.diag(np.diag(ov)))) < 1e-12
    assert np.all(np.diag(ov) > 0.1)
    assert np.allclose(np.linalg.norm(phis, axis=1), 1.0)


def test_usd_orthonormal_basis_is_perfect():
    res = usd_optimize(StateSet(np.eye(3, dtype=complex)))
    assert res.p_incn == pytest.approx(0.0, abs=1e-7)
    assert np.allclose(res.coefficients, 1.0, atol=1e-7)


@pytest.mark.parametrize("angle", [0.3, 0.7, 1.2])
def test_usd_two_states_closed_form(angle):
    # equal priors: optimal inconclusive rate is the overlap |<a|b>|
    res = usd_optimize(two_states(angle))
    assert res.p_incn == pytest.approx(abs(np.cos(angle)), abs=1e-6)


def test_usd_dependent_set_rejected():
    rng = make_rng(4)
    a, b = random_ket(3, rng), random_ket(3, rng)
    c = (a + b) / np.linalg.norm(a + b)
    states = StateSet(np.array([a, b, c]))
    assert gram_det(states) < 1e-10
    with pytest.raises(UnambiguityError):
        usd_optimize(states)


def test_usd_wrong_count_rejected():
    with pytest.raises(UnambiguityError):
        usd_optimize(StateSet(np.eye(3, dtype=complex)[:2]))


@pytest.mark.parametrize("idx", range(3))
def test_mesd_reference_values(idx):
    err, povm = mesd_optimize(usd_state_sets()[idx])
    assert err == pytest.approx(MESD_VALUES[idx], abs=1e-5)
    assert validate_povm(povm).passed


@pytest.mark.parametrize("angle", [0.2, 0.9, 1.4])
def test_mesd_helstrom(angle):
    expected = 0.5 * (1 - np.sqrt(1 - np.cos(angle) ** 2))
    assert mesd_min_error(two_states(angle)) == pytest.approx(expected, abs=1e-7)


def test_mesd_basis_has_no_error():
    assert mesd_min_error(StateSet(np.eye(4, dtype=complex))) == pytest.approx(0.0, abs=1e-8)


def test_mesd_below_usd():
    for states in usd_state_sets():
        assert mesd_min_error(states) <= usd_optimize(states).p_incn
