import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st
from scipy.optimize import minimize_scalar

from povm_forge.linalg import make_rng
from povm_forge.sdp import SdpProblem, solve

from conftest import random_hermitian, random_psd


def inner(a, b):
    return float(np.real(np.trace(a @ b)))


def trace_bounded(d=2, complex_=True):
    # maximize Tr X subject to X + S = I
    p = SdpProblem()
    x, s = p.add_block(d, complex_), p.add_block(d, complex_)
    p.set_objective({x: np.eye(d)})
    p.add_matrix_eq([(x, np.eye(d)), (s, np.eye(d))], np.eye(d))
    return p, x


@pytest.mark.parametrize("complex_", [True, False])
def test_trace_below_identity(complex_):
    p, x = trace_bounded(2, complex_)
    sol = solve(p)
    assert sol.status == "optimal"
    assert sol.value == pytest.approx(2.0, abs=1e-8)
    assert np.allclose(sol.primal[x], np.eye(2), atol=1e-6)
    assert sol.primal_residual <= 1e-7


def test_min_eigenvalue_problem(rng):
    c = random_hermitian(rng, 4)
    p = SdpProblem()
    x = p.add_block(4)
    p.set_objective({x: c}, sense="min")
    p.add_eq({x: np.eye(4)}, 1.0)
    sol = solve(p)
    assert sol.value == pytest.approx(np.linalg.eigvalsh(c)[0], abs=1e-8)
    assert sol.dual_value == pytest.approx(sol.value, abs=1e-8)


def test_offset_and_inequality():
    p = SdpProblem()
    x = p.add_block(1, complex=False)
    p.set_objective({x: [[1.0]]}, offset=0.5)
    p.add_ineq({x: [[1.0]]}, 3.0, "<=")
    sol = solve(p)
    assert sol.value == pytest.approx(3.5, abs=1e-8)
    p2 = SdpProblem()
    x = p2.add_block(1, complex=False)
    p2.set_objective({x: [[1.0]]}, sense="min")
    p2.add_ineq({x: [[1.0]]}, 2.0, ">=")
    assert solve(p2).value == pytest.approx(2.0, abs=1e-8)


def test_real_block_off_diagonal():
    p = SdpProblem()
    x = p.add_block(2, complex=False)
    p.set_objective({x: np.array([[0, 1], [1, 0]])})
    p.add_eq({x: np.eye(2)}, 1)
    sol = solve(p)
    assert sol.value == pytest.approx(1.0, abs=1e-8)


def test_complex_block_needs_phase():
    # optimum of Re Tr(C X) with C having an imaginary off-diagonal
    c = np.array([[0, 1j], [-1j, 0]])
    p = SdpProblem()
    x = p.add_block(2)
    p.set_objective({x: c})
    p.add_eq({x: np.eye(2)}, 1)
    sol = solve(p)
    assert sol.value == pytest.approx(1.0, abs=1e-8)
    assert abs(sol.primal[x][0, 1].imag) == pytest.approx(0.5, abs=1e-6)


def test_infeasible_and_unbounded():
    p = SdpProblem()
    x = p.add_block(2)
    p.set_objective({x: np.eye(2)})
    p.add_eq({x: np.eye(2)}, -1.0)
    assert solve(p).status == "infeasible"
    p = SdpProblem()
    x = p.add_block(2)
    p.set_objective({x: np.eye(2)})
    p.add_eq({x: np.diag([1.0, -1.0])}, 0.0)
    sol = solve(p)
    assert sol.status == "unbounded" and not sol.ok


def test_builder_rejects_bad_shapes():
    p = SdpProblem()
    x = p.add_block(2)
    with pytest.raises(ValueError):
        p.add_eq({x: np.eye(3)}, 1.0)
    with pytest.raises(ValueError):
        p.add_eq({x: np.zeros((2, 2))}, 1.0)
    with pytest.raises(ValueError):
        p.set_objective({x: np.eye(2)}, sense="sideways")


def test_matrix_eq_scalarization_order():
    # diagonal entries first contribute Re, off-diagonals Re then Im, row-major
    p = SdpProblem()
    x = p.add_block(2)
    rows = p.add_matrix_eq([(x, np.eye(2))], np.array([[1, 2 + 3j], [2 - 3j, 4]]))
    rhs = [p.constraints[k][1] for k in rows]
    assert rhs == [1.0, 2.0, 3.0, 4.0]
    general = SdpProblem()
    y = general.add_block(2)
    # Im of a diagonal entry of 2X vanishes identically, leaving 8 - 2 scalar rows
    assert len(general.add_matrix_eq([(y, np.eye(2), 2 * np.eye(2))], np.zeros((2, 2)), hermitian=False)) == 6


def test_identity_proportional_builder():
    # X with X ~ identity and Tr X = 2, maximize X[0, 0]
    p = SdpProblem()
    x = p.add_block(3)
    p.set_objective({x: np.diag([1.0, 0, 0])})
    p.add_identity_proportional([(x, np.eye(3))], 3)
    p.add_eq({x: np.eye(3)}, 2.0)
    sol = solve(p)
    assert np.allclose(sol.primal[x], np.eye(3) * 2 / 3, atol=1e-7)


def random_problem(seed, d=3, m=4):
    rng = make_rng(seed)
    p = SdpProblem()
    x = p.add_block(d)
    w = p.add_block(2, complex=False)
    c = random_hermitian(rng, d)
    p.set_objective({x: c, w: np.diag(rng.standard_normal(2))})
    x0 = random_psd(rng, d) + np.eye(d)
    w0 = np.diag(rng.uniform(0.5, 1.5, 2))
    for _ in range(m):
        a = random_hermitian(rng, d)
        e = np.diag(rng.standard_normal(2))
        p.add_eq({x: a, w: e}, inner(a, x0) + inner(e, w0))
    p.add_eq({x: np.eye(d), w: np.eye(2)}, np.trace(x0).real + np.trace(w0).real)  # bounded
    return p


def gap_decomposition(p, xs, y, zs):
    """Terms of ``b.y - <C, X> = <X, Z> + <X, A^T y - C - Z> + (b - A X).y`` for a max problem."""
    b = np.array([r for _, r in p.constraints])
    ax = np.array([sum(inner(a, xs[k]) for k, a in coeffs.items()) for coeffs, _ in p.constraints])
    aty = [np.zeros_like(x) for x in xs]
    for (coeffs, _), yk in zip(p.constraints, y):
        for k, a in coeffs.items():
            aty[k] = aty[k] + yk * a
    c = [p.objective.get(k, np.zeros_like(x)) for k, x in enumerate(xs)]
    primal = sum(inner(ck, x) for ck, x in zip(c, xs))
    xz = sum(inner(x, z) for x, z in zip(xs, zs))
    cross = sum(inner(x, a - ck - z) for x, a, ck, z in zip(xs, aty, c, zs))
    return float(b @ y) - primal, xz, cross, float((b - ax) @ y), np.max(np.abs(b - ax))


@given(seed=st.integers(0, 10**6))
def test_weak_duality_every_iterate(seed):
    p = random_problem(seed)
    seen = []

    def check(it, xs, y, zs):
        gap, xz, cross, res_term, pres = gap_decomposition(p, xs, y, zs)
        scale = 1 + abs(gap) + abs(xz) + abs(cross) + abs(res_term)
        assert gap == pytest.approx(xz + cross + res_term, abs=1e-9 * scale)
        assert xz >= -1e-12
        assert all(np.linalg.eigvalsh(x).min() > 0 for x in xs)
        # weak duality: the gap can fall below zero only by the infeasibility terms
        assert gap >= -1e-9 - abs(cross) - abs(res_term)
        seen.append(it)

    sol = solve(p, callback=check)
    assert sol.ok
    assert seen == [rec["iteration"] for rec in sol.history]
    assert sol.primal_residual <= 1e-7
    assert sol.dual_residual <= 1e-7
    assert sol.gap <= 1e-6 * (1 + abs(sol.value))


def scaled(block, f):
    """Terms expressing ``x * F`` for a 1x1 block ``x`` (one rank-1 term per eigenvector)."""
    w, v = np.linalg.eigh(f)
    return [(block, wk * v[:, [k]], v[:, [k]]) for k, wk in enumerate(w)]


def grid_oracle(c1, c2, f0, f1, f2):
    """max c1 x + c2 y over x, y >= 0 with F0 - x F1 - y F2 >= 0, by a dense x grid plus refinement.

    For fixed x the feasible y range is [0, lambda_min(F2^-1/2 (F0 - x F1) F2^-1/2)].
    """
    w2, v2 = np.linalg.eigh(f2)
    t = v2 @ np.diag(w2 ** -0.5) @ v2.conj().T
    w1, v1 = np.linalg.eigh(f1)
    s1 = v1 @ np.diag(w1 ** -0.5) @ v1.conj().T
    x_max = np.linalg.eigvalsh(s1 @ f0 @ s1)[0]

    def value(x):
        y_max = np.linalg.eigvalsh(t @ (f0 - x * f1) @ t)[0]
        return c1 * x + c2 * max(y_max, 0.0) if y_max >= 0 else -np.inf

    grid = np.linspace(0, x_max, 4001)
    vals = np.array([value(x) for x in grid])
    k = int(np.argmax(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda x: -value(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    return max(vals[k], -res.fun)


@pytest.mark.parametrize("seed", range(5))
def test_grid_search_oracle(seed):
    rng = make_rng(seed)
    f0 = random_psd(rng, 3) + np.eye(3)
    f1, f2 = random_psd(rng, 3) + 0.1 * np.eye(3), random_psd(rng, 3) + 0.1 * np.eye(3)
    c1, c2 = rng.uniform(0.2, 1.0, 2)
    p = SdpProblem()
    x, y, s = p.add_block(1, False), p.add_block(1, False), p.add_block(3)
    p.set_objective({x: [[c1]], y: [[c2]]})
    p.add_matrix_eq([(s, np.eye(3))] + scaled(x, f1) + scaled(y, f2), f0)
    sol = solve(p)
    assert sol.ok
    assert sol.value == pytest.approx(grid_oracle(c1, c2, f0, f1, f2), abs=1e-4)
    xv, yv = sol.primal[x][0, 0].real, sol.primal[y][0, 0].real
    assert np.allclose(sol.primal[s], f0 - xv * f1 - yv * f2, atol=1e-7)


def test_scalar_block_times_matrix_term():
    f = np.array([[2.0, 1j], [-1j, 3.0]])
    p = SdpProblem()
    x, s = p.add_block(1, False), p.add_block(2)
    p.set_objective({x: [[1.0]]})
    p.add_matrix_eq([(s, np.eye(2))] + scaled(x, f), np.eye(2))
    sol = solve(p)
    assert sol.value == pytest.approx(1 / np.linalg.eigvalsh(f).max(), abs=1e-8)
