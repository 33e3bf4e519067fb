"""Unambiguous and minimum-error discrimination of pure states."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..linalg import dagger, projector
from ..povm import Povm, StateSet, gram_det
from ..sdp import SdpProblem, SdpSolution, solve

INDEPENDENCE_TOL = 1e-8


class UnambiguityError(ValueError):
    """The input states are linearly dependent, so no error-free measurement exists."""


class SolverError(RuntimeError):
    def __init__(self, message: str, solution: SdpSolution | None = None):
        super().__init__(message)
        self.solution = solution


@dataclass
class UsdResult:
    states: StateSet
    coefficients: np.ndarray  # a_j
    phis: np.ndarray          # Phi_j as rows
    p_incn: float
    povm: Povm                # E_1..E_k, E_incn

    @property
    def e_incn(self) -> np.ndarray:
        return self.povm.elements[-1]

    @property
    def p_success(self) -> float:
        return 1.0 - self.p_incn


def _phase_fix(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v) > 1e-12))
    return v * (abs(v[k]) / v[k])


def discrimination_kets(states: StateSet) -> np.ndarray:
    """``Phi_j``: unit vectors orthogonal to every state except ``Psi_j``."""
    psi = states.states
    k, d = psi.shape
    out = np.empty((k, d), dtype=complex)
    for j in range(k):
        others = np.delete(psi, j, axis=0).conj()  # rows <Psi_i|
        _, _, vh = np.linalg.svd(others, full_matrices=True)
        out[j] = _phase_fix(vh[-1].conj())
    return out


def usd_optimize(states: StateSet) -> UsdResult:
    """Optimal unambiguous discrimination of ``k = d`` equiprobable pure states."""
    k, d = len(states), states.dim
    if k != d:
        raise UnambiguityError(f"need as many states as the dimension, got {k} in d={d}")
    if gram_det(states) <= INDEPENDENCE_TOL:
        raise UnambiguityError("states are linearly dependent; unambiguous discrimination impossible")
    phis = discrimination_kets(states)
    overlaps = np.abs(np.einsum("ki,ki->k", states.states.conj(), phis)) ** 2

    p = SdpProblem()
    a = [p.add_block(1, complex=False) for _ in range(k)]
    s = p.add_block(d)
    p.set_objective({a[j]: [[overlaps[j] / k]] for j in range(k)})
    for j in range(k):
        p.add_ineq({a[j]: [[1.0]]}, 1.0, sense="<=")
    terms = [(s, np.eye(d))] + [(a[j], phis[j][:, None]) for j in range(k)]
    p.add_matrix_eq(terms, np.eye(d))
    sol = solve(p)
    if not sol.ok:
        raise SolverError(f"USD SDP ended with status {sol.status}", sol)

    coeffs = np.clip(np.array([sol.primal[b][0, 0] for b in a]), 0.0, 1.0)
    conclusive = np.einsum("j,ji,jk->ik", coeffs, phis, phis.conj())
    top = np.linalg.eigvalsh(conclusive).max()
    if top > 1.0:
        coeffs = coeffs / top
        conclusive = conclusive / top
    elements = np.concatenate([coeffs[:, None, None] * np.einsum("ji,jk->jik", phis, phis.conj()),
                               (np.eye(d) - conclusive)[None]])
    povm = Povm.from_elements(elements)
    p_incn = 1.0 - float(coeffs @ overlaps) / k
    return UsdResult(states, coeffs, phis, p_incn, povm)


def mesd_min_error(states: StateSet) -> float:
    """Minimum average error for discriminating equiprobable pure states."""
    return mesd_optimize(states)[0]


def mesd_optimize(states: StateSet) -> tuple[float, Povm]:
    k, d = len(states), states.dim
    p = SdpProblem()
    blocks = [p.add_block(d) for _ in range(k)]
    p.set_objective({b: projector(states[j]) / k for j, b in enumerate(blocks)})
    p.add_matrix_eq([(b, np.eye(d)) for b in blocks], np.eye(d))
    sol = solve(p)
    if not sol.ok:
        raise SolverError(f"MESD SDP ended with status {sol.status}", sol)
    elements = np.array([(m + dagger(m)) / 2 for m in (sol.primal[b] for b in blocks)])
    return 1.0 - sol.primal_value, Povm.from_elements(elements)
