"""Randomness certification from a state-discrimination witness on SIC states.

The witness is ``W = (1/n) sum_x Tr(rho_x E_x)`` over the ``n = d^2`` states of
a Weyl-Heisenberg covariant SIC.  Randomness is extracted from the outcome on
the maximally mixed state.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

from ..povm import Povm, StateSet, displacement, sic_states_d4
from ..sdp import SdpProblem, solve
from .discrimination import SolverError

THREADS_ENV = "POVM_FORGE_THREADS"


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _sic(states: StateSet | None) -> StateSet:
    states = sic_states_d4() if states is None else states
    if len(states) != states.dim ** 2:
        raise ValueError(f"expected {states.dim ** 2} SIC states, got {len(states)}")
    return states


def sic_witness(povm: Povm, states: StateSet | None = None) -> float:
    """Average success ``(1/n) sum_x <psi_x|E_x|psi_x>`` of discriminating the SIC states."""
    states = _sic(states)
    if povm.n_outcomes != len(states):
        raise ValueError(f"witness needs {len(states)} outcomes, got {povm.n_outcomes}")
    vals = np.einsum("xi,xij,xj->x", states.states.conj(), povm.elements, states.states)
    return float(np.real(vals).mean())


# ---------------------------------------------------------------- N outcomes

def _translate(subset: tuple[int, ...], a: int, b: int, d: int) -> tuple[int, ...]:
    return tuple(sorted(((i // d + a) % d) * d + (i % d + b) % d for i in subset))


def canonical_subsets(n_outcomes: int, d: int) -> list[tuple[int, ...]]:
    """Subsets of size ``n_outcomes`` up to Weyl-Heisenberg translation (lexicographic representatives).

    Translating every SIC state by a displacement permutes the labels, so
    subsets in one orbit have equal optimal witness values.
    """
    out = []
    for t in itertools.combinations(range(d * d), n_outcomes):
        if all(t <= _translate(t, a, b, d) for a in range(d) for b in range(d)):
            out.append(t)
    return out


def subset_psuc(subset, states: StateSet | None = None) -> float:
    """Best witness value with elements outside ``subset`` forced to zero."""
    states = _sic(states)
    d, n = states.dim, len(states)
    subset = tuple(subset)
    if len(subset) == 1:
        return 1.0 / n
    p = SdpProblem()
    blocks = [p.add_block(d) for _ in subset]
    rho = states.densities()
    p.set_objective({blk: rho[x] / n for blk, x in zip(blocks, subset)})
    p.add_matrix_eq([(blk, np.eye(d)) for blk in blocks], np.eye(d))
    sol = solve(p)
    if not sol.ok:
        raise SolverError(f"subset {subset}: SDP status {sol.status}", sol)
    return sol.primal_value


def _subset_chunk(args):
    subsets, states = args
    return [subset_psuc(t, states) for t in subsets]


@dataclass
class NOutcomeResult:
    n_outcomes: int
    value: float
    best_subset: tuple[int, ...]
    n_sdps: int


def max_psuc_n_outcomes(n_outcomes: int, states: StateSet | None = None,
                        threads: int | None = None, symmetry: bool | None = None) -> NOutcomeResult:
    """Largest witness value reachable by measurements with at most ``n_outcomes`` outcomes.

    With ``symmetry`` only one subset per translation orbit is solved.  That
    is exact for the built-in covariant SIC (state ``a*d + b`` is the
    displacement ``(a, b)`` of the fiducial) and is the default there; for
    user-supplied states the default is the plain enumeration of all subsets.
    """
    if symmetry is None:
        symmetry = states is None
    states = _sic(states)
    d, n = states.dim, len(states)
    if not 1 <= n_outcomes <= n:
        raise ValueError(f"number of outcomes must be in 1..{n}")
    if n_outcomes == 1:
        return NOutcomeResult(1, 1.0 / n, (0,), 0)
    if n_outcomes == n:
        # the SIC itself is optimal: each term is at most Tr(E_x)/n... summing to d/n
        return NOutcomeResult(n, d / n, tuple(range(n)), 0)
    if symmetry:
        subsets = canonical_subsets(n_outcomes, d)
    else:
        subsets = list(itertools.combinations(range(n), n_outcomes))
    threads = default_threads() if threads is None else max(1, threads)
    if threads == 1:
        values = _subset_chunk((subsets, states))
    else:
        size = max(1, math.ceil(len(subsets) / (4 * threads)))
        chunks = [(subsets[i:i + size], states) for i in range(0, len(subsets), size)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            values = [v for part in pool.map(_subset_chunk, chunks) for v in part]
    k = int(np.argmax(values))
    return NOutcomeResult(n_outcomes, float(values[k]), subsets[k], len(subsets))


# ---------------------------------------------------------------- min-entropy

@dataclass
class GuessingResult:
    witness: float
    p_guess: float
    h_min: float
    strategies: np.ndarray | None = None  # M[lambda, b]


def min_entropy(witness: float, states: StateSet | None = None) -> GuessingResult:
    """Eve's guessing probability on the maximally mixed input given the witness value.

    One strategy per outcome; ``M[l, b] = q(l) E^l_b`` with ``sum_b M[l, b]``
    proportional to the identity and total weight one.
    """
    states = _sic(states)
    d, n = states.dim, len(states)
    if not 0.0 <= witness <= d / n + 1e-12:
        raise ValueError(f"witness must lie in [0, {d / n}]")
    rho = states.densities()
    rho_star = np.eye(d) / d
    p = SdpProblem()
    m = [[p.add_block(d) for _ in range(n)] for _ in range(n)]
    p.set_objective({m[lam][lam]: rho_star for lam in range(n)})
    for lam in range(n):
        p.add_identity_proportional([(m[lam][b], np.eye(d)) for b in range(n)], d)
    p.add_eq({m[lam][b]: np.eye(d) for lam in range(n) for b in range(n)}, d)
    p.add_ineq({m[lam][x]: rho[x] / n for lam in range(n) for x in range(n)}, witness, ">=")
    sol = solve(p)
    if not sol.ok:
        raise SolverError(f"guessing-probability SDP status {sol.status}", sol)
    pg = min(sol.primal_value, 1.0)
    strategies = np.array([[sol.primal[m[lam][b]] for b in range(n)] for lam in range(n)])
    return GuessingResult(witness, pg, -math.log2(pg), strategies)


# ---------------------------------------------------------------- Shannon entropy

@dataclass(frozen=True)
class Quadrature:
    m: int
    nodes: np.ndarray    # t_1..t_m, t_m = 1
    weights: np.ndarray  # omega_1..omega_m

    @property
    def tau(self) -> np.ndarray:
        """``omega_i / (t_i ln 2)`` for the nodes ``i = 1..m-1``."""
        return self.weights[:-1] / (self.nodes[:-1] * math.log(2))

    @property
    def c_m(self) -> float:
        return float(self.tau.sum())


def gauss_radau(m: int) -> Quadrature:
    """Gauss-Radau rule on [0, 1] with the fixed node at ``t = 1``; exact up to degree ``2m - 2``."""
    if m < 2:
        raise ValueError("need m >= 2")
    x, w = roots_jacobi(m - 1, 1.0, 0.0)
    nodes = np.append((x + 1) / 2, 1.0)
    weights = np.append(w / (1 - x) / 2, 1.0 / m**2)
    return Quadrature(m, nodes, weights)


def radau_entropy(probs, quad: Quadrature) -> float:
    """Quadrature value of the entropy of a fixed distribution (a lower bound on it).

    Uses the closed-form infimum ``-p^2 / (p (1 - t) + t)`` of each node term.
    """
    probs = np.asarray(probs, dtype=float)
    total = quad.c_m
    for tau, t in zip(quad.tau, quad.nodes[:-1]):
        total += tau * float(np.sum(-probs**2 / (probs * (1 - t) + t)))
    return total


@dataclass
class ShannonResult:
    witness: float
    bound: float
    quadrature: Quadrature
    node_terms: np.ndarray
    status: str
    e0: np.ndarray | None = None


def _displacements(d: int) -> list[np.ndarray]:
    return [displacement(j, k, d) for j in range(d) for k in range(d)]


def _moment_structure(p: SdpProblem, blocks, d, top, bottom):
    """Moment-matrix constraints shared by all labels ``b`` of one ``(i, a)``.

    Blocks with equal degree in ``z`` are one variable, so the off-diagonal
    block ``X`` equals its mirror ``X^dag``; block sums of every degree are
    proportional to the identity.
    """
    for g in blocks:
        p.add_matrix_eq([(g, 1j * top, bottom), (g, -1j * bottom, top)], np.zeros((d, d)))
    p.add_identity_proportional([(g, top, bottom) for g in blocks], d)
    p.add_identity_proportional([(g, bottom) for g in blocks], d)


def shannon_bound(witness: float, m: int = 8, k: int = 1, states: StateSet | None = None,
                  joint: bool = True) -> ShannonResult:
    """Lower bound on the outcome entropy for the maximally mixed input given the witness.

    Second-order relaxation (``k = 1``): per node ``i`` and labels ``a, b`` a
    block ``[[E_b, X], [X^dag, Y]]``.  The states and the maximally mixed
    input are covariant under displacements, so the optimum is attained with
    ``E_b = D_b E_0 D_b^dag`` and blocks for ``a != 0`` obtained by
    translation; only ``a = 0`` is kept and its term is multiplied by ``n``.
    With ``joint=False`` every node gets its own ``E_0``.
    """
    if k != 1:
        raise NotImplementedError("only the second-order relaxation (k = 1) is supported")
    states = _sic(states)
    d, n = states.dim, len(states)
    quad = gauss_radau(m)
    disp = _displacements(d)
    fid = states.densities()[0]
    rho_star = np.eye(d) / d
    top = np.hstack([np.eye(d), np.zeros((d, d))])
    bottom = np.hstack([np.zeros((d, d)), np.eye(d)])

    p = SdpProblem()

    def add_e0():
        e0 = p.add_block(d)
        p.add_eq({e0: np.eye(d)}, 1.0 / d)
        p.add_ineq({e0: fid}, witness, ">=")
        return e0

    objective = {}
    e0s = []
    node_blocks = []
    e0 = add_e0() if joint else None
    for i, (tau, t) in enumerate(zip(quad.tau, quad.nodes[:-1])):
        if not joint:
            e0 = add_e0()
        e0s.append(e0)
        blocks = [p.add_block(2 * d) for _ in range(n)]
        node_blocks.append(blocks)
        for b, g in enumerate(blocks):
            p.add_matrix_eq([(g, top), (e0, -disp[b], disp[b])], np.zeros((d, d)))
            delta = 1.0 if b == 0 else 0.0
            c = np.zeros((2 * d, 2 * d), dtype=complex)
            c[:d, d:] = delta * rho_star
            c[d:, :d] = delta * rho_star
            c[d:, d:] = ((1 - t) * delta + t) * rho_star
            objective[g] = n * tau * c
        _moment_structure(p, blocks, d, top, bottom)
    p.set_objective(objective, sense="min", offset=quad.c_m)
    sol = solve(p)
    if not sol.ok:
        raise SolverError(f"Shannon SDP status {sol.status}", sol)
    terms = np.array([sum(float(np.real(np.trace(objective[g] @ sol.primal[g]))) for g in blocks)
                      for blocks in node_blocks])
    return ShannonResult(witness, sol.primal_value, quad, terms, sol.status, sol.primal[e0s[0]])


def shannon_bound_full(witness: float, m: int, states: StateSet) -> float:
    """Same relaxation without the symmetry reduction (all labels ``a, b``); small cases only."""
    d, n = states.dim, len(states)
    quad = gauss_radau(m)
    rho = states.densities()
    rho_star = np.eye(d) / d
    top = np.hstack([np.eye(d), np.zeros((d, d))])
    bottom = np.hstack([np.zeros((d, d)), np.eye(d)])
    p = SdpProblem()
    e = [p.add_block(d) for _ in range(n)]
    p.add_matrix_eq([(blk, np.eye(d)) for blk in e], np.eye(d))
    p.add_ineq({e[x]: rho[x] / n for x in range(n)}, witness, ">=")
    objective = {}
    for tau, t in zip(quad.tau, quad.nodes[:-1]):
        for a in range(n):
            blocks = [p.add_block(2 * d) for _ in range(n)]
            for b, g in enumerate(blocks):
                p.add_matrix_eq([(g, top), (e[b], -np.eye(d), np.eye(d))], np.zeros((d, d)))
                delta = 1.0 if a == b else 0.0
                c = np.zeros((2 * d, 2 * d), dtype=complex)
                c[:d, d:] = delta * rho_star
                c[d:, :d] = delta * rho_star
                c[d:, d:] = ((1 - t) * delta + t) * rho_star
                objective[g] = tau * c
            _moment_structure(p, blocks, d, top, bottom)
    p.set_objective(objective, sense="min", offset=quad.c_m)
    sol = solve(p)
    if not sol.ok:
        raise SolverError(f"Shannon SDP status {sol.status}", sol)
    return sol.primal_value


@dataclass
class EntropyCertificate:
    witness: float
    p_guess: float
    h_min: float
    shannon_lb: float
    quadrature: Quadrature
    order: int = 2
    details: dict = field(default_factory=dict)


def certify(witness: float, m: int = 8, states: StateSet | None = None) -> EntropyCertificate:
    g = min_entropy(witness, states)
    s = shannon_bound(witness, m, 1, states)
    return EntropyCertificate(witness, g.p_guess, g.h_min, s.bound, s.quadrature, 2,
                              {"node_terms": s.node_terms.tolist()})
