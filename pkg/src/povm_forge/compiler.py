"""Lowering of rank-1 measurements to cascaded two-mode interferometer settings.

Module ``i`` (``i = 1..n-1``) holds ``d`` MZIs; MZI ``j`` couples modes
``j-1`` and ``j``, the last one (``j = d``) coupling the final system mode to
the ancilla mode ``d``.  Each MZI is parameterized by two phases as

    C(alpha, beta) = i e^{i beta/2} [[e^{i alpha} sin(beta/2),  cos(beta/2)],
                                     [e^{i alpha} cos(beta/2), -sin(beta/2)]]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .linalg import dagger, numerical_rank, pseudo_inverse
from .povm import Povm, validate_povm

TWO_PI = 2 * math.pi
DEGENERATE_TOL = 1e-12
CLAMP_TOL = 1e-6
RANK_TOL = 1e-9


class CompileError(ValueError):
    """Invalid input measurement or numerical breakdown of the construction."""


class MziSetting(NamedTuple):
    alpha: float
    beta: float


def mzi_matrix(alpha, beta) -> np.ndarray:
    """2x2 transfer matrix of an MZI; broadcasts over array-valued phases."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    pre = 1j * np.exp(0.5j * beta)
    s, c = np.sin(beta / 2), np.cos(beta / 2)
    ea = np.exp(1j * alpha)
    out = np.empty(alpha.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = pre * ea * s
    out[..., 0, 1] = pre * c
    out[..., 1, 0] = pre * ea * c
    out[..., 1, 1] = -pre * s
    return out


def _canonical(phase: float) -> float:
    phase = math.fmod(phase, TWO_PI)
    if phase < 0:
        phase += TWO_PI
    return 0.0 if phase >= TWO_PI else phase


def embed_two_mode(c, j: int, d: int) -> np.ndarray:
    """Embed a 2x2 block acting on modes ``(j-1, j)`` into the ``d``-mode system.

    For ``j == d`` the partner mode is the ancilla, which is not part of the
    system: only ``c[0, 0]`` survives on mode ``d-1``.
    """
    c = np.asarray(c, dtype=complex)
    if not 1 <= j <= d:
        raise ValueError(f"MZI index j={j} outside 1..{d}")
    u = np.eye(d, dtype=complex)
    if j < d:
        u[j - 1:j + 1, j - 1:j + 1] = c
    else:
        u[d - 1, d - 1] = c[0, 0]
    return u


def zeroing_setting(xi, j: int) -> MziSetting:
    """Setting that nulls the amplitude of mode ``j-1`` after the MZI on modes ``(j-1, j)``.

    Solves ``e^{i alpha} sin(beta/2) xi[j-1] + cos(beta/2) xi[j] = 0``.
    """
    xi = np.asarray(xi, dtype=complex)
    upper, lower = xi[j - 1], xi[j]
    if abs(upper) <= DEGENERATE_TOL and abs(lower) <= DEGENERATE_TOL:
        return MziSetting(0.0, math.pi)
    if abs(upper) <= DEGENERATE_TOL:
        return MziSetting(0.0, math.pi)
    beta = 2 * math.atan2(abs(lower), abs(upper))
    alpha = _canonical(float(np.angle(-lower / upper))) if abs(lower) > 0 else 0.0
    return MziSetting(alpha, _canonical(beta))


def coupling_setting(amplitude: float) -> MziSetting:
    """Setting with ``|c10| = amplitude`` (and ``alpha = 0``)."""
    return MziSetting(0.0, _canonical(2 * math.acos(min(max(amplitude, 0.0), 1.0))))


CROSS = MziSetting(0.0, 0.0)  # c00 = 0: full transfer to the lower mode


@dataclass
class CircuitProgram:
    """Compiled circuit: ``phases[i-1, j-1] = (alpha, beta)`` for module ``i``, MZI ``j``.

    Outcome ``i < n`` is read at the ancilla port after module ``i``; outcome
    ``n`` is the total weight left in the system modes after module ``n-1``.
    """

    dim: int
    n_outcomes: int
    phases: np.ndarray

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float).reshape(self.n_outcomes - 1, self.dim, 2)

    @property
    def n_modules(self) -> int:
        return self.n_outcomes - 1

    @property
    def modules(self) -> list[list[MziSetting]]:
        return [[MziSetting(*p) for p in row] for row in self.phases]

    def setting(self, i: int, j: int) -> MziSetting:
        """1-based module and MZI indices."""
        return MziSetting(*self.phases[i - 1, j - 1])

    def c00(self) -> np.ndarray:
        """Upper-left transfer entry of every MZI, shape ``(n-1, d)``."""
        return mzi_matrix(self.phases[..., 0], self.phases[..., 1])[..., 0, 0]

    def outcome_port(self, i: int) -> str:
        if i < self.n_outcomes:
            return f"ancilla after module {i}"
        return f"system modes after module {self.n_modules}"

    def active_mzis(self, tol: float = 1e-12) -> np.ndarray:
        """Mask of MZIs that are not in the fixed cross state (trivial ones may be removed in hardware)."""
        return np.abs(self.c00()) > tol

    def copy(self) -> "CircuitProgram":
        return CircuitProgram(self.dim, self.n_outcomes, self.phases.copy())


@dataclass
class ModuleTrace:
    k: np.ndarray          # evolution operator into this module
    l: int                 # effective dimension
    b: float
    eta: np.ndarray
    r: np.ndarray          # product of the zeroing MZIs
    c00: complex           # c00 of the coupling MZI j = l


@dataclass
class CompileTrace:
    modules: list[ModuleTrace] = field(default_factory=list)
    k_final: np.ndarray | None = None
    l_final: int | None = None

    @property
    def effective_dims(self) -> list[int]:
        return [m.l for m in self.modules] + ([self.l_final] if self.l_final is not None else [])


def _tail_ranks(povm: Povm) -> list[int]:
    """``rank(sum_{m >= i} E_m)`` for ``i = 1..n`` (index 0 corresponds to i = 1)."""
    tail = np.cumsum(povm.elements[::-1], axis=0)[::-1]
    ranks = []
    for t in tail:
        w = np.linalg.eigvalsh((t + dagger(t)) / 2)
        ranks.append(int(np.sum(w > RANK_TOL)))
    return ranks


def compile_povm(povm: Povm, check: bool = True) -> tuple[CircuitProgram, CompileTrace]:
    """Compile a rank-1 measurement into a :class:`CircuitProgram`.

    The effective dimension drops exactly when ``c00`` of the coupling MZI
    vanishes, which happens iff the rank of the remaining elements
    ``sum_{m > i} E_m`` is smaller than ``l_i``.  That rank is computed from
    the input, and the coupling amplitude is then required to agree with it.
    """
    if not povm.is_rank1:
        raise CompileError("compiler requires rank-1 elements; split the measurement first")
    if check:
        report = validate_povm(povm)
        if not report.passed:
            raise CompileError(f"invalid measurement: {report}")
    d, n = povm.dim, povm.n_outcomes
    if n < 1:
        raise CompileError("empty measurement")
    ranks = _tail_ranks(povm)
    phases = np.zeros((max(n - 1, 0), d, 2))
    trace = CompileTrace()
    k = np.eye(d, dtype=complex)
    l = d
    for i in range(n - 1):
        if l < 1:
            raise CompileError(f"effective dimension dropped to zero before module {i + 1}")
        a, psi = povm.weights[i], povm.kets[i]
        k_plus = pseudo_inverse(k, rank=l)
        v = dagger(k_plus) @ psi
        b = float(np.linalg.norm(v))
        if b == 0.0:
            raise CompileError(f"element {i + 1} lies outside the support of the remaining operator")
        eta = v / b

        r = np.eye(d, dtype=complex)
        xi = eta.copy()
        for j in range(1, l):
            st = zeroing_setting(xi, j)
            phases[i, j - 1] = st
            u = embed_two_mode(mzi_matrix(*st), j, d)
            xi = u @ xi
            r = u @ r

        amp = b * math.sqrt(a)
        if amp > 1 + CLAMP_TOL:
            raise CompileError(f"module {i + 1}: required coupling {amp:.9f} exceeds 1")
        drop = ranks[i + 1] < l
        if drop:
            if 1 - amp * amp > CLAMP_TOL:
                raise CompileError(
                    f"module {i + 1}: rank drops but |c10|^2 = {amp * amp:.3e} is not 1")
            st = CROSS
        else:
            st = coupling_setting(amp)
        phases[i, l - 1] = st
        c00 = complex(mzi_matrix(*st)[0, 0])
        phases[i, l:] = CROSS

        trace.modules.append(ModuleTrace(k.copy(), l, b, eta, r, c00))
        diag = np.ones(d, dtype=complex)
        diag[l - 1] = c00
        diag[l:] = 0.0
        k = (diag[:, None] * r) @ k
        if drop:
            l -= 1
    trace.k_final = k
    trace.l_final = l
    return CircuitProgram(d, n, phases), trace


def check_structure(program: CircuitProgram, trace: CompileTrace | None = None,
                    tol: float = 1e-12) -> list[str]:
    """Return violated structural properties (empty list when all hold).

    Checks ``c00 = 0`` for ``j > n - i`` and, with a trace, ``rank(K_i) = l_i``
    and ``l_i <= n - i + 1``.
    """
    problems = []
    n, d = program.n_outcomes, program.dim
    c00 = np.abs(program.c00())
    for i in range(1, n):
        for j in range(n - i + 1, d + 1):
            if c00[i - 1, j - 1] > tol:
                problems.append(f"c00 at (i={i}, j={j}) is {c00[i - 1, j - 1]:.2e}, expected 0")
    if trace is not None:
        for i, m in enumerate(trace.modules, start=1):
            rk = numerical_rank(m.k, RANK_TOL)
            if rk != m.l:
                problems.append(f"rank(K_{i}) = {rk} but l_{i} = {m.l}")
            if m.l > n - i + 1:
                problems.append(f"l_{i} = {m.l} exceeds n - i + 1 = {n - i + 1}")
    return problems
