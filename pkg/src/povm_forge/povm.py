"""Measurement and state-set data model plus the fixed constructions used in the benchmarks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import dagger, haar_unitary, make_rng

COMPLETENESS_TOL = 1e-9
POSITIVITY_TOL = -1e-9


@dataclass(frozen=True)
class Povm:
    """A measurement given by its elements ``E_i`` (shape ``(n, d, d)``).

    Rank-1 measurements additionally carry ``weights`` (``a_i``) and unit
    ``kets`` (``psi_i``, shape ``(n, d)``) with ``E_i = a_i |psi_i><psi_i|``.
    """

    elements: np.ndarray
    weights: np.ndarray | None = None
    kets: np.ndarray | None = None

    @classmethod
    def from_rank1(cls, weights, kets) -> "Povm":
        weights = np.asarray(weights, dtype=float)
        kets = np.atleast_2d(np.asarray(kets, dtype=complex))
        if weights.shape != (kets.shape[0],):
            raise ValueError("one weight per ket required")
        if np.any(weights <= 0) or np.any(weights > 1 + 1e-12):
            raise ValueError("weights must lie in (0, 1]")
        norms = np.linalg.norm(kets, axis=1)
        if np.any(norms == 0):
            raise ValueError("zero ket")
        kets = kets / norms[:, None]
        elements = weights[:, None, None] * np.einsum("ni,nj->nij", kets, kets.conj())
        return cls(elements, np.minimum(weights, 1.0), kets)

    @classmethod
    def from_elements(cls, elements) -> "Povm":
        elements = np.asarray(elements, dtype=complex)
        if elements.ndim != 3 or elements.shape[1] != elements.shape[2]:
            raise ValueError(f"elements must have shape (n, d, d), got {elements.shape}")
        return cls(elements)

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.elements.shape[0]

    @property
    def is_rank1(self) -> bool:
        return self.kets is not None

    def probabilities(self, rho) -> np.ndarray:
        """Born-rule probabilities ``Tr(E_i rho)`` for a density matrix or a ket."""
        rho = np.asarray(rho, dtype=complex)
        if rho.ndim == 1:
            return np.real(np.einsum("i,nij,j->n", rho.conj(), self.elements, rho))
        return np.real(np.einsum("nij,ji->n", self.elements, rho))


@dataclass(frozen=True)
class Rank1Split:
    povm: Povm
    parent: np.ndarray  # original outcome index of every rank-1 element


def split_rank1(p: Povm, tol: float = 1e-12) -> Rank1Split:
    """Split every element into weighted eigen-projectors, dropping eigenvalues below ``tol``."""
    if p.is_rank1:
        return Rank1Split(p, np.arange(p.n_outcomes))
    weights, kets, parent = [], [], []
    for i, e in enumerate(p.elements):
        w, v = np.linalg.eigh((e + dagger(e)) / 2)
        for k in np.nonzero(w > tol)[0]:
            weights.append(min(w[k], 1.0))
            kets.append(v[:, k])
            parent.append(i)
    return Rank1Split(Povm.from_rank1(weights, kets), np.array(parent))


@dataclass(frozen=True)
class StateSet:
    """Pure states stored as rows of ``states`` (shape ``(k, d)``)."""

    states: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "states", np.atleast_2d(np.asarray(self.states, dtype=complex)))

    @classmethod
    def from_columns(cls, matrix, normalize: bool = True) -> "StateSet":
        states = np.asarray(matrix, dtype=complex).T.copy()
        if normalize:
            states /= np.linalg.norm(states, axis=1)[:, None]
        return cls(states)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __len__(self) -> int:
        return self.states.shape[0]

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, k):
        return self.states[k]

    def densities(self) -> np.ndarray:
        return np.einsum("ki,kj->kij", self.states, self.states.conj())


@dataclass
class ValidationReport:
    completeness_error: float
    min_eigenvalue: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = (self.completeness_error <= COMPLETENESS_TOL
                       and self.min_eigenvalue >= POSITIVITY_TOL)

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (f"{status}: completeness error {self.completeness_error:.3e}, "
                f"min eigenvalue {self.min_eigenvalue:.3e}")


def validate_povm(p: Povm) -> ValidationReport:
    e = p.elements
    if e.ndim != 3 or e.shape[1] != e.shape[2]:
        raise ValueError(f"inconsistent element dimensions {e.shape}")
    d = e.shape[1]
    total = e.sum(axis=0)
    completeness = float(np.max(np.abs(total - np.eye(d))))
    herm = (e + dagger(e)) / 2
    min_eig = float(np.min(np.linalg.eigvalsh(herm))) if len(e) else 0.0
    return ValidationReport(completeness, min_eig)


def random_rank1_povm(d: int, n: int, seed: int) -> Povm:
    """Random ``n``-outcome rank-1 measurement on ``C^d``.

    Takes the first ``d`` columns of a Haar-random ``n x n`` unitary; row ``i``
    then defines ``E_i``.  Completeness holds because the columns are
    orthonormal.
    """
    if n < d:
        raise ValueError(f"a complete rank-1 measurement needs n >= d (got n={n}, d={d})")
    if n > d * d:
        raise ValueError(f"n must not exceed d^2 = {d * d}")
    u = haar_unitary(n, make_rng(seed))
    rows = u[:, :d]
    weights = np.sum(np.abs(rows) ** 2, axis=1)
    # E_i = |u_i><u_i| with u_i the conjugated row, so sum_i E_i = V^dag V = 1
    return Povm.from_rank1(weights, rows.conj())


def computational_basis(d: int) -> Povm:
    return Povm.from_rank1(np.ones(d), np.eye(d))


def gram_matrix(s: StateSet) -> np.ndarray:
    return s.states.conj() @ s.states.T


def gram_det(s: StateSet) -> float:
    det = np.linalg.det(gram_matrix(s))
    if abs(det.imag) > 1e-10:
        raise ArithmeticError(f"Gram determinant has imaginary residue {det.imag:.2e}")
    return float(max(det.real, 0.0)) if det.real > -1e-10 else float(det.real)


def displacement(j: int, k: int, d: int) -> np.ndarray:
    """Weyl-Heisenberg displacement ``w^{jk/2} sum_m w^{jm} |k+m><m|`` with ``w = exp(2 pi i / d)``."""
    omega = np.exp(2j * np.pi / d)
    out = np.zeros((d, d), dtype=complex)
    for m in range(d):
        out[(k + m) % d, m] = omega ** (j * m)
    return np.exp(1j * np.pi * j * k / d) * out


def weyl_heisenberg_orbit(fiducial) -> StateSet:
    """The ``d^2`` states ``D_jk |fiducial>`` ordered by ``i = j*d + k``."""
    fiducial = np.asarray(fiducial, dtype=complex)
    d = fiducial.size
    return StateSet(np.array([displacement(j, k, d) @ fiducial
                              for j in range(d) for k in range(d)]))


def sic_fiducial_d4() -> np.ndarray:
    a = np.arccos(2 / np.sqrt(5 + np.sqrt(5)))
    b = np.arcsin(2 / np.sqrt(5))
    r0 = np.sqrt(1 - 1 / np.sqrt(5)) / (2 * np.sqrt(2 - np.sqrt(2)))
    r1 = (np.sqrt(2) - 1) * r0
    root = np.sqrt(1 / 5 + 1 / np.sqrt(5))
    r_plus = 0.5 * np.sqrt(1 + 1 / np.sqrt(5) + root)
    r_minus = 0.5 * np.sqrt(1 + 1 / np.sqrt(5) - root)
    th_plus = a / 2 + b / 4 + np.pi / 4
    th_1 = np.pi / 2
    th_minus = -a / 2 + b / 4 + np.pi / 4
    return np.array([r0,
                     r_plus * np.exp(1j * th_plus),
                     r1 * np.exp(1j * th_1),
                     r_minus * np.exp(1j * th_minus)])


def sic_states_d4() -> StateSet:
    return weyl_heisenberg_orbit(sic_fiducial_d4())


def sic_povm_d4() -> Povm:
    states = sic_states_d4().states
    return Povm.from_rank1(np.full(16, 0.25), states)


def sic_fiducial_d2() -> np.ndarray:
    """Qubit fiducial with Bloch vector (1, 1, 1)/sqrt(3); its Pauli orbit is a tetrahedron."""
    theta = np.arccos(1 / np.sqrt(3))
    return np.array([np.cos(theta / 2), np.exp(1j * np.pi / 4) * np.sin(theta / 2)])


def sic_states_d2() -> StateSet:
    return weyl_heisenberg_orbit(sic_fiducial_d2())


_MUB_D4 = [
    np.eye(4),
    0.5 * np.array([[1, 1, 1, 1],
                    [1, -1, 1, -1],
                    [1j, 1j, -1j, -1j],
                    [1j, -1j, -1j, 1j]]),
    0.5 * np.array([[1, 1, 1, 1],
                    [1j, -1j, 1j, -1j],
                    [1, 1, -1, -1],
                    [1j, -1j, -1j, 1j]]),
    0.5 * np.array([[1, 1, 1, 1],
                    [-1, 1, 1, -1],
                    [1, -1, 1, -1],
                    [1, 1, -1, -1]]),
    0.5 * np.array([[1, 1, 1, 1],
                    [-1j, 1j, 1j, -1j],
                    [-1j, -1j, 1j, 1j],
                    [1, -1, 1, -1]]),
]


def mub_probe_states_d4() -> StateSet:
    """The 20 probe states: columns of the five mutually unbiased bases, in order."""
    return StateSet(np.concatenate([m.T for m in _MUB_D4]).astype(complex))


_USD_SETS = [
    [[-0.3717 - 0.3117j, 0.4394 - 0.2619j, -0.1983 - 0.3443j, -0.0325 - 0.1753j],
     [0.1096 + 0.5635j, 0.2859 + 0.5227j, -0.0971 - 0.2818j, -0.0403 - 0.4469j],
     [-0.2687 - 0.2008j, 0.4953 - 0.3402j, 0.2266 + 0.5127j, -0.0579 - 0.3399j],
     [0.4649 - 0.3263j, 0.0964 + 0.1142j, -0.4841 + 0.4525j, -0.5207 - 0.6139j]],
    [[0.3963 + 0.4143j, 0.2242 + 0.1814j, 0.1670 - 0.5253j, -0.2909 - 0.0835j],
     [0.1252 - 0.4273j, -0.6517 + 0.1848j, 0.0179 - 0.5335j, -0.3509 - 0.2353j],
     [-0.1291 + 0.4315j, 0.2118 - 0.4864j, 0.3334 - 0.0495j, -0.4095 + 0.5014j],
     [0.3979 - 0.3345j, 0.4051 - 0.1118j, 0.4434 + 0.3177j, 0.2368 + 0.5048j]],
    [[-0.4383 - 0.5134j, -0.3202 + 0.0620j, 0.4884 - 0.0513j, 0.4286 + 0.3428j],
     [-0.5238 - 0.0632j, 0.1704 - 0.8889j, -0.2911 + 0.1488j, -0.0686 + 0.4814j],
     [-0.0482 + 0.3753j, 0.2068 - 0.1038j, 0.5337 + 0.3368j, -0.1992 + 0.3649j],
     [-0.2591 + 0.2359j, -0.0940 + 0.1102j, -0.4580 - 0.2096j, -0.5134 + 0.1611j]],
]


def usd_state_matrices() -> list[np.ndarray]:
    """The three printed 4x4 state matrices (columns are states), unnormalized."""
    return [np.array(m, dtype=complex) for m in _USD_SETS]


def usd_state_sets(normalize: bool = True) -> list[StateSet]:
    """The three discrimination state sets; rounding to 4 decimals is undone by renormalizing."""
    return [StateSet.from_columns(m, normalize=normalize) for m in usd_state_matrices()]
