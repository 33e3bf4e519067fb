"""Estimating a qubit direction from two identical copies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from ..linalg import kron, projector
from ..povm import Povm


@dataclass
class EstimationScheme:
    """Measurement on two qubits plus a Bloch-vector guess per outcome.

    A row of NaNs in ``estimates`` means the guess for that outcome is drawn
    uniformly on the sphere; its expected contribution ``n . m`` is zero.
    """

    povm: Povm
    estimates: np.ndarray

    def __post_init__(self):
        self.estimates = np.asarray(self.estimates, dtype=float).reshape(-1, 3)
        if len(self.estimates) != self.povm.n_outcomes:
            raise ValueError("one estimate per outcome required")


def bloch_ket(n) -> np.ndarray:
    """Qubit ket with Bloch vector ``n`` (unit length)."""
    n = np.asarray(n, dtype=float)
    theta = np.arctan2(np.hypot(n[0], n[1]), n[2])  # arccos(n_z) loses digits near the poles
    phi = np.arctan2(n[1], n[0])
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def bloch_vector(ket) -> np.ndarray:
    a, b = np.asarray(ket, dtype=complex) / np.linalg.norm(ket)
    ab = np.conj(a) * b
    return np.array([2 * ab.real, 2 * ab.imag, abs(a) ** 2 - abs(b) ** 2])


PAULI_KETS = [
    np.array([1, 0], dtype=complex),
    np.array([0, 1], dtype=complex),
    np.array([1, 1], dtype=complex) / np.sqrt(2),
    np.array([1, -1], dtype=complex) / np.sqrt(2),
    np.array([1, 1j], dtype=complex) / np.sqrt(2),
    np.array([1, -1j], dtype=complex) / np.sqrt(2),
]

SINGLET = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


def two_copy_optimal_povm() -> EstimationScheme:
    """Seven outcomes: half-weighted tensor squares of the six Pauli eigenstates and the rest."""
    elements = [0.5 * projector(kron(k, k)) for k in PAULI_KETS]
    elements.append(np.eye(4) - sum(elements))
    estimates = [bloch_vector(k) for k in PAULI_KETS] + [np.full(3, np.nan)]
    return EstimationScheme(Povm.from_elements(np.array(elements)), np.array(estimates))


def tetrahedron_kets() -> list[np.ndarray]:
    s = 1 / np.sqrt(3)
    r2 = np.sqrt(2)
    return [
        np.array([1, 0], dtype=complex),
        1j * s * np.array([1, r2]),
        1j * s * np.array([1, np.exp(2j * np.pi / 3) * r2]),
        1j * s * np.array([-1, np.exp(1j * np.pi / 3) * r2]),
    ]


def massar_popescu_povm() -> EstimationScheme:
    """Projective four-outcome two-copy measurement built on a tetrahedron of directions."""
    kets = [0.5 * SINGLET + np.sqrt(3) / 2 * kron(m, m) for m in tetrahedron_kets()]
    povm = Povm.from_rank1(np.ones(4), np.array(kets))
    return EstimationScheme(povm, np.array([bloch_vector(m) for m in tetrahedron_kets()]))


def random_guess_scheme() -> EstimationScheme:
    return EstimationScheme(Povm.from_elements(np.eye(4)[None]), np.full((1, 3), np.nan))


def estimation_fidelity(scheme: EstimationScheme, n) -> float:
    """Average fidelity ``sum_i p_i(n) (1 + n . m_i) / 2`` on input ``|n><n|`` twice."""
    n = np.asarray(n, dtype=float)
    if abs(np.linalg.norm(n) - 1) > 1e-9:
        raise ValueError("n must be a unit vector")
    ket = bloch_ket(n)
    p = scheme.povm.probabilities(kron(ket, ket))
    dots = np.nan_to_num(scheme.estimates @ n, nan=0.0)
    return float(np.sum(p * (1 + dots) / 2))


def massar_popescu_closed_form(n) -> float:
    nx, ny, nz = n
    r2 = np.sqrt(2)
    return (18 + r2 * nx**3 - 3 * r2 * nx * ny**2 - 3 * nx**2 * nz - 3 * ny**2 * nz + 2 * nz**3) / 24


def _direction(theta, phi) -> np.ndarray:
    return np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])


def average_fidelity(scheme: EstimationScheme, n_theta: int = 24, n_phi: int = 48) -> float:
    """Uniform average over the sphere (Gauss-Legendre in cos(theta), trapezoid in phi).

    Fidelities of two-copy schemes are polynomials of degree <= 3 in ``n``, so
    the default grid is exact up to rounding.
    """
    x, w = np.polynomial.legendre.leggauss(n_theta)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    total = 0.0
    for xi, wi in zip(x, w):
        theta = np.arccos(xi)
        total += wi * np.mean([estimation_fidelity(scheme, _direction(theta, ph)) for ph in phis])
    return total / 2


def worst_fidelity(scheme: EstimationScheme, n_theta: int = 40, n_phi: int = 80,
                   refine: int = 5) -> tuple[float, np.ndarray]:
    """Minimum fidelity over the sphere: grid search, then local refinement of the best points."""
    thetas = np.linspace(0, np.pi, n_theta)
    phis = np.linspace(0, 2 * np.pi, n_phi, endpoint=False)
    grid = [(estimation_fidelity(scheme, _direction(t, p)), t, p) for t in thetas for p in phis]
    grid.sort()

    def f(x):
        return estimation_fidelity(scheme, _direction(*x))

    best = (grid[0][0], np.array(grid[0][1:]))
    for val, t, p in grid[:refine]:
        res = minimize(f, np.array([t, p]), method="Nelder-Mead",
                       options=dict(xatol=1e-10, fatol=1e-13, maxiter=2000))
        if res.fun < best[0]:
            best = (float(res.fun), res.x)
    return best[0], _direction(*best[1])
