"""Dense complex linear algebra used throughout the package.

Matrices and kets are plain ``numpy`` arrays with ``complex128`` entries.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-10


class NotPsdError(ValueError):
    """Raised when a matrix expected to be positive semidefinite is not."""


def as_matrix(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[-1] == m.shape[-2] and np.max(np.abs(m - dagger(m)), initial=0.0) <= tol


def projector(ket: np.ndarray) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def pseudo_inverse(m, tol: float = 1e-9, rank: int | None = None) -> np.ndarray:
    """Moore-Penrose inverse via SVD.

    Singular values below ``tol * sigma_max`` are dropped.  When ``rank`` is
    given the cutoff is skipped and exactly ``rank`` singular triplets are
    kept; callers that already know the rank use this to avoid guessing it
    from floating-point noise.
    """
    m = as_matrix(m)
    if tol <= 0:
        raise ValueError("tol must be positive")
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    if rank is None:
        keep = s > tol * (s[0] if s.size else 0.0)
    else:
        keep = np.arange(s.size) < rank
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (dagger(vh) * s_inv) @ dagger(u)


def numerical_rank(m, tol: float = 1e-9) -> int:
    s = np.linalg.svd(as_matrix(m), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))


def hermitian_eigen(m, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (as columns)."""
    m = as_matrix(m)
    if not is_hermitian(m, tol * max(1.0, np.max(np.abs(m), initial=0.0))):
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigh((m + dagger(m)) / 2)


def matrix_sqrt_psd(m, clamp: float = 1e-9, fail: float = 1e-6) -> np.ndarray:
    """Principal square root of a PSD matrix.

    Eigenvalues in ``[-clamp, 0)`` are treated as zero; anything below
    ``-fail`` raises :class:`NotPsdError`.
    """
    w, v = hermitian_eigen(m)
    if w.size and w[0] < -fail:
        raise NotPsdError(f"minimum eigenvalue {w[0]:.3e} < -{fail:g}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ dagger(v)


def kron(*mats) -> np.ndarray:
    out = np.asarray(mats[0], dtype=complex)
    for m in mats[1:]:
        out = np.kron(out, np.asarray(m, dtype=complex))
    return out


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    sr = matrix_sqrt_psd(rho)
    inner = sr @ as_matrix(sigma) @ sr
    w = np.linalg.eigvalsh((inner + dagger(inner)) / 2)
    # eigenvalues at rounding level would add sqrt(1e-16) = 1e-8 each for rank-deficient inputs
    w[w < 1e-13 * max(float(w.max(initial=0.0)), 0.0)] = 0.0
    return float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary from the QR decomposition of a Ginibre matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def make_rng(seed: int) -> np.random.Generator:
    """Seeded Philox (counter-based, 64-bit) generator used for every random draw."""
    return np.random.Generator(np.random.Philox(seed))


def random_ket(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)
