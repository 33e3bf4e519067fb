"""Maximum-likelihood reconstruction of a measurement from probe statistics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import dagger, fidelity, matrix_sqrt_psd
from .povm import Povm, StateSet
from .simulator import CountTable

log = logging.getLogger(__name__)

FREQ_FLOOR = 1e-12


class TomographyError(ValueError):
    pass


@dataclass
class MleResult:
    povm: Povm
    log_likelihood: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list)


def _herm(m):
    return (m + dagger(m)) / 2


def is_informationally_complete(probes: StateSet, tol: float = 1e-9) -> bool:
    rho = probes.densities().reshape(len(probes), -1)
    return np.linalg.matrix_rank(rho, tol=tol) == probes.dim ** 2


def _log_likelihood(counts, probs) -> float:
    return float(np.sum(counts * np.log(np.maximum(probs, FREQ_FLOOR))))


def _inv_sqrt_and_frechet(s_mat):
    """``S^{-1/2}`` plus a function mapping ``K`` to ``M`` with ``Tr(K dT) = Tr(M dS)``."""
    w, v = np.linalg.eigh(s_mat)
    w = np.maximum(w, 1e-300)
    r = w ** -0.5
    diff = w[:, None] - w[None, :]
    same = np.abs(diff) <= 1e-12 * np.maximum(w[:, None], w[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = np.where(same, -0.5 * w[:, None] ** -1.5, (r[:, None] - r[None, :]) / diff)
    t = (v * r) @ dagger(v)

    def pullback(k):
        kt = dagger(v) @ k @ v
        return v @ (kt * gamma.T) @ dagger(v)
    return t, pullback


def _polish(elements, f, rho, max_iter: int, history: list[float]):
    """L-BFGS on ``E_i = T A_i^dag A_i T``, ``T = (sum A^dag A)^{-1/2}``; positive and complete by construction."""
    from scipy.optimize import minimize

    n, d, _ = elements.shape
    a0 = np.array([matrix_sqrt_psd(_herm(e)) for e in elements])

    def unpack(x):
        z = x.reshape(2, n, d, d)
        return z[0] + 1j * z[1]

    def build(a):
        b = dagger(a) @ a
        t, pullback = _inv_sqrt_and_frechet(_herm(b.sum(axis=0)))
        return b, t, pullback, _herm(t @ b @ t)

    def fun(x):
        a = unpack(x)
        b, t, pullback, els = build(a)
        p = np.maximum(np.real(np.einsum("nab,jba->nj", els, rho)), FREQ_FLOOR)
        ll = _log_likelihood(f, p)
        g = np.einsum("nj,jab->nab", f / p, rho)
        k = np.einsum("nab,bc,ncd->ad", b, t, g)
        k = k + dagger(k)
        h = t @ g @ t + pullback(k)[None]
        grad = 2 * a @ h
        return -ll, -np.concatenate([grad.real.ravel(), grad.imag.ravel()])

    def callback(x):
        history.append(-fun(x)[0])

    x0 = np.concatenate([a0.real.ravel(), a0.imag.ravel()])
    res = minimize(fun, x0, jac=True, method="L-BFGS-B", callback=callback,
                   options=dict(maxiter=max_iter, ftol=1e-15, gtol=1e-10, maxcor=30))
    els = build(unpack(res.x))[3]
    return els, -float(res.fun)


def mle_reconstruct(probes: StateSet, counts: CountTable, max_iter: int = 5000,
                    tol: float = 1e-10, polish: bool = True) -> MleResult:
    """Iterative maximum-likelihood estimate of the measurement elements.

    Each step maps ``E_i -> L^-1 R_i E_i R_i L^-1`` with ``R_i = I + eps *
    sum_j (f_ij / p_ij) rho_j`` and ``L = (sum_i R_i E_i R_i)^{1/2}``, which
    keeps every iterate positive and complete.  ``eps`` is halved whenever a
    step would lower the likelihood, so the log-likelihood never decreases.
    With ``polish`` the fixed point is refined by quasi-Newton
    ascent in a parametrization that is positive and complete by
    construction; this matters when the true elements are rank deficient,
    where the fixed-point iteration converges slowly.
    """
    d = probes.dim
    f = counts.counts
    if f.shape[1] != len(probes):
        raise TomographyError(f"count table has {f.shape[1]} probes, state set has {len(probes)}")
    if np.any(f.sum(axis=0) == 0):
        raise TomographyError("probe column with zero total counts")
    if not is_informationally_complete(probes):
        raise TomographyError(f"probe states are not informationally complete (need rank {d * d})")
    rho = probes.densities()
    n = f.shape[0]
    totals = f.sum(axis=1)
    elements = (totals / totals.sum())[:, None, None] * np.eye(d)[None].astype(complex)

    def probs_of(els):
        return np.real(np.einsum("nab,jba->nj", els, rho))

    ll = _log_likelihood(f, probs_of(elements))
    history = [ll]
    eps = 1e3
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = np.maximum(probs_of(elements), FREQ_FLOOR)
        r_raw = np.einsum("nj,jab->nab", f / p, rho)
        while True:
            r = np.eye(d)[None] + eps * r_raw
            rer = r @ elements @ r
            lam = matrix_sqrt_psd(_herm(rer.sum(axis=0)))
            lam_inv = np.linalg.inv(lam)
            cand = _herm(lam_inv @ rer @ lam_inv)
            ll_new = _log_likelihood(f, probs_of(cand))
            if ll_new >= ll - 1e-12 * abs(ll) or eps < 1e-12:
                break
            eps /= 2
        if ll_new < ll:
            # no ascent direction left at floating-point resolution
            converged = True
            break
        change = abs(ll_new - ll) / max(abs(ll), 1e-300)
        elements, ll = cand, ll_new
        history.append(ll)
        eps = min(eps * 2, 1e3)
        if it % 100 == 0:
            comp = np.max(np.abs(elements.sum(axis=0) - np.eye(d)))
            if comp > 1e-8:
                log.warning("completeness drift %.2e at iteration %d", comp, it)
        if change < tol:
            converged = True
            break
    if polish:
        polished, ll_pol = _polish(elements, f, rho, max_iter, history)
        if ll_pol >= ll:
            elements, ll = polished, ll_pol
    return MleResult(Povm.from_elements(elements), ll, it, converged, history)


def measurement_fidelity(exp: Povm, ideal: Povm) -> float:
    """``(sum_i w_i sqrt(F_i))^2`` with ``F_i`` the fidelity of trace-normalized elements
    and ``w_i = sqrt(Tr E_i^exp Tr E_i^ideal) / d``; zero-trace elements contribute 0."""
    if exp.dim != ideal.dim or exp.n_outcomes != ideal.n_outcomes:
        raise ValueError("measurements must have the same dimension and outcome count")
    d = exp.dim
    total = 0.0
    for a, b in zip(exp.elements, ideal.elements):
        ta, tb = float(np.real(np.trace(a))), float(np.real(np.trace(b)))
        if ta <= 0 or tb <= 0:
            continue
        fi = fidelity(_herm(a) / ta, _herm(b) / tb)
        total += math.sqrt(ta * tb) / d * math.sqrt(min(max(fi, 0.0), 1.0))
    return min(total ** 2, 1.0)
