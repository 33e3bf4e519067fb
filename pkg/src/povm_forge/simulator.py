"""Forward simulation of compiled circuits, synthetic counts, and phase-error calibration."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

import numpy as np

from .compiler import CircuitProgram, mzi_matrix
from .linalg import make_rng
from .povm import StateSet

log = logging.getLogger(__name__)

_KEY = re.compile(r"^(\d+)\.(\d+)\.(alpha|beta)$")


@dataclass
class PhaseError:
    """Additive deviations on every phase shifter, same layout as ``CircuitProgram.phases``."""

    deviations: np.ndarray

    @classmethod
    def zeros(cls, program: CircuitProgram) -> "PhaseError":
        return cls(np.zeros_like(program.phases))

    @classmethod
    def from_dict(cls, program: CircuitProgram, entries: dict[str, float]) -> "PhaseError":
        dev = np.zeros_like(program.phases)
        for key, value in entries.items():
            m = _KEY.match(key)
            if not m:
                raise ValueError(f"bad phase-error key {key!r} (expected 'i.j.alpha' or 'i.j.beta')")
            i, j = int(m.group(1)), int(m.group(2))
            if not (1 <= i <= program.n_modules and 1 <= j <= program.dim):
                raise ValueError(f"phase-error key {key!r} out of range")
            dev[i - 1, j - 1, 0 if m.group(3) == "alpha" else 1] = float(value)
        return cls(dev)

    def to_dict(self, skip_zero: bool = True) -> dict[str, float]:
        out = {}
        for (i, j, s), v in np.ndenumerate(self.deviations):
            if skip_zero and v == 0.0:
                continue
            out[f"{i + 1}.{j + 1}.{'alpha' if s == 0 else 'beta'}"] = float(v)
        return out

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.deviations), initial=0.0))


@dataclass
class CountTable:
    """Outcome counts (or frequencies); ``counts[i, j]`` is outcome ``i`` for probe ``j``."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.atleast_2d(np.asarray(self.counts, dtype=float))
        if np.any(self.counts < 0):
            raise ValueError("counts must be nonnegative")

    @property
    def n_outcomes(self) -> int:
        return self.counts.shape[0]

    @property
    def n_probes(self) -> int:
        return self.counts.shape[1]

    @property
    def frequencies(self) -> np.ndarray:
        totals = self.counts.sum(axis=0)
        if np.any(totals == 0):
            raise ValueError("probe column with zero total counts")
        return self.counts / totals


def module_transfers(phases: np.ndarray, d: int) -> np.ndarray:
    """Per-module ``(d+1) x (d+1)`` transfer matrices on system + ancilla modes."""
    n_mod = phases.shape[0]
    blocks = mzi_matrix(phases[..., 0], phases[..., 1])
    out = np.empty((n_mod, d + 1, d + 1), dtype=complex)
    for i in range(n_mod):
        t = np.eye(d + 1, dtype=complex)
        for j in range(d):
            # apply MZI j+1 on modes (j, j+1) after everything before it
            t[j:j + 2, :] = blocks[i, j] @ t[j:j + 2, :]
        out[i] = t
    return out


def simulate_batch(program: CircuitProgram, kets, error: PhaseError | None = None) -> np.ndarray:
    """Outcome probabilities for a batch of input kets; returns shape ``(n, k)``."""
    kets = np.atleast_2d(np.asarray(kets, dtype=complex))
    d = program.dim
    if kets.shape[1] != d:
        raise ValueError(f"probe dimension {kets.shape[1]} does not match program dimension {d}")
    phases = program.phases if error is None else program.phases + error.deviations
    transfers = module_transfers(phases, d)
    n = program.n_outcomes
    probs = np.empty((n, kets.shape[0]))
    state = np.zeros((d + 1, kets.shape[0]), dtype=complex)
    state[:d] = kets.T
    for i in range(program.n_modules):
        state[d] = 0.0  # ancilla port after previous module was detected
        state = transfers[i] @ state
        probs[i] = np.abs(state[d]) ** 2
    probs[n - 1] = np.sum(np.abs(state[:d]) ** 2, axis=0)
    return probs


def simulate(program: CircuitProgram, ket, error: PhaseError | None = None) -> np.ndarray:
    """Outcome probabilities of a single normalized input ket."""
    ket = np.asarray(ket, dtype=complex)
    if ket.ndim != 1:
        raise ValueError("simulate takes one ket; use simulate_batch for several")
    return simulate_batch(program, ket[None, :], error)[:, 0]


def sample_counts(program: CircuitProgram, probes: StateSet, shots: int, seed: int,
                  error: PhaseError | None = None) -> CountTable:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = make_rng(seed)
    p = simulate_batch(program, probes.states, error)
    p = np.clip(p, 0.0, None)
    p /= p.sum(axis=0)
    counts = np.stack([rng.multinomial(shots, p[:, j]) for j in range(p.shape[1])], axis=1)
    return CountTable(counts)


@dataclass
class CalibrationResult:
    error: PhaseError
    residual: float
    converged: bool
    iterations: int
    history: list[float] = field(default_factory=list)


def _jacobian(fun, x: np.ndarray, step: float) -> np.ndarray:
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        cols.append((fun(x + e) - fun(x - e)) / (2 * step))
    return np.stack(cols, axis=1)


def calibrate(program: CircuitProgram, probes: StateSet, observed: CountTable,
              max_iter: int = 200, tol: float = 1e-12, step: float = 1e-6,
              lam0: float = 1e-3) -> CalibrationResult:
    """Estimate phase deviations that reproduce the observed frequencies.

    Damped Gauss-Newton on ``sum_ij (p_ij(phases + dphi) - f_ij)^2`` with a
    central-difference Jacobian.  Each step is the minimum-norm solution of
    the damped normal equations, so phase directions the statistics cannot
    see stay at zero.  ``residual`` is the final sum of squares.
    """
    if observed.counts.shape != (program.n_outcomes, len(probes)):
        raise ValueError(f"count table shape {observed.counts.shape} does not match "
                         f"{program.n_outcomes} outcomes x {len(probes)} probes")
    f = observed.frequencies.ravel()
    shape = program.phases.shape

    def resid(x):
        return simulate_batch(program, probes.states, PhaseError(x.reshape(shape))).ravel() - f

    x = np.zeros(program.phases.size)
    r = resid(x)
    cost = float(r @ r)
    history = [cost]
    lam = lam0
    converged = cost <= tol
    it = 0
    while not converged and it < max_iter:
        it += 1
        jac = _jacobian(resid, x, step)
        u, s, vh = np.linalg.svd(jac, full_matrices=False)
        g = u.T @ r
        accepted = False
        while lam < 1e12:
            # min-norm solution of (J^T J + lam I) dx = -J^T r restricted to row space of J
            dx = -vh.T @ (s * g / (s * s + lam))
            r_new = resid(x + dx)
            c_new = float(r_new @ r_new)
            if c_new < cost:
                x, r, cost = x + dx, r_new, c_new
                lam = max(lam / 10, 1e-15)
                accepted = True
                break
            lam *= 10
        history.append(cost)
        if not accepted:
            log.debug("calibration stalled at cost %.3e", cost)
            break
        if cost <= tol:
            converged = True
    return CalibrationResult(PhaseError(x.reshape(shape)), cost, converged, it, history)


def apply_correction(program: CircuitProgram, estimate: PhaseError) -> CircuitProgram:
    """Program with settings ``phi_ideal - dphi`` that compensates an estimated error."""
    return CircuitProgram(program.dim, program.n_outcomes, program.phases - estimate.deviations)


@dataclass
class LoopResult:
    error: PhaseError
    corrected: CircuitProgram
    rounds: list[CalibrationResult]
    mismatch: list[float]   # max |f - p_ideal| of the corrected program after each round


def dither(program: CircuitProgram, bias: float, tol: float = 1e-9) -> CircuitProgram:
    """Copy of ``program`` with ``beta`` shifted by ``bias`` on every MZI in the cross state."""
    out = program.copy()
    out.phases[..., 1] += np.where(np.abs(program.c00()) <= tol, bias, 0.0)
    return out


def calibrate_loop(program: CircuitProgram, probes: StateSet, measure, rounds: int = 2,
                   bias: float = 0.3, tol: float = 1e-10, **kwargs) -> LoopResult:
    """Measure/fit/correct cycles against a device ``measure(program) -> CountTable``.

    At ``beta = 0`` the deviations ``(alpha, delta)`` and ``(alpha + pi, -delta)``
    give the same statistics up to mode phases, so a fit at the compiled
    settings cannot fix the sign of ``delta`` and picking the wrong branch
    doubles the error after correction.  Each round therefore measures with
    a known offset ``bias`` on the ``beta`` of cross-state MZIs, fits the
    deviation there and corrects the ideal settings.  Later rounds start
    from the previous correction; the best round (by measured mismatch of
    the corrected program) is returned.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    ideal = simulate_batch(program, probes.states)
    offset = dither(program, bias).phases - program.phases
    estimate = PhaseError.zeros(program)
    best = (np.inf, estimate, program)
    history, mismatch = [], []
    for _ in range(rounds):
        current = apply_correction(program, estimate)
        probe_prog = CircuitProgram(program.dim, program.n_outcomes, current.phases + offset)
        res = calibrate(probe_prog, probes, measure(probe_prog), **kwargs)
        history.append(res)
        # errors are additive, so the deviation fitted at any settings is the device error
        estimate = res.error
        corrected = apply_correction(program, estimate)
        gap = float(np.max(np.abs(measure(corrected).frequencies - ideal)))
        mismatch.append(gap)
        if gap < best[0]:
            best = (gap, estimate, corrected)
        if gap <= tol:
            break
    return LoopResult(best[1], best[2], history, mismatch)
