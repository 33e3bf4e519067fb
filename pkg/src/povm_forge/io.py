"""JSON readers and writers for measurements, states, programs, count tables and task records.

Complex numbers are written as ``[re, im]`` pairs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .compiler import CircuitProgram
from .povm import Povm, StateSet
from .simulator import CountTable, PhaseError


class FormatError(ValueError):
    """Malformed or inconsistent file contents."""


def _pairs(z) -> list:
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1).tolist()


def _complex(data, what: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{what}: expected numbers as [re, im] pairs") from exc
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise FormatError(f"{what}: expected [re, im] pairs, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{what}: non-finite entries")
    return arr[..., 0] + 1j * arr[..., 1]


def _field(obj, key: str, what: str):
    if not isinstance(obj, dict) or key not in obj:
        raise FormatError(f"{what}: missing field {key!r}")
    return obj[key]


def _dim(obj, what: str) -> int:
    d = _field(obj, "dim", what)
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise FormatError(f"{what}: 'dim' must be a positive integer")
    return d


def load_json(path) -> object:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


# -- measurements

def povm_to_dict(p: Povm) -> dict:
    if p.is_rank1:
        return {"dim": p.dim,
                "elements": [{"weight": float(a), "ket": _pairs(k)} for a, k in zip(p.weights, p.kets)]}
    return matrices_to_dict(p.elements)


def povm_from_dict(obj) -> Povm:
    """Accepts the rank-1 ``elements`` form and the general ``matrices`` form."""
    d = _dim(obj, "POVM")
    if isinstance(obj, dict) and "matrices" in obj:
        return Povm.from_elements(matrices_from_dict(obj))
    elements = _field(obj, "elements", "POVM")
    if not isinstance(elements, list) or not elements:
        raise FormatError("POVM: 'elements' must be a non-empty list")
    weights, kets = [], []
    for k, el in enumerate(elements):
        weights.append(float(_field(el, "weight", f"POVM element {k}")))
        ket = _complex(_field(el, "ket", f"POVM element {k}"), f"POVM element {k} ket")
        if ket.shape != (d,):
            raise FormatError(f"POVM element {k}: ket has {ket.size} entries, dim is {d}")
        kets.append(ket)
    try:
        return Povm.from_rank1(weights, kets)
    except ValueError as exc:
        raise FormatError(f"POVM: {exc}") from exc


def matrices_to_dict(mats) -> dict:
    mats = np.asarray(mats, dtype=complex)
    return {"dim": int(mats.shape[1]), "matrices": _pairs(mats)}


def matrices_from_dict(obj) -> np.ndarray:
    d = _dim(obj, "matrices")
    mats = _complex(_field(obj, "matrices", "matrices"), "matrices")
    if mats.ndim != 3 or mats.shape[1:] != (d, d):
        raise FormatError(f"matrices: expected a list of {d}x{d} matrices, got shape {mats.shape}")
    return mats


def states_to_dict(s: StateSet) -> dict:
    return {"dim": s.dim, "states": _pairs(s.states)}


def states_from_dict(obj) -> StateSet:
    d = _dim(obj, "state set")
    states = _complex(_field(obj, "states", "state set"), "state set")
    if states.ndim != 2 or states.shape[1] != d:
        raise FormatError(f"state set: expected kets of length {d}, got shape {states.shape}")
    norms = np.linalg.norm(states, axis=1)
    if np.any(norms == 0):
        raise FormatError("state set: zero ket")
    return StateSet(states / norms[:, None])


# -- programs, counts, phase errors

def program_to_dict(p: CircuitProgram) -> dict:
    return {"dim": p.dim, "n_outcomes": p.n_outcomes,
            "modules": [[{"alpha": float(a), "beta": float(b)} for a, b in row] for row in p.phases]}


def program_from_dict(obj) -> CircuitProgram:
    d = _dim(obj, "program")
    n = _field(obj, "n_outcomes", "program")
    if not isinstance(n, int) or n < 1:
        raise FormatError("program: 'n_outcomes' must be a positive integer")
    modules = _field(obj, "modules", "program")
    if not isinstance(modules, list) or len(modules) != n - 1:
        raise FormatError(f"program: expected {n - 1} modules")
    phases = np.zeros((n - 1, d, 2))
    for i, row in enumerate(modules):
        if not isinstance(row, list) or len(row) != d:
            raise FormatError(f"program: module {i + 1} must list {d} MZIs")
        for j, mzi in enumerate(row):
            phases[i, j] = (float(_field(mzi, "alpha", f"module {i + 1} MZI {j + 1}")),
                            float(_field(mzi, "beta", f"module {i + 1} MZI {j + 1}")))
    if not np.all(np.isfinite(phases)):
        raise FormatError("program: non-finite phase")
    return CircuitProgram(d, n, phases)


def counts_to_dict(c: CountTable) -> dict:
    rows = c.counts
    if np.all(rows == np.round(rows)):
        rows = rows.astype(int)
    return {"outcomes": c.n_outcomes, "probes": c.n_probes, "rows": rows.tolist()}


def counts_from_dict(obj) -> CountTable:
    n = _field(obj, "outcomes", "count table")
    m = _field(obj, "probes", "count table")
    rows = np.asarray(_field(obj, "rows", "count table"), dtype=float)
    if rows.shape != (n, m):
        raise FormatError(f"count table: rows have shape {rows.shape}, header says {(n, m)}")
    try:
        return CountTable(rows)
    except ValueError as exc:
        raise FormatError(f"count table: {exc}") from exc


def phase_error_to_dict(e: PhaseError) -> dict:
    return e.to_dict()


def phase_error_from_dict(program: CircuitProgram, obj) -> PhaseError:
    if not isinstance(obj, dict):
        raise FormatError("phase error: expected an object keyed 'i.j.alpha' / 'i.j.beta'")
    try:
        return PhaseError.from_dict(program, obj)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"phase error: {exc}") from exc


def task_record(inputs: dict, value, details: dict | None = None) -> dict:
    return {"inputs": inputs, "value": value, "details": details or {}}
