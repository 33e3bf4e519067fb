import json

import numpy as np
import pytest

from povm_forge import io
from povm_forge.compiler import compile_povm
from povm_forge.povm import Povm, StateSet, random_rank1_povm, sic_povm_d4, usd_state_sets
from povm_forge.simulator import CountTable, PhaseError


def test_rank1_povm_round_trip(tmp_path):
    p = random_rank1_povm(3, 5, seed=2)
    path = tmp_path / "m.json"
    io.dump_json(io.povm_to_dict(p), path)
    back = io.povm_from_dict(io.load_json(path))
    assert back.is_rank1
    assert np.allclose(back.elements, p.elements, atol=1e-14)


def test_general_povm_round_trip():
    p = Povm.from_elements(np.array([np.diag([0.5, 0.2]), np.diag([0.5, 0.8])], dtype=complex))
    back = io.povm_from_dict(json.loads(io.dump_json(io.povm_to_dict(p))))
    assert np.allclose(back.elements, p.elements)


def test_states_renormalized():
    s = usd_state_sets()[0]
    obj = io.states_to_dict(s)
    obj["states"] = np.round(np.asarray(obj["states"]) * 1.001, 4).tolist()
    back = io.states_from_dict(obj)
    assert np.allclose(np.linalg.norm(back.states, axis=1), 1.0, atol=1e-14)


def test_program_round_trip():
    program, _ = compile_povm(sic_povm_d4())
    back = io.program_from_dict(json.loads(io.dump_json(io.program_to_dict(program))))
    assert np.array_equal(back.phases, program.phases)


def test_counts_round_trip():
    c = CountTable(np.array([[3, 0], [7, 10]]))
    obj = io.counts_to_dict(c)
    assert obj["rows"] == [[3, 0], [7, 10]]
    assert np.array_equal(io.counts_from_dict(obj).counts, c.counts)


def test_phase_error_round_trip():
    program, _ = compile_povm(random_rank1_povm(2, 3, seed=0))
    e = PhaseError(np.zeros_like(program.phases))
    e.deviations[1, 0, 1] = 0.02
    obj = io.phase_error_to_dict(e)
    assert obj == {"2.1.beta": 0.02}
    assert np.array_equal(io.phase_error_from_dict(program, obj).deviations, e.deviations)


def test_invalid_json_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"dim": 2,\n "elements": [}\n')
    with pytest.raises(io.FormatError, match="line 2"):
        io.load_json(path)


@pytest.mark.parametrize("obj", [
    {},
    {"dim": 0, "elements": []},
    {"dim": 2, "elements": []},
    {"dim": 2, "elements": [{"weight": 1.0, "ket": [[1, 0]]}]},
    {"dim": 2, "elements": [{"weight": 1.0, "ket": [1, 0]}]},
    {"dim": 2, "elements": [{"ket": [[1, 0], [0, 0]]}]},
    {"dim": 2, "matrices": [[[1, 0], [0, 0]]]},
])
def test_malformed_povm(obj):
    with pytest.raises(io.FormatError):
        io.povm_from_dict(obj)


@pytest.mark.parametrize("obj", [
    {"dim": 2, "n_outcomes": 3, "modules": [[{"alpha": 0, "beta": 0}] * 2]},
    {"dim": 2, "n_outcomes": 2, "modules": [[{"alpha": 0}] * 2]},
    {"dim": 2, "n_outcomes": 2, "modules": [[{"alpha": 0, "beta": 0}]]},
    {"dim": 2, "modules": []},
])
def test_malformed_program(obj):
    with pytest.raises(io.FormatError):
        io.program_from_dict(obj)


def test_malformed_counts_and_errors():
    with pytest.raises(io.FormatError):
        io.counts_from_dict({"outcomes": 2, "probes": 1, "rows": [[1, 2]]})
    with pytest.raises(io.FormatError):
        io.counts_from_dict({"outcomes": 1, "probes": 1, "rows": [[-1]]})
    program, _ = compile_povm(random_rank1_povm(2, 3, seed=0))
    with pytest.raises(io.FormatError):
        io.phase_error_from_dict(program, {"9.1.alpha": 0.1})
    with pytest.raises(io.FormatError):
        io.phase_error_from_dict(program, {"1.1.gamma": 0.1})


def test_zero_state_rejected():
    with pytest.raises(io.FormatError):
        io.states_from_dict({"dim": 2, "states": [[[0, 0], [0, 0]]]})
