import json
import os

import numpy as np
import pytest

import wigner_utils
from wigner_utils import FieldFunction, ModeGrid, ScenarioBuilder
from wigner_utils.scenario_builder import OPERATIONS, SCENARIO_SCHEMA
from tests.conftest import get_scenario_path


def get_document(**overrides) -> dict:
    document = {
        "operation": "eval",
        "grid": {"mode_count": 1, "uniform": True},
        "states": [{"kind": "coherent", "alpha0": [[0.5, -0.25]]}],
        "points": {"values": [[[0.1, 0.2]], [0.0]]},
    }
    document.update(overrides)
    return document


@pytest.mark.parametrize("name", ["eval-coherent.json", "star-fock.json", "moments-vacuum.json",
                                  "marginal-fock.json", "stransform-husimi.json", "verify-all.json"])
def test_bundled_scenarios_load(name):
    scenario = ScenarioBuilder.create_from(get_scenario_path(name))
    assert scenario.operation in OPERATIONS
    assert scenario.source.endswith(name)


def test_schema_lists_every_operation():
    assert SCENARIO_SCHEMA["properties"]["operation"]["enum"] == OPERATIONS


def test_inline_document():
    scenario = ScenarioBuilder.create_new(get_document())
    assert scenario.grid == ModeGrid.uniform(1)
    assert scenario.states[0].kind == "coherent"
    assert scenario.points[0].values[0] == pytest.approx(0.1 + 0.2j)
    assert scenario.points[1].values[0] == 0


def test_default_lattice():
    document = get_document()
    del document["points"]
    scenario = ScenarioBuilder.create_new(document)
    assert len(scenario.points) == 81


def test_marginal_lattice_is_real():
    scenario = ScenarioBuilder.create_from(get_scenario_path("marginal-fock.json"))
    assert len(scenario.points) == 7
    assert all(point.is_real for point in scenario.points)


INVALID_DOCUMENTS = [
    {"operation": "plot"},
    {"operation": "eval", "colour": "blue"},
    {"operation": "eval"},
    get_document(states=[]),
    get_document(operation="star"),
    get_document(grid={"mode_count": 2, "weights": [1.0, -1.0]}),
    get_document(grid={"weights": "heavy"}),
    get_document(states=[{"kind": "squeezed"}]),
    get_document(states=[{"kind": "coherent", "alpha0": [[0.5, 0.1], [0.2, 0.0]]}]),
    get_document(states=[{"kind": "coherent", "alpha0": [["x", 0.1]]}]),
    get_document(states=[{"kind": "fock", "n": -1}]),
    get_document(states=[{"kind": "fock", "n": 11}]),
    get_document(states=[{"kind": "fock", "n": 1, "spectrum": [[0.5, 0.0]]}]),
    get_document(states=[{"kind": "fock", "n": 1, "spectrum": {"basis": 3}}]),
    get_document(points={"values": []}),
    get_document(points={"grid": {}}),
    get_document(tolerances={"default": 0}),
    get_document(tolerances={"default": "tight"}),
    get_document(cutoff=41),
    get_document(seed=1.5),
    get_document(operation="stransform", s=1.5),
    get_document(operation="moments", moments={"m": 3, "n": 2}),
    get_document(basis="x"),
    {"operation": "verify", "suites": ["unknown"]},
    [],
]


@pytest.mark.parametrize("document", INVALID_DOCUMENTS)
def test_invalid_documents(document):
    with pytest.raises(ScenarioBuilder.ConfigException):
        ScenarioBuilder.create_new(document)


def test_error_names_location():
    with pytest.raises(ScenarioBuilder.ConfigException) as e:
        ScenarioBuilder.create_new(get_document(states=[{"kind": "fock", "n": "two"}]))
    assert e.value.location == "states[0].n"
    assert str(e.value).startswith("states[0].n: ")


def test_unnormalized_spectrum_warns_only(recwarn):
    document = get_document(states=[{"kind": "fock", "n": 1, "spectrum": [[0.5, 0.0]]}])
    scenario = ScenarioBuilder.create_new(document, warn_only=True)
    assert len([w for w in recwarn if "renormalizing" in str(w.message)]) == 1
    assert np.allclose(scenario.states[0].parameters["spectrum"].values, [1.0])


def test_file_references(tmp_path):
    grid = ModeGrid.from_weights([0.5, 2.0])
    grid.save(str(tmp_path / "grid.json"))
    alpha0 = FieldFunction(grid, [0.3 - 0.1j, 0.2j])
    with open(tmp_path / "alpha0.json", "w") as f:
        json.dump(alpha0.to_json_dict(), f)
    document = get_document(
        grid={"file": "grid.json"},
        states=[{"kind": "coherent", "alpha0": {"file": "alpha0.json"}}, {"kind": "fock", "n": 1, "spectrum": {"basis": 1}}],
        points={"lattice": {"mode": 1, "steps": 3}},
    )
    path = tmp_path / "scenario.json"
    with open(path, "w") as f:
        json.dump(document, f)
    scenario = ScenarioBuilder.create_from(str(path))
    assert scenario.grid == grid
    assert np.array_equal(scenario.states[0].parameters["alpha0"].values, alpha0.values)
    assert len(scenario.points) == 9


def test_field_file_on_another_grid(tmp_path):
    with open(tmp_path / "alpha0.json", "w") as f:
        json.dump(FieldFunction(ModeGrid.uniform(2), [0.1, 0.2]).to_json_dict(), f)
    document = get_document(states=[{"kind": "coherent", "alpha0": {"file": "alpha0.json"}}])
    with pytest.raises(ScenarioBuilder.ConfigException):
        ScenarioBuilder.create_new(document, str(tmp_path))


def test_missing_grid_file(tmp_path):
    with pytest.raises(ScenarioBuilder.ConfigException):
        ScenarioBuilder.create_new(get_document(grid={"file": "missing.json"}), str(tmp_path))


def test_unreadable_scenarios(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"operation\": ")
    with pytest.raises(ScenarioBuilder.ConfigException):
        ScenarioBuilder.create_from(str(path))
    with pytest.raises(ScenarioBuilder.ConfigException):
        ScenarioBuilder.create_from(str(tmp_path / "missing.json"))


def test_displaced_state():
    document = get_document(states=[{"kind": "fock", "n": 1, "displaced_by": [[0.2, 0.1]]}])
    state = ScenarioBuilder.create_new(document).states[0]
    assert state.parameters["displaced_by"].values[0] == pytest.approx(0.2 + 0.1j)


def test_verify_needs_no_grid():
    scenario = ScenarioBuilder.create_new({"operation": "verify", "suites": "overlap", "tolerances": {"default": 1e-6}})
    assert scenario.grid is None
    assert scenario.suites == ["overlap"]
    assert scenario.tolerances == {"default": 1e-6}


def test_package_ships_type_marker():
    assert os.path.exists(os.path.join(os.path.dirname(wigner_utils.__file__), "py.typed"))
