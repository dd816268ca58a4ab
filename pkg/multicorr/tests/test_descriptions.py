"""Tests for state, scenario and protocol documents."""

import json

import numpy as np
import pytest

from multicorr.descriptions import (
    GATES,
    basis_from_spec,
    load_document,
    parse_key_values,
    parse_scenario_source,
    parse_state_source,
    protocol_from_document,
    state_checksum,
    state_from_document,
    state_to_document,
    unitary_from_spec,
)
from multicorr.pipeline_step import Pipeline_Exception
from multicorr.qstate import make_named_state
from multicorr.work import run_protocol


def test_parse_key_values():
    """Test number conversion of key=value lists."""
    assert parse_key_values("a=1, b=0.5,c=x") == {"a": 1, "b": 0.5, "c": "x"}
    assert parse_key_values("") == {}
    with pytest.raises(Pipeline_Exception, match="key=value"):
        parse_key_values("a")


def test_named_state_ids():
    """Test named-state ids with and without parameters."""
    s = parse_state_source("w_mixture:F=0.25", n=3)
    assert s.num_parties == 3
    assert s.label == "w_mixture:F=0.25"
    assert parse_state_source("ghz_diag:n=4", n=3).num_parties == 4
    bell = parse_state_source("bell:psi-")
    assert bell.label == "bell:variant=psi-"
    np.testing.assert_allclose(
        bell.matrix, make_named_state("bell", variant="psi-").matrix
    )
    with pytest.raises(Pipeline_Exception, match="Unknown state"):
        parse_state_source("graph:n=3")


@pytest.mark.parametrize(
    "s",
    [
        make_named_state("bell_diag_example", 2),
        make_named_state("w_mixture", 3, F=0.3).to_dense(),
    ],
)
def test_state_documents(s, tmp_path):
    """Test writing a state document and reading it back."""
    document = state_to_document(s)
    assert document["representation"] == (
        "structured" if s.is_structured else "dense"
    )
    path = tmp_path / "mystate.json"
    path.write_text(json.dumps(document))
    loaded = parse_state_source(str(path))
    assert loaded.label == s.label
    np.testing.assert_allclose(loaded.matrix, s.matrix, atol=1e-12)
    assert state_checksum(loaded) == state_checksum(s)


def test_unlabelled_document_takes_file_name(tmp_path):
    """Test that the file stem labels an unlabelled state."""
    path = tmp_path / "single.json"
    path.write_text(
        json.dumps(
            {
                "representation": "dense",
                "num_parties": 1,
                "matrix_re": [[1, 0], [0, 0]],
                "matrix_im": [[0, 0], [0, 0]],
            }
        )
    )
    assert parse_state_source(str(path)).label == "single"


def test_checksum():
    """Test that the checksum ignores labels but not content."""
    a = make_named_state("w_mixture", 3, F=0.25)
    b = make_named_state("w_mixture", 3, F=0.25)
    b.label = "renamed"
    assert state_checksum(a) == state_checksum(b)
    assert len(state_checksum(a)) == 64
    assert state_checksum(a) != state_checksum(make_named_state("w_mixture", 3))


def test_malformed_state_documents(tmp_path):
    """Test the errors of broken state documents."""
    with pytest.raises(Pipeline_Exception, match="Malformed"):
        state_from_document({"representation": "dense"})
    with pytest.raises(Pipeline_Exception, match="representation"):
        state_from_document({"representation": "sparse", "num_parties": 1})
    document = state_to_document(make_named_state("zero", 2))
    document["num_parties"] = 3
    with pytest.raises(Pipeline_Exception):
        state_from_document(document)

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(Pipeline_Exception, match="Could not parse"):
        load_document(broken)
    broken.write_bytes(b"\xff\xfe")
    with pytest.raises(Pipeline_Exception, match="Could not parse"):
        load_document(broken)
    with pytest.raises(Pipeline_Exception, match="Could not read"):
        load_document(tmp_path)


def test_scenario_sources(tmp_path):
    """Test scenarios from ids and from files."""
    scenario = parse_scenario_source("local_filter_postselect:epsilon=0.25")
    assert scenario.params == {"epsilon": 0.25}
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({"scenario": "observation4", "k": 2, "seed": 1}))
    assert parse_scenario_source(str(path)).id == "observation4:k=2,seed=1"


def test_gates_and_bases():
    """Test unitary and basis specifications."""
    np.testing.assert_allclose(unitary_from_spec("HZ"), GATES["H"] @ GATES["Z"])
    np.testing.assert_allclose(
        unitary_from_spec({"re": [[0, 1], [1, 0]]}), GATES["X"]
    )
    with pytest.raises(Pipeline_Exception, match="Unknown gate"):
        unitary_from_spec("Q")
    with pytest.raises(Pipeline_Exception):
        unitary_from_spec(3)
    assert basis_from_spec("eigen") == "eigen"
    basis = basis_from_spec({"theta": 0.0})
    np.testing.assert_allclose(basis.b0, [1, 0])
    with pytest.raises(Pipeline_Exception):
        basis_from_spec("diagonal")


def test_protocol_document():
    """Test a protocol document with a cut."""
    document = {
        "name": "bell rotation",
        "steps": [
            {"step": "dephase_and_broadcast", "party": 2},
            {
                "step": "conditional_local_unitary",
                "party": 0,
                "source": 2,
                "unitaries": {"1": "Z"},
            },
            {"step": "final_collect"},
        ],
    }
    protocol, constraint = protocol_from_document(document, 3)
    assert protocol.name == "bell rotation"
    assert constraint.is_unrestricted
    s = make_named_state("example2_tripartite", 3)
    assert run_protocol(s, protocol, constraint).work_bits == pytest.approx(1.0)

    collect = {"steps": [{"step": "final_collect"}], "cut": [2]}
    protocol, constraint = protocol_from_document(collect, 3)
    assert str(constraint) == "across {0,1}|{2}"
    assert run_protocol(s, protocol, constraint).work_bits == pytest.approx(1.0)
    with pytest.raises(Pipeline_Exception, match="number of parties"):
        protocol_from_document(collect)


def test_malformed_protocol_documents():
    """Test the errors of broken protocol documents."""
    with pytest.raises(Pipeline_Exception, match="Malformed"):
        protocol_from_document({"name": "empty"})
    with pytest.raises(Pipeline_Exception, match="Unknown protocol step"):
        protocol_from_document({"steps": [{"step": "teleport"}]})
