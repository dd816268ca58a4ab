"""Reading and writing state, scenario and protocol documents.

States are addressed either by a named family, ``name[:key=value,...]``
(``bell`` also accepts a bare variant such as ``bell:psi-``), or by the path
of a JSON document::

    {"representation": "dense", "num_parties": 1,
     "matrix_re": [[1, 0], [0, 0]], "matrix_im": [[0, 0], [0, 0]]}

    {"representation": "structured", "num_parties": 2,
     "terms": [{"weight": 1.0,
                "amplitudes": [{"bits": "01", "re": 0.7071067811865476, "im": 0},
                               {"bits": "10", "re": 0.7071067811865476, "im": 0}]}]}
"""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import hashlib
import json
import logging
import math
from pathlib import Path

import numpy as np

from multicorr.cuts import Bipartition
from multicorr.helper.naming import round_floats
from multicorr.pipeline_step import Pipeline_Exception
from multicorr.postulates import Scenario
from multicorr.qstate import (
    PAULI,
    QuantumState,
    SingleQubitBasis,
    SparsePureState,
    make_named_state,
)
from multicorr.work import (
    Communication_Constraint,
    Conditional_Local_Unitary,
    Dephase_And_Broadcast,
    Final_Collect,
    Send_Dephased,
    Work_Protocol,
)

lgr = logging.getLogger(__name__)

GATES = {
    **PAULI,
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
}
"""Single-qubit gates addressable by letter in protocol documents."""


def _value(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def parse_key_values(text):
    """Parse ``key=value,key=value`` into a dict with numbers converted."""
    params = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        if "=" not in item:
            raise Pipeline_Exception(f"Expected key=value, got '{item}'.")
        key, value = item.split("=", 1)
        params[key.strip()] = _value(value.strip())
    return params


def load_document(path):
    """Read a JSON document."""
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise Pipeline_Exception(f"Could not parse {path}: {e}") from None
    except OSError as e:
        raise Pipeline_Exception(f"Could not read {path}: {e}") from None


def parse_state_source(text, n=None):
    """
    Build a state from a file path or a named-state id.

    Parameters
    ----------
    text : str
        Path to a JSON document, or ``name[:key=value,...]``.
    n : int, optional
        Party count for named families that need one (``n=`` in the id wins).

    Returns
    -------
    QuantumState
    """
    if Path(text).is_file():
        state = state_from_document(load_document(text))
        if not state.label:
            state.label = Path(text).stem
        return state

    name, _, rest = text.partition(":")
    if name == "bell" and rest and "=" not in rest:
        params = {"variant": rest}
    else:
        params = parse_key_values(rest)
    n = params.pop("n", n)
    return make_named_state(name.strip(), n, **params)


def state_from_document(document):
    """Build a validated state from a state document."""
    try:
        representation = document["representation"]
        num_parties = int(document["num_parties"])
        if representation == "dense":
            matrix = np.asarray(document["matrix_re"], dtype=float) + 1j * np.asarray(
                document["matrix_im"], dtype=float
            )
            state = QuantumState.from_matrix(matrix)
        elif representation == "structured":
            terms = [
                (
                    float(term["weight"]),
                    SparsePureState(
                        num_parties,
                        {
                            a["bits"]: complex(float(a["re"]), float(a.get("im", 0)))
                            for a in term["amplitudes"]
                        },
                    ),
                )
                for term in document["terms"]
            ]
            state = QuantumState.from_terms(terms)
        else:
            raise Pipeline_Exception(f"Unknown representation '{representation}'.")
    except (KeyError, TypeError, ValueError) as e:
        raise Pipeline_Exception(f"Malformed state document: {e!r}") from None
    if state.num_parties != num_parties:
        raise Pipeline_Exception(
            f"Document declares {num_parties} parties, the matrix has "
            f"{state.num_parties}."
        )
    state.label = str(document.get("label", ""))
    return state


def state_to_document(state):
    """The state document of a state."""
    document = {"num_parties": state.num_parties}
    if state.is_structured:
        document["representation"] = "structured"
        document["terms"] = [
            {
                "weight": weight,
                "amplitudes": [
                    {"bits": bits, "re": amp.real, "im": amp.imag}
                    for bits, amp in psi.amplitudes.items()
                ],
            }
            for weight, psi in state.terms
        ]
    else:
        document["representation"] = "dense"
        document["matrix_re"] = np.real(state.matrix).tolist()
        document["matrix_im"] = np.imag(state.matrix).tolist()
    if state.label:
        document["label"] = state.label
    return document


def state_checksum(state, digits=12):
    """SHA-256 of the rounded state document (label excluded)."""
    document = state_to_document(state)
    document.pop("label", None)
    payload = json.dumps(
        round_floats(document, digits), sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def parse_scenario_source(text):
    """Build a scenario from a file path or ``kind[:key=value,...]``."""
    if Path(text).is_file():
        return scenario_from_document(load_document(text))
    kind, _, rest = text.partition(":")
    return Scenario(kind.strip(), parse_key_values(rest))


def scenario_from_document(document):
    """Build a scenario from ``{"scenario": kind, ...}``."""
    return Scenario.from_document(document)


def basis_from_spec(spec):
    """Basis from a name, ``"eigen"`` or ``{"theta": ..., "phi": ...}``."""
    if spec is None or spec in ("computational", "hadamard", "eigen"):
        return spec
    if isinstance(spec, dict):
        return SingleQubitBasis.angles(
            float(spec.get("theta", 0.0)), float(spec.get("phi", 0.0))
        )
    raise Pipeline_Exception(f"Unknown basis specification {spec!r}.")


def unitary_from_spec(spec):
    """Unitary from gate letters (applied right to left) or ``{"re", "im"}``."""
    if isinstance(spec, str):
        matrix = np.eye(2, dtype=complex)
        for letter in spec.upper():
            if letter not in GATES:
                raise Pipeline_Exception(f"Unknown gate '{letter}'.")
            matrix = matrix @ GATES[letter]
        return matrix
    if isinstance(spec, dict):
        return np.asarray(spec["re"], dtype=float) + 1j * np.asarray(
            spec.get("im", np.zeros((2, 2))), dtype=float
        )
    raise Pipeline_Exception(f"Unknown unitary specification {spec!r}.")


def _step_from_spec(spec):
    kind = spec.get("step")
    if kind == "dephase_and_broadcast":
        return Dephase_And_Broadcast(spec["party"], basis_from_spec(spec.get("basis")))
    if kind == "conditional_local_unitary":
        unitaries = {
            int(outcome): unitary_from_spec(u)
            for outcome, u in spec["unitaries"].items()
        }
        return Conditional_Local_Unitary(
            spec["party"], spec["source"], unitaries, qubit=spec.get("qubit")
        )
    if kind == "send_dephased":
        return Send_Dephased(
            spec["party"], spec["destination"], basis_from_spec(spec.get("basis"))
        )
    if kind == "final_collect":
        return Final_Collect(spec.get("destination", 0))
    raise Pipeline_Exception(f"Unknown protocol step '{kind}'.")


def protocol_from_document(document, num_parties=None):
    """
    Build a protocol and its constraint from a protocol document.

    The document holds ``steps`` and optionally ``name`` and ``cut`` (the
    parties on one side of a cut no message may cross; ``num_parties`` is
    then needed).

    Returns
    -------
    protocol : Work_Protocol
    constraint : Communication_Constraint
    """
    try:
        steps = tuple(_step_from_spec(spec) for spec in document["steps"])
    except (KeyError, TypeError, AttributeError) as e:
        raise Pipeline_Exception(f"Malformed protocol document: {e!r}") from None
    protocol = Work_Protocol(steps, name=str(document.get("name", "")))

    constraint = Communication_Constraint.unrestricted()
    if document.get("cut") is not None:
        if num_parties is None:
            raise Pipeline_Exception("A cut needs the number of parties.")
        cut = Bipartition(num_parties, frozenset(document["cut"]))
        constraint = Communication_Constraint.across(cut)
    return protocol, constraint
