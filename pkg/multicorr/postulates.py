"""Mechanical runners for the postulate scenarios.

A scenario is a chain of transformation steps (add a party, filter with
postselection, apply local unitaries, split a party, attach/operate/send
ancillas). Each step is a :class:`~multicorr.pipeline_step.Pipeline_Step`
that records the indicator before and after it acts; the verdicts are
assembled from that history.
"""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from multicorr.covariance import (
    SCAN_BUDGET,
    covariance,
    pauli_covariance_scan,
    z_string,
)
from multicorr.cuts import (
    PRODUCT_TOL,
    degree_of_correlations,
    has_genuine_correlations,
    split_party_with_cnot,
)
from multicorr.distillation import FilterInstrument
from multicorr.pipeline import Pipeline
from multicorr.pipeline_data import Pipeline_Data
from multicorr.pipeline_step import (
    Domain_Exception,
    Impossible_Branch_Exception,
    Pipeline_Exception,
    Pipeline_Step,
)
from multicorr.qstate import (
    COMPLETENESS_TOL,
    apply_instrument,
    apply_local_operation,
    make_named_state,
    random_unitary,
    tensor_product,
)

lgr = logging.getLogger(__name__)

VIOLATION_TOL = 1e-8

SATISFIED = "satisfied"
VIOLATED = "VIOLATED"
INCONCLUSIVE = "inconclusive"


def _setting(config, name, default):
    return getattr(config, name, default) if config is not None else default


# --------------------------------------------------------------------------
# indicators
# --------------------------------------------------------------------------


def _max_abs_covariance(s, groups=None, config=None):
    budget = _setting(config, "scan_budget", SCAN_BUDGET)
    return pauli_covariance_scan(s, budget=budget).max_abs


def _zz_covariance(s, groups=None, config=None):
    return abs(covariance(s, z_string(s.num_parties)))


def _degree(s, groups=None, config=None):
    tol = _setting(config, "product_tol", PRODUCT_TOL)
    return float(degree_of_correlations(s, tol, groups))


def _genuine(s, groups=None, config=None):
    tol = _setting(config, "product_tol", PRODUCT_TOL)
    return float(has_genuine_correlations(s, tol, groups))


@dataclass(frozen=True)
class Indicator:
    """
    A state functional judged against the postulates.

    Parameters
    ----------
    name : str
        Registry name.
    function : callable
        ``function(state, groups, config) -> float``.
    mode : {"zero_test", "monotone"}
        ``zero_test``: a value that was zero must stay zero.
        ``monotone``: the value may grow at most by the step allowance.
    primed : bool
        Verdicts refer to the primed postulates (degree of correlations).
    uses_groups : bool
        The function understands parties holding several qubits.
    """

    name: str
    function: object
    mode: str = "zero_test"
    primed: bool = False
    uses_groups: bool = False

    def __post_init__(self):
        if self.mode not in ("zero_test", "monotone"):
            raise Pipeline_Exception(f"Unknown indicator mode '{self.mode}'.")

    def __call__(self, s, groups=None, config=None):
        return float(self.function(s, groups if self.uses_groups else None, config))

    def label(self, postulate):
        """Verdict label such as ``Postulate 2`` or ``Postulate 1'``."""
        prime = "'" if self.primed else ""
        return f"Postulate {postulate}{prime}"


INDICATORS = {
    "covariance": Indicator("covariance", _max_abs_covariance),
    "zz_covariance": Indicator("zz_covariance", _zz_covariance),
    "degree": Indicator(
        "degree", _degree, mode="monotone", primed=True, uses_groups=True
    ),
    "genuine": Indicator("genuine", _genuine, uses_groups=True),
}
"""Built-in indicators by name."""


def get_indicator(indicator):
    """Look up an indicator by name (instances pass through)."""
    if isinstance(indicator, Indicator):
        return indicator
    if callable(indicator):
        return Indicator(getattr(indicator, "__name__", "custom"), indicator)
    if indicator not in INDICATORS:
        raise Pipeline_Exception(
            f"Unknown indicator '{indicator}'. "
            f"Known indicators: {', '.join(INDICATORS)}."
        )
    return INDICATORS[indicator]


# --------------------------------------------------------------------------
# scenario data and steps
# --------------------------------------------------------------------------


class Scenario_Data(Pipeline_Data):
    """
    State, party grouping and indicator value carried through a scenario.

    Parameters
    ----------
    state : QuantumState
        The initial state.
    indicator : Indicator
        Evaluated after every step.
    config : Config, optional
        Supplies tolerances and scan budgets to the indicator.
    groups : sequence of sequences of int, optional
        Qubits held by each party, one qubit per party by default.
    """

    def __init__(self, state, indicator, config=None, groups=None):
        super().__init__(config)
        self.state = state
        if groups is None:
            groups = [(q,) for q in range(state.num_parties)]
        self.groups = [tuple(group) for group in groups]
        self.indicator = indicator
        self.probability = 1.0
        self.value = self.measure()
        self.initial_value = self.value

    @property
    def num_parties(self):
        """Number of parties (not qubits)."""
        return len(self.groups)

    def measure(self):
        """Indicator value of the current state."""
        return self.indicator(self.state, self.groups, self.config)

    def check_party(self, party):
        """Validate a party index."""
        if not 0 <= int(party) < self.num_parties:
            raise Pipeline_Exception(
                f"Party {party} out of range for {self.num_parties} parties."
            )
        return int(party)

    def update(self, step, state, probability=1.0):
        """Replace the state, re-evaluate the indicator and record the step."""
        before = self.value
        self.state = state
        self.probability *= probability
        self.value = self.measure()
        lgr.debug("%s: %.12g -> %.12g", step.description, before, self.value)
        return self.record(
            step.short_id,
            description=step.description,
            postulate=step.postulate,
            allowance=step.allowance,
            before=before,
            after=self.value,
            probability=probability,
        )


class Scenario_Step(Pipeline_Step):
    """A scenario transformation tied to one postulate."""

    postulate = ""
    allowance = 0


class Add_Party_Step(Scenario_Step):
    """Append a party in a product state."""

    postulate = "1"

    def __init__(self, party_state=None, config=None):
        super().__init__("Add a party in a product state", config)
        if party_state is None:
            party_state = make_named_state("zero", 1)
        self.party_state = party_state
        if self.party_state.num_parties != 1:
            raise Pipeline_Exception("The added party must hold a single qubit.")

    def step(self, data):
        """Tensor the new party on the right."""
        state = tensor_product(data.state, self.party_state)
        data.groups.append((data.state.num_parties,))
        data.update(self, state)
        return data


class Local_Filter_Step(Scenario_Step):
    """
    Apply a local instrument at some parties and keep one outcome everywhere.

    Parameters
    ----------
    kraus : sequence of 2x2 array_like
        The instrument applied at each selected party.
    parties : sequence of int, optional
        Filtered parties, all by default.
    outcome : int
        The postselected outcome.
    """

    postulate = "2"

    def __init__(self, kraus, parties=None, outcome=0, config=None):
        super().__init__("Local filtering with unanimous postselection", config)
        self.kraus = [np.asarray(k, dtype=complex) for k in kraus]
        self.parties = None if parties is None else [int(p) for p in parties]
        self.outcome = int(outcome)

    def step(self, data):
        """Filter every selected party on its first qubit."""
        parties = range(data.num_parties) if self.parties is None else self.parties
        state, probability = data.state, 1.0
        for party in parties:
            qubit = data.groups[data.check_party(party)][0]
            state, p = apply_local_operation(
                state, (qubit,), self.kraus, postselect=self.outcome
            )
            probability *= p
        self.logger.debug("Postselection probability %.12g", probability)
        data.update(self, state, probability)
        return data


class Local_Unitary_Step(Scenario_Step):
    """Apply a Haar-random unitary to every party's qubits."""

    postulate = "2"

    def __init__(self, seed=None, config=None):
        super().__init__("Random local unitaries", config)
        self.seed = seed

    def step(self, data):
        """Rotate each party with its own unitary."""
        rng = np.random.default_rng(self.seed)
        state = data.state
        for group in data.groups:
            unitary = random_unitary(2 ** len(group), rng)
            state, _ = apply_local_operation(state, group, [unitary])
        data.update(self, state)
        return data


class Split_Party_Step(Scenario_Step):
    """Split a party in two with a CNOT onto a fresh ancilla."""

    postulate = "3"
    allowance = 1

    def __init__(self, party, config=None):
        super().__init__(f"Split party {party}", config)
        self.party = int(party)

    def step(self, data):
        """The ancilla becomes a new last party."""
        qubit = data.groups[data.check_party(self.party)][0]
        state = split_party_with_cnot(data.state, qubit)
        data.groups.append((data.state.num_parties,))
        data.update(self, state)
        return data


class Attach_Ancilla_Step(Scenario_Step):
    """A party takes a fresh |0> ancilla into its own laboratory."""

    postulate = "1"

    def __init__(self, host, config=None):
        super().__init__(f"Attach an ancilla to party {host}", config)
        self.host = int(host)

    def step(self, data):
        """The ancilla joins the host's group of qubits."""
        host = data.check_party(self.host)
        qubit = data.state.num_parties
        state = tensor_product(data.state, make_named_state("zero", 1))
        data.groups[host] = data.groups[host] + (qubit,)
        data.update(self, state)
        return data


class Joint_Local_Operation_Step(Scenario_Step):
    """
    A local operation on everything one party holds.

    Parameters
    ----------
    host : int
        The acting party.
    kraus : sequence of array_like, optional
        Operators on the host's qubits; a seeded Haar-random unitary by
        default.
    postselect : int, optional
        Keep only this outcome.
    seed : int, optional
        Seed of the random unitary.
    """

    postulate = "2"

    def __init__(self, host, kraus=None, postselect=None, seed=None, config=None):
        super().__init__(f"Local operation of party {host} and its ancillas", config)
        self.host = int(host)
        self.kraus = kraus
        self.postselect = postselect
        self.seed = seed

    def step(self, data):
        """Act on the host's qubits jointly."""
        group = data.groups[data.check_party(self.host)]
        kraus = self.kraus
        if kraus is None:
            kraus = [random_unitary(2 ** len(group), self.seed)]
        state, probability = apply_local_operation(
            data.state, group, kraus, postselect=self.postselect
        )
        data.update(self, state, probability)
        return data


class Send_Ancilla_Step(Scenario_Step):
    """A party hands its most recent ancilla to a new party."""

    postulate = "3"
    allowance = 1

    def __init__(self, host, config=None):
        super().__init__(f"Send an ancilla of party {host} away", config)
        self.host = int(host)

    def step(self, data):
        """Move the host's last qubit into a group of its own."""
        host = data.check_party(self.host)
        group = data.groups[host]
        if len(group) < 2:
            raise Pipeline_Exception(f"Party {host} holds no ancilla to send.")
        data.groups[host] = group[:-1]
        data.groups.append(group[-1:])
        data.update(self, data.state)
        return data


# --------------------------------------------------------------------------
# scenarios
# --------------------------------------------------------------------------


SCENARIOS = (
    "add_party",
    "local_filter_postselect",
    "local_unitary",
    "split_party",
    "observation4",
)


def _parse_parties(parties):
    if parties is None or parties == "all":
        return None
    if isinstance(parties, int):
        return [parties]
    return [int(p) for p in parties]


@dataclass(frozen=True)
class Scenario:
    """
    A named transformation chain.

    Parameters
    ----------
    kind : str
        One of :data:`SCENARIOS`.
    params : dict
        ``party_state`` (add_party); ``epsilon``, ``parties``
        (local_filter_postselect); ``seed`` (local_unitary, observation4);
        ``party`` (split_party, "all" by default); ``k``, ``host``
        (observation4).
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SCENARIOS:
            raise Pipeline_Exception(
                f"Unknown scenario '{self.kind}'. "
                f"Known scenarios: {', '.join(SCENARIOS)}."
            )
        if self.kind == "local_filter_postselect" and "epsilon" not in self.params:
            raise Pipeline_Exception("A filter scenario needs an epsilon.")
        if self.kind == "observation4" and int(self.params.get("k", 1)) < 1:
            raise Pipeline_Exception("observation4 needs k >= 1 ancillas.")

    @classmethod
    def from_document(cls, document):
        """Build a scenario from a document such as ``{"scenario": ...}``."""
        if not isinstance(document, dict) or "scenario" not in document:
            raise Pipeline_Exception("Scenario document needs a 'scenario' field.")
        params = {k: v for k, v in document.items() if k != "scenario"}
        return cls(str(document["scenario"]), params)

    @property
    def id(self):
        """Identifier such as ``local_filter_postselect:epsilon=0.25``."""
        if not self.params:
            return self.kind
        body = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.kind}:{body}"

    def instruments(self, num_parties):
        """Complete per-party instruments behind a filter scenario, else None."""
        if self.kind != "local_filter_postselect":
            return None
        kraus = FilterInstrument(float(self.params["epsilon"])).kraus
        parties = _parse_parties(self.params.get("parties"))
        return [
            kraus if parties is None or p in parties else None
            for p in range(num_parties)
        ]

    def build_steps(self, num_parties, config=None):
        """Instantiate the steps for a state with ``num_parties`` parties."""
        params = self.params
        if self.kind == "add_party":
            party_state = params.get("party_state")
            if isinstance(party_state, str):
                party_state = make_named_state(party_state, 1)
            return [Add_Party_Step(party_state, config=config)]
        if self.kind == "local_filter_postselect":
            instrument = FilterInstrument(float(params["epsilon"]))
            parties = _parse_parties(params.get("parties"))
            return [Local_Filter_Step(instrument.kraus, parties, 0, config=config)]
        if self.kind == "local_unitary":
            return [Local_Unitary_Step(params.get("seed"), config=config)]
        if self.kind == "split_party":
            parties = _parse_parties(params.get("party", params.get("parties")))
            parties = range(num_parties) if parties is None else parties
            return [Split_Party_Step(p, config=config) for p in parties]

        k = int(params.get("k", 1))
        host = int(params.get("host", 0))
        seed = params.get("seed")
        return (
            [Attach_Ancilla_Step(host, config=config) for _ in range(k)]
            + [Joint_Local_Operation_Step(host, seed=seed, config=config)]
            + [Send_Ancilla_Step(host, config=config) for _ in range(k)]
        )


@dataclass
class PostulateReport:
    """Indicator values along a scenario and the resulting verdicts."""

    scenario: str
    indicator: str
    initial_value: float
    final_value: float
    steps: list
    verdicts: dict
    probability: float = 1.0

    def lines(self):
        """Verdicts as ``Postulate 2: VIOLATED`` lines."""
        return [f"{label}: {verdict}" for label, verdict in self.verdicts.items()]

    def as_dict(self):
        """Plain-data form of the report."""
        return {
            "scenario": self.scenario,
            "indicator": self.indicator,
            "initial_value": self.initial_value,
            "final_value": self.final_value,
            "probability": self.probability,
            "steps": [dict(step) for step in self.steps],
            "verdicts": dict(self.verdicts),
        }


def _step_verdict(indicator, before, after, allowance, tol):
    if indicator.mode == "zero_test":
        if abs(before) > tol:
            return INCONCLUSIVE
        return VIOLATED if abs(after) > tol else SATISFIED
    return VIOLATED if after > before + allowance + tol else SATISFIED


def _combine(verdicts):
    if VIOLATED in verdicts:
        return VIOLATED
    if SATISFIED in verdicts:
        return SATISFIED
    return INCONCLUSIVE


def run_postulate_scenario(indicator, scenario, state, config=None, tol=None):
    """
    Run a scenario and judge every step against its postulate.

    Parameters
    ----------
    indicator : Indicator or str or callable
        The functional under test.
    scenario : Scenario or dict
        The transformation chain, or its document.
    state : QuantumState
        The initial state.
    config : Config, optional
        Tolerances and budgets.
    tol : float, optional
        Verdict tolerance, ``config.violation_tol`` or 1e-8 by default.

    Returns
    -------
    PostulateReport
    """
    indicator = get_indicator(indicator)
    if not isinstance(scenario, Scenario):
        scenario = Scenario.from_document(scenario)
    if tol is None:
        tol = _setting(config, "violation_tol", VIOLATION_TOL)

    data = Scenario_Data(state, indicator, config)
    steps = scenario.build_steps(data.num_parties, config)
    Pipeline(steps).run(data)

    collected = {}
    for entry in data.history:
        verdict = _step_verdict(
            indicator, entry["before"], entry["after"], entry["allowance"], tol
        )
        entry["verdict"] = verdict
        collected.setdefault(indicator.label(entry["postulate"]), []).append(verdict)
    verdicts = {label: _combine(found) for label, found in sorted(collected.items())}

    if scenario.kind == "observation4" and indicator.mode == "monotone":
        gained = sum(entry["allowance"] for entry in data.history)
        within = data.value <= data.initial_value + gained + tol
        verdicts["Observation 4"] = SATISFIED if within else VIOLATED

    report = PostulateReport(
        scenario=scenario.id,
        indicator=indicator.name,
        initial_value=data.initial_value,
        final_value=data.value,
        steps=data.history,
        verdicts=verdicts,
        probability=data.probability,
    )
    for line in report.lines():
        lgr.info("%s", line)
    return report


# --------------------------------------------------------------------------
# average monotonicity
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MonotonicityResult:
    """Value before a local instrument against its branch average."""

    lhs: float
    rhs: float
    holds: bool
    branches: tuple


def check_measure_monotonicity(measure, s, instruments, tol=VIOLATION_TOL):
    """
    Check that a measure does not increase on average under local instruments.

    Parameters
    ----------
    measure : callable
        State functional.
    s : QuantumState
        The state.
    instruments : sequence
        Per party, a complete list of 2x2 Kraus operators (None for no
        operation).
    tol : float
        The check holds iff measure(s) >= rhs - tol.

    Returns
    -------
    MonotonicityResult
        ``rhs`` is the sum over joint branches of p * measure(branch state);
        branches with vanishing probability are skipped.
    """
    if len(instruments) != s.num_parties:
        raise Pipeline_Exception(
            f"Expected {s.num_parties} instruments, got {len(instruments)}."
        )
    assignment = []
    for party, kraus in enumerate(instruments):
        kraus = [np.eye(2, dtype=complex)] if kraus is None else kraus
        kraus = [np.asarray(k, dtype=complex) for k in kraus]
        total = sum(k.conj().T @ k for k in kraus)
        if np.max(np.abs(total - np.eye(2))) > COMPLETENESS_TOL:
            raise Domain_Exception(f"Instrument of party {party} is not complete.")
        assignment.append(kraus)

    lhs = float(measure(s))
    branches = []
    for branch in itertools.product(*(range(len(k)) for k in assignment)):
        try:
            state, p = apply_instrument(s, assignment, branch)
        except Impossible_Branch_Exception:
            continue
        branches.append((branch, p, float(measure(state))))
    rhs = math.fsum(p * value for _, p, value in branches)
    holds = lhs >= rhs - tol
    lgr.debug(
        "Average monotonicity: %.12g vs %.12g over %d branches",
        lhs,
        rhs,
        len(branches),
    )
    return MonotonicityResult(lhs, rhs, holds, tuple(branches))
