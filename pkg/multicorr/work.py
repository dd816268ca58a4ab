"""Work extraction with closed local operations and classical communication.

Parties may rotate their qubits, dephase them and exchange the dephased
qubits or measurement records. At the end every qubit is dephased in the
computational basis at a collector and the collector draws

    work = (number of qubits) - S(final classical state)

bits of work. The measured qubits keep their outcomes, so the records are
part of the final classical state. Under a communication constraint each
side of the cut collects on its own and the works of the sides add up.
"""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from multicorr.cuts import Bipartition
from multicorr.pipeline import Pipeline
from multicorr.pipeline_data import Pipeline_Data
from multicorr.pipeline_step import (
    Constraint_Exception,
    Domain_Exception,
    Impossible_Branch_Exception,
    Pipeline_Exception,
    Pipeline_Step,
    Size_Limit_Exception,
)
from multicorr.qstate import (
    EIGEN_CUTOFF,
    SingleQubitBasis,
    apply_local_operation,
    entropy_bits,
    partial_trace,
    permute_parties,
    shannon_entropy_bits,
)

lgr = logging.getLogger(__name__)

MAX_PROTOCOL_PARTIES = 10
MAX_DELTA_W_PARTIES = 6
DIAGONAL_TOL = 1e-10
UNITARY_TOL = 1e-10
BOUND_TOL = 1e-9
TIE_TOL = 1e-12


# --------------------------------------------------------------------------
# accounting
# --------------------------------------------------------------------------


def _diagonal(s):
    if s.is_structured and all(psi.sparsity == 1 for _, psi in s.terms):
        probabilities = np.zeros(2**s.num_parties)
        for weight, psi in s.terms:
            probabilities[int(next(iter(psi.amplitudes)), 2)] += weight
        return probabilities, 0.0
    matrix = s.matrix
    off = matrix - np.diag(np.diag(matrix))
    return np.real(np.diag(matrix)).copy(), float(np.max(np.abs(off), initial=0.0))


def work_from_classical_state(s):
    """
    Work drawn from a state diagonal in the computational basis.

    Returns n - S(s) in bits.

    Raises
    ------
    Domain_Exception
        If an off-diagonal entry exceeds 1e-10.
    """
    probabilities, off = _diagonal(s)
    if off > DIAGONAL_TOL:
        raise Domain_Exception(
            "State is not diagonal in the computational basis "
            f"(off-diagonal {off:.3g})."
        )
    return s.num_parties - shannon_entropy_bits(probabilities)


def clo_work(s):
    """Work reachable by closed local operations alone: sum of 1 - S(rho_i)."""
    return math.fsum(
        1.0 - entropy_bits(partial_trace(s, [party])) for party in range(s.num_parties)
    )


def _marginal_distribution(probabilities, num_parties, keep):
    keep = sorted(keep)
    if len(keep) == num_parties:
        return probabilities
    drop = tuple(q for q in range(num_parties) if q not in keep)
    return probabilities.reshape((2,) * num_parties).sum(axis=drop).reshape(-1)


# --------------------------------------------------------------------------
# communication constraint
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Communication_Constraint:
    """No constraint, or a cut that no classical message may cross."""

    cut: Bipartition | None = None

    @classmethod
    def unrestricted(cls):
        """Communication between every pair of parties."""
        return cls(None)

    @classmethod
    def across(cls, cut):
        """Forbid communication across ``cut``."""
        return cls(cut)

    @property
    def is_unrestricted(self):
        """True if every message is allowed."""
        return self.cut is None

    def allows(self, sender, receiver):
        """Whether ``sender`` may message ``receiver``."""
        return self.cut is None or (sender in self.cut.left) == (
            receiver in self.cut.left
        )

    def sides(self, num_parties):
        """Groups of parties that may talk among themselves."""
        if self.cut is None:
            return [list(range(num_parties))]
        if self.cut.num_parties != num_parties:
            raise Pipeline_Exception(
                f"Cut over {self.cut.num_parties} parties used on "
                f"{num_parties} parties."
            )
        return [sorted(self.cut.left), sorted(self.cut.right)]

    def __str__(self):
        return "unrestricted" if self.cut is None else f"across {self.cut}"


# --------------------------------------------------------------------------
# branches and steps
# --------------------------------------------------------------------------


@dataclass
class Branch:
    """One measurement history: its probability, state and records."""

    probability: float
    state: object
    records: tuple = ()

    def visible_records(self, party, constraint):
        """Records a party has heard of."""
        return tuple(
            (source, outcome)
            for source, outcome in self.records
            if constraint.allows(source, party)
        )

    def last_outcome(self, source):
        """Most recent outcome broadcast by ``source``."""
        for sender, outcome in reversed(self.records):
            if sender == source:
                return outcome
        raise Pipeline_Exception(f"Party {source} has not broadcast any outcome.")


class Protocol_Data(Pipeline_Data):
    """Branches of a protocol run together with who holds which qubit."""

    def __init__(self, state, constraint, config=None):
        super().__init__(config)
        self.num_parties = state.num_parties
        self.constraint = constraint
        self.branches = [Branch(1.0, state)]
        self.holders = list(range(state.num_parties))
        self.collectors = None

    def check_party(self, party):
        """Validate a party index."""
        if not 0 <= int(party) < self.num_parties:
            raise Pipeline_Exception(
                f"Party {party} out of range for {self.num_parties} parties."
            )
        return int(party)

    def record_step(self, step):
        """Log the branch table after a step."""
        return self.record(
            step.short_id,
            description=step.description,
            branches=[
                {"records": [list(r) for r in b.records], "probability": b.probability}
                for b in self.branches
            ],
        )


def _basis_from_spec(spec):
    if spec is None or isinstance(spec, SingleQubitBasis):
        return spec or SingleQubitBasis.computational()
    if spec == "computational":
        return SingleQubitBasis.computational()
    if spec == "hadamard":
        return SingleQubitBasis.hadamard()
    raise Pipeline_Exception(f"Unknown basis '{spec}'.")


class Protocol_Step(Pipeline_Step):
    """A CLOCC protocol step."""

    def check(self, num_parties, constraint):
        """Raise Constraint_Exception if the step is illegal under a constraint."""
        pass


class Dephase_And_Broadcast(Protocol_Step):
    """
    Measure one party's qubit and broadcast the outcome.

    The qubit is left in |k> for outcome k. The outcome reaches every party
    on the measuring party's side of the constraint.

    Parameters
    ----------
    party : int
        The measuring party.
    basis : SingleQubitBasis or str, optional
        The basis, ``"computational"``, ``"hadamard"`` or ``"eigen"`` (the
        eigenbasis of the party's state given the records it has heard).
    """

    def __init__(self, party, basis=None, config=None):
        label = getattr(basis, "label", basis) or "computational"
        super().__init__(f"Party {party} measures in the {label} basis", config)
        self.party = int(party)
        self.basis = basis if basis == "eigen" else _basis_from_spec(basis)

    def _bases(self, data):
        if self.basis != "eigen":
            return [self.basis] * len(data.branches)
        # the eigenbasis may only depend on records the party has heard
        groups = {}
        for branch in data.branches:
            key = branch.visible_records(self.party, data.constraint)
            reduced = partial_trace(branch.state, [self.party]).matrix
            groups[key] = groups.get(key, 0) + branch.probability * reduced
        bases = {key: SingleQubitBasis.eigenbasis(rho) for key, rho in groups.items()}
        return [
            bases[b.visible_records(self.party, data.constraint)]
            for b in data.branches
        ]

    def step(self, data):
        """Split every branch by outcome."""
        party = data.check_party(self.party)
        if data.holders[party] != party:
            raise Constraint_Exception(f"Party {party} no longer holds its qubit.")
        branches = []
        for branch, basis in zip(data.branches, self._bases(data)):
            readouts = [basis.readout(0), basis.readout(1)]
            for outcome in (0, 1):
                try:
                    state, p = apply_local_operation(
                        branch.state, (party,), readouts, postselect=outcome
                    )
                except Impossible_Branch_Exception:
                    continue
                branches.append(
                    Branch(
                        branch.probability * p,
                        state,
                        branch.records + ((party, outcome),),
                    )
                )
        data.branches = branches
        self.logger.debug("Party %d read out, %d branches", party, len(branches))
        data.record_step(self)
        return data


class Conditional_Local_Unitary(Protocol_Step):
    """
    Rotate a qubit depending on the last outcome broadcast by a party.

    Parameters
    ----------
    party : int
        The acting party.
    source : int
        The party whose outcome selects the unitary.
    unitaries : mapping of int to 2x2 array_like
        Outcome to unitary; missing outcomes leave the qubit alone.
    qubit : int, optional
        The rotated qubit, by default the party's own.
    """

    def __init__(self, party, source, unitaries, qubit=None, config=None):
        super().__init__(
            f"Party {party} rotates conditioned on party {source}", config
        )
        self.party = int(party)
        self.source = int(source)
        self.qubit = self.party if qubit is None else int(qubit)
        self.unitaries = {
            int(k): np.asarray(u, dtype=complex) for k, u in unitaries.items()
        }
        for unitary in self.unitaries.values():
            if unitary.shape != (2, 2):
                raise Constraint_Exception("Conditional operations act on one qubit.")
            if np.max(np.abs(unitary.conj().T @ unitary - np.eye(2))) > UNITARY_TOL:
                raise Constraint_Exception(
                    "Conditional operations must be single-qubit unitaries."
                )

    def check(self, num_parties, constraint):
        """The outcome must reach the acting party."""
        if not constraint.allows(self.source, self.party):
            raise Constraint_Exception(
                f"Party {self.party} cannot hear party {self.source} {constraint}."
            )

    def step(self, data):
        """Apply the selected unitary in every branch."""
        data.check_party(self.party)
        data.check_party(self.source)
        self.check(data.num_parties, data.constraint)
        if data.holders[data.check_party(self.qubit)] != self.party:
            raise Constraint_Exception(
                f"Party {self.party} does not hold qubit {self.qubit}."
            )
        for branch in data.branches:
            unitary = self.unitaries.get(branch.last_outcome(self.source))
            if unitary is not None:
                branch.state, _ = apply_local_operation(
                    branch.state, (self.qubit,), [unitary]
                )
        data.record_step(self)
        return data


class Send_Dephased(Protocol_Step):
    """Dephase a qubit in some basis and hand it to another party."""

    def __init__(self, party, destination, basis=None, config=None):
        super().__init__(
            f"Party {party} sends its dephased qubit to {destination}", config
        )
        self.party = int(party)
        self.destination = int(destination)
        self.basis = _basis_from_spec(basis)

    def check(self, num_parties, constraint):
        """The message must not cross the cut."""
        if not constraint.allows(self.party, self.destination):
            raise Constraint_Exception(
                f"Sending from {self.party} to {self.destination} crosses the cut "
                f"({constraint})."
            )

    def step(self, data):
        """Dephase in every branch and move the qubit."""
        party = data.check_party(self.party)
        data.check_party(self.destination)
        self.check(data.num_parties, data.constraint)
        readouts = [self.basis.readout(0), self.basis.readout(1)]
        for branch in data.branches:
            branch.state, _ = apply_local_operation(branch.state, (party,), readouts)
        data.holders[party] = self.destination
        data.record_step(self)
        return data


class Final_Collect(Protocol_Step):
    """
    Collect every qubit, dephased, at a destination.

    Under a constraint the destination collects its own side and the
    lowest-indexed party of the other side collects the rest.
    """

    def __init__(self, destination=0, config=None):
        super().__init__(f"Collect everything at party {destination}", config)
        self.destination = int(destination)

    def step(self, data):
        """Fix the collector of every side."""
        destination = data.check_party(self.destination)
        data.collectors = [
            destination if destination in side else side[0]
            for side in data.constraint.sides(data.num_parties)
        ]
        data.record_step(self)
        return data


# --------------------------------------------------------------------------
# protocols
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Work_Protocol:
    """An ordered list of protocol steps ending with :class:`Final_Collect`."""

    steps: tuple
    name: str = ""

    def validate(self, num_parties, constraint):
        """
        Check the protocol against a constraint.

        Raises
        ------
        Constraint_Exception
            If a step is not a CLOCC step, crosses the cut, or the protocol
            does not end with a collection.
        """
        if not self.steps or not isinstance(self.steps[-1], Final_Collect):
            raise Constraint_Exception("A protocol must end with Final_Collect.")
        for step in self.steps:
            if not isinstance(step, Protocol_Step):
                raise Constraint_Exception(f"{step!r} is not a CLOCC step.")
            step.check(num_parties, constraint)


@dataclass
class Work_Result:
    """Outcome of a protocol run."""

    work_bits: float
    final_classical_entropy_bits: float
    num_parties: int
    constraint: str = "unrestricted"
    sides: list = field(default_factory=list)
    transcript: list = field(default_factory=list)
    branches: list = field(default_factory=list)

    def as_dict(self):
        """Plain-data form without the conditional states."""
        return {
            "work_bits": self.work_bits,
            "final_classical_entropy_bits": self.final_classical_entropy_bits,
            "num_parties": self.num_parties,
            "constraint": self.constraint,
            "sides": self.sides,
            "transcript": self.transcript,
        }


def run_protocol(s, protocol, constraint=None, config=None):
    """
    Simulate a protocol and account for the work it extracts.

    Parameters
    ----------
    s : QuantumState
        Initial state, at most 10 qubits.
    protocol : Work_Protocol or sequence of Protocol_Step
        The protocol.
    constraint : Communication_Constraint, optional
        Unrestricted by default.
    config : Config, optional
        Passed to the pipeline data.

    Returns
    -------
    Work_Result
    """
    if not isinstance(protocol, Work_Protocol):
        protocol = Work_Protocol(tuple(protocol))
    constraint = constraint or Communication_Constraint.unrestricted()
    n = s.num_parties
    if n > MAX_PROTOCOL_PARTIES:
        raise Size_Limit_Exception(
            f"Protocol simulation refused for {n} parties "
            f"(limit {MAX_PROTOCOL_PARTIES})."
        )
    protocol.validate(n, constraint)

    data = Protocol_Data(s, constraint, config)
    Pipeline(list(protocol.steps)).run(data)

    probabilities = np.zeros(2**n)
    for branch in data.branches:
        diagonal, _ = _diagonal(branch.state)
        probabilities += branch.probability * diagonal

    sides = []
    for side, collector in zip(constraint.sides(n), data.collectors):
        qubits = [q for q in range(n) if data.holders[q] in side]
        entropy = shannon_entropy_bits(
            _marginal_distribution(probabilities, n, qubits)
        )
        sides.append(
            {
                "parties": side,
                "collector": collector,
                "qubits": qubits,
                "work_bits": len(qubits) - entropy,
            }
        )
    entropy = math.fsum(len(side["qubits"]) - side["work_bits"] for side in sides)
    work = n - entropy

    bound = n - entropy_bits(s)
    if work > bound + BOUND_TOL:
        raise Pipeline_Exception(
            f"Extracted work {work:.12g} exceeds the global bound {bound:.12g}."
        )
    lgr.debug("Protocol %s (%s): %.12g bits", protocol.name, constraint, work)
    return Work_Result(
        work_bits=work,
        final_classical_entropy_bits=entropy,
        num_parties=n,
        constraint=str(constraint),
        sides=sides,
        transcript=data.history,
        branches=data.branches,
    )


# --------------------------------------------------------------------------
# protocol families and basis search
# --------------------------------------------------------------------------


def _order(num_parties, measuring_party):
    others = [p for p in range(num_parties) if p != measuring_party]
    return [measuring_party] + others


def _basis_vectors(thetas, phis):
    """Stack of both basis vectors for every (theta, phi), shape (G, 2, 2)."""
    thetas = np.asarray(thetas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    c, s = np.cos(thetas), np.sin(thetas)
    phase = np.exp(1j * phis)
    b0 = np.stack([c + 0j, phase * s], axis=-1)
    b1 = np.stack([s + 0j, -phase * c], axis=-1)
    return np.stack([b0, b1], axis=1)


def _entropy_rows(probabilities):
    p = np.where(probabilities > EIGEN_CUTOFF, probabilities, 1.0)
    return -np.sum(np.where(probabilities > EIGEN_CUTOFF, p * np.log2(p), 0.0), axis=1)


class Collect_Family:
    """Dephase every qubit in the computational basis and collect."""

    name = "collect"

    def protocol(self, num_parties):
        """The family member as an explicit protocol."""
        return Work_Protocol((Final_Collect(0),), name=self.name)

    def best(self, s, search=None):
        """Work of the single family member."""
        probabilities, _ = _diagonal(s)
        work = s.num_parties - shannon_entropy_bits(probabilities)
        return work, {"family": self.name}


class Measure_Broadcast_Family:
    """
    One party measures in a parameterized basis and broadcasts.

    The other parties read their qubits in the computational basis in
    ascending order and broadcast too, except the last one, which dephases
    in the eigenbasis of its conditional state.
    """

    name = "measure_broadcast"

    def protocol(self, num_parties, measuring_party, basis):
        """The family member as an explicit protocol."""
        order = _order(num_parties, measuring_party)
        steps = [Dephase_And_Broadcast(measuring_party, basis)]
        steps += [Dephase_And_Broadcast(p) for p in order[1:-1]]
        steps += [Dephase_And_Broadcast(order[-1], "eigen"), Final_Collect(0)]
        return Work_Protocol(tuple(steps), name=self.name)

    def evaluate(self, s, measuring_party, thetas, phis):
        """
        Work for a batch of measuring bases.

        Parameters
        ----------
        s : QuantumState
            State of at least two parties.
        measuring_party : int
            The party that measures first.
        thetas, phis : array_like
            Basis angles of equal shape.

        Returns
        -------
        numpy.ndarray
            Work in bits for each (theta, phi).
        """
        n = s.num_parties
        if n < 2:
            raise Pipeline_Exception("The measuring party needs a partner.")
        rho = permute_parties(s, _order(n, measuring_party)).matrix
        dim = 2 ** (n - 1)
        rest = dim // 2
        tensor = rho.reshape(2, dim, 2, dim)
        vectors = _basis_vectors(np.ravel(thetas), np.ravel(phis))
        conditional = np.einsum(
            "gka,aibj,gkb->gkij", vectors.conj(), tensor, vectors, optimize=True
        )
        blocks = conditional.reshape(-1, 2, rest, 2, rest, 2)
        blocks = np.einsum("gkiaib->gkiab", blocks)
        blocks = (blocks + np.conj(np.swapaxes(blocks, -1, -2))) / 2
        eigenvalues = np.linalg.eigvalsh(blocks).reshape(len(vectors), -1)
        work = n - _entropy_rows(eigenvalues)
        return work.reshape(np.shape(thetas))

    def best(self, s, search=None):
        """Best work over measuring parties and bases."""
        if s.num_parties == 1:
            return 1.0 - entropy_bits(s), {"family": self.name}
        best = None
        for party in range(s.num_parties):
            optimum = optimize_basis(s, party, self, search)
            if best is None or optimum.work > best.work + TIE_TOL:
                best = optimum
        return best.work, {"family": self.name, **best.as_dict()}


FAMILIES = {
    Collect_Family.name: Collect_Family,
    Measure_Broadcast_Family.name: Measure_Broadcast_Family,
}
"""Protocol families by name."""


@dataclass(frozen=True)
class Basis_Search:
    """Grid-then-refine parameters of the basis search."""

    theta_points: int = 64
    phi_points: int = 32
    refine_rounds: int = 3
    refine_shrink: float = 8.0
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.theta_points < 2 or self.phi_points < 1:
            raise Pipeline_Exception("The basis grid needs at least 2 x 1 points.")
        if self.refine_shrink <= 1:
            raise Pipeline_Exception("The refinement window must shrink.")
        if self.tolerance <= 0:
            raise Pipeline_Exception("The convergence tolerance must be positive.")

    @classmethod
    def from_config(cls, config):
        """Take the search parameters from a configuration."""
        if config is None:
            return cls()
        return cls(
            theta_points=int(config.theta_points),
            phi_points=int(config.phi_points),
            refine_rounds=int(config.refine_rounds),
            refine_shrink=float(config.refine_shrink),
        )


@dataclass(frozen=True)
class Basis_Optimum:
    """Maximizing basis of a search."""

    basis: SingleQubitBasis
    theta: float
    phi: float
    work: float
    measuring_party: int
    converged: bool
    evaluations: int

    def as_dict(self):
        """Plain-data form."""
        return {
            "measuring_party": self.measuring_party,
            "theta": self.theta,
            "phi": self.phi,
            "basis": {
                "b0": [[z.real, z.imag] for z in self.basis.b0],
                "b1": [[z.real, z.imag] for z in self.basis.b1],
            },
            "work_bits": self.work,
            "converged": self.converged,
            "evaluations": self.evaluations,
        }


def _best_on_grid(family, s, party, thetas, phis, incumbent):
    grid_t, grid_p = np.meshgrid(thetas, phis, indexing="ij")
    values = family.evaluate(s, party, grid_t, grid_p).reshape(-1)
    thetas_flat = grid_t.reshape(-1)
    phis_flat = np.mod(grid_p.reshape(-1), 2 * math.pi)
    # ties within TIE_TOL go to the smallest (theta, phi)
    tied = np.flatnonzero(values >= values.max() - TIE_TOL)
    top = tied[np.lexsort((phis_flat[tied], thetas_flat[tied]))[0]]
    candidate = (float(values[top]), float(thetas_flat[top]), float(phis_flat[top]))
    if incumbent is None or candidate[0] > incumbent[0] + TIE_TOL:
        return candidate, values.size
    if candidate[0] >= incumbent[0] - TIE_TOL and candidate[1:] < incumbent[1:]:
        return candidate, values.size
    return incumbent, values.size


def optimize_basis(s, measuring_party=0, family=None, search=None):
    """
    Search the measuring party's basis that maximizes the family's work.

    A coarse grid over theta in [0, pi] and phi in [0, 2 pi) is followed by
    rounds of refinement on windows shrinking around the incumbent.

    Parameters
    ----------
    s : QuantumState
        The state.
    measuring_party : int
        The party that measures first.
    family : Measure_Broadcast_Family, optional
        The protocol family.
    search : Basis_Search, optional
        Grid and refinement parameters.

    Returns
    -------
    Basis_Optimum
        The best basis found; ``converged`` is False if the last refinement
        round still improved by more than ``search.tolerance``. Among equally
        good bases the one with the smallest (theta, phi) is reported.
    """
    family = family or Measure_Broadcast_Family()
    search = search or Basis_Search()
    if not 0 <= measuring_party < s.num_parties:
        raise Pipeline_Exception(
            f"Party {measuring_party} out of range for {s.num_parties} parties."
        )

    thetas = np.linspace(0.0, math.pi, search.theta_points)
    phis = np.linspace(0.0, 2 * math.pi, search.phi_points, endpoint=False)
    best, evaluations = _best_on_grid(family, s, measuring_party, thetas, phis, None)

    improvement = math.inf
    for round_ in range(1, search.refine_rounds + 1):
        width_t = math.pi / search.refine_shrink**round_
        width_p = 2 * math.pi / search.refine_shrink**round_
        _, theta, phi = best
        thetas = np.clip(
            np.linspace(theta - width_t / 2, theta + width_t / 2, search.theta_points),
            0.0,
            math.pi,
        )
        phis = np.mod(
            np.linspace(phi - width_p / 2, phi + width_p / 2, search.phi_points),
            2 * math.pi,
        )
        # the incumbent stays on the grid
        thetas = np.union1d(thetas, [theta])
        phis = np.union1d(phis, [phi])
        previous = best[0]
        best, count = _best_on_grid(family, s, measuring_party, thetas, phis, best)
        evaluations += count
        improvement = best[0] - previous

    converged = improvement <= search.tolerance
    work, theta, phi = best
    if not converged:
        lgr.warning(
            "Basis search for party %d did not converge (last gain %.3g).",
            measuring_party,
            improvement,
        )
    return Basis_Optimum(
        basis=SingleQubitBasis.angles(theta, phi),
        theta=theta,
        phi=phi,
        work=work,
        measuring_party=measuring_party,
        converged=converged,
        evaluations=evaluations,
    )


# --------------------------------------------------------------------------
# delta W
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Delta_W_Estimate:
    """Work gap between unrestricted and cut-restricted extraction."""

    unrestricted: float
    restricted: dict
    best_cut: Bipartition
    families: tuple

    @property
    def delta_w(self):
        """Unrestricted work minus the best restricted work over cuts."""
        return self.unrestricted - self.restricted[str(self.best_cut)]

    def as_dict(self):
        """Plain-data form."""
        return {
            "families": list(self.families),
            "unrestricted_work_bits": self.unrestricted,
            "restricted_work_bits": dict(self.restricted),
            "best_cut": str(self.best_cut),
            "delta_w": self.delta_w,
        }


def _resolve_families(families):
    resolved = []
    for family in families:
        if isinstance(family, str):
            if family not in FAMILIES:
                raise Pipeline_Exception(
                    f"Unknown protocol family '{family}'. "
                    f"Known families: {', '.join(FAMILIES)}."
                )
            family = FAMILIES[family]()
        resolved.append(family)
    return resolved


def best_family_work(s, families, search=None):
    """Largest work any of the families extracts from a state."""
    return max(family.best(s, search)[0] for family in families)


def delta_w_estimate(s, families=None, search=None):
    """
    Estimate the work gap over bipartite cuts.

    Each side of a cut runs the families on its own marginal; the gap is
    the unrestricted optimum minus the restricted one, minimized over cuts.
    The optima are over the supplied families only.

    Parameters
    ----------
    s : QuantumState
        At most 6 parties.
    families : sequence, optional
        Protocol families or their names; both built-in families by default.
    search : Basis_Search, optional
        Basis-search parameters.

    Returns
    -------
    Delta_W_Estimate
    """
    if families is None:
        families = list(FAMILIES)
    families = _resolve_families(families)
    if not families:
        raise Pipeline_Exception("delta W needs at least one protocol family.")
    n = s.num_parties
    if n > MAX_DELTA_W_PARTIES:
        raise Size_Limit_Exception(
            f"delta W refused for {n} parties (limit {MAX_DELTA_W_PARTIES})."
        )
    if n < 2:
        raise Pipeline_Exception("delta W needs at least two parties.")

    unrestricted = best_family_work(s, families, search)
    restricted = {}
    best_cut = None
    for cut in Bipartition.all_cuts(n):
        work = math.fsum(
            best_family_work(partial_trace(s, sorted(side)), families, search)
            for side in (cut.left, cut.right)
        )
        restricted[str(cut)] = work
        if best_cut is None or work > restricted[str(best_cut)] + TIE_TOL:
            best_cut = cut
        lgr.debug("Cut %s: %.12g bits", cut, work)
    return Delta_W_Estimate(
        unrestricted=unrestricted,
        restricted=restricted,
        best_cut=best_cut,
        families=tuple(family.name for family in families),
    )
