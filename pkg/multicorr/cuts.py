"""Product tests across bipartite cuts, degree of correlations and factorization.

Every function works on parties. By default party ``i`` is qubit ``i``; a
``groups`` argument lets one party hold several qubits, e.g. a party that has
attached an ancilla it has not sent away yet.
"""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from multicorr.pipeline_step import Pipeline_Exception, Size_Limit_Exception
from multicorr.qstate import (
    QuantumState,
    apply_local_operation,
    make_named_state,
    partial_trace,
    permute_parties,
    tensor_product,
    trace_distance,
)

lgr = logging.getLogger(__name__)

PRODUCT_TOL = 1e-9
MAX_ANALYSIS_PARTIES = 10

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

_ZERO = QuantumState(1, matrix=np.array([[1, 0], [0, 0]], dtype=complex))


@dataclass(frozen=True)
class Bipartition:
    """
    A cut of the parties into ``left`` and its complement.

    The canonical form stores the side that contains party 0 as ``left``.
    """

    num_parties: int
    left: frozenset

    def __post_init__(self):
        left = frozenset(int(p) for p in self.left)
        n = int(self.num_parties)
        if not left or len(left) >= n or not left <= set(range(n)):
            raise Pipeline_Exception(
                f"{sorted(left)} is not a nonempty proper subset of {n} parties."
            )
        if 0 not in left:
            left = frozenset(range(n)) - left
        object.__setattr__(self, "num_parties", n)
        object.__setattr__(self, "left", left)

    @property
    def right(self):
        """Parties on the other side of the cut."""
        return frozenset(range(self.num_parties)) - self.left

    @classmethod
    def all_cuts(cls, num_parties):
        """All 2^(n-1) - 1 cuts, by size of the left side then lexicographically."""
        others = range(1, num_parties)
        return [
            cls(num_parties, frozenset((0,) + rest))
            for size in range(num_parties - 1)
            for rest in itertools.combinations(others, size)
        ]

    def side_of(self, party):
        """The side containing ``party``."""
        return self.left if party in self.left else self.right

    def __str__(self):
        def fmt(side):
            return "{" + ",".join(str(p) for p in sorted(side)) + "}"

        return f"{fmt(self.left)}|{fmt(self.right)}"


@dataclass(frozen=True)
class Factorization:
    """Finest tensor factorization, largest factor first."""

    num_parties: int
    factors: tuple

    @property
    def sizes(self):
        """Factor sizes in parties."""
        return [len(parties) for parties, _ in self.factors]

    @property
    def degree(self):
        """Size of the largest factor."""
        return max(self.sizes)

    def partition(self):
        """The factor subsets as sorted tuples."""
        return [tuple(sorted(parties)) for parties, _ in self.factors]


def _resolve_groups(s, groups):
    if groups is None:
        return tuple((q,) for q in range(s.num_parties))
    groups = tuple(tuple(int(q) for q in group) for group in groups)
    flat = sorted(q for group in groups for q in group)
    if flat != list(range(s.num_parties)) or any(not g for g in groups):
        raise Pipeline_Exception(
            f"Party groups {groups} do not partition {s.num_parties} qubits."
        )
    return groups


def _qubits(groups, parties):
    return sorted(q for p in parties for q in groups[p])


def _marginal(s, groups, parties):
    """Reduced state of some parties together with renumbered groups."""
    parties = sorted(parties)
    qubits = _qubits(groups, parties)
    position = {q: i for i, q in enumerate(qubits)}
    reduced = partial_trace(s, qubits)
    return reduced, tuple(tuple(position[q] for q in groups[p]) for p in parties)


def _product_distance(s, groups, left):
    """Trace distance between a state and the product of its two marginals."""
    right = [p for p in range(len(groups)) if p not in left]
    left_qubits = _qubits(groups, left)
    right_qubits = _qubits(groups, right)
    product = tensor_product(
        partial_trace(s, left_qubits), partial_trace(s, right_qubits)
    )
    # undo the left-then-right ordering of the product
    position = {q: i for i, q in enumerate(left_qubits + right_qubits)}
    product = permute_parties(product, [position[q] for q in range(s.num_parties)])
    return trace_distance(s, product)


def is_product_across_cut(s, cut, tol=PRODUCT_TOL, groups=None):
    """
    Test whether a state equals the tensor product of its marginals on a cut.

    Parameters
    ----------
    s : QuantumState
        The state.
    cut : Bipartition
        The cut, in party indices.
    tol : float
        Trace-distance tolerance.
    groups : sequence of sequences of int, optional
        Qubits held by each party.
    """
    groups = _resolve_groups(s, groups)
    if cut.num_parties != len(groups):
        raise Pipeline_Exception(
            f"Cut over {cut.num_parties} parties used on {len(groups)} parties."
        )
    return _product_distance(s, groups, sorted(cut.left)) <= tol


def has_genuine_correlations(s, tol=PRODUCT_TOL, groups=None):
    """True iff the state is non-product across every bipartite cut."""
    groups = _resolve_groups(s, groups)
    if len(groups) < 2:
        raise Pipeline_Exception("Genuine correlations need at least two parties.")
    for cut in Bipartition.all_cuts(len(groups)):
        if is_product_across_cut(s, cut, tol, groups):
            lgr.debug("Product across %s", cut)
            return False
    return True


def _check_size(num_parties):
    if num_parties > MAX_ANALYSIS_PARTIES:
        raise Size_Limit_Exception(
            f"Cut analysis refused for {num_parties} parties "
            f"(limit {MAX_ANALYSIS_PARTIES})."
        )


def degree_of_correlations(s, tol=PRODUCT_TOL, groups=None):
    """
    Largest m such that some m-party marginal has genuine m-partite correlations.

    Subsets are enumerated from the largest size down; the first marginal
    with genuine correlations ends the search. Returns 1 if no marginal of two
    or more parties has genuine correlations.
    """
    groups = _resolve_groups(s, groups)
    num = len(groups)
    _check_size(num)
    for size in range(num, 1, -1):
        for parties in itertools.combinations(range(num), size):
            reduced, sub_groups = _marginal(s, groups, parties)
            if has_genuine_correlations(reduced, tol, sub_groups):
                lgr.debug("Genuine %d-party correlations on %s", size, parties)
                return size
    return 1


def factorize(s, tol=PRODUCT_TOL, groups=None):
    """
    Split a state into its finest tensor factors.

    Minimal subsets that are product with the rest are peeled off one at a
    time; subsets are scanned by increasing size, lexicographically.
    """
    groups = _resolve_groups(s, groups)
    num = len(groups)
    _check_size(num)

    remaining = list(range(num))
    factors = []
    while remaining:
        current, current_groups = _marginal(s, groups, remaining)
        found = None
        for size in range(1, len(remaining)):
            for local in itertools.combinations(range(len(remaining)), size):
                if _product_distance(current, current_groups, list(local)) <= tol:
                    found = [remaining[i] for i in local]
                    break
            if found:
                break
        if found is None:
            found = list(remaining)
        factor, _ = _marginal(s, groups, found)
        factors.append((frozenset(found), factor))
        remaining = [p for p in remaining if p not in found]

    factors.sort(key=lambda item: (-len(item[0]), min(item[0])))
    return Factorization(num, tuple(factors))


def _separable_distance(s, groups):
    """Trace distance to the product of all single-party marginals."""
    order = [q for party in range(len(groups)) for q in sorted(groups[party])]
    product = None
    for party in range(len(groups)):
        factor = partial_trace(s, _qubits(groups, [party]))
        product = factor if product is None else tensor_product(product, factor)
    position = {q: i for i, q in enumerate(order)}
    product = permute_parties(product, [position[q] for q in range(s.num_parties)])
    return trace_distance(s, product)


def marginal_summary(s, tol=PRODUCT_TOL, groups=None):
    """
    Describe every proper marginal of two or more parties.

    Parameters
    ----------
    s : QuantumState
        The state.
    tol : float
        Trace-distance tolerance.
    groups : sequence of sequences of int, optional
        Qubits held by each party.

    Returns
    -------
    list of dict
        One entry per subset, by increasing size and lexicographically, with
        ``parties``, ``product`` (the marginal equals the product of its
        single-party marginals) and ``maximally_mixed``.
    """
    groups = _resolve_groups(s, groups)
    num = len(groups)
    _check_size(num)
    rows = []
    for size in range(2, num):
        for parties in itertools.combinations(range(num), size):
            reduced, sub_groups = _marginal(s, groups, parties)
            dim = 2**reduced.num_parties
            mixed = QuantumState(
                reduced.num_parties, matrix=np.eye(dim, dtype=complex) / dim
            )
            rows.append(
                {
                    "parties": list(parties),
                    "product": bool(_separable_distance(reduced, sub_groups) <= tol),
                    "maximally_mixed": bool(trace_distance(reduced, mixed) <= tol),
                }
            )
    return rows


def split_party_with_cnot(s, party):
    """
    Split a party in two with a CNOT onto a fresh ancilla.

    The ancilla starts in |0>, is the CNOT target, and becomes the new last
    party.
    """
    n = s.num_parties
    if not 0 <= party < n:
        raise Pipeline_Exception(f"Party {party} out of range for {n} parties.")
    ancilla = make_named_state("zero", 1) if s.is_structured else _ZERO
    state, _ = apply_local_operation(tensor_product(s, ancilla), (party, n), [CNOT])
    if s.label:
        state.label = f"{s.label}+split({party})"
    return state
