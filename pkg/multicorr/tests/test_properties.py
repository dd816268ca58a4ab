"""Property-based tests over random states, observables and operations."""

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from multicorr.covariance import covariance
from multicorr.cuts import degree_of_correlations, split_party_with_cnot
from multicorr.distillation import closed_forms, distill
from multicorr.pipeline_step import Impossible_Branch_Exception
from multicorr.qstate import (
    apply_instrument,
    apply_local_operation,
    make_named_state,
    random_density_matrix,
    random_unitary,
    tensor_product,
)

ABS_TOLERANCE = 1e-9

seeds = st.integers(min_value=0, max_value=2**32 - 1)
fidelities = st.floats(min_value=0.0, max_value=1.0)
named = st.sampled_from(
    [
        ("ghz_diag", 3),
        ("ghz_diag", 4),
        ("parity_even", 4),
        ("w_mixture", 3),
        ("example2_tripartite", 3),
        ("bell_diag_example", 2),
    ]
)


def _random_hermitian(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return (a + a.conj().T) / 2


def _random_local_unitaries(s, seed):
    for party in range(s.num_parties):
        s, _ = apply_local_operation(s, (party,), [random_unitary(2, seed + party)])
    return s


@settings(max_examples=30, deadline=None)
@given(
    n=st.sampled_from([3, 4, 5]),
    fidelity=fidelities,
    letters=st.lists(st.sampled_from("XYZ"), min_size=5, max_size=5),
)
def test_structured_and_dense_covariance_agree(n, fidelity, letters):
    """Test the sparse and the dense covariance on random Pauli strings."""
    s = make_named_state("w_mixture", n, F=fidelity)
    pauli = "".join(letters[:n])
    assert covariance(s, pauli) == pytest.approx(
        covariance(s.to_dense(), pauli), abs=ABS_TOLERANCE
    )


@settings(max_examples=30, deadline=None)
@given(
    seed=seeds,
    a=st.floats(min_value=-3, max_value=3),
    b=st.floats(min_value=-3, max_value=3),
    shift=st.floats(min_value=-3, max_value=3),
)
def test_covariance_is_multilinear(seed, a, b, shift):
    """Test linearity in one observable and invariance under shifts."""
    rng = np.random.default_rng(seed)
    s = random_density_matrix(3, rng=rng)
    first, second, rest = (
        _random_hermitian(rng),
        _random_hermitian(rng),
        [_random_hermitian(rng) for _ in range(2)],
    )
    combined = covariance(s, [a * first + b * second, *rest])
    separate = a * covariance(s, [first, *rest]) + b * covariance(s, [second, *rest])
    assert combined == pytest.approx(separate, abs=ABS_TOLERANCE)
    shifted = covariance(s, [first + shift * np.eye(2), *rest])
    assert shifted == pytest.approx(covariance(s, [first, *rest]), abs=ABS_TOLERANCE)


@settings(max_examples=20, deadline=None)
@given(state=named, seed=seeds)
def test_degree_is_invariant_under_local_unitaries(state, seed):
    """Test that local unitaries leave the degree of correlations unchanged."""
    s = make_named_state(*state)
    rotated = _random_local_unitaries(s, seed)
    assert degree_of_correlations(rotated) == degree_of_correlations(s)


@settings(max_examples=20, deadline=None)
@given(state=named, seed=seeds)
def test_degree_ignores_added_parties(state, seed):
    """Test that a product party does not change the degree."""
    s = make_named_state(*state)
    extra = random_density_matrix(1, rng=seed)
    assert degree_of_correlations(tensor_product(s, extra)) == (
        degree_of_correlations(s)
    )


@settings(max_examples=20, deadline=None)
@given(state=named, data=st.data())
def test_splitting_raises_degree_by_at_most_one(state, data):
    """Test the degree after copying one party onto a new one."""
    s = make_named_state(*state)
    party = data.draw(st.integers(min_value=0, max_value=s.num_parties - 1))
    split = split_party_with_cnot(s, party)
    assert degree_of_correlations(split) <= degree_of_correlations(s) + 1


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_local_filters_do_not_raise_degree(seed):
    """Test postselected local filters against the degree of correlations."""
    rng = np.random.default_rng(seed)
    s = tensor_product(
        random_density_matrix(2, rng=rng), random_density_matrix(2, rng=rng)
    )
    assume(degree_of_correlations(s) == 2)
    filters = []
    for _ in range(4):
        e = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        filters.append([e / (np.linalg.norm(e, 2) * 1.01)])
    try:
        filtered, _ = apply_instrument(s, filters, [0] * 4)
    except Impossible_Branch_Exception:
        assume(False)
    assert degree_of_correlations(filtered) <= 2


@settings(max_examples=20, deadline=None)
@given(
    n=st.sampled_from([3, 5]),
    epsilon=st.floats(min_value=0.01, max_value=0.99),
)
def test_filtering_matches_closed_forms(n, epsilon):
    """Test the dense filter against q and F in closed form for random eps."""
    result = distill(make_named_state("w_mixture", n).to_dense(), epsilon)
    q, fidelity = closed_forms(n, epsilon)
    assert result.success_probability == pytest.approx(q, abs=1e-12)
    assert result.fidelity == pytest.approx(fidelity, abs=1e-12)
