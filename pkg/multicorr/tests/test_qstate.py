"""Tests for states, observables and the basic state operations."""

import itertools
import logging
import math

import numpy as np
import pytest

from multicorr.pipeline_step import (
    Domain_Exception,
    Impossible_Branch_Exception,
    Pipeline_Exception,
    Size_Limit_Exception,
)
from multicorr.qstate import (
    NAMED_STATES,
    PAULI,
    LocalObservableList,
    QuantumState,
    SingleQubitBasis,
    SingleQubitObservable,
    SparsePureState,
    apply_instrument,
    apply_local_operation,
    dephase_site,
    entropy_bits,
    expectation_value,
    fidelity_with_pure,
    make_named_state,
    partial_trace,
    permute_parties,
    random_density_matrix,
    random_unitary,
    spectrum,
    tensor_product,
    trace_distance,
)

CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def test_sparse_state_rejects_bad_input():
    """Test bitstring and normalization checks."""
    with pytest.raises(Pipeline_Exception, match="Invalid bitstring"):
        SparsePureState(2, {"012": 1.0})
    with pytest.raises(Domain_Exception, match="not normalized"):
        SparsePureState(2, {"01": 1.0, "10": 1.0})


def test_sparse_state_from_vector():
    """Test conversion from a dense vector."""
    psi = SparsePureState.from_vector([0, 1 / math.sqrt(2), 1 / math.sqrt(2), 0])
    assert psi.num_parties == 2
    assert set(psi.amplitudes) == {"01", "10"}
    np.testing.assert_allclose(psi.to_vector(), [0, 0.5**0.5, 0.5**0.5, 0])


def test_from_matrix_validation(caplog):
    """Test trace, positivity and Hermiticity checks of dense states."""
    with pytest.raises(Domain_Exception, match="trace"):
        QuantumState.from_matrix(np.eye(2))
    with pytest.raises(Domain_Exception, match="negative eigenvalue"):
        QuantumState.from_matrix(np.diag([1.5, -0.5]))
    with pytest.raises(Pipeline_Exception, match="2\\^n"):
        QuantumState.from_matrix(np.eye(3) / 3)

    with caplog.at_level(logging.WARNING, logger="multicorr.qstate"):
        s = QuantumState.from_matrix([[0.5, 0.1], [0.0, 0.5]])
    assert "symmetrization" in caplog.text
    np.testing.assert_allclose(s.matrix, [[0.5, 0.05], [0.05, 0.5]])


def test_dense_size_limit():
    """Test that dense matrices above 12 qubits are refused."""
    s = make_named_state("zero", 13)
    with pytest.raises(Size_Limit_Exception):
        s.matrix


@pytest.mark.parametrize(
    ("name", "n"),
    [
        ("ghz_diag", 4),
        ("parity_even", 4),
        ("w", 3),
        ("wbar", 4),
        ("w_mixture", 5),
        ("w_split_mixture", 3),
        ("example2_tripartite", 3),
        ("bell", 2),
        ("bell_diag_example", 2),
        ("zero", 2),
        ("maximally_mixed", 3),
    ],
)
def test_named_states_are_states(name, n):
    """Test that every named family yields a unit-trace positive state."""
    assert name in NAMED_STATES
    s = make_named_state(name, n)
    assert s.is_structured
    rho = s.matrix
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(rho).min() > -1e-12


def test_named_state_errors():
    """Test unknown names, missing n and unknown parameters."""
    with pytest.raises(Pipeline_Exception, match="Unknown state"):
        make_named_state("graph", 3)
    with pytest.raises(Pipeline_Exception, match="needs a party count"):
        make_named_state("w_mixture")
    with pytest.raises(Pipeline_Exception, match="Unknown parameters"):
        make_named_state("w", 3, F=0.2)
    with pytest.raises(Pipeline_Exception, match="Bell variant"):
        make_named_state("bell", variant="chi")
    with pytest.raises(Domain_Exception):
        make_named_state("w_mixture", 3, F=1.5)


def test_single_party_w_family():
    """Test that the W family is defined from one party on."""
    assert make_named_state("w", 1).terms[0][1].amplitudes == {"1": 1.0}
    assert make_named_state("wbar", 1).terms[0][1].amplitudes == {"0": 1.0}
    mixture = make_named_state("w_mixture", 1, F=0.25).to_dense()
    np.testing.assert_allclose(mixture.matrix, np.diag([0.75, 0.25]), atol=1e-12)
    split = make_named_state("w_split_mixture", 1).to_dense()
    np.testing.assert_allclose(
        np.diag(split.matrix).real, [0.5, 0.0, 0.0, 0.5], atol=1e-12
    )
    with pytest.raises(Pipeline_Exception, match="needs n >= 2"):
        make_named_state("parity_even", 1)
    with pytest.raises(Pipeline_Exception, match="needs n >= 2"):
        make_named_state("ghz_diag", 1)


def test_named_state_labels():
    """Test that labels echo name and parameters."""
    assert make_named_state("w_mixture", 3, F=0.25).label == "w_mixture:F=0.25"
    assert make_named_state("ghz_diag", 3).label == "ghz_diag"


def test_structured_and_dense_expectations_agree():
    """Test the sparse matrix-element path against the dense one."""
    rng = np.random.default_rng(1)
    for name, n in [("w_mixture", 4), ("parity_even", 3), ("example2_tripartite", 3)]:
        s = make_named_state(name, n)
        dense = s.to_dense()
        for _ in range(5):
            letters = "".join(rng.choice(list("IXYZ"), size=n))
            obs = LocalObservableList.from_pauli_string(letters)
            assert expectation_value(s, obs) == pytest.approx(
                expectation_value(dense, obs), abs=1e-12
            )


def test_observables():
    """Test observable construction and validation."""
    z = SingleQubitObservable.sigma_z()
    assert z.label == "Z"
    np.testing.assert_array_equal(z.matrix, PAULI["Z"])
    assert z.centered(0.5).label == "Z-<Z>"
    with pytest.raises(Domain_Exception):
        SingleQubitObservable([[0, 1], [0, 0]])
    with pytest.raises(Pipeline_Exception):
        SingleQubitObservable.from_letter("Q")
    assert LocalObservableList.from_pauli_string("XYZ").label == "XYZ"


def test_bases():
    """Test basis construction, readout operators and validation."""
    h = SingleQubitBasis.hadamard()
    np.testing.assert_allclose(h.projectors[0], np.full((2, 2), 0.5))
    np.testing.assert_allclose(h.readout(1), [[0, 0], [0.5**0.5, -(0.5**0.5)]])
    b = SingleQubitBasis.angles(math.acos(math.sqrt(1 / 3)), 0.0)
    assert abs(b.b0[0]) ** 2 == pytest.approx(1 / 3)
    assert abs(b.b0[1]) ** 2 == pytest.approx(2 / 3)
    eig = SingleQubitBasis.eigenbasis(np.diag([0.2, 0.8]))
    assert abs(eig.b0[1]) == pytest.approx(1.0)
    with pytest.raises(Domain_Exception):
        SingleQubitBasis([1, 0], [1, 0])


def test_tensor_product_and_partial_trace():
    """Test that tracing out one factor recovers the other."""
    bell = make_named_state("bell", 2)
    zero = make_named_state("zero", 1)
    s = tensor_product(bell, zero)
    assert s.is_structured
    assert s.num_parties == 3
    np.testing.assert_allclose(partial_trace(s, [0, 1]).matrix, bell.matrix)
    np.testing.assert_allclose(partial_trace(s, [2]).matrix, zero.matrix)
    np.testing.assert_allclose(partial_trace(bell, [1]).matrix, np.eye(2) / 2)

    dense = tensor_product(bell.to_dense(), zero)
    assert not dense.is_structured
    np.testing.assert_allclose(dense.matrix, s.matrix)


def test_permute_parties():
    """Test party reordering for both representations."""
    s = tensor_product(make_named_state("zero", 1), make_named_state("w", 2))
    moved = permute_parties(s, [1, 2, 0])
    assert set(moved.terms[0][1].amplitudes) == {"100", "010"}
    dense = permute_parties(s.to_dense(), [1, 2, 0])
    np.testing.assert_allclose(dense.matrix, moved.matrix, atol=1e-12)
    with pytest.raises(Pipeline_Exception):
        permute_parties(s, [0, 0, 1])


def test_apply_instrument_postselects():
    """Test branch probabilities and impossible branches."""
    eps = 0.25
    kraus = [np.diag([1, eps**0.5]), np.diag([0, (1 - eps) ** 0.5])]
    w = make_named_state("w", 3)
    state, p = apply_instrument(w, [kraus] * 3, [0, 0, 0])
    assert p == pytest.approx(eps)
    assert fidelity_with_pure(state, w.terms[0][1]) == pytest.approx(1.0)

    zero = make_named_state("zero", 1)
    with pytest.raises(Impossible_Branch_Exception):
        apply_instrument(zero, [kraus], [1])
    with pytest.raises(Domain_Exception):
        apply_instrument(zero, [[np.eye(2), np.eye(2)]], [0])


def test_apply_local_operation_on_two_qubits():
    """Test a CNOT acting on two qubits of one party."""
    s = QuantumState.pure(SparsePureState(2, {"10": 1.0}))
    out, p = apply_local_operation(s, (0, 1), [CNOT])
    assert p == pytest.approx(1.0)
    assert dict(out.terms[0][1].amplitudes) == {"11": 1.0}
    dense, _ = apply_local_operation(s.to_dense(), (0, 1), [CNOT])
    np.testing.assert_allclose(dense.matrix, out.matrix)
    with pytest.raises(Pipeline_Exception, match="distinct"):
        apply_local_operation(s, (0, 0), [CNOT])


def test_dephase_site_and_entropy():
    """Test dephasing a Bell pair in the computational basis."""
    bell = make_named_state("bell", 2)
    assert entropy_bits(bell) == pytest.approx(0.0, abs=1e-12)
    dephased = dephase_site(bell, 0, SingleQubitBasis.computational())
    assert entropy_bits(dephased) == pytest.approx(1.0)
    assert entropy_bits(make_named_state("maximally_mixed", 3)) == pytest.approx(3.0)


@pytest.mark.parametrize(
    "basis",
    [
        SingleQubitBasis.computational(),
        SingleQubitBasis.hadamard(),
        SingleQubitBasis.angles(0.7, 1.1),
    ],
)
def test_dephasing_is_idempotent_and_raises_entropy(basis):
    """Test dephasing twice against once, and the entropy it adds."""
    states = [
        make_named_state("w_mixture", 3, F=0.3).to_dense(),
        make_named_state("example2_tripartite", 3).to_dense(),
        random_density_matrix(3, rng=4),
    ]
    for s in states:
        for party in range(3):
            once = dephase_site(s, party, basis)
            twice = dephase_site(once, party, basis)
            assert trace_distance(once, twice) < 1e-12
            assert entropy_bits(once) >= entropy_bits(s) - 1e-12


def test_complete_instrument_preserves_trace():
    """Test that the branches of a complete instrument add up to the channel."""
    eps = 0.3
    kraus = [np.diag([1, eps**0.5]), np.diag([0, (1 - eps) ** 0.5])]
    s = random_density_matrix(3, rng=8)
    total = 0.0
    mixture = np.zeros((8, 8), dtype=complex)
    for branch in itertools.product(range(2), repeat=3):
        state, p = apply_instrument(s, [kraus] * 3, branch)
        total += p
        mixture += p * state.matrix
    assert total == pytest.approx(1.0, abs=1e-12)

    channel = s
    for party in range(3):
        channel, p = apply_local_operation(channel, (party,), kraus)
        assert p == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(mixture, channel.matrix, atol=1e-12)


def test_spectrum_of_w_mixture():
    """Test the structured spectrum against the dense one."""
    s = make_named_state("w_mixture", 3, F=0.3)
    top = np.sort(spectrum(s))[-2:]
    np.testing.assert_allclose(top, [0.3, 0.7], atol=1e-12)
    np.testing.assert_allclose(np.sort(spectrum(s.to_dense()))[-2:], [0.3, 0.7])


def test_fidelity_and_trace_distance():
    """Test fidelity with |W> and the trace distance."""
    s = make_named_state("w_mixture", 3, F=0.8)
    w = make_named_state("w", 3).terms[0][1]
    assert fidelity_with_pure(s, w) == pytest.approx(0.8)
    assert fidelity_with_pure(s.to_dense(), w) == pytest.approx(0.8)
    zero = make_named_state("zero", 1)
    mixed = make_named_state("maximally_mixed", 1)
    assert trace_distance(zero, mixed) == pytest.approx(0.5)


def test_random_helpers():
    """Test the random unitary and density matrix helpers."""
    u = random_unitary(4, rng=3)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-12)
    rho = random_density_matrix(2, rank=1, rng=3)
    assert entropy_bits(rho) == pytest.approx(0.0, abs=1e-9)
