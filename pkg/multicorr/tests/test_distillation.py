"""Tests for W-state filtering."""

import math

import numpy as np
import pytest

from multicorr.distillation import (
    FilterInstrument,
    asymptotic_forms,
    closed_forms,
    distill,
    epsilon_of_fidelity,
    mixture_bounds,
    q_of_fidelity,
    success_lower_bound,
)
from multicorr.helper.report import figure_table
from multicorr.pipeline_step import Domain_Exception
from multicorr.qstate import make_named_state, trace_distance

EPSILONS = np.linspace(0.05, 0.95, 20)
EPSILON_GRID = np.linspace(0.05, 0.95, 91)


def test_filter_instrument_is_complete():
    """Test that E_S and E_F form a complete instrument."""
    instrument = FilterInstrument(0.3)
    total = sum(k.conj().T @ k for k in instrument.kraus)
    np.testing.assert_allclose(total, np.eye(2), atol=1e-15)
    with pytest.raises(Domain_Exception):
        FilterInstrument(0.0)
    with pytest.raises(Domain_Exception):
        FilterInstrument(1.2)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_dense_simulation_matches_closed_forms(n):
    """Test the Kraus simulation against q and F in closed form."""
    dense = make_named_state("w_mixture", n).to_dense()
    for eps in EPSILONS:
        result = distill(dense, float(eps))
        q, fidelity = closed_forms(n, float(eps))
        assert result.success_probability == pytest.approx(q, abs=1e-12)
        assert result.fidelity == pytest.approx(fidelity, abs=1e-12)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_closed_forms_are_monotone(n):
    """Test that a stronger filter costs fidelity and gains success."""
    q, fidelity = np.array([closed_forms(n, float(eps)) for eps in EPSILON_GRID]).T
    assert np.all(np.diff(fidelity) < 0)
    assert np.all(np.diff(q) > 0)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_filtered_state_is_w_mixture(n):
    """Test that the filtered state is the W/Wbar mixture at F(eps)."""
    dense = make_named_state("w_mixture", n).to_dense()
    for eps in (0.1, 0.5, 0.9):
        result = distill(dense, eps)
        _, fidelity = closed_forms(n, eps)
        target = make_named_state("w_mixture", n, F=fidelity).to_dense()
        assert trace_distance(result.post_state, target) < 1e-12


@pytest.mark.parametrize("n", [3, 9, 49])
def test_structured_filter_matches_closed_forms(n):
    """Test the sparse filter path, which scales to many parties."""
    s = make_named_state("w_mixture", n)
    result = distill(s, 0.4)
    q, fidelity = closed_forms(n, 0.4)
    assert result.post_state.is_structured
    assert result.success_probability == pytest.approx(q, abs=1e-12)
    assert result.fidelity == pytest.approx(fidelity, abs=1e-12)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_q_of_fidelity_inverts_closed_forms(n):
    """Test that q(F) recovers the success probability of eps."""
    for eps in EPSILONS:
        q, fidelity = closed_forms(n, float(eps))
        assert q_of_fidelity(n, fidelity) == pytest.approx(q, abs=1e-12)
        # F only resolves eps^(n-2) to one unit in the last place near 1
        resolution = 2 * eps * np.spacing(1.0) / ((n - 2) * eps ** (n - 2))
        assert epsilon_of_fidelity(n, fidelity) == pytest.approx(
            eps, abs=max(1e-12, resolution)
        )


def test_fidelity_does_not_resolve_small_epsilon():
    """Test that nearby filter strengths share one fidelity at seven parties."""
    fidelities = {closed_forms(7, 0.05 + k * 1e-13)[1] for k in range(8)}
    assert len(fidelities) < 8


def test_q_of_fidelity_value():
    """Test q at n = 3 and F = 0.9."""
    assert q_of_fidelity(3, 0.9) == pytest.approx(1 / 16.2, abs=1e-12)
    assert q_of_fidelity(3, 0.9) == pytest.approx(0.0617, abs=1e-4)


def test_fidelity_domain():
    """Test that F outside (1/2, 1) and small n are rejected."""
    for fidelity in (0.5, 1.0, 0.2):
        with pytest.raises(Domain_Exception):
            q_of_fidelity(3, fidelity)
    with pytest.raises(Domain_Exception):
        closed_forms(2, 0.5)


@pytest.mark.parametrize("n", [100, 499, 2000])
def test_asymptotic_forms(n):
    """Test the large-n approximations at eps = 1 - 1/sqrt(n)."""
    q, fidelity = closed_forms(n, 1 - 1 / math.sqrt(n))
    q_approx, fidelity_approx = asymptotic_forms(n)
    assert q_approx == pytest.approx(q, rel=0.02)
    assert fidelity_approx == pytest.approx(fidelity, rel=0.02)


def test_success_exceeds_lower_bound():
    """Test q >= p^2 (1 - F) / ((1 - p) F) with p = 1/2 on the figure grid."""
    table = figure_table("fig2", [3, 5, 7, 9, 49, 499], points=101)
    bound = [success_lower_bound(0.5, f) for f in table["F"]]
    assert (table["q"].to_numpy() >= np.array(bound) - 1e-12).all()


def test_success_lower_bound_domain():
    """Test the degenerate and invalid arguments of the bound."""
    with pytest.raises(Domain_Exception, match="division by zero"):
        success_lower_bound(1.0, 0.9)
    with pytest.raises(Domain_Exception):
        success_lower_bound(0.5, 1.0)


@pytest.mark.parametrize("p", [0.2, 0.5, 0.9])
def test_mixture_bounds(p):
    """Test the guarantees for p|W><W| + (1 - p) Wbar on three parties."""
    s = make_named_state("w_mixture", 3, F=p)
    for eps in (0.1, 0.5, 0.9):
        q_min, fidelity_min = mixture_bounds(p, eps)
        result = distill(s, eps)
        assert result.success_probability >= q_min - 1e-12
        assert result.fidelity >= fidelity_min - 1e-12


def test_single_party_has_no_fidelity():
    """Test that a one-party input reports no fidelity."""
    result = distill(make_named_state("maximally_mixed", 1), 0.5)
    assert result.fidelity is None
    assert result.success_probability == pytest.approx(0.75)
