"""Local filtering of W-type mixtures with unanimous postselection.

Every party applies the instrument {E_S, E_F} with
E_S = |0><0| + sqrt(eps)|1><1| and E_F = sqrt(1 - eps)|1><1|, and the run
is kept only if all parties obtain S. A basis string with m ones is scaled
by eps^(m/2), so components with fewer excitations survive more often.
"""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import logging
import math
from dataclasses import dataclass

import numpy as np

from multicorr.pipeline_step import Domain_Exception, Impossible_Branch_Exception
from multicorr.qstate import (
    MIN_BRANCH_PROBABILITY,
    QuantumState,
    SparsePureState,
    apply_instrument,
    fidelity_with_pure,
    make_named_state,
)

lgr = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterInstrument:
    """The per-party instrument {E_S, E_F} of strength epsilon."""

    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon <= 1.0:
            raise Domain_Exception(f"epsilon = {self.epsilon} lies outside (0, 1].")

    @property
    def success(self):
        """E_S = |0><0| + sqrt(eps)|1><1|."""
        return np.diag([1.0, math.sqrt(self.epsilon)]).astype(complex)

    @property
    def failure(self):
        """E_F = sqrt(1 - eps)|1><1|."""
        return np.diag([0.0, math.sqrt(1.0 - self.epsilon)]).astype(complex)

    @property
    def kraus(self):
        """Kraus operators [E_S, E_F]."""
        return [self.success, self.failure]


@dataclass(frozen=True)
class DistillationResult:
    """Outcome of the all-S branch."""

    post_state: QuantumState
    success_probability: float
    fidelity: float | None


def _filter_terms(s, epsilon):
    terms = []
    for weight, psi in s.terms:
        amplitudes = {
            bits: amp * epsilon ** (bits.count("1") / 2)
            for bits, amp in psi.amplitudes.items()
        }
        norm_sq = math.fsum(abs(a) ** 2 for a in amplitudes.values())
        if norm_sq > 0:
            terms.append((weight * norm_sq, amplitudes, norm_sq))
    q = math.fsum(w for w, _, _ in terms)
    if q < MIN_BRANCH_PROBABILITY:
        raise Impossible_Branch_Exception(
            f"Filter success probability {q:.3g} is below {MIN_BRANCH_PROBABILITY}.",
            probability=q,
        )
    post = QuantumState(
        s.num_parties,
        terms=[
            (
                w / q,
                SparsePureState(
                    s.num_parties,
                    {b: a / math.sqrt(norm_sq) for b, a in amplitudes.items()},
                ),
            )
            for w, amplitudes, norm_sq in terms
        ],
    )
    return post, q


def distill(s, epsilon, target=None):
    """
    Filter every party and keep the all-S branch.

    Parameters
    ----------
    s : QuantumState
        Input state.
    epsilon : float
        Filter strength in (0, 1].
    target : SparsePureState, optional
        Fidelity target, by default |W> of matching size. No fidelity is
        reported for one-party inputs without a target.

    Returns
    -------
    DistillationResult
    """
    instrument = FilterInstrument(epsilon)
    n = s.num_parties
    if s.is_structured:
        post, q = _filter_terms(s, instrument.epsilon)
    else:
        post, q = apply_instrument(s, [instrument.kraus] * n, [0] * n)
    if target is None and n >= 2:
        target = make_named_state("w", n).terms[0][1]
    fidelity = fidelity_with_pure(post, target) if target is not None else None
    lgr.debug("Filter eps=%g on %d parties: q=%.6g", epsilon, n, q)
    return DistillationResult(post, q, fidelity)


def _check_parties(n):
    if int(n) != n or n < 3:
        raise Domain_Exception(f"Closed forms need n >= 3, got {n}.")
    return int(n)


def closed_forms(n, epsilon):
    """
    Success probability and fidelity for the equal W/Wbar mixture.

    Returns
    -------
    q : float
        eps (1 + eps^(n-2)) / 2.
    fidelity : float
        1 / (1 + eps^(n-2)).
    """
    n = _check_parties(n)
    FilterInstrument(epsilon)
    tail = epsilon ** (n - 2)
    return 0.5 * epsilon * (1 + tail), 1 / (1 + tail)


def asymptotic_forms(n):
    """Large-n approximations of :func:`closed_forms` at eps = 1 - 1/sqrt(n)."""
    n = _check_parties(n)
    root = math.sqrt(n)
    return 0.5 * (1 - 1 / root) * (1 + math.exp(-root)), 1 / (1 + math.exp(-root))


def epsilon_of_fidelity(n, fidelity):
    """Filter strength that brings the equal mixture to the given fidelity."""
    n = _check_parties(n)
    if not 0.5 < fidelity < 1.0:
        raise Domain_Exception(f"F = {fidelity} lies outside (1/2, 1).")
    return ((1 - fidelity) / fidelity) ** (1 / (n - 2))


def q_of_fidelity(n, fidelity):
    """Success probability of reaching fidelity F from the equal mixture."""
    epsilon = epsilon_of_fidelity(n, fidelity)
    return epsilon / (2 * fidelity)


def success_lower_bound(p, fidelity):
    """
    Lower bound p^2 (1 - F) / ((1 - p) F) on the success probability.

    Holds for p|W><W| + (1 - p) rho where rho lives on strings with at least
    two excitations and the filter reaches fidelity at least F.
    """
    if p == 1:
        raise Domain_Exception("The bound degenerates at p = 1 (division by zero).")
    if not 0.0 < p < 1.0:
        raise Domain_Exception(f"p = {p} lies outside (0, 1).")
    if not 0.0 < fidelity < 1.0:
        raise Domain_Exception(f"F = {fidelity} lies outside (0, 1).")
    return p**2 * (1 - fidelity) / ((1 - p) * fidelity)


def mixture_bounds(p, epsilon):
    """
    Guarantees of the filter on p|W><W| + (1 - p) rho.

    Returns
    -------
    q_min : float
        eps p, a lower bound on the success probability.
    fidelity_min : float
        p / (p + eps (1 - p)), a lower bound on the fidelity with |W>.
    """
    if not 0.0 < p <= 1.0:
        raise Domain_Exception(f"p = {p} lies outside (0, 1].")
    FilterInstrument(epsilon)
    return epsilon * p, p / (p + epsilon * (1 - p))
