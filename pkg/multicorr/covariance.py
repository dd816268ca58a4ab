"""n-party covariance of local observables.

Cov(X_1, ..., X_n) is the expectation of the product of the centered local
observables X_i - <X_i>. The identity part of any X_i cancels after
centering, and the covariance is linear in each traceless part, so a scan
over the 3^n Pauli strings built from X, Y and Z determines every covariance
of the state.
"""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from multicorr.pipeline_step import (
    Domain_Exception,
    Pipeline_Exception,
    Size_Limit_Exception,
)
from multicorr.qstate import (
    PAULI,
    LocalObservableList,
    SingleQubitObservable,
    expectation_value,
    partial_trace,
)

lgr = logging.getLogger(__name__)

ZERO_TOL = 1e-10
SCAN_BUDGET = 200_000
LETTERS = "XYZ"


@dataclass(frozen=True)
class CovarianceScanResult:
    """Covariances of a set of Pauli strings."""

    values: dict
    mode: str = "full"

    @property
    def max_abs(self):
        """Largest absolute covariance."""
        return max(abs(v) for v in self.values.values())

    @property
    def argmax(self):
        """String with the largest absolute covariance (smallest string on ties)."""
        return min(self.values, key=lambda k: (-abs(self.values[k]), k))

    def vanishes(self, tol=ZERO_TOL):
        """True if every scanned covariance is below ``tol`` in magnitude."""
        return self.max_abs < tol


def _as_observables(s, obs):
    if isinstance(obs, str):
        obs = LocalObservableList.from_pauli_string(obs)
    elif not isinstance(obs, LocalObservableList):
        obs = LocalObservableList(tuple(obs))
    if len(obs) != s.num_parties:
        raise Pipeline_Exception(
            f"Expected {s.num_parties} observables, got {len(obs)}."
        )
    return obs


def single_party_marginals(s):
    """The n one-qubit reduced density matrices."""
    return [partial_trace(s, [party]).matrix for party in range(s.num_parties)]


def mean_values(s, marginals=None):
    """
    Per-party Pauli means.

    Returns
    -------
    numpy.ndarray, shape (n, 3)
        Columns hold <X>, <Y> and <Z> of each party.
    """
    marginals = single_party_marginals(s) if marginals is None else marginals
    return np.array(
        [
            [float(np.real(np.trace(rho @ PAULI[c]))) for c in LETTERS]
            for rho in marginals
        ]
    )


def covariance(s, obs, marginals=None):
    """
    Covariance of one local observable per party.

    Parameters
    ----------
    s : QuantumState
        The state (dense or structured).
    obs : LocalObservableList or str or sequence
        One observable per party; a string is read as Pauli letters.
    marginals : list of numpy.ndarray, optional
        Precomputed single-party marginals.
    """
    obs = _as_observables(s, obs)
    marginals = single_party_marginals(s) if marginals is None else marginals
    centered = [
        o.matrix - float(np.real(np.trace(rho @ o.matrix))) * np.eye(2)
        for o, rho in zip(obs, marginals)
    ]
    return expectation_value(s, centered)


def _centered_string(letters, means):
    index = {c: i for i, c in enumerate(LETTERS)}
    return [
        PAULI[c] - means[party, index[c]] * np.eye(2)
        for party, c in enumerate(letters)
    ]


def pauli_covariance_scan(s, mode="full", count=5000, seed=None, budget=SCAN_BUDGET):
    """
    Covariance of every (or a sample of) Pauli string over {X, Y, Z}^n.

    Parameters
    ----------
    s : QuantumState
        The state.
    mode : {"full", "sampled"}
        Scan all 3^n strings or ``count`` random ones.
    count : int
        Number of sampled strings.
    seed : int, optional
        Seed of the sampler.
    budget : int
        Largest number of strings accepted by a full scan.
    """
    n = s.num_parties
    if mode == "full":
        if 3**n > budget:
            raise Size_Limit_Exception(
                f"Full scan needs 3^{n} = {3**n} strings (budget {budget})."
            )
        strings = ["".join(p) for p in itertools.product(LETTERS, repeat=n)]
    elif mode == "sampled":
        if count < 1:
            raise Pipeline_Exception("A sampled scan needs at least one string.")
        rng = np.random.default_rng(seed)
        picks = rng.integers(0, 3, size=(count, n))
        strings = ["".join(LETTERS[i] for i in row) for row in picks]
    else:
        raise Pipeline_Exception(f"Unknown scan mode '{mode}'.")

    means = mean_values(s)
    values = {}
    for letters in strings:
        if letters not in values:
            values[letters] = expectation_value(s, _centered_string(letters, means))
    lgr.debug("Scanned %d Pauli strings (%s)", len(values), mode)
    return CovarianceScanResult(values, mode)


def wmix_closed_form(n, fidelity):
    """
    Closed forms for F|W><W| + (1-F)|Wbar><Wbar| with an odd number of qubits.

    Returns
    -------
    mean_sigma_z : float
        (2F - 1)(n - 2)/n.
    cov_zz : float
        Cov(sigma_z, ..., sigma_z).
    """
    if int(n) != n or n < 3 or n % 2 == 0:
        raise Domain_Exception(f"Closed form needs an odd n >= 3, got {n}.")
    if not 0.0 <= fidelity <= 1.0:
        raise Domain_Exception(f"F = {fidelity} lies outside [0, 1].")
    n = int(n)
    m = (2 * fidelity - 1) * (n - 2) / n
    cov = -fidelity * (1 - m) ** (n - 1) * (1 + m) + (1 - fidelity) * (-1) ** (
        n - 1
    ) * (1 + m) ** (n - 1) * (1 - m)
    return m, cov


def z_string(n):
    """The observable list sigma_z on every party."""
    return LocalObservableList(tuple(SingleQubitObservable.sigma_z() for _ in range(n)))
