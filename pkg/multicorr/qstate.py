"""Multi-qubit states and the linear-algebra primitives built on them.

A :class:`QuantumState` holds either a dense density matrix or a weighted
mixture of :class:`SparsePureState` terms. Party 0 is the leftmost tensor
factor and the leftmost character of every bitstring.
"""

# Authors: The Multicorr developers
# SPDX-License-Identifier: BSD-3-Clause

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import cached_property
from types import MappingProxyType

import numpy as np
from scipy import linalg
from scipy.stats import unitary_group

from multicorr.pipeline_step import (
    Domain_Exception,
    Impossible_Branch_Exception,
    Pipeline_Exception,
    Size_Limit_Exception,
)

lgr = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-8
NORM_TOL = 1e-10
SYMMETRIZE_WARN_TOL = 1e-8
COMPLETENESS_TOL = 1e-10
OBSERVABLE_TOL = 1e-12
BASIS_TOL = 1e-12
MIN_BRANCH_PROBABILITY = 1e-15
EIGEN_CUTOFF = 1e-12
DENSE_MAX_PARTIES = 12
SUPPORT_MAX = 4096

# relative size below which amplitudes produced by cancellation are dropped
_PRUNE_TOL = 1e-15
# upper bound on the intermediate array of a structured matrix element
_CHUNK_ELEMENTS = 1 << 20


def _require_dense(num_parties):
    if num_parties > DENSE_MAX_PARTIES:
        raise Size_Limit_Exception(
            f"Dense representation refused for {num_parties} qubits "
            f"(limit {DENSE_MAX_PARTIES})."
        )


def _bitstrings(num_parties):
    return ["".join(bits) for bits in itertools.product("01", repeat=num_parties)]


class SparsePureState:
    """
    A pure state stored as its nonzero computational-basis amplitudes.

    Parameters
    ----------
    num_parties : int
        Number of qubits.
    amplitudes : mapping of str to complex
        Bitstring to amplitude. Zero amplitudes are dropped; the squared
        amplitudes must sum to one within 1e-10.
    """

    def __init__(self, num_parties, amplitudes):
        num_parties = int(num_parties)
        if num_parties < 1:
            raise Pipeline_Exception("A state needs at least one party.")

        cleaned = {}
        for bits, amp in sorted(dict(amplitudes).items()):
            if len(bits) != num_parties or set(bits) - {"0", "1"}:
                raise Pipeline_Exception(
                    f"Invalid bitstring '{bits}' for {num_parties} parties."
                )
            amp = complex(amp)
            if amp != 0:
                cleaned[bits] = amp

        norm_sq = math.fsum(abs(a) ** 2 for a in cleaned.values())
        if abs(norm_sq - 1.0) > NORM_TOL:
            raise Domain_Exception(
                f"Pure state is not normalized (squared norm {norm_sq:.6g})."
            )

        self._num_parties = num_parties
        self._amplitudes = MappingProxyType(cleaned)

    @classmethod
    def from_vector(cls, vector, tol=0.0):
        """Create a sparse state from a dense vector of length 2^n."""
        vector = np.asarray(vector, dtype=complex).reshape(-1)
        num_parties = vector.size.bit_length() - 1
        if num_parties < 1 or 2**num_parties != vector.size:
            raise Pipeline_Exception("Vector length must be a power of two.")
        amplitudes = {
            bits: amp
            for bits, amp in zip(_bitstrings(num_parties), vector)
            if abs(amp) > tol
        }
        return cls(num_parties, amplitudes)

    @property
    def num_parties(self):
        """Number of qubits."""
        return self._num_parties

    @property
    def amplitudes(self):
        """Read-only mapping from bitstring to amplitude."""
        return self._amplitudes

    @property
    def sparsity(self):
        """Number of stored amplitudes."""
        return len(self._amplitudes)

    @cached_property
    def bits(self):
        """Bit matrix of shape (sparsity, num_parties)."""
        return np.array(
            [[c == "1" for c in bits] for bits in self._amplitudes], dtype=np.intp
        ).reshape(len(self._amplitudes), self._num_parties)

    @cached_property
    def values(self):
        """Amplitude vector aligned with the rows of :attr:`bits`."""
        return np.array(list(self._amplitudes.values()), dtype=complex)

    def to_vector(self):
        """Return the dense state vector."""
        _require_dense(self._num_parties)
        vector = np.zeros(2**self._num_parties, dtype=complex)
        for bits, amp in self._amplitudes.items():
            vector[int(bits, 2)] = amp
        return vector

    def inner(self, other):
        """Return the inner product with ``self`` conjugated."""
        if other.num_parties != self._num_parties:
            raise Pipeline_Exception("Party counts of the two states differ.")
        return complex(
            sum(
                self._amplitudes[bits].conjugate() * amp
                for bits, amp in other.amplitudes.items()
                if bits in self._amplitudes
            )
        )

    def matrix_element(self, operators, other=None):
        """
        Evaluate the matrix element of a product operator.

        Computes the sum over x, y of conj(self_x) other_y prod_i A_i[x_i, y_i]
        without building any 2^n object.

        Parameters
        ----------
        operators : array_like, shape (n, 2, 2)
            One single-qubit operator per party.
        other : SparsePureState, optional
            Right-hand state, defaults to ``self``.
        """
        other = self if other is None else other
        operators = np.asarray(operators, dtype=complex)
        n = self._num_parties
        if operators.shape != (n, 2, 2) or other.num_parties != n:
            raise Pipeline_Exception(
                f"Expected {n} single-qubit operators, got shape {operators.shape}."
            )
        rows, cols = self.bits, other.bits
        party = np.arange(n)
        per_row = max(1, _CHUNK_ELEMENTS // max(1, cols.shape[0] * n))
        total = 0j
        for start in range(0, rows.shape[0], per_row):
            block_rows = rows[start : start + per_row]
            factors = operators[party, block_rows[:, None, :], cols[None, :, :]]
            block = np.prod(factors, axis=2)
            left = np.conj(self.values[start : start + per_row])
            total += left @ block @ other.values
        return complex(total)

    def __repr__(self):
        return f"SparsePureState({self._num_parties}, sparsity={self.sparsity})"


def _apply_sparse(amplitudes, qubits, operator):
    """Apply a 2^k x 2^k operator to the given qubits of sparse amplitudes."""
    k = len(qubits)
    out = {}
    for bits, amp in amplitudes.items():
        chars = list(bits)
        col = int("".join(chars[q] for q in qubits), 2)
        for row in range(2**k):
            coeff = operator[row, col]
            if coeff == 0:
                continue
            for q, c in zip(qubits, format(row, f"0{k}b")):
                chars[q] = c
            key = "".join(chars)
            out[key] = out.get(key, 0j) + coeff * amp
    if not out:
        return out
    peak = max(abs(a) for a in out.values())
    return {b: a for b, a in sorted(out.items()) if abs(a) > _PRUNE_TOL * peak}


def _apply_dense(rho, num_parties, qubits, operator):
    """Return K rho K^dagger for an operator K on the given qubits."""
    n = num_parties
    k = len(qubits)
    qubits = list(qubits)
    tensor = rho.reshape((2,) * (2 * n))
    op = np.asarray(operator, dtype=complex).reshape((2,) * (2 * k))
    inputs = list(range(k, 2 * k))

    tensor = np.tensordot(op, tensor, axes=(inputs, qubits))
    tensor = np.moveaxis(tensor, list(range(k)), qubits)
    tensor = np.tensordot(tensor, op.conj(), axes=([n + q for q in qubits], inputs))
    tensor = np.moveaxis(tensor, list(range(2 * n - k, 2 * n)), [n + q for q in qubits])
    return tensor.reshape(2**n, 2**n)


def _dense_partial_trace(rho, num_parties, keep):
    n = num_parties
    keep = list(keep)
    drop = [q for q in range(n) if q not in keep]
    tensor = rho.reshape((2,) * (2 * n))
    order = keep + drop + [n + q for q in keep] + [n + q for q in drop]
    dk, dd = 2 ** len(keep), 2 ** len(drop)
    tensor = tensor.transpose(order).reshape(dk, dd, dk, dd)
    return np.trace(tensor, axis1=1, axis2=3)


class QuantumState:
    """
    An n-qubit state with a dense or a structured body.

    Use :meth:`from_matrix`, :meth:`from_terms` or :meth:`pure` to build a
    validated state. Instances are treated as immutable.

    Parameters
    ----------
    num_parties : int
        Number of qubits.
    matrix : numpy.ndarray, optional
        Dense 2^n x 2^n density matrix.
    terms : sequence of (float, SparsePureState), optional
        Weighted mixture of sparse pure states.
    label : str, optional
        Identifier used in reports.
    """

    def __init__(self, num_parties, matrix=None, terms=None, label=""):
        if (matrix is None) == (terms is None):
            raise Pipeline_Exception("A state needs exactly one of matrix or terms.")
        self._num_parties = int(num_parties)
        self.label = label
        if matrix is not None:
            matrix = np.asarray(matrix, dtype=complex)
            if matrix.shape != (2**self._num_parties, 2**self._num_parties):
                raise Pipeline_Exception(
                    f"Matrix shape {matrix.shape} does not fit "
                    f"{self._num_parties} qubits."
                )
            matrix.setflags(write=False)
            self._matrix = matrix
            self._terms = None
        else:
            self._matrix = None
            self._terms = tuple((float(w), psi) for w, psi in terms)

    @classmethod
    def from_matrix(cls, matrix, label=""):
        """
        Validate and wrap a density matrix.

        The matrix is symmetrized; a warning is logged if that changes any
        entry by more than 1e-8.
        """
        matrix = np.array(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise Pipeline_Exception("Density matrix must be square.")
        num_parties = matrix.shape[0].bit_length() - 1
        if num_parties < 1 or 2**num_parties != matrix.shape[0]:
            raise Pipeline_Exception("Matrix dimension must be 2^n with n >= 1.")
        _require_dense(num_parties)

        symmetric = (matrix + matrix.conj().T) / 2
        correction = float(np.max(np.abs(symmetric - matrix)))
        if correction > SYMMETRIZE_WARN_TOL:
            lgr.warning(
                "Density matrix was not Hermitian; symmetrization changed "
                "entries by up to %.3g.",
                correction,
            )
        trace = float(np.trace(symmetric).real)
        if abs(trace - 1.0) > TRACE_TOL:
            raise Domain_Exception(f"Density matrix has trace {trace:.12g}, not 1.")
        smallest = float(linalg.eigvalsh(symmetric)[0])
        if smallest < -PSD_TOL:
            raise Domain_Exception(
                f"Density matrix has a negative eigenvalue {smallest:.3g}."
            )
        return cls(num_parties, matrix=symmetric, label=label)

    @classmethod
    def from_terms(cls, terms, label=""):
        """Validate and wrap a weighted mixture of sparse pure states."""
        kept = []
        for weight, psi in terms:
            weight = float(weight)
            if weight < 0:
                raise Domain_Exception(f"Mixture weight {weight} is negative.")
            if weight > 0:
                kept.append((weight, psi))
        if not kept:
            raise Domain_Exception("A mixture needs at least one positive weight.")
        num_parties = kept[0][1].num_parties
        if any(psi.num_parties != num_parties for _, psi in kept):
            raise Pipeline_Exception("Mixture terms have different party counts.")
        total = math.fsum(w for w, _ in kept)
        if abs(total - 1.0) > TRACE_TOL:
            raise Domain_Exception(f"Mixture weights sum to {total:.12g}, not 1.")
        return cls(num_parties, terms=kept, label=label)

    @classmethod
    def pure(cls, psi, label=""):
        """Wrap a single sparse pure state."""
        return cls(psi.num_parties, terms=[(1.0, psi)], label=label)

    @property
    def num_parties(self):
        """Number of qubits."""
        return self._num_parties

    @property
    def is_structured(self):
        """True if the state is stored as a mixture of sparse pure states."""
        return self._terms is not None

    @property
    def terms(self):
        """Mixture terms of a structured state (None for dense states)."""
        return self._terms

    @cached_property
    def matrix(self):
        """Dense density matrix (built on first access for structured states)."""
        if self._matrix is not None:
            return self._matrix
        n = self._num_parties
        _require_dense(n)
        columns = np.zeros((2**n, len(self._terms)), dtype=complex)
        weights = np.zeros(len(self._terms))
        for j, (weight, psi) in enumerate(self._terms):
            columns[:, j] = psi.to_vector()
            weights[j] = weight
        dense = (columns * weights) @ columns.conj().T
        dense.setflags(write=False)
        return dense

    def to_dense(self):
        """Return the same state with a dense body."""
        if not self.is_structured:
            return self
        return QuantumState(self._num_parties, matrix=self.matrix, label=self.label)

    def __repr__(self):
        body = f"terms={len(self._terms)}" if self.is_structured else "dense"
        label = f", label={self.label!r}" if self.label else ""
        return f"QuantumState({self._num_parties}, {body}{label})"


# --------------------------------------------------------------------------
# observables and bases
# --------------------------------------------------------------------------

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True, eq=False)
class SingleQubitObservable:
    """A Hermitian 2x2 observable."""

    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.shape != (2, 2):
            raise Pipeline_Exception("A single-qubit observable is a 2x2 matrix.")
        if np.max(np.abs(matrix - matrix.conj().T)) > OBSERVABLE_TOL:
            raise Domain_Exception("Observable is not Hermitian.")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @classmethod
    def from_letter(cls, letter):
        """Pauli observable for one of the letters I, X, Y, Z."""
        try:
            return cls(PAULI[letter.upper()], label=letter.upper())
        except KeyError:
            raise Pipeline_Exception(f"Unknown Pauli letter '{letter}'.") from None

    @classmethod
    def sigma_x(cls):
        """Pauli X."""
        return cls.from_letter("X")

    @classmethod
    def sigma_y(cls):
        """Pauli Y."""
        return cls.from_letter("Y")

    @classmethod
    def sigma_z(cls):
        """Pauli Z."""
        return cls.from_letter("Z")

    @classmethod
    def identity(cls):
        """Identity placeholder."""
        return cls.from_letter("I")

    def centered(self, mean):
        """Return X - mean * I."""
        label = f"{self.label}-<{self.label}>" if self.label else ""
        return SingleQubitObservable(
            self.matrix - float(mean) * np.eye(2), label=label
        )


@dataclass(frozen=True, eq=False)
class LocalObservableList:
    """One single-qubit observable per party."""

    observables: tuple

    def __post_init__(self):
        observables = tuple(
            obs
            if isinstance(obs, SingleQubitObservable)
            else SingleQubitObservable(obs)
            for obs in self.observables
        )
        if not observables:
            raise Pipeline_Exception("An observable list needs at least one entry.")
        object.__setattr__(self, "observables", observables)

    @classmethod
    def from_pauli_string(cls, letters):
        """Build the list from a string such as ``"XZZ"``."""
        return cls(tuple(SingleQubitObservable.from_letter(c) for c in letters))

    def __len__(self):
        return len(self.observables)

    def __iter__(self):
        return iter(self.observables)

    def __getitem__(self, index):
        return self.observables[index]

    @property
    def label(self):
        """Concatenated labels of the entries."""
        return "".join(obs.label or "?" for obs in self.observables)

    @property
    def matrices(self):
        """Stacked operator matrices of shape (n, 2, 2)."""
        return np.stack([obs.matrix for obs in self.observables])


@dataclass(frozen=True, eq=False)
class SingleQubitBasis:
    """An orthonormal single-qubit basis {|b0>, |b1>}."""

    b0: np.ndarray
    b1: np.ndarray
    label: str = ""

    def __post_init__(self):
        b0 = np.array(self.b0, dtype=complex).reshape(-1)
        b1 = np.array(self.b1, dtype=complex).reshape(-1)
        if b0.shape != (2,) or b1.shape != (2,):
            raise Pipeline_Exception("Basis vectors must have two components.")
        gram = np.array([[np.vdot(u, v) for v in (b0, b1)] for u in (b0, b1)])
        if np.max(np.abs(gram - np.eye(2))) > BASIS_TOL:
            raise Domain_Exception("Basis vectors are not orthonormal.")
        b0.setflags(write=False)
        b1.setflags(write=False)
        object.__setattr__(self, "b0", b0)
        object.__setattr__(self, "b1", b1)

    @classmethod
    def computational(cls):
        """The basis {|0>, |1>}."""
        return cls([1, 0], [0, 1], label="computational")

    @classmethod
    def hadamard(cls):
        """The basis {|+>, |->}."""
        s = 1 / math.sqrt(2)
        return cls([s, s], [s, -s], label="hadamard")

    @classmethod
    def angles(cls, theta, phi):
        """The basis {cos t|0> + e^{i p} sin t|1>, sin t|0> - e^{i p} cos t|1>}."""
        c, s = math.cos(theta), math.sin(theta)
        phase = complex(math.cos(phi), math.sin(phi))
        return cls(
            [c, phase * s],
            [s, -phase * c],
            label=f"angles(theta={theta:.12g}, phi={phi:.12g})",
        )

    @classmethod
    def eigenbasis(cls, matrix):
        """Eigenbasis of a 2x2 Hermitian matrix, largest eigenvalue first."""
        _, vectors = linalg.eigh(np.asarray(matrix, dtype=complex))
        return cls(vectors[:, 1], vectors[:, 0], label="eigen")

    @property
    def vectors(self):
        """Matrix with columns |b0>, |b1>."""
        return np.column_stack([self.b0, self.b1])

    @property
    def projectors(self):
        """The two rank-one projectors |b_k><b_k|."""
        return tuple(np.outer(b, b.conj()) for b in (self.b0, self.b1))

    def readout(self, outcome):
        """Kraus operator |k><b_k| that measures and leaves |k> behind."""
        ket = np.zeros(2, dtype=complex)
        ket[outcome] = 1.0
        bra = (self.b0, self.b1)[outcome]
        return np.outer(ket, bra.conj())


# --------------------------------------------------------------------------
# named states
# --------------------------------------------------------------------------


def _excitation_states(n, ones):
    amp = 1 / math.sqrt(math.comb(n, ones))
    return {
        "".join("1" if i in pos else "0" for i in range(n)): amp
        for pos in itertools.combinations(range(n), ones)
    }


def _w_amplitudes(n, bar=False):
    return _excitation_states(n, n - 1 if bar else 1)


def _bell_amplitudes(variant):
    s = 1 / math.sqrt(2)
    table = {
        "psi+": {"01": s, "10": s},
        "psi-": {"01": s, "10": -s},
        "phi+": {"00": s, "11": s},
        "phi-": {"00": s, "11": -s},
    }
    try:
        return table[variant]
    except KeyError:
        raise Pipeline_Exception(
            f"Unknown Bell variant '{variant}' (use psi+, psi-, phi+, phi-)."
        ) from None


def _fidelity_param(params):
    fidelity = float(params.pop("F", 0.5))
    if not 0.0 <= fidelity <= 1.0:
        raise Domain_Exception(f"F = {fidelity} lies outside [0, 1].")
    return fidelity


def _need(n, name, minimum=1, exact=None):
    if exact is not None:
        if n not in (None, exact):
            raise Pipeline_Exception(f"State '{name}' is defined for n = {exact}.")
        return exact
    if n is None:
        raise Pipeline_Exception(f"State '{name}' needs a party count n.")
    if n < minimum:
        raise Pipeline_Exception(f"State '{name}' needs n >= {minimum}.")
    return n


def _named_w(n, params, bar=False):
    name = "wbar" if bar else "w"
    n = _need(n, name)
    return [(1.0, SparsePureState(n, _w_amplitudes(n, bar)))]


def _named_w_mixture(n, params):
    n = _need(n, "w_mixture")
    fidelity = _fidelity_param(params)
    return [
        (fidelity, SparsePureState(n, _w_amplitudes(n))),
        (1.0 - fidelity, SparsePureState(n, _w_amplitudes(n, bar=True))),
    ]


def _named_w_split_mixture(n, params):
    n = _need(n, "w_split_mixture")
    fidelity = _fidelity_param(params)

    def doubled(amplitudes):
        return {bits + bits: amp for bits, amp in amplitudes.items()}

    return [
        (fidelity, SparsePureState(2 * n, doubled(_w_amplitudes(n)))),
        (1.0 - fidelity, SparsePureState(2 * n, doubled(_w_amplitudes(n, True)))),
    ]


def _named_ghz_diag(n, params):
    n = _need(n, "ghz_diag", 2)
    return [
        (0.5, SparsePureState(n, {"0" * n: 1.0})),
        (0.5, SparsePureState(n, {"1" * n: 1.0})),
    ]


def _named_parity_even(n, params):
    n = _need(n, "parity_even", 2)
    if n > 20:
        raise Size_Limit_Exception("parity_even is limited to n <= 20.")
    weight = 2.0 ** -(n - 1)
    return [
        (weight, SparsePureState(n, {bits: 1.0}))
        for bits in _bitstrings(n)
        if bits.count("1") % 2 == 0
    ]


def _named_example2(n, params):
    _need(n, "example2_tripartite", exact=3)
    psi_plus = {b + "0": a for b, a in _bell_amplitudes("psi+").items()}
    psi_minus = {b + "1": a for b, a in _bell_amplitudes("psi-").items()}
    return [(0.5, SparsePureState(3, psi_plus)), (0.5, SparsePureState(3, psi_minus))]


def _named_bell(n, params):
    _need(n, "bell", exact=2)
    variant = str(params.pop("variant", "psi+"))
    return [(1.0, SparsePureState(2, _bell_amplitudes(variant)))]


def _named_bell_diag_example(n, params):
    _need(n, "bell_diag_example", exact=2)
    return [
        (2 / 3, SparsePureState(2, _bell_amplitudes("psi+"))),
        (1 / 6, SparsePureState(2, _bell_amplitudes("phi+"))),
        (1 / 6, SparsePureState(2, _bell_amplitudes("phi-"))),
    ]


def _named_zero(n, params):
    n = _need(n, "zero", 1)
    return [(1.0, SparsePureState(n, {"0" * n: 1.0}))]


def _named_maximally_mixed(n, params):
    n = _need(n, "maximally_mixed", 1)
    if n > 16:
        raise Size_Limit_Exception("maximally_mixed is limited to n <= 16.")
    weight = 2.0**-n
    return [(weight, SparsePureState(n, {bits: 1.0})) for bits in _bitstrings(n)]


NAMED_STATES = {
    "ghz_diag": _named_ghz_diag,
    "parity_even": _named_parity_even,
    "w": _named_w,
    "wbar": lambda n, params: _named_w(n, params, bar=True),
    "w_mixture": _named_w_mixture,
    "w_split_mixture": _named_w_split_mixture,
    "example2_tripartite": _named_example2,
    "bell": _named_bell,
    "bell_diag_example": _named_bell_diag_example,
    "zero": _named_zero,
    "maximally_mixed": _named_maximally_mixed,
}
"""Builders of the named state families."""


def make_named_state(name, n=None, **params):
    """
    Build one of the named state families in structured form.

    Parameters
    ----------
    name : str
        One of :data:`NAMED_STATES`.
    n : int, optional
        Party count (fixed for bell, bell_diag_example, example2_tripartite).
    **params
        ``F`` for w_mixture / w_split_mixture, ``variant`` for bell.

    Returns
    -------
    QuantumState
        A normalized structured state.
    """
    if name not in NAMED_STATES:
        raise Pipeline_Exception(
            f"Unknown state '{name}'. Known states: {', '.join(NAMED_STATES)}."
        )
    remaining = dict(params)
    terms = NAMED_STATES[name](None if n is None else int(n), remaining)
    if remaining:
        raise Pipeline_Exception(
            f"Unknown parameters for '{name}': {', '.join(sorted(remaining))}."
        )
    label = name
    if params:
        label += ":" + ",".join(f"{k}={v}" for k, v in sorted(params.items()))
    return QuantumState.from_terms(terms, label=label)


def random_unitary(dim, rng=None):
    """Haar-random unitary of the given dimension."""
    return unitary_group.rvs(dim, random_state=np.random.default_rng(rng))


def random_density_matrix(num_parties, rank=None, rng=None):
    """Random dense state from a complex Ginibre matrix of the given rank."""
    rng = np.random.default_rng(rng)
    dim = 2**num_parties
    rank = dim if rank is None else rank
    ginibre = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = ginibre @ ginibre.conj().T
    return QuantumState.from_matrix(rho / np.trace(rho).real)


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------


def tensor_product(a, b):
    """Tensor product with the parties of ``a`` first."""
    n = a.num_parties + b.num_parties
    if a.is_structured and b.is_structured:
        terms = [
            (
                wa * wb,
                SparsePureState(
                    n,
                    {
                        xa + xb: va * vb
                        for xa, va in psi_a.amplitudes.items()
                        for xb, vb in psi_b.amplitudes.items()
                    },
                ),
            )
            for wa, psi_a in a.terms
            for wb, psi_b in b.terms
        ]
        return QuantumState(n, terms=terms)
    _require_dense(n)
    return QuantumState(n, matrix=np.kron(a.matrix, b.matrix))


def _check_party(s, party):
    if not 0 <= int(party) < s.num_parties:
        raise Pipeline_Exception(
            f"Party {party} out of range for {s.num_parties} parties."
        )
    return int(party)


def partial_trace(s, keep):
    """
    Reduce a state to the parties in ``keep``.

    The reduced state keeps the parties in ascending order and always has a
    dense body (unless ``keep`` covers every party).
    """
    keep = sorted({_check_party(s, q) for q in keep})
    if not keep:
        raise Pipeline_Exception("Partial trace needs at least one kept party.")
    n = s.num_parties
    if len(keep) == n:
        return s
    k = len(keep)
    _require_dense(k)

    if not s.is_structured:
        rho = _dense_partial_trace(s.matrix, n, keep)
    else:
        drop = [q for q in range(n) if q not in keep]
        place = 2 ** np.arange(k - 1, -1, -1)
        rho = np.zeros((2**k, 2**k), dtype=complex)
        for weight, psi in s.terms:
            bits = psi.bits
            kept_index = bits[:, keep] @ place
            _, groups = np.unique(bits[:, drop], axis=0, return_inverse=True)
            groups = groups.reshape(-1)
            block = np.zeros((groups.max() + 1, 2**k), dtype=complex)
            block[groups, kept_index] = psi.values
            rho += weight * (block.T @ block.conj())
    rho = (rho + rho.conj().T) / 2
    return QuantumState(k, matrix=rho)


def permute_parties(s, order):
    """Reorder parties: new party j is old party ``order[j]``."""
    order = [int(o) for o in order]
    n = s.num_parties
    if sorted(order) != list(range(n)):
        raise Pipeline_Exception(f"{order} is not a permutation of {n} parties.")
    if order == list(range(n)):
        return s
    if s.is_structured:
        terms = [
            (
                weight,
                SparsePureState(
                    n,
                    {
                        "".join(bits[o] for o in order): amp
                        for bits, amp in psi.amplitudes.items()
                    },
                ),
            )
            for weight, psi in s.terms
        ]
        return QuantumState(n, terms=terms, label=s.label)
    tensor = s.matrix.reshape((2,) * (2 * n))
    tensor = tensor.transpose(order + [n + o for o in order])
    return QuantumState(n, matrix=tensor.reshape(2**n, 2**n), label=s.label)


def _check_completeness(kraus, dim):
    total = sum(np.asarray(k, dtype=complex).conj().T @ np.asarray(k) for k in kraus)
    smallest = float(linalg.eigvalsh(np.eye(dim) - total)[0])
    if smallest < -COMPLETENESS_TOL:
        raise Domain_Exception(
            "Kraus operators violate sum E^dagger E <= I "
            f"(excess {-smallest:.3g})."
        )
    return float(np.max(np.abs(np.eye(dim) - total)))


def _is_identity(operator):
    return operator.shape[0] == operator.shape[1] and np.array_equal(
        operator, np.eye(operator.shape[0])
    )


def _evolve(s, branches):
    """
    Apply sum over branches of K rho K^dagger and renormalize.

    Each branch is a list of (qubits, operator) pairs applied in sequence.
    Returns the normalized state and the trace before normalization.
    """
    n = s.num_parties
    branches = [
        [(tuple(q), np.asarray(op, dtype=complex)) for q, op in branch]
        for branch in branches
    ]
    branches = [
        [(q, op) for q, op in branch if not _is_identity(op)] for branch in branches
    ]

    if s.is_structured:
        terms = []
        for weight, psi in s.terms:
            for branch in branches:
                amplitudes = dict(psi.amplitudes)
                for qubits, op in branch:
                    amplitudes = _apply_sparse(amplitudes, qubits, op)
                norm_sq = math.fsum(abs(a) ** 2 for a in amplitudes.values())
                if norm_sq > 0:
                    scale = 1 / math.sqrt(norm_sq)
                    terms.append(
                        (
                            weight * norm_sq,
                            {b: a * scale for b, a in amplitudes.items()},
                        )
                    )
        probability = math.fsum(w for w, _ in terms)
        if probability < MIN_BRANCH_PROBABILITY:
            raise Impossible_Branch_Exception(
                f"Branch probability {probability:.3g} is below "
                f"{MIN_BRANCH_PROBABILITY}.",
                probability=probability,
            )
        state = QuantumState(
            n,
            terms=[(w / probability, SparsePureState(n, a)) for w, a in terms],
        )
        return state, probability

    rho = np.zeros_like(s.matrix)
    for branch in branches:
        part = s.matrix
        for qubits, op in branch:
            part = _apply_dense(part, n, qubits, op)
        rho = rho + part
    probability = float(np.trace(rho).real)
    if probability < MIN_BRANCH_PROBABILITY:
        raise Impossible_Branch_Exception(
            f"Branch probability {probability:.3g} is below {MIN_BRANCH_PROBABILITY}.",
            probability=probability,
        )
    rho = rho / probability
    return QuantumState(n, matrix=(rho + rho.conj().T) / 2), probability


def apply_instrument(s, assignment, branch):
    """
    Apply one outcome of a product instrument and postselect on it.

    Parameters
    ----------
    s : QuantumState
        Input state.
    assignment : sequence
        Per party, a list of 2x2 Kraus operators (None means the identity
        instrument).
    branch : sequence of int
        Per party, the index of the selected Kraus operator.

    Returns
    -------
    state : QuantumState
        The normalized post-branch state.
    probability : float
        Tr(E rho E^dagger) of the branch.

    Raises
    ------
    Impossible_Branch_Exception
        If the branch probability is below 1e-15.
    """
    n = s.num_parties
    if len(assignment) != n or len(branch) != n:
        raise Pipeline_Exception(
            f"Instrument assignment and branch must list {n} parties."
        )
    operators = []
    for party, (kraus, outcome) in enumerate(zip(assignment, branch)):
        if kraus is None:
            kraus = [np.eye(2)]
        kraus = [np.asarray(k, dtype=complex) for k in kraus]
        if any(k.shape != (2, 2) for k in kraus):
            raise Pipeline_Exception("Instrument Kraus operators must be 2x2.")
        _check_completeness(kraus, 2)
        if not 0 <= outcome < len(kraus):
            raise Pipeline_Exception(f"Outcome {outcome} invalid for party {party}.")
        operators.append(((party,), kraus[outcome]))
    return _evolve(s, [operators])


def apply_local_operation(s, qubits, kraus, postselect=None):
    """
    Apply a Kraus operation acting jointly on several qubits of one party.

    Parameters
    ----------
    s : QuantumState
        Input state.
    qubits : sequence of int
        The qubits the 2^k x 2^k operators act on, in operator order.
    kraus : sequence of array_like
        Kraus operators with sum E^dagger E <= I.
    postselect : int, optional
        Keep only this outcome. By default all outcomes are summed.

    Returns
    -------
    state : QuantumState
        The normalized output state.
    probability : float
        Trace before normalization (1 for a trace-preserving channel).
    """
    qubits = tuple(_check_party(s, q) for q in qubits)
    if len(set(qubits)) != len(qubits):
        raise Pipeline_Exception("Qubits of a local operation must be distinct.")
    dim = 2 ** len(qubits)
    kraus = [np.asarray(k, dtype=complex) for k in kraus]
    if not kraus or any(k.shape != (dim, dim) for k in kraus):
        raise Pipeline_Exception(f"Kraus operators must be {dim}x{dim}.")
    _check_completeness(kraus, dim)
    if postselect is not None:
        kraus = [kraus[postselect]]
    return _evolve(s, [[(qubits, k)] for k in kraus])


def dephase_site(s, party, basis):
    """Completely dephase one party in the given basis."""
    party = _check_party(s, party)
    state, _ = _evolve(s, [[((party,), p)] for p in basis.projectors])
    return state


def _observable_matrices(s, obs):
    if isinstance(obs, LocalObservableList):
        matrices = obs.matrices
    else:
        matrices = np.asarray(
            [o.matrix if isinstance(o, SingleQubitObservable) else o for o in obs],
            dtype=complex,
        )
    if matrices.shape != (s.num_parties, 2, 2):
        raise Pipeline_Exception(
            f"Expected {s.num_parties} single-qubit observables, "
            f"got {len(matrices)}."
        )
    return matrices


def expectation_value(s, obs):
    """Return Tr(rho X_1 x ... x X_n) for one observable per party."""
    matrices = _observable_matrices(s, obs)
    n = s.num_parties
    if s.is_structured:
        value = sum(weight * psi.matrix_element(matrices) for weight, psi in s.terms)
        return float(np.real(value))

    tensor = s.matrix.reshape((2,) * (2 * n))
    for party, op in enumerate(matrices):
        if _is_identity(op):
            continue
        tensor = np.moveaxis(np.tensordot(op, tensor, axes=([1], [party])), 0, party)
    return float(np.real(np.trace(tensor.reshape(2**n, 2**n))))


def _support_operator(pairs):
    """Restrict sum_j c_j |psi_j><psi_j| to the union of the supports."""
    keys = sorted(set().union(*(psi.amplitudes for _, psi in pairs)))
    if len(keys) > SUPPORT_MAX:
        return None
    index = {bits: i for i, bits in enumerate(keys)}
    columns = np.zeros((len(keys), len(pairs)), dtype=complex)
    coefficients = np.zeros(len(pairs))
    for j, (coefficient, psi) in enumerate(pairs):
        coefficients[j] = coefficient
        for bits, amp in psi.amplitudes.items():
            columns[index[bits], j] = amp
    return (columns * coefficients) @ columns.conj().T


def spectrum(s):
    """Eigenvalues of the density matrix (nonzero ones at least), ascending."""
    if not s.is_structured:
        return linalg.eigvalsh(s.matrix)
    if all(psi.sparsity == 1 for _, psi in s.terms):
        merged = {}
        for weight, psi in s.terms:
            bits = next(iter(psi.amplitudes))
            merged[bits] = merged.get(bits, 0.0) + weight
        return np.sort(np.array([merged[b] for b in sorted(merged)]))
    support = _support_operator(s.terms)
    if support is not None and support.shape[0] <= len(s.terms):
        return linalg.eigvalsh(support)
    # Gram matrix of the weighted terms shares the nonzero spectrum
    roots = [math.sqrt(w) for w, _ in s.terms]
    gram = np.array(
        [
            [ra * rb * psi_a.inner(psi_b) for rb, (_, psi_b) in zip(roots, s.terms)]
            for ra, (_, psi_a) in zip(roots, s.terms)
        ]
    )
    return linalg.eigvalsh(gram)


def shannon_entropy_bits(probabilities):
    """Entropy in bits; entries below 1e-12 contribute nothing."""
    p = np.asarray(probabilities, dtype=float).reshape(-1)
    p = p[p > EIGEN_CUTOFF]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def entropy_bits(s):
    """Von Neumann entropy in bits."""
    return shannon_entropy_bits(spectrum(s))


def fidelity_with_pure(s, target):
    """Return <target|rho|target>."""
    if target.num_parties != s.num_parties:
        raise Pipeline_Exception("Target and state have different party counts.")
    if s.is_structured:
        value = math.fsum(w * abs(target.inner(psi)) ** 2 for w, psi in s.terms)
    else:
        vector = target.to_vector()
        value = float(np.real(np.vdot(vector, s.matrix @ vector)))
    return max(0.0, value)


def trace_distance(a, b):
    """Return half the trace norm of a - b."""
    if a.num_parties != b.num_parties:
        raise Pipeline_Exception("States have different party counts.")
    difference = None
    if a.is_structured and b.is_structured:
        pairs = list(a.terms) + [(-w, psi) for w, psi in b.terms]
        difference = _support_operator(pairs)
    if difference is None:
        _require_dense(a.num_parties)
        difference = a.matrix - b.matrix
    eigenvalues = linalg.eigvalsh(difference)
    return float(min(1.0, max(0.0, 0.5 * np.sum(np.abs(eigenvalues)))))
