"""Exact statevector simulation of number-conserving circuits.

Amplitude index bit ``k`` is qubit ``k`` (little-endian).  Gates act directly
on amplitude pairs; no ``2**n`` matrices are formed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from novqe.hamiltonian import QubitOperator

NORM_TOL = 1e-10
MAX_QUBITS = 25


@dataclass
class StateVector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.n_qubits > MAX_QUBITS:
            raise ValueError(f"at most {MAX_QUBITS} qubits are supported")
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError("amplitude vector has the wrong length")

    def copy(self) -> StateVector:
        return StateVector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _commute(a, b) -> bool:
    (x1, z1), (x2, z2) = a, b
    return ((x1 & z2).bit_count() + (z1 & x2).bit_count()) % 2 == 0


class Generator:
    """Hermitian generator ``K`` of a gate ``exp(-i theta K)``.

    Terms are grouped by the qubits they flip.  When the groups mutually
    commute (true for every fermionic excitation-minus-deexcitation, and for
    spin-summed singles) each group is exponentiated exactly on the
    two-dimensional blocks it couples.  Anything else is exponentiated
    densely on the qubits it touches.
    """

    def __init__(self, op: QubitOperator):
        self.op = op
        self.n_qubits = op.n_qubits
        groups: dict[int, list] = {}
        for p, c in op.terms.items():
            groups.setdefault(p.masks[0], []).append((p.masks, c))
        self._groups = groups
        keys = list(groups)
        self.commuting = all(
            _commute(a, b)
            for i, f in enumerate(keys) for g in keys[i + 1:]
            for a, _ in groups[f] for b, _ in groups[g]
        )

    def _coupling(self, terms) -> np.ndarray:
        basis = np.arange(1 << self.n_qubits, dtype=np.int64)
        coupling = np.zeros(basis.shape, dtype=complex)
        for (x, z), c in terms:
            sign = 1 - 2 * (np.bitwise_count(basis & z) & 1).astype(np.int8)
            coupling += c * (1j ** ((x & z).bit_count() % 4)) * sign
        return coupling

    @cached_property
    def _blocks(self) -> list:
        """Per flip mask: (low indices, high indices, coupling) or (None, None, diagonal)."""
        blocks = []
        for f, terms in self._groups.items():
            coupling = self._coupling(terms)
            if f == 0:
                blocks.append((None, None, coupling.real))
                continue
            top = 1 << (f.bit_length() - 1)
            basis = np.arange(coupling.size, dtype=np.int64)
            low = basis[((basis & top) == 0) & (np.abs(coupling) > 1e-14)]
            # K|low> = c |low ^ f>
            blocks.append((low, low ^ f, coupling[low]))
        return blocks

    @cached_property
    def _support(self) -> tuple[list[int], np.ndarray]:
        touched = 0
        for p in self.op.terms:
            x, z = p.masks
            touched |= x | z
        qubits = [k for k in range(self.n_qubits) if touched >> k & 1]
        if len(qubits) > 12:
            raise ValueError("generator touches too many qubits for dense exponentiation")
        local = QubitOperator(
            len(qubits),
            {type(p)("".join(p.letters[k] for k in qubits)): c for p, c in self.op.terms.items()},
        )
        return qubits, local.to_dense()

    def apply(self, amps: np.ndarray, theta: float) -> np.ndarray:
        if not self.op.terms:
            return amps
        if not self.commuting:
            qubits, k_local = self._support
            u_local = scipy.linalg.expm(-1j * theta * k_local)
            return _apply_local_unitary(amps, u_local, qubits, self.n_qubits)
        out = amps.copy()
        for low, high, c in self._blocks:
            if low is None:
                out *= np.exp(-1j * theta * c)
                continue
            r = np.abs(c)
            cos = np.cos(theta * r)
            sin = np.sin(theta * r)
            u = c / r
            a, b = out[low], out[high]
            out[low] = cos * a - 1j * sin * np.conj(u) * b
            out[high] = cos * b - 1j * sin * u * a
        return out


def _apply_local_unitary(amps: np.ndarray, u: np.ndarray, qubits: list[int], n: int) -> np.ndarray:
    m = len(qubits)
    psi = amps.reshape([2] * n)
    # reshape axis j corresponds to qubit n-1-j
    axes = [n - 1 - q for q in reversed(qubits)]
    psi = np.moveaxis(psi, axes, range(m))
    shape = psi.shape
    psi = (u @ psi.reshape(1 << m, -1)).reshape(shape)
    psi = np.moveaxis(psi, range(m), axes)
    return psi.reshape(-1)


@dataclass(frozen=True)
class GateOp:
    """One gate.  ``kind`` selects the action; the remaining fields parametrize it.

    Kinds: ``X``, ``H``, ``PHASE`` (diag(1, e^{i theta})), ``GIVENS`` on
    ``(p, q)``, ``PAIR`` on ``((p, pbar), (q, qbar))``, ``CSWAP`` with
    ``(control, a, b)`` and ``GENERATOR`` for ``exp(-i theta K)``.
    """

    kind: str
    qubits: tuple = ()
    theta: float = 0.0
    generator: Generator | None = None

    def inverse(self) -> GateOp:
        if self.kind in ("X", "H", "CSWAP"):
            return self
        return GateOp(self.kind, self.qubits, -self.theta, self.generator)

    def flat_qubits(self) -> list[int]:
        out = []
        for q in self.qubits:
            out.extend(q if isinstance(q, tuple) else (q,))
        return out


def pauli_x(q: int) -> GateOp:
    return GateOp("X", (q,))


def hadamard(q: int) -> GateOp:
    return GateOp("H", (q,))


def phase(q: int, theta: float) -> GateOp:
    return GateOp("PHASE", (q,), theta)


def givens(p: int, q: int, theta: float) -> GateOp:
    return GateOp("GIVENS", (p, q), theta)


def pair_exchange(p: tuple[int, int], q: tuple[int, int], theta: float) -> GateOp:
    return GateOp("PAIR", (tuple(p), tuple(q)), theta)


def controlled_swap(control: int, a: int, b: int) -> GateOp:
    return GateOp("CSWAP", (control, a, b))


def generator_exponential(generator: QubitOperator | Generator, theta: float) -> GateOp:
    if isinstance(generator, QubitOperator):
        generator = Generator(generator)
    return GateOp("GENERATOR", (), theta, generator)


def prepare_basis(n_qubits: int, occupied) -> StateVector:
    index = 0
    for q in occupied:
        if not 0 <= q < n_qubits:
            raise ValueError(f"qubit {q} out of range for {n_qubits} qubits")
        index |= 1 << q
    amps = np.zeros(1 << n_qubits, dtype=complex)
    amps[index] = 1.0
    return StateVector(n_qubits, amps)


def _check(gate: GateOp, n: int) -> None:
    qs = gate.flat_qubits()
    if len(set(qs)) != len(qs):
        raise ValueError(f"{gate.kind} gate has repeated qubits {qs}")
    if any(not 0 <= q < n for q in qs):
        raise ValueError(f"{gate.kind} gate qubits {qs} out of range for {n} qubits")
    if gate.kind == "GENERATOR" and gate.generator.n_qubits != n:
        raise ValueError("generator size does not match the state")


def _rotate_pair(amps: np.ndarray, empty_mask: int, full_mask: int, theta: float) -> None:
    """Rotate between basis states with ``full_mask`` bits set vs ``empty_mask`` bits set.

    ``|full-on-q> -> cos |full-on-q> - sin |full-on-p>`` where ``q`` bits are
    ``full_mask`` and ``p`` bits are ``empty_mask``.
    """
    basis = np.arange(amps.size, dtype=np.int64)
    both = empty_mask | full_mask
    on_q = basis[(basis & both) == full_mask]
    on_p = on_q ^ both
    a, b = amps[on_q], amps[on_p]
    c, s = np.cos(theta), np.sin(theta)
    amps[on_q] = c * a + s * b
    amps[on_p] = -s * a + c * b


def apply_inplace(amps: np.ndarray, gate: GateOp) -> np.ndarray:
    """Apply ``gate`` to a raw amplitude array, returning the (possibly new) array."""
    kind = gate.kind
    basis = None
    if kind == "GENERATOR":
        return gate.generator.apply(amps, gate.theta)
    if kind in ("X", "H", "PHASE"):
        q = gate.qubits[0]
        bit = 1 << q
        basis = np.arange(amps.size, dtype=np.int64)
        zero = basis[(basis & bit) == 0]
        one = zero | bit
        if kind == "X":
            amps[zero], amps[one] = amps[one], amps[zero].copy()
        elif kind == "H":
            a, b = amps[zero], amps[one]
            amps[zero], amps[one] = (a + b) / np.sqrt(2), (a - b) / np.sqrt(2)
        else:
            amps[one] *= np.exp(1j * gate.theta)
        return amps
    if kind == "GIVENS":
        p, q = gate.qubits
        _rotate_pair(amps, 1 << p, 1 << q, gate.theta)
        return amps
    if kind == "PAIR":
        (p, pb), (q, qb) = gate.qubits
        _rotate_pair(amps, (1 << p) | (1 << pb), (1 << q) | (1 << qb), gate.theta)
        return amps
    if kind == "CSWAP":
        c, a, b = gate.qubits
        basis = np.arange(amps.size, dtype=np.int64)
        sel = basis[((basis >> c) & 1 == 1) & ((basis >> a) & 1 == 1) & ((basis >> b) & 1 == 0)]
        partner = sel ^ ((1 << a) | (1 << b))
        amps[sel], amps[partner] = amps[partner], amps[sel].copy()
        return amps
    raise ValueError(f"unknown gate kind {kind!r}")


def apply(state: StateVector, gate: GateOp) -> StateVector:
    _check(gate, state.n_qubits)
    amps = apply_inplace(state.amplitudes.copy(), gate)
    return StateVector(state.n_qubits, amps)


def apply_circuit(state: StateVector, gates) -> StateVector:
    amps = state.amplitudes.copy()
    for g in gates:
        _check(g, state.n_qubits)
        amps = apply_inplace(amps, g)
    return StateVector(state.n_qubits, amps)


def expectation(state: StateVector, op: QubitOperator) -> float:
    if op.n_qubits != state.n_qubits:
        raise ValueError("operator and state sizes differ")
    val = np.vdot(state.amplitudes, op.apply(state.amplitudes))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}; operator not Hermitian?")
    return float(val.real)


def inner_product(a: StateVector, b: StateVector) -> complex:
    if a.n_qubits != b.n_qubits:
        raise ValueError("state sizes differ")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(inner_product(a, b)) ** 2


@dataclass(frozen=True)
class RegisterLayout:
    """Two equal system registers plus a single ancilla qubit."""

    system1: range
    system2: range
    ancilla: int

    def __post_init__(self):
        regs = [set(self.system1), set(self.system2), {self.ancilla}]
        if len(self.system1) != len(self.system2):
            raise ValueError("system registers must have equal width")
        if sum(map(len, regs)) != len(set.union(*regs)):
            raise ValueError("register ranges overlap")

    @classmethod
    def standard(cls, n_system: int) -> RegisterLayout:
        return cls(range(n_system), range(n_system, 2 * n_system), 2 * n_system)

    @property
    def n_qubits(self) -> int:
        return max(max(self.system1), max(self.system2), self.ancilla) + 1


def embed_qubits(state: StateVector, positions, n_total: int) -> StateVector:
    """Place ``state``'s qubit ``k`` on qubit ``positions[k]``; all others are |0>."""
    positions = list(positions)
    if len(positions) != state.n_qubits or len(set(positions)) != len(positions):
        raise ValueError("positions must be distinct, one per qubit")
    src = np.arange(1 << state.n_qubits, dtype=np.int64)
    dst = np.zeros_like(src)
    for k, q in enumerate(positions):
        dst |= ((src >> k) & 1) << q
    amps = np.zeros(1 << n_total, dtype=complex)
    amps[dst] = state.amplitudes
    return StateVector(n_total, amps)


def tensor_embed(state: StateVector, layout: RegisterLayout) -> StateVector:
    """``state`` on system1, vacuum on system2, ancilla in |0>."""
    if state.n_qubits != len(layout.system1):
        raise ValueError("state width differs from system1")
    return embed_qubits(state, layout.system1, layout.n_qubits)


def reduced_density_matrix(state: StateVector, keep) -> np.ndarray:
    """Partial trace onto the qubits in ``keep`` (returned in little-endian order)."""
    keep = list(keep)
    n = state.n_qubits
    rest = [q for q in range(n) if q not in keep]
    psi = state.amplitudes.reshape([2] * n)
    axes_keep = [n - 1 - q for q in reversed(keep)]
    axes_rest = [n - 1 - q for q in reversed(rest)]
    mat = np.transpose(psi, axes_keep + axes_rest).reshape(1 << len(keep), -1)
    return mat @ mat.conj().T
