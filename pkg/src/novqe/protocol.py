"""Matrix-element measurement through an effective controlled unitary.

Two uncontrolled, number-conserving state-preparation circuits are turned into
``U_i (x) |0><0| + U_j (x) |1><1|`` by swapping the second branch into a
vacuum register, running both circuits, and swapping back.  A Hadamard test
on the ancilla then yields ``Re <phi_i|phi_j>`` and, jointly with ``H``, the
off-diagonal ``Re <phi_i|H|phi_j>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from novqe.ansatz import AnsatzCircuit
from novqe.hamiltonian import PauliString, QubitOperator, one_norm
from novqe.simulator import (
    GateOp,
    Generator,
    RegisterLayout,
    StateVector,
    apply_inplace,
    controlled_swap,
    hadamard,
    phase,
    prepare_basis,
    tensor_embed,
)

VACUUM_TOL = 1e-10


class DisentanglementError(RuntimeError):
    """The second system register did not return to the vacuum."""


@dataclass
class MatrixElementEstimate:
    """Running estimate of one matrix element; variance is ``intrinsic_sigma**2 / shots``."""

    mean: float
    intrinsic_sigma: float
    shots: int

    def __post_init__(self):
        if self.shots < 0 or self.intrinsic_sigma < 0:
            raise ValueError("shots and intrinsic_sigma must be non-negative")

    @property
    def variance(self) -> float:
        if self.shots == 0:
            raise ValueError("variance undefined without shots")
        return self.intrinsic_sigma**2 / self.shots

    def pool(self, other: MatrixElementEstimate) -> MatrixElementEstimate:
        total = self.shots + other.shots
        if total == 0:
            return MatrixElementEstimate(self.mean, self.intrinsic_sigma, 0)
        mean = (self.shots * self.mean + other.shots * other.mean) / total
        return MatrixElementEstimate(mean, self.intrinsic_sigma, total)


@dataclass
class PairedRegisters:
    layout: RegisterLayout
    state: StateVector
    imaginary: bool = False

    def system_and_ancilla(self) -> StateVector:
        """Drop the (vacuum) second register: qubits become system1 then ancilla."""
        lay = self.layout
        n = len(lay.system1)
        full = self.state.amplitudes
        src = np.arange(1 << (n + 1), dtype=np.int64)
        dst = np.zeros_like(src)
        for k, q in enumerate(list(lay.system1) + [lay.ancilla]):
            dst |= ((src >> k) & 1) << q
        return StateVector(n + 1, full[dst].copy())

    def vacuum_fidelity(self) -> float:
        """Probability that the second system register is empty."""
        mask = 0
        for q in self.layout.system2:
            mask |= 1 << q
        basis = np.arange(self.state.amplitudes.size, dtype=np.int64)
        return float(np.sum(np.abs(self.state.amplitudes[(basis & mask) == 0]) ** 2))


def prepare_plus_state(
    circ_i: AnsatzCircuit,
    circ_j: AnsatzCircuit,
    reference,
    imaginary: bool = False,
) -> PairedRegisters:
    """Prepare ``(|phi_i>|0> + e^{i a}|phi_j>|1>)/sqrt2`` with ``a = 0`` or ``-pi/2``.

    The imaginary variant uses an S-dagger on the ancilla so that the
    readout returns imaginary parts with a positive sign.
    """
    n = circ_i.n_qubits
    if circ_j.n_qubits != n:
        raise ValueError("circuits act on different register widths")
    reference = list(reference)
    if not reference:
        raise ValueError("reference must contain at least one particle (vacuum overlap)")

    layout = RegisterLayout.standard(n)
    state = tensor_embed(prepare_basis(n, reference), layout)
    amps = state.amplitudes
    anc = layout.ancilla
    amps = apply_inplace(amps, hadamard(anc))
    if imaginary:
        amps = apply_inplace(amps, phase(anc, -math.pi / 2))

    swaps = [controlled_swap(anc, a, b) for a, b in zip(layout.system1, layout.system2)]
    for g in swaps:
        amps = apply_inplace(amps, g)
    for g in _lift(circ_i, layout.system1, layout.n_qubits):
        amps = apply_inplace(amps, g)
    for g in _lift(circ_j, layout.system2, layout.n_qubits):
        amps = apply_inplace(amps, g)
    for g in swaps:
        amps = apply_inplace(amps, g)

    regs = PairedRegisters(layout, StateVector(layout.n_qubits, amps), imaginary)
    fid = regs.vacuum_fidelity()
    if fid < 1 - VACUUM_TOL:
        raise DisentanglementError(
            f"second register vacuum fidelity {fid:.12f}; circuit does not conserve particle number"
        )
    return regs


def _lift(circuit: AnsatzCircuit, register: range, n_total: int):
    """Relabel a circuit onto ``register`` inside an ``n_total``-qubit state."""
    offset = register.start
    lifted = []
    for g in circuit.gates:
        if g.kind == "GENERATOR":
            lifted.append(GateOp("GENERATOR", (), g.theta, _lift_generator(g.generator, offset, n_total)))
        else:
            qubits = tuple(
                tuple(q + offset for q in item) if isinstance(item, tuple) else item + offset
                for item in g.qubits
            )
            lifted.append(GateOp(g.kind, qubits, g.theta, None))
    return lifted


_LIFT_CACHE: dict = {}


def _lift_generator(gen: Generator, offset: int, n_total: int) -> Generator:
    key = (id(gen), offset, n_total)
    hit = _LIFT_CACHE.get(key)
    if hit is not None and hit[0] is gen:
        return hit[1]
    terms = {}
    for p, c in gen.op.terms.items():
        letters = ["I"] * n_total
        for k, a in enumerate(p.letters):
            letters[k + offset] = a
        terms[PauliString("".join(letters))] = c
    lifted = Generator(QubitOperator(n_total, terms))
    _LIFT_CACHE[key] = (gen, lifted)
    return lifted


@dataclass
class HadamardReadout:
    """Ancilla statistics after the final Hadamard.

    ``h_plus``/``h_minus`` are the energies conditioned on the ancilla
    outcome; a branch that never occurs is reported as ``None``.
    """

    z_anc: float
    hz: float
    h_plus: float | None
    h_minus: float | None
    p_plus: float


def hadamard_test_readout(regs: PairedRegisters, ham: QubitOperator) -> HadamardReadout:
    n = len(regs.layout.system1)
    if ham.n_qubits != n:
        raise ValueError("Hamiltonian width differs from the system register")
    reduced = regs.system_and_ancilla()
    amps = apply_inplace(reduced.amplitudes, hadamard(n))
    half = 1 << n
    branch0, branch1 = amps[:half], amps[half:]
    p_plus = float(np.vdot(branch0, branch0).real)
    p_minus = float(np.vdot(branch1, branch1).real)
    e0 = float(np.vdot(branch0, ham.apply(branch0)).real)
    e1 = float(np.vdot(branch1, ham.apply(branch1)).real)
    hz = e0 - e1
    h_plus = e0 / p_plus if p_plus > 1e-14 else None
    h_minus = e1 / p_minus if p_minus > 1e-14 else None
    rebuilt = (p_plus * h_plus if h_plus is not None else 0.0) - (
        p_minus * h_minus if h_minus is not None else 0.0
    )
    if abs(rebuilt - hz) > 1e-12 * max(1.0, abs(hz)):
        raise RuntimeError("conditional-energy identity violated")
    return HadamardReadout(p_plus - p_minus, hz, h_plus, h_minus, p_plus)


def matrix_elements_exact(states: list[StateVector], ham: QubitOperator) -> tuple[np.ndarray, np.ndarray]:
    """``H_ij = <phi_i|H|phi_j>`` and ``S_ij = <phi_i|phi_j>`` by direct inner products."""
    if not states:
        raise ValueError("no states given")
    n = states[0].n_qubits
    if any(s.n_qubits != n for s in states) or ham.n_qubits != n:
        raise ValueError("state and operator sizes differ")
    psi = np.stack([s.amplitudes for s in states], axis=1)
    hpsi = ham.apply(psi)
    H = psi.conj().T @ hpsi
    S = psi.conj().T @ psi
    H = 0.5 * (H + H.conj().T)
    S = 0.5 * (S + S.conj().T)
    np.fill_diagonal(S, 1.0)
    return H, S


def emulate_shots(
    true_value: float,
    intrinsic_sigma: float,
    shots: int,
    rng: np.random.Generator,
) -> MatrixElementEstimate:
    """One Gaussian draw standing in for ``shots`` repetitions of the circuit."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    mean = true_value + intrinsic_sigma / math.sqrt(shots) * rng.standard_normal()
    return MatrixElementEstimate(float(mean), intrinsic_sigma, int(shots))


def variance_bounds(ham: QubitOperator) -> tuple[float, float]:
    """Intrinsic sigmas for Hamiltonian and overlap elements."""
    return one_norm(ham), 1.0
