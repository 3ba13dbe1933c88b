import math

import numpy as np
import pytest

import oracles
from novqe.ansatz import AnsatzCircuit, KUpCCGSDParameters, compile_circuit, hf_reference
from novqe.hamiltonian import QubitOperator, jordan_wigner, load_fixture, synthetic_hamiltonian
from novqe.protocol import (
    DisentanglementError,
    MatrixElementEstimate,
    emulate_shots,
    hadamard_test_readout,
    matrix_elements_exact,
    prepare_plus_state,
    variance_bounds,
)
from novqe.simulator import StateVector, givens, pauli_x, phase, prepare_basis


def random_circuit(k, n, rng, complex_phase=False):
    circ = compile_circuit(KUpCCGSDParameters.random(k, n, rng, 0.8))
    if complex_phase:
        circ = AnsatzCircuit(circ.n_qubits, circ.gates + [phase(int(rng.integers(2 * n)), rng.uniform(-3, 3))])
    return circ


def direct_elements(ci, cj, ref, ham):
    n = ci.n_qubits
    phi_i = ci.run(prepare_basis(n, ref)).amplitudes
    phi_j = cj.run(prepare_basis(n, ref)).amplitudes
    return np.vdot(phi_i, phi_j), np.vdot(phi_i, ham.apply(phi_j))


def test_identity_circuits():
    ham = jordan_wigner(load_fixture("h2"))
    ident = AnsatzCircuit(4, [])
    regs = prepare_plus_state(ident, ident, [0, 1])
    out = hadamard_test_readout(regs, ham)
    assert out.z_anc == pytest.approx(1.0)
    assert out.p_plus == pytest.approx(1.0)
    e_hf = np.vdot(prepare_basis(4, [0, 1]).amplitudes, ham.apply(prepare_basis(4, [0, 1]).amplitudes)).real
    assert out.h_plus == pytest.approx(e_hf)
    assert out.h_minus is None
    assert out.hz == pytest.approx(e_hf)


def test_orthogonal_pair():
    ham = jordan_wigner(load_fixture("h2"))
    # singles pi/2 rotations move the alpha electron to a different orbital
    ci = AnsatzCircuit(4, [])
    cj = AnsatzCircuit(4, [givens(0, 2, math.pi / 2)])
    out = hadamard_test_readout(prepare_plus_state(ci, cj, [0, 1]), ham)
    _, h_ij = direct_elements(ci, cj, [0, 1], ham)
    assert out.z_anc == pytest.approx(0.0, abs=1e-14)
    assert out.p_plus == pytest.approx(0.5)
    assert out.hz == pytest.approx(h_ij.real, abs=1e-12)
    assert out.hz == pytest.approx(0.5 * (out.h_plus - out.h_minus), abs=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_full_state_matches_dense_controlled_unitary(seed):
    rng = np.random.default_rng(seed)
    n_spatial, n = 2, 4
    ref = hf_reference(n_spatial, 1, 1)
    ci, cj = random_circuit(1, n_spatial, rng), random_circuit(1, n_spatial, rng, complex_phase=True)
    U_i = oracles.circuit_unitary(lambda v: ci.run(StateVector(n, v)).amplitudes, n)
    U_j = oracles.circuit_unitary(lambda v: cj.run(StateVector(n, v)).amplitudes, n)
    for imaginary, ph in ((False, 1.0), (True, -1j)):
        regs = prepare_plus_state(ci, cj, ref, imaginary=imaginary)
        expected = oracles.controlled_unitary_state(U_i, U_j, oracles.basis_vector(n, ref), n, ph)
        fid = abs(np.vdot(expected, regs.state.amplitudes)) ** 2
        assert fid > 1 - 1e-10
        assert regs.vacuum_fidelity() > 1 - 1e-10


def test_random_pairs_real_and_imaginary_parts():
    rng = np.random.default_rng(7)
    ints = synthetic_hamiltonian(3, 1)
    ham = jordan_wigner(ints)
    ref = hf_reference(3, ints.n_alpha, ints.n_beta)
    for t in range(20):
        ci = random_circuit(1, 3, rng, complex_phase=t % 2 == 0)
        cj = random_circuit(1, 3, rng, complex_phase=True)
        s_ij, h_ij = direct_elements(ci, cj, ref, ham)
        re = hadamard_test_readout(prepare_plus_state(ci, cj, ref), ham)
        im = hadamard_test_readout(prepare_plus_state(ci, cj, ref, imaginary=True), ham)
        assert re.hz == pytest.approx(h_ij.real, abs=1e-10)
        assert re.z_anc == pytest.approx(s_ij.real, abs=1e-10)
        assert im.hz == pytest.approx(h_ij.imag, abs=1e-10)
        assert im.z_anc == pytest.approx(s_ij.imag, abs=1e-10)
        assert re.p_plus == pytest.approx((1 + s_ij.real) / 2, abs=1e-12)
        identity = re.p_plus * re.h_plus - (1 - re.p_plus) * re.h_minus
        assert identity == pytest.approx(re.hz, abs=1e-12)


def test_matrix_elements_agree_with_protocol():
    rng = np.random.default_rng(8)
    ints = load_fixture("h2")
    ham = jordan_wigner(ints)
    ref = hf_reference(2, 1, 1)
    circuits = [random_circuit(2, 2, rng, complex_phase=True) for _ in range(3)]
    states = [c.run(prepare_basis(4, ref)) for c in circuits]
    H, S = matrix_elements_exact(states, ham)
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            re = hadamard_test_readout(prepare_plus_state(circuits[i], circuits[j], ref), ham)
            im = hadamard_test_readout(prepare_plus_state(circuits[i], circuits[j], ref, True), ham)
            assert H[i, j] == pytest.approx(re.hz + 1j * im.hz, abs=1e-10)
            assert S[i, j] == pytest.approx(re.z_anc + 1j * im.z_anc, abs=1e-10)


def test_real_ansatz_imaginary_parts_vanish():
    rng = np.random.default_rng(9)
    ham = jordan_wigner(load_fixture("h2"))
    ci, cj = random_circuit(1, 2, rng), random_circuit(1, 2, rng)
    im = hadamard_test_readout(prepare_plus_state(ci, cj, [0, 1], imaginary=True), ham)
    assert abs(im.hz) < 1e-12 and abs(im.z_anc) < 1e-12


def test_number_violating_circuit_detected():
    rng = np.random.default_rng(10)
    ci = random_circuit(1, 2, rng)
    bad = AnsatzCircuit(4, [pauli_x(3)])
    with pytest.raises(DisentanglementError):
        prepare_plus_state(ci, bad, [0, 1])


def test_vacuum_reference_rejected():
    ident = AnsatzCircuit(2, [])
    with pytest.raises(ValueError):
        prepare_plus_state(ident, ident, [])


def test_matrix_elements_exact_examples():
    ham = jordan_wigner(load_fixture("h2"))
    s = prepare_basis(4, [0, 1])
    H, S = matrix_elements_exact([s], ham)
    assert S[0, 0] == 1.0
    assert H[0, 0].real == pytest.approx(np.vdot(s.amplitudes, ham.apply(s.amplitudes)).real)
    H, S = matrix_elements_exact([s, s.copy()], ham)
    np.testing.assert_allclose(S, np.ones((2, 2)))
    assert np.linalg.matrix_rank(S) == 1
    with pytest.raises(ValueError):
        matrix_elements_exact([s, prepare_basis(2, [0])], ham)


def test_emulate_shots_examples():
    rng = np.random.default_rng(0)
    assert emulate_shots(0.25, 0.0, 10, rng).mean == 0.25
    with pytest.raises(ValueError):
        emulate_shots(0.0, 1.0, 0, rng)
    a = MatrixElementEstimate(1.0, 2.0, 50)
    b = MatrixElementEstimate(3.0, 2.0, 50)
    pooled = a.pool(b)
    assert pooled.mean == 2.0 and pooled.shots == 100
    assert pooled.variance == pytest.approx(4.0 / 100)
    with pytest.raises(ValueError):
        MatrixElementEstimate(0.0, 1.0, 0).variance


def test_emulate_shots_variance():
    rng = np.random.default_rng(1)
    draws = np.array([emulate_shots(0.0, 2.0, 4, rng).mean for _ in range(100_000)])
    assert draws.var() == pytest.approx(1.0, rel=0.03)


def test_emulate_shots_unbiased():
    sigma, shots, n = 3.0, 25, 10_000
    means = [emulate_shots(1.5, sigma, shots, np.random.default_rng(s)).mean for s in range(n)]
    assert abs(np.mean(means) - 1.5) < 4 * sigma / math.sqrt(shots * n)


def test_variance_bounds_examples():
    assert variance_bounds(QubitOperator.from_pairs(1, [("Z", 0.5)])) == (0.5, 1.0)
    assert variance_bounds(QubitOperator.identity(2, 3.0))[0] == 0.0
    sigma_h, _ = variance_bounds(jordan_wigner(load_fixture("h4")))
    assert sigma_h == pytest.approx(5.29807, rel=1e-5)
