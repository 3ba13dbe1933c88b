import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from novqe.hamiltonian import (
    FCIDUMPError,
    PauliString,
    QubitOperator,
    fci_oracle,
    jordan_wigner,
    load_fixture,
    number_operator,
    one_norm,
    parse_fcidump,
    sector_indices,
    synthetic_hamiltonian,
    to_fcidump,
)

HEADER = " &FCI NORB={norb},NELEC={nelec},MS2={ms2},\n &END\n"

# FCI energies computed with an external quantum-chemistry package when the
# fixtures were generated, frozen here.
FCI_REFERENCE = {
    "h2": -1.137283834488501,
    "h4": -1.9695121652162804,
}


def test_parse_minimal_fields():
    text = HEADER.format(norb=1, nelec=2, ms2=0) + "0.5 1 1 0 0\n0.7 1 1 1 1\n0.1 0 0 0 0\n"
    ints = parse_fcidump(text)
    assert ints.n_spatial == 1
    assert ints.h1[0, 0] == 0.5
    assert ints.h2[0, 0, 0, 0] == 0.7
    assert ints.e_nuclear == 0.1
    assert (ints.n_alpha, ints.n_beta) == (1, 1)


def test_parse_symmetry_completion():
    text = HEADER.format(norb=2, nelec=2, ms2=0) + "0.3 1 2 1 1\n"
    ints = parse_fcidump(text)
    for idx in set(itertools.permutations((0, 1, 0, 0))):
        assert ints.h2[idx] == pytest.approx(0.3)
    assert ints.h2[0, 0, 0, 0] == 0.0
    ints.check_symmetry()


def test_parse_open_shell_counts():
    ints = parse_fcidump(HEADER.format(norb=3, nelec=3, ms2=1) + "0.0 0 0 0 0\n")
    assert (ints.n_alpha, ints.n_beta) == (2, 1)


@pytest.mark.parametrize(
    "body, fragment",
    [
        ("0.1 1 3 0 0\n", "line 3"),
        ("0.1 1 2 1\n", "line 3"),
        ("0.2 1 2 1 2\n0.2 2 1 2 1\n0.5 2 1 1 2\n", "line 5"),
        ("abc 1 1 0 0\n", "line 3"),
    ],
)
def test_parse_errors_name_line(body, fragment):
    with pytest.raises(FCIDUMPError, match=fragment):
        parse_fcidump(HEADER.format(norb=2, nelec=2, ms2=0) + body)


def test_parse_malformed_header():
    with pytest.raises(FCIDUMPError):
        parse_fcidump("NORB=2\n0.1 1 1 0 0\n")
    with pytest.raises(FCIDUMPError, match="NELEC"):
        parse_fcidump(HEADER.format(norb=1, nelec=3, ms2=0))


def test_h4_fixture_counts():
    ints = load_fixture("h4")
    assert ints.n_spatial == 4
    assert (ints.n_alpha, ints.n_beta) == (2, 2)


@pytest.mark.parametrize("name", ["h2", "h4", "hexatriene_trans", "hexatriene_twist90"])
def test_fixtures_symmetric(name):
    ints = load_fixture(name)
    ints.check_symmetry(1e-10)
    assert ints.n_electrons == 2 * ints.n_alpha


@pytest.mark.parametrize("seed", [0, 3, 11])
def test_fcidump_round_trip(seed):
    ints = synthetic_hamiltonian(3, seed)
    back = parse_fcidump(to_fcidump(ints))
    assert back.n_spatial == ints.n_spatial
    assert (back.n_alpha, back.n_beta) == (ints.n_alpha, ints.n_beta)
    np.testing.assert_allclose(back.h1, ints.h1, atol=1e-12)
    np.testing.assert_allclose(back.h2, ints.h2, atol=1e-12)
    assert back.e_nuclear == pytest.approx(ints.e_nuclear, abs=1e-12)


def test_single_number_term():
    # h a+_0 a_0 on one spatial orbital's alpha qubit
    ints = parse_fcidump(HEADER.format(norb=1, nelec=1, ms2=1) + "0.8 1 1 0 0\n")
    op = jordan_wigner(ints)
    expected = QubitOperator.from_pairs(2, [("II", 0.8), ("ZI", -0.4), ("IZ", -0.4)])
    assert op.terms == pytest.approx(expected.terms)


def test_hopping_term_matches_dense_ladders():
    h = 0.37
    a, ad = oracles.ladder_ops(2)
    dense = h * (ad[0] @ a[1] + ad[1] @ a[0])
    expected = 0.5 * h * (oracles.pauli_dense("XX") + oracles.pauli_dense("YY"))
    np.testing.assert_allclose(dense, expected, atol=1e-14)
    # qubits 0 and 2 are alpha spin orbitals of spatial orbitals 0 and 1
    ints = parse_fcidump(HEADER.format(norb=2, nelec=1, ms2=1) + f"{h} 1 2 0 0\n")
    op = jordan_wigner(ints)
    assert op.terms[PauliString("XZXI")] == pytest.approx(h / 2)
    assert op.terms[PauliString("YZYI")] == pytest.approx(h / 2)


@pytest.mark.parametrize("seed", range(4))
def test_jordan_wigner_matches_dense_fermion_oracle(seed):
    ints = synthetic_hamiltonian(2 + seed % 2, seed)
    np.testing.assert_allclose(
        jordan_wigner(ints).to_dense(), oracles.fermion_hamiltonian_dense(ints), atol=1e-12
    )


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_jordan_wigner_hermitian_and_number_conserving(seed):
    op = jordan_wigner(synthetic_hamiltonian(3, seed))
    dense = op.to_dense()
    assert np.abs(dense - dense.conj().T).max() < 1e-12
    N = number_operator(6).to_dense()
    assert np.linalg.norm(dense @ N - N @ dense) < 1e-10


def test_synthetic_deterministic():
    a, b = synthetic_hamiltonian(2, 7), synthetic_hamiltonian(2, 7)
    np.testing.assert_array_equal(a.h1, b.h1)
    np.testing.assert_array_equal(a.h2, b.h2)
    assert a.e_nuclear == b.e_nuclear
    assert np.abs(a.h2).max() <= 1 and np.abs(a.h1).max() <= 1
    a.check_symmetry()


def test_one_norm_examples():
    assert one_norm(QubitOperator.from_pairs(1, [("I", 0.5), ("Z", -0.5)])) == 0.5
    assert one_norm(QubitOperator(3, {})) == 0.0


@pytest.mark.parametrize(
    "name, expected",
    [("h2", 1.8871072169), ("h4", 5.29807), ("hexatriene_trans", 12.622)],
)
def test_one_norm_regression(name, expected):
    # pinned from the shipped fixtures
    assert one_norm(jordan_wigner(load_fixture(name))) == pytest.approx(expected, rel=1e-4)


def test_qubit_operator_prunes_and_rejects_complex():
    op = QubitOperator.from_pairs(2, [("XI", 1e-13), ("ZZ", 1.0)])
    assert list(op.terms) == [PauliString("ZZ")]
    with pytest.raises(ValueError):
        QubitOperator(1, {PauliString("X"): 1j})


def test_fci_oracle_trivial():
    assert fci_oracle(QubitOperator.from_pairs(1, [("Z", -1.0)])) == -1.0
    op = QubitOperator.from_pairs(2, [("XX", 0.5), ("YY", 0.5)])
    assert fci_oracle(op, n_electrons=1) == pytest.approx(-1.0, abs=1e-14)


@pytest.mark.parametrize("name", ["h2", "h4"])
def test_fci_matches_external_reference(name):
    ints = load_fixture(name)
    e = fci_oracle(jordan_wigner(ints), ints.n_electrons, ints.sz)
    assert e == pytest.approx(FCI_REFERENCE[name], abs=1e-9)


def test_fci_oracle_matches_dense_ground_state_in_sector():
    ints = load_fixture("h4")
    op = jordan_wigner(ints)
    dense = oracles.fermion_hamiltonian_dense(ints)
    e_dense = oracles.sector_ground_energy(dense, 8, 2, 2)
    assert fci_oracle(op, ints.n_electrons, ints.sz) == pytest.approx(e_dense, abs=1e-10)


def test_fci_oracle_size_limit():
    with pytest.raises(ValueError):
        fci_oracle(QubitOperator(17, {}))


def test_fci_variational_bound_random_states():
    ints = load_fixture("h4")
    op = jordan_wigner(ints)
    e0 = fci_oracle(op, ints.n_electrons, ints.sz)
    idx = sector_indices(8, 4, 0.0)
    rng = np.random.default_rng(5)
    for _ in range(20):
        v = np.zeros(256, dtype=complex)
        v[idx] = rng.normal(size=idx.size) + 1j * rng.normal(size=idx.size)
        v /= np.linalg.norm(v)
        assert np.vdot(v, op.apply(v)).real >= e0 - 1e-12
