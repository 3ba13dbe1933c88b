"""Independent dense reference implementations used as test oracles.

Everything here is built from Kronecker products and ``scipy.linalg.expm``
and shares no code with the package under test.
"""

from __future__ import annotations

import itertools
from functools import reduce

import numpy as np
import scipy.linalg

I2 = np.eye(2)
Z = np.diag([1.0, -1.0])
LOWER = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1|: removes a particle
PAULI = {
    "I": I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": Z.astype(complex),
}


def kron_little_endian(factors: list[np.ndarray]) -> np.ndarray:
    """``factors[k]`` acts on qubit ``k``; qubit 0 is the least significant bit."""
    return reduce(np.kron, reversed(factors))


def annihilator(j: int, n: int) -> np.ndarray:
    factors = [Z] * j + [LOWER] + [I2] * (n - j - 1)
    return kron_little_endian(factors)


def ladder_ops(n: int):
    a = [annihilator(j, n) for j in range(n)]
    return a, [x.T.conj() for x in a]


def pauli_dense(letters: str) -> np.ndarray:
    return kron_little_endian([PAULI[c] for c in letters])


def fermion_hamiltonian_dense(ints) -> np.ndarray:
    """Second-quantized Hamiltonian from spatial integrals, interleaved spin orbitals."""
    n = 2 * ints.n_spatial
    a, ad = ladder_ops(n)
    H = ints.e_nuclear * np.eye(1 << n)
    for p, q in itertools.product(range(ints.n_spatial), repeat=2):
        for s in range(2):
            H = H + ints.h1[p, q] * ad[2 * p + s] @ a[2 * q + s]
    for p, q, r, t in itertools.product(range(ints.n_spatial), repeat=4):
        v = ints.h2[p, q, r, t]
        if v == 0:
            continue
        for s1, s2 in itertools.product(range(2), repeat=2):
            H = H + 0.5 * v * ad[2 * p + s1] @ ad[2 * r + s2] @ a[2 * t + s2] @ a[2 * q + s1]
    return H


def kupccgsd_unitary(k: int, n_spatial: int, doubles, singles) -> np.ndarray:
    """Dense product of exponentials, doubles then singles per block, pairs lexicographic."""
    n = 2 * n_spatial
    a, ad = ladder_ops(n)
    pairs = list(itertools.combinations(range(n_spatial), 2))
    U = np.eye(1 << n, dtype=complex)
    for x in range(k):
        for idx, (p, q) in enumerate(pairs):
            A = ad[2 * q] @ ad[2 * q + 1] @ a[2 * p + 1] @ a[2 * p]
            U = scipy.linalg.expm(doubles[x][idx] * (A - A.T.conj())) @ U
        for idx, (p, q) in enumerate(pairs):
            A = ad[2 * q] @ a[2 * p] + ad[2 * q + 1] @ a[2 * p + 1]
            U = scipy.linalg.expm(singles[x][idx] * (A - A.T.conj())) @ U
    return U


def basis_vector(n: int, occupied) -> np.ndarray:
    v = np.zeros(1 << n, dtype=complex)
    v[sum(1 << q for q in occupied)] = 1.0
    return v


def sector_ground_energy(H: np.ndarray, n: int, n_alpha: int, n_beta: int) -> float:
    idx = [
        b for b in range(1 << n)
        if sum(b >> k & 1 for k in range(0, n, 2)) == n_alpha
        and sum(b >> k & 1 for k in range(1, n, 2)) == n_beta
    ]
    return float(np.linalg.eigvalsh(H[np.ix_(idx, idx)])[0])


def gevp_ground_2x2(H: np.ndarray, S: np.ndarray) -> float:
    """Smallest root of det(H - E S) = 0 via the quadratic formula."""
    a = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
    b = -(H[0, 0] * S[1, 1] + H[1, 1] * S[0, 0] - H[0, 1] * S[1, 0] - H[1, 0] * S[0, 1])
    c = H[0, 0] * H[1, 1] - H[0, 1] * H[1, 0]
    disc = np.sqrt(b * b - 4 * a * c)
    return float(min((-b - disc) / (2 * a), (-b + disc) / (2 * a)))


def circuit_unitary(run, n: int) -> np.ndarray:
    """Dense matrix of any linear map given as ``run(vector) -> vector``, column by column."""
    cols = []
    for b in range(1 << n):
        e = np.zeros(1 << n, dtype=complex)
        e[b] = 1.0
        cols.append(run(e))
    return np.stack(cols, axis=1)


def controlled_unitary_state(U_i: np.ndarray, U_j: np.ndarray, ref: np.ndarray, n: int,
                             ancilla_phase: complex = 1.0) -> np.ndarray:
    """(U_i (x) |0><0| + U_j (x) |1><1|)(|ref> (x) (|0> + phase |1>)/sqrt2) on system1,
    with an empty second register between system1 and the ancilla."""
    P0 = np.diag([1.0, 0.0])
    P1 = np.diag([0.0, 1.0])
    CU = np.kron(P0, U_i) + np.kron(P1, U_j)
    anc = np.array([1.0, ancilla_phase]) / np.sqrt(2)
    small = CU @ np.kron(anc, ref)
    full = np.zeros(1 << (2 * n + 1), dtype=complex)
    full[:1 << n] = small[:1 << n]
    full[1 << (2 * n):(1 << (2 * n)) + (1 << n)] = small[1 << n:]
    return full


def mc_sigma_reference(H, S, mH, mS, sigma_H, sigma_S, zH, zS) -> float:
    """Bessel-corrected spread of sampled ground energies, one generalized eigh per sample.

    ``zH``/``zS`` are (K, M, M) symmetric draws; unmeasured entries (m = 0) get no noise.
    """
    with np.errstate(divide="ignore"):
        sH = np.where(mH > 0, sigma_H / np.sqrt(np.where(mH > 0, mH, 1)), 0.0)
        sS = np.where(mS > 0, sigma_S / np.sqrt(np.where(mS > 0, mS, 1)), 0.0)
    energies = []
    for k in range(zH.shape[0]):
        w = scipy.linalg.eigh(H + sH * zH[k], S + sS * zS[k], eigvals_only=True)
        energies.append(w[0])
    energies = np.array(energies)
    mean = sum(energies) / len(energies)
    return float(np.sqrt(sum((e - mean) ** 2 for e in energies) / (len(energies) - 1)))


def random_truth(M: int, rng: np.random.Generator):
    """Well-conditioned symmetric (H, S) with unit overlap diagonal."""
    B = rng.normal(size=(M, M + 2))
    S = B @ B.T
    d = np.sqrt(np.diag(S))
    S = S / np.outer(d, d)
    A = rng.normal(size=(M, M))
    H = -1.0 + 0.3 * (A + A.T)
    return H, S
