"""k-UpCCGSD states compiled as a single Trotter step of exact generator gates."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from novqe.hamiltonian import excitation_generator
from novqe.simulator import (
    GateOp,
    Generator,
    StateVector,
    apply_inplace,
    generator_exponential,
    prepare_basis,
)


def orbital_pairs(n_spatial: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(n_spatial), 2))


@dataclass
class KUpCCGSDParameters:
    """Amplitudes of ``k`` blocks; ``doubles[x]`` and ``singles[x]`` are indexed like ``orbital_pairs``."""

    k: int
    n_spatial: int
    doubles: np.ndarray
    singles: np.ndarray

    def __post_init__(self):
        shape = (self.k, len(orbital_pairs(self.n_spatial)))
        self.doubles = np.asarray(self.doubles, dtype=float).reshape(shape)
        self.singles = np.asarray(self.singles, dtype=float).reshape(shape)

    @staticmethod
    def count(k: int, n_spatial: int) -> int:
        return k * 2 * len(orbital_pairs(n_spatial))

    @classmethod
    def zeros(cls, k: int, n_spatial: int) -> KUpCCGSDParameters:
        return cls.unflatten(k, n_spatial, np.zeros(cls.count(k, n_spatial)))

    @classmethod
    def random(cls, k: int, n_spatial: int, rng: np.random.Generator, sigma: float = 1.0):
        return cls.unflatten(k, n_spatial, rng.normal(0.0, sigma, cls.count(k, n_spatial)))

    def flatten(self) -> np.ndarray:
        """Block-major, doubles then singles, pairs in lexicographic order."""
        return np.concatenate([self.doubles, self.singles], axis=1).reshape(-1)

    @classmethod
    def unflatten(cls, k: int, n_spatial: int, theta) -> KUpCCGSDParameters:
        theta = np.asarray(theta, dtype=float)
        n_pairs = len(orbital_pairs(n_spatial))
        if theta.shape != (k * 2 * n_pairs,):
            raise ValueError(f"expected {k * 2 * n_pairs} parameters, got {theta.shape}")
        blocks = theta.reshape(k, 2, n_pairs)
        return cls(k, n_spatial, blocks[:, 0].copy(), blocks[:, 1].copy())

    def to_json(self) -> str:
        return json.dumps(self.flatten().tolist())

    @classmethod
    def from_json(cls, k: int, n_spatial: int, text: str) -> KUpCCGSDParameters:
        return cls.unflatten(k, n_spatial, json.loads(text))


@lru_cache(maxsize=None)
def paired_double_generator(n_spatial: int, p: int, q: int) -> Generator:
    """``i (A - A^dagger)`` with ``A = a+_{q alpha} a+_{q beta} a_{p beta} a_{p alpha}``."""
    nq = 2 * n_spatial
    op = excitation_generator(nq, [(1.0, (2 * q, 2 * q + 1), (2 * p + 1, 2 * p))])
    return Generator(op)


@lru_cache(maxsize=None)
def singles_generator(n_spatial: int, p: int, q: int) -> Generator:
    """``i (A - A^dagger)`` with ``A = a+_{q alpha} a_{p alpha} + a+_{q beta} a_{p beta}``."""
    nq = 2 * n_spatial
    op = excitation_generator(
        nq, [(1.0, (2 * q,), (2 * p,)), (1.0, (2 * q + 1,), (2 * p + 1,))]
    )
    return Generator(op)


@dataclass
class AnsatzCircuit:
    n_qubits: int
    gates: list[GateOp]

    def inverse(self) -> AnsatzCircuit:
        return AnsatzCircuit(self.n_qubits, [g.inverse() for g in reversed(self.gates)])

    def run(self, state: StateVector) -> StateVector:
        if state.n_qubits != self.n_qubits:
            raise ValueError("circuit and state sizes differ")
        amps = state.amplitudes.copy()
        for g in self.gates:
            amps = apply_inplace(amps, g)
        return StateVector(self.n_qubits, amps)


def hf_reference(n_spatial: int, n_alpha: int, n_beta: int) -> list[int]:
    """Aufbau occupation: alpha electrons on even qubits, beta on odd."""
    if n_alpha > n_spatial or n_beta > n_spatial or min(n_alpha, n_beta) < 0:
        raise ValueError(f"cannot place ({n_alpha}, {n_beta}) electrons in {n_spatial} orbitals")
    return sorted([2 * p for p in range(n_alpha)] + [2 * p + 1 for p in range(n_beta)])


def compile_circuit(params: KUpCCGSDParameters) -> AnsatzCircuit:
    n = params.n_spatial
    pairs = orbital_pairs(n)
    gates = []
    for x in range(params.k):
        for a, (p, q) in enumerate(pairs):
            gates.append(generator_exponential(paired_double_generator(n, p, q), params.doubles[x, a]))
        for a, (p, q) in enumerate(pairs):
            gates.append(generator_exponential(singles_generator(n, p, q), params.singles[x, a]))
    return AnsatzCircuit(2 * n, gates)


def prepare(params: KUpCCGSDParameters, reference) -> StateVector:
    circuit = compile_circuit(params)
    return circuit.run(prepare_basis(circuit.n_qubits, reference))
