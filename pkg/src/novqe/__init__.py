"""Non-orthogonal VQE simulation: ansatz states, subspace diagonalization and shot scheduling."""

from novqe.ansatz import KUpCCGSDParameters, compile_circuit, hf_reference, prepare
from novqe.driver import ExperimentConfig, SubspaceCheckpoint, grow_subspace, run_measurement_experiment
from novqe.eigensolver import SubspaceProblem, canonical_orthogonalize, energy_sensitivity, solve_gevp
from novqe.hamiltonian import (
    FermionIntegrals,
    PauliString,
    QubitOperator,
    fci_oracle,
    jordan_wigner,
    load_fixture,
    one_norm,
    parse_fcidump,
)
from novqe.simulator import StateVector, apply, expectation, inner_product, prepare_basis

__all__ = [
    "ExperimentConfig",
    "FermionIntegrals",
    "KUpCCGSDParameters",
    "PauliString",
    "QubitOperator",
    "StateVector",
    "SubspaceCheckpoint",
    "SubspaceProblem",
    "apply",
    "canonical_orthogonalize",
    "compile_circuit",
    "energy_sensitivity",
    "expectation",
    "fci_oracle",
    "grow_subspace",
    "hf_reference",
    "inner_product",
    "jordan_wigner",
    "load_fixture",
    "one_norm",
    "parse_fcidump",
    "prepare",
    "prepare_basis",
    "run_measurement_experiment",
    "solve_gevp",
]
__version__ = "0.1.0"
