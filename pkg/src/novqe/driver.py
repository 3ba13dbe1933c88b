"""Experiment orchestration: subspace growth and measurement-scheduling runs."""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.optimize

from novqe.ansatz import KUpCCGSDParameters, hf_reference, prepare
from novqe.eigensolver import EXACT_CUTOFF, SAMPLED_CUTOFF, SubspaceProblem, solve_gevp
from novqe.hamiltonian import (
    FIXTURE_DIR,
    FermionIntegrals,
    QubitOperator,
    fci_oracle,
    jordan_wigner,
    load_fixture,
    sector_indices,
    sector_matrix,
)
from novqe.protocol import matrix_elements_exact, variance_bounds
from novqe.uncertainty import (
    DEFAULT_BATCH,
    DEFAULT_BOOTSTRAP,
    DEFAULT_SAMPLES,
    ConvergenceFit,
    MeasurementLedger,
    NoiseDraws,
    TrajectoryRow,
    adaptive_step,
    bootstrap_errorbar,
    fit_kappa,
    nonadaptive_step,
    pilot,
    point_estimate,
    sample_energies,
    sigma_mc,
)

log = logging.getLogger(__name__)

MODES = ("exact-growth", "measurement-adaptive", "measurement-nonadaptive")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass
class ExperimentConfig:
    fixture: str | None = None
    seed: int | None = None
    mode: str = "exact-growth"
    k: int = 1
    M_max: int = 1
    init_sigma2: float = 1e-4
    fd_step: float = 1e-6
    max_calls: int = 5000
    grad_tol: float = 1e-6
    cutoff: float | None = None
    checkpoint: str | None = None
    batch: int = DEFAULT_BATCH
    budget: int = 10**8
    n_boot: int = DEFAULT_BOOTSTRAP
    n_mc: int = DEFAULT_SAMPLES
    zero_noise: bool = False
    max_overlap_warn: float = 0.99

    def __post_init__(self):
        self.validate()

    @property
    def effective_cutoff(self) -> float:
        if self.cutoff is not None:
            return self.cutoff
        return EXACT_CUTOFF if self.mode == "exact-growth" else SAMPLED_CUTOFF

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode: expected one of {MODES}, got {self.mode!r}")
        if self.seed is None:
            raise ConfigError("seed: a seed is required for reproducibility")
        for name in ("k", "M_max", "max_calls", "batch", "budget", "n_boot", "n_mc"):
            if int(getattr(self, name)) <= 0:
                raise ConfigError(f"{name}: must be positive")
        for name in ("init_sigma2", "fd_step", "grad_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name}: must be positive")
        if self.cutoff is not None and not self.cutoff > 0:
            raise ConfigError("cutoff: must be positive")
        if self.n_boot < 2 or self.n_mc < 2:
            raise ConfigError("n_boot/n_mc: need at least two samples")
        if self.mode == "exact-growth":
            if not self.fixture:
                raise ConfigError("fixture: a fixture path is required")
            if resolve_fixture(self.fixture) is None:
                raise ConfigError(f"fixture: {self.fixture!r} not found")
        elif not self.checkpoint:
            raise ConfigError("checkpoint: measurement modes require a states checkpoint")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["cutoff"] = self.effective_cutoff
        return d


def resolve_fixture(name: str) -> Path | None:
    path = Path(name)
    if path.is_file():
        return path
    shipped = FIXTURE_DIR / f"{name}.fcidump"
    return shipped if shipped.is_file() else None


def fixture_id(name: str) -> str:
    """Shipped fixtures are recorded by short name, anything else by path."""
    path = resolve_fixture(name)
    if path is not None and path.parent.resolve() == FIXTURE_DIR.resolve():
        return path.name.removesuffix(".fcidump")
    return str(name)


@dataclass
class System:
    """A fixture ready for simulation: Hamiltonian, reference and its sector block."""

    ints: FermionIntegrals
    ham: QubitOperator
    reference: list[int]
    sector: np.ndarray
    h_sector: np.ndarray

    @classmethod
    def load(cls, fixture: str) -> System:
        path = resolve_fixture(fixture)
        if path is None:
            raise FileNotFoundError(fixture)
        ints = load_fixture(str(path))
        ham = jordan_wigner(ints)
        sector = sector_indices(ints.n_qubits, ints.n_electrons, ints.sz)
        ref = hf_reference(ints.n_spatial, ints.n_alpha, ints.n_beta)
        return cls(ints, ham, ref, sector, sector_matrix(ham, sector).real)

    def fci_energy(self) -> float:
        return fci_oracle(self.ham, self.ints.n_electrons, self.ints.sz)

    def sector_state(self, params: KUpCCGSDParameters) -> np.ndarray:
        amps = prepare(params, self.reference).amplitudes[self.sector]
        return amps.real if np.abs(amps.imag).max() < 1e-12 else amps


@dataclass
class SubspaceCheckpoint:
    fixture: str
    k: int
    n_spatial: int
    params: list[list[float]]
    energy_trace: list[float]
    final_energy: float
    cutoff: float = EXACT_CUTOFF
    retries: list[int] = field(default_factory=list)

    @property
    def M(self) -> int:
        return len(self.params)

    def parameters(self) -> list[KUpCCGSDParameters]:
        return [KUpCCGSDParameters.unflatten(self.k, self.n_spatial, t) for t in self.params]

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=1)

    @classmethod
    def from_json(cls, text: str) -> SubspaceCheckpoint:
        return cls(**json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> SubspaceCheckpoint:
        return cls.from_json(Path(path).read_text())

    def replay(self, system: System | None = None) -> float:
        """Re-prepare every state and re-solve the subspace problem."""
        system = system or System.load(self.fixture)
        V = np.stack([system.sector_state(p) for p in self.parameters()], axis=1)
        H = V.conj().T @ system.h_sector @ V
        S = V.conj().T @ V
        return solve_gevp(SubspaceProblem(H, S, self.cutoff)).energy


class _BudgetExhausted(Exception):
    pass


class _SubspaceObjective:
    """Ground energy with states ``1..M-1`` frozen, as a function of the new state's parameters."""

    def __init__(self, system: System, frozen: list[np.ndarray], k: int, cutoff: float,
                 max_calls: int | None = None):
        self.system = system
        self.k = k
        self.cutoff = cutoff
        self.max_calls = max_calls
        self.calls = 0
        self.best: tuple[float, np.ndarray] | None = None
        n = len(frozen)
        self.V = np.stack(frozen, axis=1) if frozen else np.zeros((system.sector.size, 0))
        self.HV = system.h_sector @ self.V
        self.H0 = self.V.conj().T @ self.HV
        self.S0 = self.V.conj().T @ self.V
        self.M = n + 1

    def matrices(self, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        M = self.M
        hphi = self.system.h_sector @ phi
        H = np.empty((M, M), dtype=np.result_type(phi, self.V))
        S = np.empty_like(H)
        H[:-1, :-1] = self.H0
        S[:-1, :-1] = self.S0
        H[:-1, -1] = self.HV.conj().T @ phi
        S[:-1, -1] = self.V.conj().T @ phi
        H[-1, :-1] = H[:-1, -1].conj()
        S[-1, :-1] = S[:-1, -1].conj()
        H[-1, -1] = np.vdot(phi, hphi).real
        S[-1, -1] = 1.0
        return H, S

    def __call__(self, theta: np.ndarray) -> float:
        self.calls += 1
        params = KUpCCGSDParameters.unflatten(self.k, self.system.ints.n_spatial, theta)
        H, S = self.matrices(self.system.sector_state(params))
        return solve_gevp(SubspaceProblem(H, S, self.cutoff)).energy

    def value_and_grad(self, theta: np.ndarray, step: float) -> tuple[float, np.ndarray]:
        if self.max_calls is not None and self.calls + 2 * theta.size + 1 > self.max_calls:
            raise _BudgetExhausted
        f0 = self(theta)
        if self.best is None or f0 < self.best[0]:
            self.best = (f0, theta.copy())
        grad = np.empty_like(theta)
        for a in range(theta.size):
            e = np.zeros_like(theta)
            e[a] = step
            grad[a] = (self(theta + e) - self(theta - e)) / (2 * step)
        return f0, grad


@dataclass
class _Outcome:
    x: np.ndarray
    failed: bool
    message: str


def _optimize_state(objective: _SubspaceObjective, theta0: np.ndarray, config: ExperimentConfig) -> _Outcome:
    """L-BFGS-B with central differences; stops on gradient norm or the call budget."""
    try:
        res = scipy.optimize.minimize(
            objective.value_and_grad,
            theta0,
            args=(config.fd_step,),
            jac=True,
            method="L-BFGS-B",
            options={"maxfun": config.max_calls, "maxiter": config.max_calls,
                     "gtol": config.grad_tol, "ftol": 1e-15},
        )
    except _BudgetExhausted:
        x = theta0 if objective.best is None else objective.best[1]
        return _Outcome(x, False, "call budget exhausted")
    x = np.asarray(res.x)
    if objective.best is not None and objective.best[0] < res.fun:
        x = objective.best[1]
    return _Outcome(x, res.status == 2, str(res.message))


def grow_subspace(config: ExperimentConfig, system: System | None = None) -> SubspaceCheckpoint:
    """Add and optimize one state at a time, earlier states frozen."""
    if config.mode != "exact-growth":
        raise ConfigError("mode: grow_subspace requires exact-growth")
    system = system or System.load(config.fixture)
    n_spatial = system.ints.n_spatial
    n_params = KUpCCGSDParameters.count(config.k, n_spatial)
    cutoff = config.effective_cutoff
    seeds = np.random.SeedSequence(config.seed).spawn(config.M_max)
    sigma = math.sqrt(config.init_sigma2)

    frozen: list[np.ndarray] = []
    params: list[list[float]] = []
    trace: list[float] = []
    retries: list[int] = []
    for M in range(1, config.M_max + 1):
        rng = np.random.default_rng(seeds[M - 1])
        objective = _SubspaceObjective(system, frozen, config.k, cutoff, config.max_calls)
        res = _optimize_state(objective, rng.normal(0.0, sigma, n_params), config)
        if res.failed:
            log.warning("state %d: optimizer failed (%s); retrying with a fresh seed", M, res.message)
            retries.append(M)
            objective = _SubspaceObjective(system, frozen, config.k, cutoff, config.max_calls)
            res = _optimize_state(objective, rng.normal(0.0, sigma, n_params), config)
        theta = res.x
        phi = system.sector_state(KUpCCGSDParameters.unflatten(config.k, n_spatial, theta))
        H, S = objective.matrices(phi)
        energy = solve_gevp(SubspaceProblem(H, S, cutoff)).energy
        off = np.abs(S - np.eye(M))
        if M > 1 and off.max() > config.max_overlap_warn:
            warnings.warn(f"state {M}: overlap {off.max():.4f} exceeds {config.max_overlap_warn}", stacklevel=2)
        log.info("M=%d energy=%.10f calls=%d", M, energy, objective.calls)
        frozen.append(phi)
        params.append(theta.tolist())
        trace.append(float(energy))

    return SubspaceCheckpoint(fixture_id(config.fixture), config.k, n_spatial, params, trace, trace[-1], cutoff, retries)


@dataclass
class MeasurementResult:
    rows: list[TrajectoryRow]
    fit: ConvergenceFit | None
    subspace_energy: float
    sigma_H: float
    sigma_S: float


def exact_subspace(checkpoint: SubspaceCheckpoint, system: System) -> tuple[np.ndarray, np.ndarray]:
    states = [prepare(p, system.reference) for p in checkpoint.parameters()]
    H, S = matrix_elements_exact(states, system.ham)
    return H.real, S.real


def run_measurement_experiment(
    config: ExperimentConfig,
    checkpoint: SubspaceCheckpoint,
    system: System | None = None,
) -> MeasurementResult:
    """Spend a shot budget on the checkpoint's subspace and record the energy trajectory."""
    if config.mode == "exact-growth":
        raise ConfigError("mode: a measurement mode is required")
    adaptive = config.mode == "measurement-adaptive"
    system = system or System.load(checkpoint.fixture)
    cutoff = config.effective_cutoff
    truth = exact_subspace(checkpoint, system)
    subspace_energy = solve_gevp(SubspaceProblem(*truth, cutoff=EXACT_CUTOFF)).energy

    sigma_H, sigma_S = variance_bounds(system.ham)
    if config.zero_noise:
        sigma_H = sigma_S = 0.0
    ledger = MeasurementLedger(checkpoint.M, sigma_H, sigma_S)
    n_el = len(ledger.elements())
    if config.budget < config.batch * n_el:
        raise ConfigError(f"budget: {config.budget} is below the pilot cost {config.batch * n_el}")

    shot_seed, mc_seed, boot_seed = np.random.SeedSequence(config.seed).spawn(3)
    shot_rng = np.random.default_rng(shot_seed)
    draws = NoiseDraws.generate(config.n_mc, ledger.M, np.random.default_rng(mc_seed))
    boot_draws = NoiseDraws.generate(config.n_boot, ledger.M, np.random.default_rng(boot_seed))

    def row(step, element) -> TrajectoryRow:
        channel, i, j = element
        estimate = point_estimate(ledger, cutoff)
        _, two_sigma = bootstrap_errorbar(ledger, boot_draws, config.n_boot, cutoff)
        sig = sigma_mc(sample_energies(ledger, draws, cutoff).energies)
        return TrajectoryRow(step, ledger.total_shots, channel, i, j, estimate, two_sigma, sig)

    pilot(ledger, config.batch, truth, shot_rng)
    rows = [row(0, ("pilot", -1, -1))]
    step_cost = config.batch if adaptive else config.batch * n_el
    step = 0
    while ledger.total_shots + step_cost <= config.budget:
        step += 1
        if adaptive:
            element = adaptive_step(ledger, draws, config.batch, truth, shot_rng, cutoff)
        else:
            nonadaptive_step(ledger, config.batch, truth, shot_rng)
            element = ("all", -1, -1)
        rows.append(row(step, element))

    fit = None
    half = rows[len(rows) // 2:]
    if len(half) >= 3:
        fit = fit_kappa([(r.total_shots, (r.two_sigma / 2) ** 2) for r in half],
                        (half[0].total_shots, half[-1].total_shots))
    return MeasurementResult(rows, fit, subspace_energy, sigma_H, sigma_S)


def summary_record(config: ExperimentConfig, **results) -> dict:
    return {"config": config.to_dict(), "results": results, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
