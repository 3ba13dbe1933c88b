"""Monte Carlo energy uncertainty and measurement scheduling.

Each measured matrix element is modelled as a Gaussian around its running
estimate with variance ``sigma**2 / m``.  Sampling Hamiltonian and overlap
matrices from these distributions and re-solving the subspace problem gives
a distribution of ground-state energies whose spread is ``sigma_mc``.  With
the standard-normal draws held fixed, ``sigma_mc`` is a smooth function of
the shot counts, and its derivatives pick the element to measure next.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from novqe.eigensolver import (
    DEGENERACY_GAP,
    SAMPLED_CUTOFF,
    DegenerateEigenvalueError,
    DegenerateSubspaceError,
    SubspaceProblem,
    solve_gevp,
)
from novqe.protocol import MatrixElementEstimate, emulate_shots

log = logging.getLogger(__name__)

DEFAULT_BATCH = 100_000
DEFAULT_SAMPLES = 200
DEFAULT_BOOTSTRAP = 200

Element = tuple[str, int, int]


class UncertaintyUndefinedError(ValueError):
    """No usable Monte Carlo samples, or zero spread where a derivative was requested."""


@dataclass
class MeasurementLedger:
    """Running estimates for the upper triangle of ``H`` and the strict upper triangle of ``S``.

    ``S_ii`` is fixed to 1 and never measured.  ``(i, j)`` and ``(j, i)`` share
    one estimate.
    """

    M: int
    sigma_H: float
    sigma_S: float
    estimates: dict[Element, MatrixElementEstimate] = field(default_factory=dict)
    rr_cursor: int = 0

    def elements(self) -> list[Element]:
        h = [("H", i, j) for i in range(self.M) for j in range(i, self.M)]
        s = [("S", i, j) for i in range(self.M) for j in range(i + 1, self.M)]
        return h + s

    def sigma(self, channel: str) -> float:
        return self.sigma_H if channel == "H" else self.sigma_S

    @property
    def total_shots(self) -> int:
        return sum(e.shots for e in self.estimates.values())

    def shots(self, element: Element) -> int:
        est = self.estimates.get(element)
        return est.shots if est is not None else 0

    def record(self, element: Element, estimate: MatrixElementEstimate) -> None:
        channel, i, j = element
        if i > j:
            element = (channel, j, i)
        if element not in self.elements():
            raise KeyError(f"{element} is not a measured element")
        old = self.estimates.get(element)
        self.estimates[element] = estimate if old is None else old.pool(estimate)

    def matrices(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Estimated ``H``, ``S`` and their shot counts (``S`` diagonal counts are 0)."""
        M = self.M
        H = np.zeros((M, M))
        S = np.eye(M)
        mH = np.zeros((M, M))
        mS = np.zeros((M, M))
        for (channel, i, j), est in self.estimates.items():
            mean_mat, shot_mat = (H, mH) if channel == "H" else (S, mS)
            mean_mat[i, j] = mean_mat[j, i] = est.mean
            shot_mat[i, j] = shot_mat[j, i] = est.shots
        return H, S, mH, mS

    def check_complete(self) -> None:
        missing = [e for e in self.elements() if self.shots(e) == 0]
        if missing:
            raise ValueError(f"elements without shots: {missing[:4]}{'...' if len(missing) > 4 else ''}")


@dataclass
class NoiseDraws:
    """Fixed standard-normal draws, mirrored so sampled matrices stay symmetric."""

    z_H: np.ndarray
    z_S: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.z_H.shape[0]

    @classmethod
    def generate(cls, n_samples: int, M: int, rng: np.random.Generator) -> NoiseDraws:
        z_H = _symmetric_normals(n_samples, M, rng)
        z_S = _symmetric_normals(n_samples, M, rng)
        idx = np.arange(M)
        z_S[:, idx, idx] = 0.0
        return cls(z_H, z_S)


def _symmetric_normals(K: int, M: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((K, M, M))
    upper = np.triu(z)
    return upper + np.transpose(np.triu(z, 1), (0, 2, 1))


def _sampled_matrices(ledger: MeasurementLedger, draws: NoiseDraws, shots=None):
    H, S, mH, mS = ledger.matrices() if shots is None else (*ledger.matrices()[:2], *shots)
    if draws.z_H.shape[1:] != (ledger.M, ledger.M):
        raise ValueError("noise draws do not match the subspace size")
    with np.errstate(divide="ignore", invalid="ignore"):
        scale_H = np.where(mH > 0, ledger.sigma_H / np.sqrt(mH), 0.0)
        scale_S = np.where(mS > 0, ledger.sigma_S / np.sqrt(mS), 0.0)
    if not (scale_H.any() or scale_S.any()):
        # noiseless: one solve, broadcast, so the spread is exactly zero
        K = draws.n_samples
        return np.broadcast_to(H, (K, *H.shape)), np.broadcast_to(S, (K, *S.shape))
    Hs = H + scale_H * draws.z_H
    Ss = S + scale_S * draws.z_S
    return Hs, Ss


@dataclass
class EnergySamples:
    energies: np.ndarray  # valid samples only
    coeffs: np.ndarray  # (n_valid, M)
    gaps: np.ndarray
    dropped: int
    kept: np.ndarray  # indices of valid draws


def _solve_batch(Hs: np.ndarray, Ss: np.ndarray, cutoff: float) -> EnergySamples:
    K, M, _ = Hs.shape
    if Hs.strides[0] == 0 and Ss.strides[0] == 0:
        one = _solve_batch(Hs[:1].copy(), Ss[:1].copy(), cutoff)
        if one.energies.size == 0:
            return EnergySamples(one.energies, one.coeffs, one.gaps, K, one.kept)
        return EnergySamples(np.repeat(one.energies, K), np.repeat(one.coeffs, K, axis=0),
                             np.repeat(one.gaps, K), 0, np.arange(K))
    energies = np.full(K, np.nan)
    coeffs = np.zeros((K, M))
    gaps = np.full(K, np.inf)
    s, U = np.linalg.eigh(Ss)
    full = (s > cutoff).all(axis=1)
    if full.any():
        X = U[full] / np.sqrt(s[full])[:, None, :]
        A = np.transpose(X, (0, 2, 1)) @ Hs[full] @ X
        w, V = np.linalg.eigh(0.5 * (A + np.transpose(A, (0, 2, 1))))
        energies[full] = w[:, 0]
        coeffs[full] = (X @ V[:, :, :1])[:, :, 0]
        if M > 1:
            gaps[full] = w[:, 1] - w[:, 0]
    for k in np.flatnonzero(~full):
        try:
            sol = solve_gevp(SubspaceProblem(Hs[k], Ss[k], cutoff))
        except DegenerateSubspaceError:
            continue
        energies[k] = sol.energy
        coeffs[k] = sol.coeffs.real
        gaps[k] = sol.gap
    kept = np.flatnonzero(~np.isnan(energies))
    return EnergySamples(energies[kept], coeffs[kept], gaps[kept], K - kept.size, kept)


def _solve_samples(ledger, draws, cutoff, shots=None) -> EnergySamples:
    Hs, Ss = _sampled_matrices(ledger, draws, shots)
    result = _solve_batch(Hs, Ss, cutoff)
    if result.energies.size == 0:
        raise UncertaintyUndefinedError("every Monte Carlo sample had a degenerate overlap matrix")
    if result.dropped:
        log.debug("dropped %d degenerate samples", result.dropped)
    return result


def sample_energies(ledger: MeasurementLedger, draws: NoiseDraws, cutoff: float = SAMPLED_CUTOFF) -> EnergySamples:
    """Ground energies of the sampled subspace problems; degenerate samples are dropped."""
    ledger.check_complete()
    return _solve_samples(ledger, draws, cutoff)


def sigma_mc(energies) -> float:
    energies = np.asarray(energies, dtype=float)
    if energies.size < 2:
        raise UncertaintyUndefinedError("need at least two samples")
    # shifting by one sample keeps constant inputs at exactly zero spread
    return float(np.std(energies - energies[0], ddof=1))


def d_sigma_dm(
    ledger: MeasurementLedger,
    draws: NoiseDraws,
    cutoff: float = SAMPLED_CUTOFF,
) -> dict[Element, float]:
    """Derivative of ``sigma_mc`` with respect to each element's shot count (draws fixed)."""
    ledger.check_complete()
    res = _solve_samples(ledger, draws, cutoff)
    E = res.energies
    if E.size < 2:
        raise UncertaintyUndefinedError("need at least two valid samples")
    sigma = sigma_mc(E)
    if sigma == 0.0:
        raise UncertaintyUndefinedError("sigma_mc is zero; derivative undefined")
    if (res.gaps < DEGENERACY_GAP).any():
        raise DegenerateEigenvalueError("a sampled problem has a degenerate ground state")

    outer = res.coeffs[:, :, None] * res.coeffs[:, None, :]
    zH = draws.z_H[res.kept]
    zS = draws.z_S[res.kept]
    centred = E - E.mean()
    out = {}
    for element in ledger.elements():
        channel, i, j = element
        m = ledger.shots(element)
        mult = 1.0 if i == j else 2.0
        if channel == "H":
            dE_dx = mult * outer[:, i, j]
            dx_dm = -ledger.sigma_H * zH[:, i, j] / (2.0 * m**1.5)
        else:
            dE_dx = -mult * E * outer[:, i, j]
            dx_dm = -ledger.sigma_S * zS[:, i, j] / (2.0 * m**1.5)
        dE_dm = dE_dx * dx_dm
        out[element] = float(np.sum(centred * (dE_dm - dE_dm.mean())) / ((E.size - 1) * sigma))
    return out


def _round_robin(ledger: MeasurementLedger) -> Element:
    elements = ledger.elements()
    element = elements[ledger.rr_cursor % len(elements)]
    ledger.rr_cursor += 1
    return element


def _measure(ledger, element, batch, truth, rng) -> None:
    H_true, S_true = truth
    channel, i, j = element
    value = float(np.real(H_true[i, j] if channel == "H" else S_true[i, j]))
    ledger.record(element, emulate_shots(value, ledger.sigma(channel), batch, rng))


def choose_element(ledger: MeasurementLedger, draws: NoiseDraws, cutoff: float = SAMPLED_CUTOFF) -> tuple[Element, bool]:
    """Element with the most negative derivative; ``(element, adaptive)``."""
    try:
        derivs = d_sigma_dm(ledger, draws, cutoff)
    except (UncertaintyUndefinedError, DegenerateEigenvalueError) as exc:
        log.debug("round-robin fallback: %s", exc)
        return _round_robin(ledger), False
    channel_order = {"H": 0, "S": 1}
    element = min(derivs, key=lambda e: (derivs[e], channel_order[e[0]], e[1], e[2]))
    return element, True


def adaptive_step(
    ledger: MeasurementLedger,
    draws: NoiseDraws,
    batch: int,
    truth: tuple[np.ndarray, np.ndarray],
    rng: np.random.Generator,
    cutoff: float = SAMPLED_CUTOFF,
) -> Element:
    """Measure ``batch`` more shots of the most useful element; ``ledger`` is updated in place."""
    element, _ = choose_element(ledger, draws, cutoff)
    _measure(ledger, element, batch, truth, rng)
    return element


def nonadaptive_step(
    ledger: MeasurementLedger,
    batch: int,
    truth: tuple[np.ndarray, np.ndarray],
    rng: np.random.Generator,
) -> None:
    """One batch on every element, in element order."""
    for element in ledger.elements():
        _measure(ledger, element, batch, truth, rng)


def pilot(ledger: MeasurementLedger, batch: int, truth, rng) -> None:
    nonadaptive_step(ledger, batch, truth, rng)


def bootstrap_errorbar(
    ledger: MeasurementLedger,
    draws: NoiseDraws | np.random.Generator,
    n_boot: int = DEFAULT_BOOTSTRAP,
    cutoff: float = SAMPLED_CUTOFF,
) -> tuple[float, float]:
    """Mean and two standard deviations of ``n_boot`` resampled ground energies.

    Pass a ``NoiseDraws`` to reuse a fixed set of draws, or a generator to
    draw fresh ones.
    """
    if n_boot < 2:
        raise ValueError("n_boot must be at least 2")
    if not isinstance(draws, NoiseDraws):
        draws = NoiseDraws.generate(n_boot, ledger.M, draws)
    elif draws.n_samples != n_boot:
        raise ValueError("draws do not match n_boot")
    energies = sample_energies(ledger, draws, cutoff).energies
    return float(energies.mean()), 2.0 * sigma_mc(energies)


def point_estimate(ledger: MeasurementLedger, cutoff: float = SAMPLED_CUTOFF) -> float:
    H, S, _, _ = ledger.matrices()
    return solve_gevp(SubspaceProblem(H, S, cutoff)).energy


@dataclass
class ConvergenceFit:
    kappa: float
    window: tuple[float, float]
    residual: float  # RMS of sigma^2 - kappa/N inside the window
    mean_variance: float
    n_points: int

    @property
    def relative_residual(self) -> float:
        return self.residual / self.mean_variance if self.mean_variance > 0 else 0.0


def fit_kappa(trajectory, window: tuple[float, float] | None = None) -> ConvergenceFit:
    """Zero-intercept least-squares fit of ``sigma^2 = kappa / N``."""
    data = np.asarray(list(trajectory), dtype=float).reshape(-1, 2)
    if window is None:
        window = (data[:, 0].min(), data[:, 0].max()) if data.size else (0.0, 0.0)
    lo, hi = window
    sel = data[(data[:, 0] >= lo) & (data[:, 0] <= hi)]
    if sel.shape[0] < 3:
        raise ValueError(f"need at least 3 points in window {window}, found {sel.shape[0]}")
    inv = 1.0 / sel[:, 0]
    var = sel[:, 1]
    kappa = float(np.dot(inv, var) / np.dot(inv, inv))
    resid = float(np.sqrt(np.mean((var - kappa * inv) ** 2)))
    return ConvergenceFit(max(kappa, 0.0), (float(lo), float(hi)), resid, float(var.mean()), sel.shape[0])


@dataclass
class TrajectoryRow:
    step: int
    total_shots: int
    channel: str
    i: int
    j: int
    estimate_energy: float
    two_sigma: float
    sigma_mc: float


TRAJECTORY_COLUMNS = [f.name for f in fields(TrajectoryRow)]


def write_trajectory_csv(rows: list[TrajectoryRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        for r in rows:
            writer.writerow([
                r.step, r.total_shots, r.channel, r.i, r.j,
                repr(r.estimate_energy), repr(r.two_sigma), repr(r.sigma_mc),
            ])


def read_trajectory_csv(path: str | Path) -> list[TrajectoryRow]:
    with open(path, newline="") as fh:
        rows = []
        for rec in csv.DictReader(fh):
            rows.append(TrajectoryRow(
                int(rec["step"]), int(rec["total_shots"]), rec["channel"], int(rec["i"]), int(rec["j"]),
                float(rec["estimate_energy"]), float(rec["two_sigma"]), float(rec["sigma_mc"]),
            ))
        return rows
