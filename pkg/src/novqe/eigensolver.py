"""Generalized eigenproblem ``H c = E S c`` with canonical orthogonalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EXACT_CUTOFF = 1e-8
SAMPLED_CUTOFF = 1e-6
DEGENERACY_GAP = 1e-10


class DegenerateSubspaceError(ValueError):
    """Every overlap eigenvalue fell below the cutoff."""


class DegenerateEigenvalueError(ValueError):
    """The lowest eigenvalue is (near) degenerate; first-order sensitivities are unreliable."""


def _hermitize(a) -> np.ndarray:
    a = np.asarray(a)
    a = 0.5 * (a + a.conj().T)
    if np.iscomplexobj(a) and np.abs(a.imag).max(initial=0.0) < 1e-12:
        a = a.real.copy()
    return a


@dataclass
class SubspaceProblem:
    H: np.ndarray
    S: np.ndarray
    cutoff: float = EXACT_CUTOFF

    def __post_init__(self):
        self.H = _hermitize(self.H)
        self.S = _hermitize(self.S)
        if self.H.ndim != 2 or self.H.shape[0] != self.H.shape[1] or self.H.shape != self.S.shape:
            raise ValueError("H and S must be square matrices of equal size")
        if self.H.shape[0] < 1:
            raise ValueError("empty subspace")
        if not self.cutoff > 0:
            raise ValueError("cutoff must be positive")

    @property
    def size(self) -> int:
        return self.H.shape[0]


@dataclass
class SubspaceSolution:
    energy: float
    coeffs: np.ndarray
    retained_rank: int
    gap: float
    problem: SubspaceProblem


def canonical_orthogonalize(S, cutoff: float) -> np.ndarray:
    """Columns ``U_a / sqrt(s_a)`` for overlap eigenvalues ``s_a > cutoff``."""
    s, u = np.linalg.eigh(_hermitize(S))
    keep = s > cutoff
    if not keep.any():
        raise DegenerateSubspaceError(
            f"all overlap eigenvalues are below the cutoff {cutoff:g} (largest {s[-1]:.3e})"
        )
    return u[:, keep] / np.sqrt(s[keep])


def solve_gevp(prob: SubspaceProblem) -> SubspaceSolution:
    X = canonical_orthogonalize(prob.S, prob.cutoff)
    A = X.conj().T @ prob.H @ X
    A = 0.5 * (A + A.conj().T)
    w, v = np.linalg.eigh(A)
    c = X @ v[:, 0]
    gap = float(w[1] - w[0]) if w.size > 1 else np.inf
    return SubspaceSolution(float(w[0]), c, X.shape[1], gap, prob)


def energy_sensitivity(sol: SubspaceSolution) -> tuple[np.ndarray, np.ndarray]:
    """First-order derivatives of the energy w.r.t. each entry of ``H`` and ``S``.

    ``dE = sum(dE_dH * dH) + sum(dE_dS * dS)`` for Hermitian perturbations.
    """
    if sol.gap < DEGENERACY_GAP:
        raise DegenerateEigenvalueError(f"lowest eigenvalue gap {sol.gap:.2e} is too small")
    c = sol.coeffs
    outer = np.outer(c.conj(), c)
    if np.isrealobj(sol.problem.H) and np.isrealobj(sol.problem.S):
        outer = outer.real
        outer = 0.5 * (outer + outer.T)
    return outer, -sol.energy * outer
