"""Linear Gaussian structural models and conditional-independence tests.

A model is X = B^T X + eps with strictly lower-triangular-up-to-permutation
coefficient matrix B (entry B[i, j] weights edge i -> j) and independent
noises.  Marginal dependence structure is read off precision matrices:
zero partial correlation is exactly conditional independence here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .graph_core import CiOracle, Dag

# theta[k, k] below this is treated as a degenerate marginal
DEGENERATE_TOL = 1e-12

# relative symmetry tolerance for precision states
SYMMETRY_RTOL = 1e-9


class DegenerateMarginalError(ValueError):
    """Marginalizing against a vanishing precision diagonal entry."""


class InsufficientSamplesError(ValueError):
    """Sample size too small for the requested test or estimate."""


@dataclass(frozen=True)
class GaussianSem:
    """Linear Gaussian model: weights[i, j] is the coefficient on i -> j."""

    weights: np.ndarray
    noise_variances: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        v = np.asarray(self.noise_variances, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("weights must be a square matrix")
        if v.shape != (w.shape[0],):
            raise ValueError("noise_variances must have one entry per vertex")
        if np.any(np.diag(w) != 0):
            raise ValueError("weights must have a zero diagonal")
        if np.any(v <= 0):
            raise ValueError("noise variances must be positive")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "noise_variances", v)
        self.dag()  # rejects cyclic support

    @property
    def p(self) -> int:
        return self.weights.shape[0]

    def dag(self) -> Dag:
        """Support of the weight matrix as a weighted DAG."""
        idx = np.argwhere(self.weights != 0)
        weights = {(int(i), int(j)): float(self.weights[i, j]) for i, j in idx}
        return Dag(self.p, list(weights), weights)


def sem_covariance(model: GaussianSem) -> np.ndarray:
    """Covariance (I - B)^-T Omega (I - B)^-1 of the model variables."""
    p = model.p
    a = np.eye(p) - model.weights
    a_inv = np.linalg.inv(a)
    sigma = a_inv.T @ (model.noise_variances[:, None] * a_inv)
    return (sigma + sigma.T) / 2.0


def sem_precision(model: GaussianSem) -> np.ndarray:
    """Precision (I - B) Omega^-1 (I - B)^T, with exact structural zeros.

    Built directly from the factorization rather than by inverting the
    covariance, so entries that are zero by the graph structure come out
    exactly zero regardless of conditioning.
    """
    p = model.p
    a = np.eye(p) - model.weights
    theta = a @ (a.T / model.noise_variances[:, None])
    return (theta + theta.T) / 2.0


@dataclass(frozen=True)
class PrecisionState:
    """Precision matrix over a labelled vertex subset.

    vertices[r] is the vertex behind row/column r of theta.  sample_size is
    the number of observations behind an estimated matrix, 0 for exact ones.
    Construction checks symmetry and the diagonal; positive definiteness is
    checked where the matrix enters (the initial factorizations), not per
    update, keeping marginalization quadratic.
    """

    vertices: tuple[int, ...]
    theta: np.ndarray
    sample_size: int = 0

    def __post_init__(self) -> None:
        theta = np.asarray(self.theta, dtype=float)
        k = len(self.vertices)
        if theta.shape != (k, k):
            raise ValueError("theta shape must match the vertex list")
        if len(set(self.vertices)) != k:
            raise ValueError("vertex labels must be distinct")
        if k:
            scale = max(np.abs(theta).max(), 1.0)
            if np.abs(theta - theta.T).max() > SYMMETRY_RTOL * scale:
                raise ValueError("theta must be symmetric")
            if np.any(np.diag(theta) <= 0):
                raise ValueError("theta diagonal must be positive")
        if self.sample_size < 0:
            raise ValueError("sample_size must be nonnegative")
        object.__setattr__(self, "theta", theta)

    def index_of(self, v: int) -> int:
        try:
            return self.vertices.index(v)
        except ValueError:
            raise ValueError(f"vertex {v} not in state") from None


def marginal_precision_update(state: PrecisionState, k: int) -> PrecisionState:
    """Precision of the marginal over vertices - {k}, via a rank-one update.

    (theta')_ij = theta_ij - theta_ik theta_jk / theta_kk, O(|V|^2) work.
    """
    idx = state.index_of(k)
    theta = state.theta
    pivot = theta[idx, idx]
    if pivot < DEGENERATE_TOL:
        raise DegenerateMarginalError(
            f"diagonal entry {pivot:.3e} at vertex {k} below {DEGENERATE_TOL:.0e}"
        )
    keep = np.arange(len(state.vertices)) != idx
    col = theta[keep, idx]
    reduced = theta[np.ix_(keep, keep)] - np.outer(col, col) / pivot
    rest = tuple(v for v in state.vertices if v != k)
    return PrecisionState(rest, reduced, state.sample_size)


def partial_correlations(state: PrecisionState) -> np.ndarray:
    """Matrix of rho_ij given all other retained vertices; unit diagonal."""
    d = np.diag(state.theta)
    if np.any(d <= 0):
        raise ValueError("theta diagonal must be positive")
    denom = np.sqrt(np.outer(d, d))
    rho = -state.theta / denom
    np.fill_diagonal(rho, 1.0)
    return rho


def fisher_z(rho: float, n: int, cond_size: int) -> float:
    """Test statistic sqrt(n - s - 3) |atanh(rho)| for H0: rho = 0."""
    dof = n - cond_size - 3
    if dof <= 0:
        raise InsufficientSamplesError(
            f"need n > {cond_size + 3} samples for a conditioning set of {cond_size}"
        )
    if abs(rho) >= 1.0:
        return math.inf
    return math.sqrt(dof) * abs(math.atanh(rho))


def fisher_z_cutoff(alpha: float, n: int, cond_size: int) -> float:
    """Partial-correlation magnitude rejecting H0 at level alpha.

    |rho| >= cutoff is equivalent to fisher_z(rho, n, s) >= Phi^-1(1 - alpha/2).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    dof = n - cond_size - 3
    if dof <= 0:
        raise InsufficientSamplesError(
            f"need n > {cond_size + 3} samples for a conditioning set of {cond_size}"
        )
    z_crit = float(ndtri(1.0 - alpha / 2.0))
    return math.tanh(z_crit / math.sqrt(dof))


@dataclass(frozen=True)
class CiTestConfig:
    """How edges are decided from partial correlations.

    exact-threshold declares an edge when |rho| exceeds exact_tol; fisher-z
    runs the level-alpha test against sample_size observations.
    """

    mode: str = "exact-threshold"
    alpha: float = 0.001
    exact_tol: float = 1e-8

    def __post_init__(self) -> None:
        if self.mode not in ("exact-threshold", "fisher-z"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.exact_tol < 0:
            raise ValueError("exact_tol must be nonnegative")

    def cutoff(self, sample_size: int, n_vertices: int) -> float:
        """Partial-correlation magnitude at which an edge is declared."""
        if self.mode == "exact-threshold":
            return self.exact_tol
        return fisher_z_cutoff(self.alpha, sample_size, n_vertices - 2)


def sample_covariance(data: np.ndarray) -> np.ndarray:
    """Mean-centered covariance with 1/n normalization."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise ValueError("data must be an n x p matrix")
    n = data.shape[0]
    if n < 2:
        raise InsufficientSamplesError("need at least 2 samples")
    centered = data - data.mean(axis=0)
    cov = centered.T @ centered / n
    return (cov + cov.T) / 2.0


def _submatrix_rho(sigma: np.ndarray, i: int, j: int, s: frozenset[int]) -> float:
    """Partial correlation of i, j given s from a covariance matrix."""
    if i == j:
        raise ValueError("endpoints must be distinct")
    if i in s or j in s:
        raise ValueError("endpoints may not appear in the conditioning set")
    sel = sorted(s) + [i, j]
    sub = sigma[np.ix_(sel, sel)]
    theta = np.linalg.inv(sub)
    a, b = len(sel) - 2, len(sel) - 1
    return float(-theta[a, b] / math.sqrt(theta[a, a] * theta[b, b]))


def gaussian_exact_ci(model: GaussianSem, tol: float = 1e-8) -> CiOracle:
    """CI oracle from the exact model covariance, thresholded at tol."""
    sigma = sem_covariance(model)

    def ci(i: int, j: int, s: frozenset[int]) -> bool:
        return abs(_submatrix_rho(sigma, i, j, s)) < tol

    return ci


def gaussian_sample_ci(data: np.ndarray, alpha: float = 0.001) -> CiOracle:
    """CI oracle running level-alpha Fisher-z tests on the data."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    sigma = sample_covariance(data)
    n = data.shape[0]

    def ci(i: int, j: int, s: frozenset[int]) -> bool:
        rho = _submatrix_rho(sigma, i, j, s)
        return abs(rho) < fisher_z_cutoff(alpha, n, len(s))

    return ci
