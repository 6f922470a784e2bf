"""Group graphical lasso solver.

Jointly estimates K precision matrices by minimizing

    sum_k w_k [ trace(S_k W_k) - log det W_k ]
        + lam * sum_k sum_{i != j} |W_k[i, j]|
        + rho * sum_{i != j} sqrt(sum_k W_k[i, j]^2)

over symmetric positive definite ``W_k``, where ``S_k`` is the sample
covariance of population ``k``.  Both penalty sums run over ordered pairs
``i != j``, so each unordered edge is counted twice; diagonals are never
penalized.  The weights ``w_k`` are 1 by default (plain sum over populations)
or ``n_k`` when ``weighted_by_n`` is set.

The solver is ADMM with the consensus split ``W_k = Z_k``:

* W-step: per population, the closed-form eigendecomposition update.  With
  ``A = eta * (Z_k - U_k) - w_k * S_k = Q diag(d) Q'``, the minimizer has the
  same eigenvectors and eigenvalues ``(d + sqrt(d^2 + 4 * eta * w_k)) /
  (2 * eta)``, which are strictly positive, so every W iterate is PD.
* Z-step: the closed-form proximal operator of the combined penalty applied
  per off-diagonal group (soft-threshold, then group shrinkage); diagonals
  are copied through.
* scaled dual update ``U += W - Z``.

Convergence requires the standard primal/dual residual test *and* a
stationarity certificate: the subgradient-inclusion residual of the sparse
iterate must fall below ``10 * tol_abs``.  The returned estimate is the Z
iterate, which carries exact zeros produced by the group prox.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    CovarianceSet,
    PrecisionSet,
    invert_pd,
    is_positive_definite,
    symmetrize,
)
from .errors import DataFormatError, NotPositiveDefiniteError


@dataclass(frozen=True)
class PenaltyPair:
    """Regularization weights: ``lam`` for the l1 term, ``rho`` for the group term."""

    lam: float
    rho: float

    def __post_init__(self):
        if self.lam < 0 or self.rho < 0:
            raise DataFormatError("penalty parameters must be nonnegative")


@dataclass(frozen=True)
class SolverOptions:
    admm_step: float = 1.0
    max_iter: int = 10000
    tol_abs: float = 1e-6
    tol_rel: float = 1e-4
    weighted_by_n: bool = False

    def __post_init__(self):
        if self.admm_step <= 0:
            raise DataFormatError("admm_step must be positive")
        if self.tol_abs <= 0 or self.tol_rel <= 0:
            raise DataFormatError("tolerances must be positive")
        if self.max_iter < 1:
            raise DataFormatError("max_iter must be at least 1")


@dataclass
class SolveReport:
    estimate: PrecisionSet
    iterations: int
    primal_residual: float
    dual_residual: float
    converged: bool
    kkt_violation: float
    objective: float


def prox_sparse_group(values: np.ndarray, lam_eff: float, rho_eff: float) -> np.ndarray:
    """Minimizer of ``0.5 * ||x - v||^2 + lam_eff * ||x||_1 + rho_eff * ||x||_2``.

    Computed in closed form: componentwise soft-threshold at ``lam_eff``,
    then shrink the whole group by ``max(0, 1 - rho_eff / ||soft||_2)``.
    Returns the zero vector when ``||soft||_2 <= rho_eff``.  Total function:
    no error cases for ``lam_eff, rho_eff >= 0``.
    """
    v = np.asarray(values, dtype=float)
    soft = np.sign(v) * np.maximum(np.abs(v) - lam_eff, 0.0)
    norm = np.linalg.norm(soft)
    if norm <= rho_eff:
        return np.zeros_like(v)
    return soft * (1.0 - rho_eff / norm)


def _prox_offdiag_stack(v: np.ndarray, lam_eff: float, rho_eff: float) -> np.ndarray:
    """Group prox applied to every off-diagonal entry of a (K, p, p) stack.

    Groups run across the population axis; diagonals are copied unchanged.
    """
    k, p, _ = v.shape
    soft = np.sign(v) * np.maximum(np.abs(v) - lam_eff, 0.0)
    norms = np.sqrt(np.einsum("kij,kij->ij", soft, soft))
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > rho_eff, 1.0 - rho_eff / norms, 0.0)
    out = soft * scale[None, :, :]
    idx = np.arange(p)
    out[:, idx, idx] = v[:, idx, idx]
    return out


def ggl_objective(
    matrices, covs: CovarianceSet, penalty: PenaltyPair, weights=None
) -> float:
    """Objective value at the given matrices; ``inf`` if any matrix is not PD."""
    mats = np.stack([np.asarray(m, dtype=float) for m in matrices])
    s = np.stack(covs.matrices)
    w = _weights(covs, weights)
    total = 0.0
    for k in range(mats.shape[0]):
        sign, logdet = np.linalg.slogdet(mats[k])
        if sign <= 0:
            return np.inf
        total += w[k] * (np.sum(s[k] * mats[k]) - logdet)
    p = mats.shape[1]
    off = ~np.eye(p, dtype=bool)
    total += penalty.lam * np.abs(mats[:, off]).sum()
    total += penalty.rho * np.sqrt((mats**2).sum(axis=0)[off]).sum()
    return float(total)


def _weights(covs: CovarianceSet, weights) -> np.ndarray:
    if weights is None:
        return np.ones(covs.K)
    w = np.asarray(weights, dtype=float)
    if w.shape != (covs.K,):
        raise DataFormatError("one weight per population required")
    return w


def kkt_residual(
    estimate: PrecisionSet, covs: CovarianceSet, penalty: PenaltyPair, weights=None
) -> float:
    """Maximum violation of the stationarity system at ``estimate``.

    With ``G_k = w_k * (S_k - W_k^{-1})`` the conditions are ``G_k[i, i] = 0``
    on diagonals and, per off-diagonal group ``(i, j)``:

    * all populations zero: membership requires the soft-thresholded gradient
      group to satisfy ``||soft(G[i, j, :], lam)||_2 <= rho``; the violation
      is the excess;
    * otherwise: the residual of ``G_k + lam * z_k + rho * m_k = 0`` with the
      group-norm gradient ``m_k = W_k[i, j] / ||W[:, i, j]||_2`` and the sign
      subgradient ``z_k``, choosing ``z_k = clip(-G_k / lam, -1, 1)`` for
      coordinates sitting at zero.

    Raises :class:`NotPositiveDefiniteError` for a singular estimate.
    """
    if estimate.p != covs.p or estimate.K != covs.K:
        raise DataFormatError("estimate and covariances do not match")
    lam, rho = penalty.lam, penalty.rho
    w = _weights(covs, weights)
    grads = np.stack(
        [
            w[k] * (covs.matrices[k] - invert_pd(m))
            for k, m in enumerate(estimate.matrices)
        ]
    )
    omegas = np.stack(estimate.matrices)
    p = covs.p
    idx = np.arange(p)
    worst = float(np.max(np.abs(grads[:, idx, idx])))

    iu, ju = np.triu_indices(p, k=1)
    g = grads[:, iu, ju]  # (K, n_pairs)
    om = omegas[:, iu, ju]
    group_nonzero = np.any(om != 0.0, axis=0)

    # Groups at exactly zero: excess of the soft-thresholded gradient norm.
    if np.any(~group_nonzero):
        gz = g[:, ~group_nonzero]
        soft = np.sign(gz) * np.maximum(np.abs(gz) - lam, 0.0)
        excess = np.linalg.norm(soft, axis=0) - rho
        if excess.size:
            worst = max(worst, float(np.max(np.maximum(excess, 0.0))))

    # Active groups: direct residual with the subgradients evaluated there.
    if np.any(group_nonzero):
        ga = g[:, group_nonzero]
        oa = om[:, group_nonzero]
        norms = np.linalg.norm(oa, axis=0)
        m = oa / norms[None, :]
        if lam > 0:
            z = np.where(oa != 0.0, np.sign(oa), np.clip(-ga / lam, -1.0, 1.0))
        else:
            z = np.zeros_like(ga)
        resid = ga + lam * z + rho * m
        worst = max(worst, float(np.max(np.abs(resid))))
    return worst


def solve_ggl(
    covs: CovarianceSet, penalty: PenaltyPair, opts: SolverOptions = SolverOptions()
) -> SolveReport:
    """Solve the group graphical lasso for all populations jointly.

    Returns the sparse consensus iterate together with residuals, the
    stationarity violation, and the objective value.  Non-convergence within
    ``max_iter`` returns the best iterate with ``converged=False``; a
    covariance with non-positive diagonal is a hard error.
    """
    covs.require_positive_diagonal()
    K, p = covs.K, covs.p
    eta = opts.admm_step
    w = (
        np.asarray(covs.sample_sizes, dtype=float)
        if opts.weighted_by_n
        else np.ones(K)
    )
    s = np.stack(covs.matrices)

    omega = np.zeros_like(s)
    idx = np.arange(p)
    omega[:, idx, idx] = 1.0 / s[:, idx, idx]
    z = omega.copy()
    u = np.zeros_like(s)

    lam_eff = penalty.lam / eta
    rho_eff = penalty.rho / eta
    sqrt_dim = np.sqrt(K * p * p)
    kkt_value = np.inf
    primal = dual = np.inf
    converged = False
    iterations = 0

    for iterations in range(1, opts.max_iter + 1):
        a = eta * (z - u) - w[:, None, None] * s
        a = (a + a.transpose(0, 2, 1)) / 2.0
        d, q = np.linalg.eigh(a)
        eig = (d + np.sqrt(d * d + 4.0 * eta * w[:, None])) / (2.0 * eta)
        omega = q @ (eig[:, :, None] * q.transpose(0, 2, 1))
        omega = (omega + omega.transpose(0, 2, 1)) / 2.0

        z_old = z
        z = _prox_offdiag_stack(omega + u, lam_eff, rho_eff)
        u = u + omega - z

        primal = float(np.linalg.norm(omega - z))
        dual = float(eta * np.linalg.norm(z - z_old))
        eps_pri = sqrt_dim * opts.tol_abs + opts.tol_rel * max(
            float(np.linalg.norm(omega)), float(np.linalg.norm(z))
        )
        eps_dual = sqrt_dim * opts.tol_abs + opts.tol_rel * float(
            eta * np.linalg.norm(u)
        )
        if primal <= eps_pri and dual <= eps_dual:
            kkt_value = _kkt_of_iterate(z, omega, covs, penalty, w)
            if kkt_value <= 10.0 * opts.tol_abs:
                converged = True
                break

    estimate_mats = [symmetrize(m) for m in z]
    if not all(is_positive_definite(m) for m in estimate_mats):
        # The prox iterate can lose definiteness when stopped early; the
        # eigenvalue-map iterate is PD by construction.
        estimate_mats = [symmetrize(m) for m in omega]
    estimate = PrecisionSet(estimate_mats, positive_definite=True)
    if not np.isfinite(kkt_value):
        kkt_value = kkt_residual(estimate, covs, penalty, w if opts.weighted_by_n else None)
    objective = ggl_objective(
        estimate.matrices, covs, penalty, w if opts.weighted_by_n else None
    )
    return SolveReport(
        estimate=estimate,
        iterations=iterations,
        primal_residual=primal,
        dual_residual=dual,
        converged=converged,
        kkt_violation=float(kkt_value),
        objective=objective,
    )


def _kkt_of_iterate(z, omega, covs, penalty, w) -> float:
    """Stationarity violation of the sparse iterate, inf if not invertible."""
    mats = [symmetrize(m) for m in z]
    if not all(is_positive_definite(m) for m in mats):
        return np.inf
    estimate = PrecisionSet(mats, positive_definite=True)
    weights = None if np.all(w == 1.0) else w
    return kkt_residual(estimate, covs, penalty, weights)
