"""Exact universal Kriging: GLS fixed effects, coefficient solve, prediction.

The observation covariance is ``M = K + tau2 I``.  Everything is computed
through one Cholesky factorization of M and triangular solves; M is never
inverted explicitly.  If the factorization fails, a ridge of
``1e-10 * trace(M) / n`` is added once with a warning before giving up.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .covariance import CovarianceModel, cov_matrix
from .errors import DomainError, NumericError

__all__ = ["KrigingFit", "fit", "refit_coefficients", "predict_exact", "kriging_se_exact"]

_VAR_CLAMP = -1.0e-10


def _cholesky_with_ridge(mat: np.ndarray, ridge: float, what: str) -> np.ndarray:
    """Lower Cholesky factor, retrying once with a diagonal ridge."""
    try:
        return scipy.linalg.cholesky(mat, lower=True)
    except scipy.linalg.LinAlgError as first:
        warnings.warn(
            f"Cholesky of {what} failed ({first}); retrying with ridge {ridge:.3e}",
            RuntimeWarning, stacklevel=3)
        try:
            return scipy.linalg.cholesky(
                mat + ridge * np.eye(mat.shape[0]), lower=True)
        except scipy.linalg.LinAlgError as second:
            raise NumericError(f"Cholesky of {what} failed even with ridge: {second}") from second


@dataclass(frozen=True)
class KrigingFit:
    """Fitted universal-Kriging state, immutable after ``fit``."""

    model: CovarianceModel
    obs_locs: np.ndarray      # (n, 2)
    X: np.ndarray             # (n, p) covariates
    chol_M: np.ndarray        # lower Cholesky factor of K + tau2 I
    beta_hat: np.ndarray      # (p,) GLS coefficients
    c: np.ndarray             # (n,) Kriging coefficient vector

    @property
    def n_obs(self) -> int:
        return self.obs_locs.shape[0]

    def is_intercept_only(self) -> bool:
        return self.X.shape[1] == 1 and np.all(self.X == self.X[0, 0])


def _gls(chol_m: np.ndarray, x: np.ndarray, z: np.ndarray):
    """GLS coefficients and Kriging vector via triangular solves."""
    a = scipy.linalg.solve_triangular(chol_m, z, lower=True)
    b = scipy.linalg.solve_triangular(chol_m, x, lower=True)
    gram = b.T @ b
    beta = np.linalg.solve(gram, b.T @ a)
    resid = z - x @ beta
    half = scipy.linalg.solve_triangular(chol_m, resid, lower=True)
    c = scipy.linalg.solve_triangular(chol_m.T, half, lower=False)
    return beta, c


def fit(model: CovarianceModel, obs_locs, z, X=None) -> KrigingFit:
    """Fit the GLS coefficients beta_hat and the Kriging vector c.

    Parameters
    ----------
    model : CovarianceModel
    obs_locs : (n, 2) array
    z : (n,) observations
    X : (n, p) covariate matrix, full column rank; defaults to an intercept
        column when omitted.
    """
    obs = np.asarray(obs_locs, dtype=float).reshape(-1, 2)
    z = np.asarray(z, dtype=float).ravel()
    n = obs.shape[0]
    if z.shape[0] != n:
        raise DomainError(f"z has {z.shape[0]} entries for {n} locations")
    if X is None:
        X = np.ones((n, 1))
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    p = X.shape[1]
    if X.shape[0] != n:
        raise DomainError(f"X has {X.shape[0]} rows for {n} locations")
    if not n >= p >= 1:
        raise DomainError(f"need n >= p >= 1, got n={n}, p={p}")
    if np.linalg.matrix_rank(X) < p:
        raise DomainError("covariate matrix X is rank deficient")

    m = cov_matrix(model, obs)
    m[np.diag_indices_from(m)] += model.tau2
    ridge = 1.0e-10 * np.trace(m) / n
    chol_m = _cholesky_with_ridge(m, ridge, "the observation covariance M")
    beta, c = _gls(chol_m, X, z)
    return KrigingFit(model, obs, X, chol_m, beta, c)


def refit_coefficients(krig: KrigingFit, z_new):
    """(beta_hat, c) for a new observation vector, reusing the factorization."""
    z_new = np.asarray(z_new, dtype=float).ravel()
    if z_new.shape[0] != krig.n_obs:
        raise DomainError(f"z has {z_new.shape[0]} entries for {krig.n_obs} locations")
    return _gls(krig.chol_M, krig.X, z_new)


def _target_covariates(krig: KrigingFit, targets: np.ndarray, target_covariates):
    if target_covariates is None:
        if not krig.is_intercept_only():
            raise DomainError(
                "fit uses nontrivial covariates; pass target_covariates for prediction")
        return np.full((targets.shape[0], 1), krig.X[0, 0])
    xt = np.asarray(target_covariates, dtype=float)
    if xt.ndim == 1:
        xt = xt[:, None]
    if xt.shape != (targets.shape[0], krig.X.shape[1]):
        raise DomainError(
            f"target covariates shape {xt.shape} does not match "
            f"({targets.shape[0]}, {krig.X.shape[1]})")
    return xt


def predict_exact(krig: KrigingFit, targets, target_covariates=None,
                  chunk: int = 20000) -> np.ndarray:
    """Exact Kriging prediction ``X_t beta_hat + k_t c`` at arbitrary targets.

    Targets are processed in chunks to bound the size of the dense
    cross-covariance block.
    """
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    xt = _target_covariates(krig, targets, target_covariates)
    out = np.empty(targets.shape[0])
    for lo in range(0, targets.shape[0], chunk):
        hi = min(lo + chunk, targets.shape[0])
        k_t = cov_matrix(krig.model, targets[lo:hi], krig.obs_locs)
        out[lo:hi] = k_t @ krig.c
    out += xt @ krig.beta_hat
    return out


def kriging_se_exact(krig: KrigingFit, targets, target_covariates=None,
                     chunk: int = 4000) -> np.ndarray:
    """Prediction standard error of the smooth field at each target.

    Computes ``sqrt(sigma2 - k' M^-1 k + h' (X' M^-1 X)^-1 h)`` per target,
    with ``h = X_t - k' M^-1 X`` accounting for the estimated fixed effects.
    Values in [-1e-10, 0) are clamped to zero; anything more negative raises.
    """
    targets = np.asarray(targets, dtype=float).reshape(-1, 2)
    xt = _target_covariates(krig, targets, target_covariates)
    b = scipy.linalg.solve_triangular(krig.chol_M, krig.X, lower=True)
    gram_chol = scipy.linalg.cho_factor(b.T @ b, lower=True)
    out = np.empty(targets.shape[0])
    for lo in range(0, targets.shape[0], chunk):
        hi = min(lo + chunk, targets.shape[0])
        k_t = cov_matrix(krig.model, targets[lo:hi], krig.obs_locs)
        u = scipy.linalg.solve_triangular(krig.chol_M, k_t.T, lower=True)
        var = krig.model.sigma2 - np.einsum("ij,ij->j", u, u)
        h = xt[lo:hi] - u.T @ b
        hg = scipy.linalg.cho_solve(gram_chol, h.T)
        var += np.einsum("ij,ji->i", h, hg)
        if np.any(var < _VAR_CLAMP):
            raise NumericError(
                f"negative prediction variance {var.min():.3e} beyond clamp tolerance")
        out[lo:hi] = np.sqrt(np.clip(var, 0.0, None))
    return out
