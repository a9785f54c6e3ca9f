"""Stationary isotropic Matern covariance family.

The kernel between two locations is ``sigma2 * phi(alpha * ||s - s'||)``
where ``phi(d) = d^nu K_nu(d) / (2^(nu-1) Gamma(nu))`` is the Matern
correlation with smoothness ``nu``.  The scale ``alpha`` multiplies distance,
so larger ``alpha`` means shorter correlation range.  An optional nugget
variance ``tau2`` describes independent observation noise; it never enters
the kernel itself, only the observation covariance ``K + tau2 I``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import cdist

from .bessel import matern_correlation
from .errors import DomainError, NumericError

__all__ = [
    "CovarianceModel",
    "matern_phi",
    "cov",
    "cov_matrix",
    "range_from_correlation",
]


def matern_phi(d, nu: float):
    """Matern correlation phi(d) at dimensionless distance d >= 0.

    Parameters
    ----------
    d : float or ndarray
        Nonnegative distance, already multiplied by the scale parameter.
    nu : float
        Smoothness, must be positive.

    Returns
    -------
    float or ndarray
        phi(d) in (0, 1], with phi(0) = 1 exactly (the analytic limit) and
        phi nonincreasing in d.
    """
    return matern_correlation(d, nu)


@dataclass(frozen=True)
class CovarianceModel:
    """Matern covariance parameters.

    Attributes
    ----------
    sigma2 : float
        Process variance, > 0.
    alpha : float
        Scale parameter applied multiplicatively to distance, > 0.
        (Quoted ranges from other conventions, where the range divides the
        distance, correspond to ``alpha = 1 / range``.)
    nu : float
        Smoothness, > 0.
    tau2 : float
        Nugget (observation noise) variance, >= 0.
    """

    sigma2: float
    alpha: float
    nu: float
    tau2: float = 0.0

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise DomainError(f"sigma2 must be positive, got {self.sigma2}")
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not self.nu > 0:
            raise DomainError(f"nu must be positive, got {self.nu}")
        if self.tau2 < 0:
            raise DomainError(f"tau2 must be nonnegative, got {self.tau2}")

    def correlation(self, dist):
        """phi(alpha * dist) for distances in coordinate units."""
        return matern_phi(self.alpha * np.asarray(dist, dtype=float), self.nu)

    def covariance(self, dist):
        """sigma2 * phi(alpha * dist)."""
        return self.sigma2 * self.correlation(dist)


def cov(model: CovarianceModel, s, s2) -> float:
    """Covariance between two locations; symmetric in its arguments."""
    s = np.asarray(s, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    dist = float(np.linalg.norm(s - s2))
    return float(model.covariance(dist))


def cov_matrix(model: CovarianceModel, locs_a, locs_b=None) -> np.ndarray:
    """Dense covariance matrix between two location sets.

    With ``locs_b`` omitted the matrix is the self-covariance of ``locs_a``,
    symmetrized exactly and positive semidefinite up to roundoff.
    """
    a = np.atleast_2d(np.asarray(locs_a, dtype=float))
    if a.size == 0:
        raise DomainError("cov_matrix requires at least one location")
    symmetric = locs_b is None
    b = a if symmetric else np.atleast_2d(np.asarray(locs_b, dtype=float))
    if b.size == 0:
        raise DomainError("cov_matrix requires at least one location")
    k = model.covariance(cdist(a, b))
    if symmetric:
        k = 0.5 * (k + k.T)
    return k


def range_from_correlation(nu: float, target_corr: float, dist: float,
                           tol: float = 1.0e-10) -> float:
    """Scale alpha such that ``matern_phi(alpha * dist, nu) == target_corr``.

    Solved by bracketed root finding on the monotone map alpha -> phi; the
    returned alpha reproduces the target correlation within ``tol``.
    """
    if not 0.0 < target_corr < 1.0:
        raise DomainError(f"target correlation must be in (0, 1), got {target_corr}")
    if not dist > 0:
        raise DomainError(f"distance must be positive, got {dist}")

    def gap(alpha):
        return float(matern_phi(alpha * dist, nu)) - target_corr

    lo = 1.0e-8 / dist
    if gap(lo) <= 0:
        lo = 1.0e-14 / dist
    hi = 1.0 / dist
    for _ in range(200):
        if gap(hi) < 0:
            break
        hi *= 2.0
    else:
        raise NumericError("failed to bracket the correlation range")
    alpha = brentq(gap, lo, hi, xtol=1.0e-14, rtol=8.9e-16, maxiter=300)
    if abs(gap(alpha)) > tol:
        raise NumericError(
            f"range solve did not reach tolerance: residual {gap(alpha):.3e}")
    return float(alpha)
