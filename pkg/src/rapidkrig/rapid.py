"""Rapid grid prediction: sparse local kernel weights plus FFT convolution.

Given observations scattered off a regular grid, each off-grid covariance
vector ``k(., s_i)`` is approximated by a linear combination of on-grid
covariances over the (2L)^2 nearest grid points.  Because the kernel is
stationary, the neighbor covariance matrix ``K_N`` is the same for every
observation and is factorized once; row i of the sparse weight matrix A
solves the local interpolation condition ``K_N A_i = k_i``.

Prediction for a coefficient vector c then costs one sparse product
``c* = A' c``, one FFT convolution of c* with the covariance lag filter on a
circulant extension of the grid, and the fixed-effect part.  The setup
(``K_N^-1``, A, and the filter spectrum) is reusable across many coefficient
vectors, which is what makes ensemble conditional simulation cheap.

Complexity: O(M^3) for the neighbor factorization, O(n M^2) for the weight
rows, O(N log N) per prediction, with M = (2L)^2 and N the padded grid size.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .covariance import CovarianceModel
from .errors import DomainError, NumericError
from .gridding import NODE_SNAP_TOL, PaddedGrid, neighborhood

__all__ = [
    "RapidSetup",
    "build_setup",
    "predict_rapid",
    "kernel_approx_error",
    "next_fft_len",
    "build_filter_spectrum",
    "convolve_filter",
]

# instrumentation: how many setups have been built in this process
BUILD_COUNT = 0


def next_fft_len(n: int) -> int:
    """Smallest integer >= n whose only prime factors are 2 and 3."""
    if n <= 1:
        return 1
    best = None
    p2 = 1
    while p2 < 4 * n:
        val = p2
        while val < n:
            val *= 3
        if best is None or val < best:
            best = val
        p2 *= 2
    return best


def _wrapped_lag_distance(grid: PaddedGrid, p1: int, p2: int) -> np.ndarray:
    """(p2, p1) Euclidean lag lengths on the embedding torus (minimal wrap)."""
    hx, hy = grid.spacing
    ix = np.arange(p1)
    iy = np.arange(p2)
    dx = np.minimum(ix, p1 - ix) * hx
    dy = np.minimum(iy, p2 - iy) * hy
    return np.hypot(dx[None, :], dy[:, None])


def build_filter_spectrum(model: CovarianceModel, grid: PaddedGrid):
    """Forward FFT of the covariance lag filter on the circulant extension.

    The embedding dimensions start from (2 M1 - 1, 2 M2 - 1) over the padded
    grid and are rounded up to the next highly composite (factors 2 and 3)
    sizes.  The filter value at a wrapped lag is the covariance of the
    minimal wrapped displacement, which reproduces the linear convolution
    exactly on the leading M1 x M2 block.
    """
    m1_tot, m2_tot = grid.total_dims
    p1 = next_fft_len(2 * m1_tot - 1)
    p2 = next_fft_len(2 * m2_tot - 1)
    lags = _wrapped_lag_distance(grid, p1, p2)
    filt = model.covariance(lags)
    return (p1, p2), np.fft.fft2(filt)


def convolve_filter(spectrum: np.ndarray, embed_dims, values: np.ndarray) -> np.ndarray:
    """Convolve a padded-grid field with the precomputed filter spectrum.

    ``values`` is (M2, M1); the result is the leading (M2, M1) block of the
    circulant convolution, i.e. the exact linear convolution on the grid.
    """
    p1, p2 = embed_dims
    m2_tot, m1_tot = values.shape
    embedded = np.zeros((p2, p1))
    embedded[:m2_tot, :m1_tot] = values
    full = np.fft.ifft2(spectrum * np.fft.fft2(embedded)).real
    return full[:m2_tot, :m1_tot]


def _neighbor_offsets(grid: PaddedGrid, L: int) -> np.ndarray:
    """Canonical (M, 2) block-node offsets, row major over the block."""
    hx, hy = grid.spacing
    bx = np.arange(2 * L) * hx
    by = np.arange(2 * L) * hy
    gx, gy = np.meshgrid(bx, by)
    return np.column_stack([gx.ravel(), gy.ravel()])


def neighbor_cov(model: CovarianceModel, grid: PaddedGrid, L: int) -> np.ndarray:
    """The shared (2L)^2 x (2L)^2 neighbor covariance matrix K_N."""
    offsets = _neighbor_offsets(grid, L)
    diff = offsets[:, None, :] - offsets[None, :, :]
    k = model.covariance(np.hypot(diff[..., 0], diff[..., 1]))
    return 0.5 * (k + k.T)


def _factor_neighbor_cov(model: CovarianceModel, kn: np.ndarray, L: int):
    """Cholesky factor of K_N with the documented conditioning ridge."""
    try:
        return scipy.linalg.cholesky(kn, lower=True)
    except scipy.linalg.LinAlgError:
        ridge = 1.0e-12 * model.sigma2 * (2 * L) ** 2
        warnings.warn(
            f"neighbor covariance K_N is numerically singular; adding ridge "
            f"{ridge:.3e} (reduce L or roughen nu to avoid this)",
            RuntimeWarning, stacklevel=3)
        try:
            return scipy.linalg.cholesky(kn + ridge * np.eye(kn.shape[0]), lower=True)
        except scipy.linalg.LinAlgError as err:
            raise NumericError(
                f"Cholesky of K_N failed even with ridge ({err}); "
                "reduce the neighbor order L or the smoothness nu") from err


@dataclass
class RapidSetup:
    """Precomputed state shared by all rapid predictions for one problem.

    Immutable in use: predictions never modify it, so one setup may serve
    many coefficient vectors (and concurrent ensemble draws).
    """

    model: CovarianceModel
    grid: PaddedGrid
    L: int
    kn_inv: np.ndarray            # (M, M) inverse neighbor covariance
    neighbor_indices: np.ndarray  # (n, M) flat padded indices per observation
    weights: np.ndarray           # (n, M) rows of A restricted to the block
    cond_var: np.ndarray          # (n,) sigma2 - k_i . A_i, for local simulation
    embed_dims: tuple[int, int]
    filter_spectrum: np.ndarray = field(repr=False)  # (P2, P1) complex

    @property
    def n_obs(self) -> int:
        return self.weights.shape[0]

    @property
    def block_size(self) -> int:
        return self.weights.shape[1]

    def coefficients_to_grid(self, c) -> np.ndarray:
        """Scatter-add ``c* = A' c`` onto the padded grid, shape (M2, M1)."""
        c = np.asarray(c, dtype=float).ravel()
        if c.shape[0] != self.n_obs:
            raise DomainError(
                f"coefficient vector has {c.shape[0]} entries for {self.n_obs} observations")
        m1_tot, m2_tot = self.grid.total_dims
        cstar = np.zeros(m1_tot * m2_tot)
        np.add.at(cstar, self.neighbor_indices.ravel(),
                  (self.weights * c[:, None]).ravel())
        return cstar.reshape(m2_tot, m1_tot)


def build_setup(model: CovarianceModel, grid: PaddedGrid, L: int, obs_locs) -> RapidSetup:
    """Precompute K_N^-1, the sparse weights A, and the filter spectrum.

    ``grid`` must have been padded with the same ``L`` and observations.
    Observations lying exactly on a grid node get the exact unit weight row
    (their covariance vector is a column of K_N), which also zeroes their
    conditional variance.
    """
    global BUILD_COUNT
    obs = np.asarray(obs_locs, dtype=float).reshape(-1, 2)
    if obs.shape[0] == 0:
        raise DomainError("build_setup requires at least one observation")

    kn = neighbor_cov(model, grid, L)
    chol = _factor_neighbor_cov(model, kn, L)
    identity = np.eye(kn.shape[0])
    kn_inv = scipy.linalg.cho_solve((chol, True), identity)

    n = obs.shape[0]
    block = 2 * L
    m = block * block
    hx, hy = grid.spacing
    px0, py0 = grid.padded_origin
    m1_tot, m2_tot = grid.total_dims

    neighborhoods = [neighborhood(grid, obs[i], L, center_obs=i) for i in range(n)]
    indices = np.stack([nb.indices for nb in neighborhoods])

    node_x = px0 + (indices % m1_tot) * hx
    node_y = py0 + (indices // m1_tot) * hy
    dist = np.hypot(node_x - obs[:, :1], node_y - obs[:, 1:2])
    k_rows = model.covariance(dist)  # (n, M)

    weights = scipy.linalg.cho_solve((chol, True), k_rows.T).T
    cond_var = model.sigma2 - np.einsum("ij,ij->i", weights, k_rows)

    # exact-column shortcut for on-node observations
    off = np.stack([nb.local_offset for nb in neighborhoods])
    on_node = (np.abs(off[:, 0]) <= NODE_SNAP_TOL) & (np.abs(off[:, 1]) <= NODE_SNAP_TOL)
    if np.any(on_node):
        unit = np.zeros(m)
        corner = (L - 1) * block + (L - 1)  # block position of the owning node
        for i in np.nonzero(on_node)[0]:
            weights[i] = unit
            weights[i, corner] = 1.0
            cond_var[i] = 0.0

    cond_var = np.where((cond_var < 0) & (cond_var > -1.0e-10 * model.sigma2),
                        0.0, cond_var)

    embed_dims, spectrum = build_filter_spectrum(model, grid)
    BUILD_COUNT += 1
    return RapidSetup(model, grid, L, kn_inv, indices, weights, cond_var,
                      embed_dims, spectrum)


def _fixed_part(setup: RapidSetup, beta_hat, grid_covariates) -> np.ndarray | float:
    if beta_hat is None:
        return 0.0
    beta = np.asarray(beta_hat, dtype=float).ravel()
    m1, m2 = setup.grid.interior_dims
    if grid_covariates is None:
        if beta.shape[0] != 1:
            raise DomainError(
                "grid covariates are required when beta_hat has more than one entry")
        return float(beta[0])
    xg = np.asarray(grid_covariates, dtype=float)
    if xg.ndim == 3:
        xg = xg.reshape(-1, xg.shape[2])
    if xg.shape != (m1 * m2, beta.shape[0]):
        raise DomainError(
            f"grid covariates shape {xg.shape} does not match ({m1 * m2}, {beta.shape[0]})")
    return (xg @ beta).reshape(m2, m1)


def predict_rapid(setup: RapidSetup, c, beta_hat=None, grid_covariates=None) -> np.ndarray:
    """Rapid prediction on the interior grid for one coefficient vector.

    Returns an (m2, m1) field: the FFT convolution of ``A' c`` with the
    covariance filter, cropped to the interior grid, plus the fixed part
    ``X_g beta_hat`` when given.
    """
    cstar = setup.coefficients_to_grid(c)
    spatial = convolve_filter(setup.filter_spectrum, setup.embed_dims, cstar)
    return setup.grid.interior_view(spatial) + _fixed_part(setup, beta_hat, grid_covariates)


def kernel_approx_error(model: CovarianceModel, grid: PaddedGrid, L: int,
                        s_star, eval_points) -> float:
    """Max absolute kernel approximation error for one off-grid center.

    Solves the local interpolation condition for a single hypothetical
    observation at ``s_star`` and returns
    ``sup |sum_q k(s, s_q) A_q  -  k(s, s_star)|`` over ``eval_points``.
    Zero (to roundoff) when ``s_star`` sits on a grid node.
    """
    s_star = np.asarray(s_star, dtype=float).ravel()
    evals = np.asarray(eval_points, dtype=float).reshape(-1, 2)
    nb = neighborhood(grid, s_star, L)
    node_x, node_y = grid.to_coords(nb.indices)
    nodes = np.column_stack([node_x, node_y])

    kn = neighbor_cov(model, grid, L)
    chol = _factor_neighbor_cov(model, kn, L)
    k_star = model.covariance(np.hypot(nodes[:, 0] - s_star[0], nodes[:, 1] - s_star[1]))
    w = scipy.linalg.cho_solve((chol, True), k_star)

    d_nodes = np.hypot(evals[:, 0:1] - nodes[None, :, 0], evals[:, 1:2] - nodes[None, :, 1])
    approx = model.covariance(d_nodes) @ w
    truth = model.covariance(np.hypot(evals[:, 0] - s_star[0], evals[:, 1] - s_star[1]))
    return float(np.max(np.abs(approx - truth)))
