"""Fast conditional simulation on the prediction grid.

One conditional draw combines
1. an unconditional stationary field on the padded grid via circulant
   embedding,
2. simulated observations at the (generally off-grid) data locations,
   conditioned on the field at each observation's (2L)^2 grid neighbors and
   reusing the rapid-prediction weights,
3. the rapid-prediction correction:
   ``draw = f_hat(z) + [g_uncond - f_hat(z_sim)]``, where the second fit
   reuses the data factorization and the same rapid setup.

All randomness comes from the counter-based Philox generator
(``philox4x64-10``) with standard normals produced by inverse CDF, so a draw
consumes a fixed, reproducible stream regardless of platform math libraries.
Sub-seeds for draw j are derived as ``seed XOR splitmix64(j)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtri

from .covariance import CovarianceModel
from .errors import DomainError, NumericError
from .exact import KrigingFit, refit_coefficients
from .gridding import PaddedGrid
from .rapid import RapidSetup, next_fft_len, predict_rapid
from . import rapid as _rapid

__all__ = [
    "Ensemble",
    "RNG_ALGORITHM",
    "sim_unconditional_grid",
    "sim_obs_local",
    "conditional_draw",
    "generate_ensemble",
    "simulate_exact_ensemble",
    "draw_seed",
]

RNG_ALGORITHM = "philox4x64-10"

_MASK64 = (1 << 64) - 1
_NEG_EIG_TOL = 1.0e-8
_COND_VAR_CLAMP = -1.0e-10


def _splitmix64(value: int) -> int:
    """SplitMix64 finalizer; a cheap, well-mixed 64-bit hash of an integer."""
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def draw_seed(seed: int, j: int) -> int:
    """Sub-seed for draw j: ``seed XOR splitmix64(j)``."""
    return (int(seed) ^ _splitmix64(int(j))) & _MASK64


def _rng(seed: int, stream: int) -> np.random.Generator:
    """Philox generator keyed by (seed, stream) with disjoint 128-bit keys."""
    key = (int(seed) & _MASK64) + (int(stream) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def _std_normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Inverse-CDF standard normals: exactly one uniform consumed per value."""
    u = (rng.integers(0, 1 << 53, size=shape).astype(float) + 0.5) / float(1 << 53)
    return ndtri(u)


def _embedding_spectrum(model: CovarianceModel, grid: PaddedGrid, p1: int, p2: int):
    lags = _rapid._wrapped_lag_distance(grid, p1, p2)
    return np.fft.fft2(model.covariance(lags)).real


@lru_cache(maxsize=8)
def _embedding_root(model: CovarianceModel, grid: PaddedGrid):
    """(p1, p2, sqrt(eigenvalues)) of a valid circulant embedding; cached.

    Both arguments are frozen dataclasses, so the cache key is by value.
    The returned array is shared and must be treated as read-only.
    """
    m1_tot, m2_tot = grid.total_dims
    p1 = next_fft_len(2 * m1_tot - 1)
    p2 = next_fft_len(2 * m2_tot - 1)
    spec = _embedding_spectrum(model, grid, p1, p2)
    if spec.min() < -_NEG_EIG_TOL * spec.max():
        p1, p2 = next_fft_len(2 * p1), next_fft_len(2 * p2)
        spec = _embedding_spectrum(model, grid, p1, p2)
        if spec.min() < -_NEG_EIG_TOL * spec.max():
            raise NumericError(
                f"circulant embedding is not positive semidefinite even after "
                f"doubling; most negative eigenvalue {spec.min():.6e}")
    return p1, p2, np.sqrt(np.clip(spec, 0.0, None))


def sim_unconditional_grid(model: CovarianceModel, grid: PaddedGrid, seed: int) -> np.ndarray:
    """Mean-zero stationary Gaussian field on the padded grid, shape (M2, M1).

    Uses circulant embedding of the covariance on a torus of highly
    composite dimensions.  If the embedding spectrum has eigenvalues below
    ``-1e-8 * max`` the torus is doubled once; a second failure raises with
    the most negative eigenvalue.  Small negative eigenvalues are clamped.
    """
    m1_tot, m2_tot = grid.total_dims
    p1, p2, root = _embedding_root(model, grid)
    rng = _rng(seed, 0)
    real = _std_normals(rng, (p2, p1))
    imag = _std_normals(rng, (p2, p1))
    coeff = root * (real + 1j * imag)
    field = np.sqrt(p1 * p2) * np.fft.ifft2(coeff)
    return field.real[:m2_tot, :m1_tot]


def sim_obs_local(model: CovarianceModel, setup: RapidSetup, grid_field: np.ndarray,
                  seed: int) -> np.ndarray:
    """Simulated observations consistent with an unconditional grid field.

    Each observation value is drawn from the conditional law of the process
    given the field at its (2L)^2 neighbor nodes, then nugget noise is
    added:  ``z_i = A_i . g[N(i)] + eta_i + eps_i`` with
    ``eta_i ~ N(0, sigma2 - k_i' K_N^-1 k_i)`` and ``eps_i ~ N(0, tau2)``.
    An observation on a grid node reproduces the grid value exactly.
    """
    expect = setup.grid.total_dims[::-1]
    if grid_field.shape != expect:
        raise DomainError(f"grid field shape {grid_field.shape} does not match {expect}")
    cvar = setup.cond_var
    if np.any(cvar < _COND_VAR_CLAMP * setup.model.sigma2):
        raise NumericError(
            f"negative conditional variance {cvar.min():.3e}; K_N solve inconsistent")
    cvar = np.clip(cvar, 0.0, None)
    mean = np.einsum("ij,ij->i", setup.weights, grid_field.ravel()[setup.neighbor_indices])
    rng = _rng(seed, 1)
    g_sim = mean + np.sqrt(cvar) * _std_normals(rng, setup.n_obs)
    noise = np.sqrt(model.tau2) * _std_normals(rng, setup.n_obs)
    return g_sim + noise


def conditional_draw(krig: KrigingFit, setup: RapidSetup, seed: int,
                     grid_covariates=None, data_prediction=None) -> np.ndarray:
    """One conditional draw of the field on the interior grid, shape (m2, m1).

    ``data_prediction`` may carry a precomputed ``predict_rapid`` of the real
    data to avoid repeating it across ensemble draws.
    """
    g_uncond = sim_unconditional_grid(krig.model, setup.grid, draw_seed(seed, 101))
    z_sim = sim_obs_local(krig.model, setup, g_uncond, draw_seed(seed, 202))
    beta_sim, c_sim = refit_coefficients(krig, z_sim)
    if data_prediction is None:
        data_prediction = predict_rapid(setup, krig.c, krig.beta_hat, grid_covariates)
    sim_prediction = predict_rapid(setup, c_sim, beta_sim, grid_covariates)
    return data_prediction + (setup.grid.interior_view(g_uncond) - sim_prediction)


@dataclass(frozen=True)
class Ensemble:
    """A set of conditional-simulation draws and its summary fields."""

    draws: np.ndarray          # (n_draws, m2, m1)
    seed: int
    n_draws: int
    mean_field: np.ndarray     # (m2, m1)
    empirical_se: np.ndarray   # (m2, m1), sample std with n_draws - 1 denominator
    rng_algorithm: str = RNG_ALGORITHM


def generate_ensemble(krig: KrigingFit, setup: RapidSetup, n_draws: int, seed: int,
                      grid_covariates=None) -> Ensemble:
    """Generate ``n_draws`` independent conditional draws.

    Draw j uses sub-seed ``seed XOR splitmix64(j)``; the same seed and
    configuration reproduce the ensemble bitwise.  The rapid setup and the
    data prediction are computed once and shared across draws.
    """
    if n_draws < 2:
        raise DomainError(f"need at least 2 draws, got {n_draws}")
    data_prediction = predict_rapid(setup, krig.c, krig.beta_hat, grid_covariates)
    draws = np.stack([
        conditional_draw(krig, setup, draw_seed(seed, j),
                         grid_covariates=grid_covariates,
                         data_prediction=data_prediction)
        for j in range(n_draws)
    ])
    return Ensemble(draws, int(seed), int(n_draws),
                    draws.mean(axis=0), draws.std(axis=0, ddof=1))


def simulate_exact_ensemble(krig: KrigingFit, grid: PaddedGrid, n_draws: int,
                            seed: int, grid_covariates=None) -> Ensemble:
    """Dense-linear-algebra conditional simulation on the interior grid.

    Reference implementation for validation and small timing baselines: the
    joint field at observations and interior grid nodes is simulated from
    its dense Cholesky factor, so cost grows with (n + N)^3.  Not intended
    for large grids.
    """
    from .covariance import cov_matrix
    from .exact import predict_exact

    if n_draws < 2:
        raise DomainError(f"need at least 2 draws, got {n_draws}")
    nodes = grid.interior_nodes()
    n = krig.n_obs
    joint = np.vstack([krig.obs_locs, nodes])
    big = cov_matrix(krig.model, joint)
    big[np.diag_indices_from(big)] += 1.0e-10 * krig.model.sigma2
    chol = np.linalg.cholesky(big)
    m1, m2 = grid.interior_dims
    xg = None if grid_covariates is None else \
        np.asarray(grid_covariates, dtype=float).reshape(m1 * m2, -1)
    data_pred = predict_exact(krig, nodes, xg)
    k_go = cov_matrix(krig.model, nodes, krig.obs_locs)
    tau = np.sqrt(krig.model.tau2)
    draws = np.empty((n_draws, m2, m1))
    for j in range(n_draws):
        rng = _rng(draw_seed(seed, j), 2)
        g_joint = chol @ _std_normals(rng, joint.shape[0])
        z_sim = g_joint[:n] + tau * _std_normals(rng, n)
        beta_sim, c_sim = refit_coefficients(krig, z_sim)
        sim_pred = k_go @ c_sim
        sim_pred = sim_pred + (xg @ beta_sim if xg is not None else beta_sim[0])
        draws[j] = (data_pred + (g_joint[n:] - sim_pred)).reshape(m2, m1)
    return Ensemble(draws, int(seed), int(n_draws),
                    draws.mean(axis=0), draws.std(axis=0, ddof=1))
