"""Reproduction studies: factorial accuracy, convergence order, and timing.

The error study simulates data from the model on random uniform locations,
fits exact Kriging, and compares rapid grid predictions against exact ones
at a handful of evaluation points (snapped to their nearest grid node).
The convergence study tracks the maximum kernel approximation error against
inverse fill distance on a refining grid ladder and fits log-log slopes.
The timing harness reports median wall times with setup and per-prediction
phases separated.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .covariance import CovarianceModel, range_from_correlation
from .errors import DomainError, RapidKrigError
from .exact import fit, predict_exact
from .gridding import build_padded_grid, fill_distance
from .rapid import build_setup, kernel_approx_error, predict_rapid
from .simulate import _rng, _std_normals, generate_ensemble, simulate_exact_ensemble

__all__ = [
    "StudyConfig",
    "ErrorCell",
    "ErrorStudyResult",
    "run_error_study",
    "ConvergenceRow",
    "run_convergence_study",
    "TimingRow",
    "run_timing",
    "DEFAULT_EVAL_POINTS",
]

# center, two edges, two corners of the unit square
DEFAULT_EVAL_POINTS = (
    (0.5, 0.5), (0.5, 0.05), (0.05, 0.5), (0.05, 0.05), (0.95, 0.95))

LAMBDA_FLOOR = 1.0e-14


@dataclass(frozen=True)
class StudyConfig:
    """Factor levels and replication for the accuracy study."""

    n_levels: tuple = (200,)
    corr_dist_levels: tuple = (0.2, 0.4)
    nu_levels: tuple = (0.5, 1.5)
    tau2_levels: tuple = (0.01, 0.1)
    L_levels: tuple = (2, 4)
    grid_levels: tuple = ((60, 60), (100, 100))
    n_reps: int = 10
    eval_points: tuple = DEFAULT_EVAL_POINTS
    seed: int = 1
    target_corr: float = 0.7
    sigma2: float = 1.0
    domain: tuple = (0.0, 1.0, 0.0, 1.0)

    def __post_init__(self):
        if self.n_reps < 1:
            raise DomainError("n_reps must be >= 1")
        if any(n < 2 for n in self.n_levels):
            raise DomainError("observation counts must be >= 2")
        if any(not 0 < d for d in self.corr_dist_levels):
            raise DomainError("correlation distances must be positive")
        if any(not nu > 0 for nu in self.nu_levels):
            raise DomainError("smoothness levels must be positive")
        if any(t < 0 for t in self.tau2_levels):
            raise DomainError("nugget levels must be nonnegative")
        if any(L < 1 for L in self.L_levels):
            raise DomainError("neighbor orders must be >= 1")
        if any(g[0] < 2 or g[1] < 2 for g in self.grid_levels):
            raise DomainError("grid dims must be >= 2")
        if not 0 < self.target_corr < 1:
            raise DomainError("target correlation must be in (0, 1)")


@dataclass(frozen=True)
class ErrorCell:
    n: int
    corr_dist: float
    nu: float
    tau2: float
    L: int
    grid: tuple
    mean_abs_err: float
    log10_err: float
    n_reps: int
    failures: int = 0


@dataclass(frozen=True)
class ErrorStudyResult:
    cells: list
    factor_effects: dict = field(default_factory=dict)

    def cell(self, **match) -> list:
        """Cells whose named factors equal the given values."""
        out = []
        for c in self.cells:
            if all(getattr(c, k) == v for k, v in match.items()):
                out.append(c)
        return out


def _snap_to_nodes(points, grid):
    xs, ys = grid.interior_xs(), grid.interior_ys()
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    ix = np.clip(np.rint((pts[:, 0] - xs[0]) / grid.spacing[0]).astype(int), 0, len(xs) - 1)
    iy = np.clip(np.rint((pts[:, 1] - ys[0]) / grid.spacing[1]).astype(int), 0, len(ys) - 1)
    return np.column_stack([xs[ix], ys[iy]]), ix, iy


def _simulate_data(model, obs, rng):
    """One draw of z = g(obs) + nugget noise from the model."""
    from .covariance import cov_matrix
    k = cov_matrix(model, obs)
    k[np.diag_indices_from(k)] += 1.0e-10 * model.sigma2
    chol = np.linalg.cholesky(k)
    g = chol @ _std_normals(rng, obs.shape[0])
    return g + math.sqrt(model.tau2) * _std_normals(rng, obs.shape[0])


def run_error_study(config: StudyConfig) -> ErrorStudyResult:
    """Mean |rapid - exact| per factorial cell, plus factor-direction effects.

    The exact fit for a (n, corr_dist, nu, tau2) combination is shared
    across the L and grid sub-cells; numeric failures are recorded per cell
    and the study continues.
    """
    x0, x1, y0, y1 = config.domain
    accum = {}
    for i_n, n in enumerate(config.n_levels):
        for i_cd, corr_dist in enumerate(config.corr_dist_levels):
            for i_nu, nu in enumerate(config.nu_levels):
                alpha = range_from_correlation(nu, config.target_corr, corr_dist)
                for i_t, tau2 in enumerate(config.tau2_levels):
                    model = CovarianceModel(config.sigma2, alpha, nu, tau2)
                    cell_index = ((i_n * 64 + i_cd) * 64 + i_nu) * 64 + i_t
                    for rep in range(config.n_reps):
                        rng = _rng(config.seed, cell_index * 100000 + rep)
                        obs = np.column_stack([
                            rng.uniform(x0, x1, n), rng.uniform(y0, y1, n)])
                        z = _simulate_data(model, obs, rng)
                        krig = fit(model, obs, z)
                        for grid_dims in config.grid_levels:
                            for L in config.L_levels:
                                key = (n, corr_dist, nu, tau2, L, tuple(grid_dims))
                                errs, fails = accum.setdefault(key, ([], [0]))
                                try:
                                    grid = build_padded_grid(
                                        config.domain, grid_dims, L, obs)
                                    setup = build_setup(model, grid, L, obs)
                                    rapid_field = predict_rapid(
                                        setup, krig.c, krig.beta_hat)
                                    nodes, ix, iy = _snap_to_nodes(
                                        config.eval_points, grid)
                                    exact_vals = predict_exact(krig, nodes)
                                    rapid_vals = rapid_field[iy, ix]
                                    errs.extend(np.abs(rapid_vals - exact_vals))
                                except RapidKrigError:
                                    fails[0] += 1
    cells = []
    for (n, corr_dist, nu, tau2, L, grid_dims), (errs, fails) in accum.items():
        mean_err = float(np.mean(errs)) if errs else float("nan")
        cells.append(ErrorCell(
            n, corr_dist, nu, tau2, L, grid_dims, mean_err,
            math.log10(mean_err) if errs and mean_err > 0 else float("nan"),
            config.n_reps, fails[0]))
    return ErrorStudyResult(cells, _factor_effects(cells))


def _factor_effects(cells) -> dict:
    """Mean change in log10 error between consecutive factor levels.

    For each factor, cells are paired across adjacent levels with all other
    factors held fixed; the reported effect is the mean paired difference
    (negative means the higher level is more accurate) and its standard
    error.
    """
    factors = {
        "nu": lambda c: c.nu,
        "L": lambda c: c.L,
        "tau2": lambda c: c.tau2,
        "grid": lambda c: c.grid[0] * c.grid[1],
        "n": lambda c: c.n,
        "corr_dist": lambda c: c.corr_dist,
    }
    out = {}
    for name, get in factors.items():
        levels = sorted({get(c) for c in cells})
        if len(levels) < 2:
            continue
        diffs = []
        for lo, hi in zip(levels[:-1], levels[1:]):
            by_rest = {}
            for c in cells:
                rest = tuple(other(c) for oname, other in factors.items() if oname != name)
                by_rest.setdefault(rest, {})[get(c)] = c.log10_err
            for pair in by_rest.values():
                if lo in pair and hi in pair and \
                        math.isfinite(pair[lo]) and math.isfinite(pair[hi]):
                    diffs.append(pair[hi] - pair[lo])
        if diffs:
            diffs = np.asarray(diffs)
            se = diffs.std(ddof=1) / math.sqrt(len(diffs)) if len(diffs) > 1 else 0.0
            out[name] = {"mean_dlog10": float(diffs.mean()), "se": float(se),
                         "n_pairs": len(diffs)}
    return out


@dataclass(frozen=True)
class ConvergenceRow:
    nu: float
    kappa_empirical: float
    kappa_theory: float
    n_points: int
    grid_sizes: tuple
    lambdas: tuple
    notes: str = ""


def run_convergence_study(nu_list=(0.5, 1.0, 1.5, 2.5), L: int = 2,
                          grid_ladder=tuple(range(20, 201, 20)),
                          corr_range: float = 0.25,
                          nu_grid_cap: dict | None = None,
                          sigma2: float = 1.0,
                          global_eval: int = 201, local_eval: int = 81,
                          local_span: float = 4.0) -> list:
    """Fit empirical approximation orders on a refining square-grid ladder.

    ``corr_range`` is the correlation range of the kernel in the divisor
    convention; the Matern scale applied to distance is ``1 / corr_range``.
    For each smoothness the maximum kernel approximation error is measured
    with the hypothetical observation at the center of the central grid box
    of a grid over the unit square, and regressed on log10(1 / fill
    distance).  The theoretical order in two dimensions is ``nu - 1/2``.
    Error values below 1e-14 are excluded as underflow.
    """
    alpha = 1.0 / corr_range
    caps = nu_grid_cap or {}
    rows = []
    for nu in nu_list:
        model = CovarianceModel(sigma2, alpha, nu)
        cap = caps.get(nu, max(grid_ladder))
        deltas, lambdas, sizes, notes = [], [], [], []
        for m in grid_ladder:
            if m > cap:
                continue
            h = 1.0 / (m - 1)
            s_star = (0.5, 0.5) if m % 2 == 0 else (0.5 + h / 2, 0.5 + h / 2)
            grid = build_padded_grid((0.0, 1.0, 0.0, 1.0), (m, m), L, [s_star])
            pts = _convergence_eval_points(s_star, h, global_eval, local_eval, local_span)
            lam = kernel_approx_error(model, grid, L, s_star, pts)
            if lam <= LAMBDA_FLOOR:
                notes.append(f"grid {m}x{m} excluded: error {lam:.2e} under floor")
                continue
            deltas.append(fill_distance(h))
            lambdas.append(lam)
            sizes.append(m)
        if len(deltas) < 2:
            rows.append(ConvergenceRow(nu, float("nan"), nu - 0.5, len(deltas),
                                       tuple(sizes), tuple(lambdas),
                                       "; ".join(notes + ["too few points"])))
            continue
        slope = np.polyfit(np.log10(1.0 / np.asarray(deltas)),
                           np.log10(np.asarray(lambdas)), 1)[0]
        rows.append(ConvergenceRow(nu, float(-slope), nu - 0.5, len(deltas),
                                   tuple(sizes), tuple(lambdas), "; ".join(notes)))
    return rows


def _convergence_eval_points(s_star, h, global_eval, local_eval, local_span):
    gx = np.linspace(0.0, 1.0, global_eval)
    gxx, gyy = np.meshgrid(gx, gx)
    pts = [np.column_stack([gxx.ravel(), gyy.ravel()])]
    span = local_span * h
    lx = np.linspace(max(0.0, s_star[0] - span), min(1.0, s_star[0] + span), local_eval)
    ly = np.linspace(max(0.0, s_star[1] - span), min(1.0, s_star[1] + span), local_eval)
    lxx, lyy = np.meshgrid(lx, ly)
    pts.append(np.column_stack([lxx.ravel(), lyy.ravel()]))
    return np.vstack(pts)


@dataclass(frozen=True)
class TimingRow:
    method: str
    n: int
    grid: tuple
    setup_seconds: float
    predict_seconds: float
    reps: int
    censored: bool = False


TIMING_METHODS = ("exact", "rapid-L2", "rapid-L4", "rapid-L8", "cs-exact", "cs-fast")


def run_timing(ns=(200, 1500), grid_ladder=((60, 60), (100, 100), (140, 140)),
               methods=("exact", "rapid-L4"), reps: int = 3,
               timeout_seconds: float = 60.0, seed: int = 1,
               nu: float = 0.5, corr_range: float = 0.05, sigma2: float = 1.0,
               tau2: float = 0.1, cs_draws: int = 10) -> list:
    """Median wall times per (method, n, grid): one warm-up run, then the
    median of ``reps`` timed runs.  A warm-up exceeding the timeout censors
    the cell.  Setup (fit / weight construction) and per-prediction phases
    are timed separately.
    """
    for m in methods:
        if m not in TIMING_METHODS:
            raise DomainError(f"unknown timing method {m!r}; choose from {TIMING_METHODS}")
    if reps < 1:
        raise DomainError("reps must be >= 1")
    model = CovarianceModel(sigma2, 1.0 / corr_range, nu, tau2)
    rows = []
    for n in ns:
        rng = _rng(seed, n)
        obs = np.column_stack([rng.uniform(0, 1, n), rng.uniform(0, 1, n)])
        z = _std_normals(rng, n)  # timing does not depend on data realism
        for grid_dims in grid_ladder:
            for method in methods:
                rows.append(_time_cell(method, model, obs, z, grid_dims,
                                       reps, timeout_seconds, seed, cs_draws))
    return rows


def _median_time(fn, reps, timeout_seconds):
    t0 = time.perf_counter()
    fn()  # warm-up, discarded
    warm = time.perf_counter() - t0
    if warm > timeout_seconds:
        return warm, True
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times)), False


def _time_cell(method, model, obs, z, grid_dims, reps, timeout, seed, cs_draws):
    n = obs.shape[0]
    if method == "exact":
        t0 = time.perf_counter()
        krig = fit(model, obs, z)
        setup_s = time.perf_counter() - t0
        grid = build_padded_grid((0, 1, 0, 1), grid_dims, 1, obs)
        nodes = grid.interior_nodes()
        pred_s, censored = _median_time(
            lambda: predict_exact(krig, nodes), reps, timeout)
        return TimingRow(method, n, tuple(grid_dims), setup_s, pred_s, reps, censored)
    if method.startswith("rapid-L"):
        L = int(method.split("L")[1])
        krig = fit(model, obs, z)
        t0 = time.perf_counter()
        grid = build_padded_grid((0, 1, 0, 1), grid_dims, L, obs)
        setup = build_setup(model, grid, L, obs)
        setup_s = time.perf_counter() - t0
        pred_s, censored = _median_time(
            lambda: predict_rapid(setup, krig.c, krig.beta_hat), reps, timeout)
        return TimingRow(method, n, tuple(grid_dims), setup_s, pred_s, reps, censored)
    if method == "cs-fast":
        L = 4
        t0 = time.perf_counter()
        krig = fit(model, obs, z)
        grid = build_padded_grid((0, 1, 0, 1), grid_dims, L, obs)
        setup = build_setup(model, grid, L, obs)
        setup_s = time.perf_counter() - t0
        pred_s, censored = _median_time(
            lambda: generate_ensemble(krig, setup, cs_draws, seed),
            reps, timeout)
        return TimingRow(method, n, tuple(grid_dims), setup_s, pred_s, reps, censored)
    if method == "cs-exact":
        t0 = time.perf_counter()
        krig = fit(model, obs, z)
        grid = build_padded_grid((0, 1, 0, 1), grid_dims, 1, obs)
        setup_s = time.perf_counter() - t0
        n_nodes = grid.n_interior
        if (n + n_nodes) > 9000:  # dense joint factorization would thrash
            return TimingRow(method, n, tuple(grid_dims), setup_s,
                             float("nan"), 0, True)
        pred_s, censored = _median_time(
            lambda: simulate_exact_ensemble(krig, grid, cs_draws, seed),
            reps, timeout)
        return TimingRow(method, n, tuple(grid_dims), setup_s, pred_s, reps, censored)
    raise DomainError(f"unknown timing method {method!r}")
