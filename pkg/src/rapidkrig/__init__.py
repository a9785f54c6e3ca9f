"""rapidkrig: exact universal Kriging, rapid FFT-based grid prediction, and
fast conditional simulation for stationary Matern fields.

The heavy lifting lives in focused modules:

* :mod:`rapidkrig.covariance` - the Matern family and range calibration
* :mod:`rapidkrig.gridding`   - padded prediction grids and neighborhoods
* :mod:`rapidkrig.exact`      - exact Kriging fit, prediction, standard errors
* :mod:`rapidkrig.rapid`      - sparse-weights + FFT rapid predictor
* :mod:`rapidkrig.simulate`   - circulant embedding and conditional ensembles
* :mod:`rapidkrig.io`         - observation files and the grid output format
* :mod:`rapidkrig.studies`    - accuracy, convergence, and timing studies
* :mod:`rapidkrig.cli`        - the ``rapidkrig`` command-line tool
"""

from .covariance import (CovarianceModel, cov, cov_matrix, matern_phi,
                         range_from_correlation)
from .errors import DomainError, InternalError, NumericError, RapidKrigError
from .exact import KrigingFit, fit, kriging_se_exact, predict_exact, refit_coefficients
from .gridding import (Neighborhood, PaddedGrid, build_padded_grid,
                       fill_distance, fill_distance_empirical, neighborhood)
from .io import (GridOutput, ObservationTable, build_covariates,
                 load_observations, parse_formula, read_grid_output,
                 write_grid_output)
from .rapid import (RapidSetup, build_setup, kernel_approx_error, next_fft_len,
                    predict_rapid)
from .simulate import (Ensemble, RNG_ALGORITHM, conditional_draw,
                       generate_ensemble, sim_obs_local, sim_unconditional_grid,
                       simulate_exact_ensemble)
from .studies import (StudyConfig, run_convergence_study, run_error_study,
                      run_timing)

__version__ = "0.1.0"

__all__ = [
    "CovarianceModel", "cov", "cov_matrix", "matern_phi", "range_from_correlation",
    "RapidKrigError", "DomainError", "NumericError", "InternalError",
    "KrigingFit", "fit", "refit_coefficients", "predict_exact", "kriging_se_exact",
    "PaddedGrid", "Neighborhood", "build_padded_grid", "neighborhood",
    "fill_distance", "fill_distance_empirical",
    "RapidSetup", "build_setup", "predict_rapid", "kernel_approx_error",
    "next_fft_len",
    "Ensemble", "RNG_ALGORITHM", "sim_unconditional_grid", "sim_obs_local",
    "conditional_draw", "generate_ensemble", "simulate_exact_ensemble",
    "ObservationTable", "load_observations", "parse_formula", "build_covariates",
    "GridOutput", "write_grid_output", "read_grid_output",
    "StudyConfig", "run_error_study", "run_convergence_study", "run_timing",
    "__version__",
]
