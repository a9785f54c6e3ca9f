import numpy as np
import pytest

from rapidkrig import rapid
from rapidkrig.covariance import CovarianceModel
from rapidkrig.errors import DomainError
from rapidkrig.exact import fit, predict_exact
from rapidkrig.gridding import build_padded_grid
from rapidkrig.rapid import (build_filter_spectrum, build_setup, convolve_filter,
                             kernel_approx_error, neighbor_cov, next_fft_len,
                             predict_rapid)

UNIT = (0.0, 1.0, 0.0, 1.0)


def direct_grid_sum(model, grid, cstar):
    """O(N^2) oracle for the grid convolution, via the lag table."""
    m1_tot, m2_tot = grid.total_dims
    hx, hy = grid.spacing
    dx = np.arange(-(m1_tot - 1), m1_tot) * hx
    dy = np.arange(-(m2_tot - 1), m2_tot) * hy
    lag_cov = model.covariance(np.hypot(dx[None, :], dy[:, None]))
    out = np.zeros((m2_tot, m1_tot))
    for qy in range(m2_tot):
        for qx in range(m1_tot):
            w = cstar[qy, qx]
            if w == 0.0:
                continue
            out += w * lag_cov[m2_tot - 1 - qy:2 * m2_tot - 1 - qy,
                               m1_tot - 1 - qx:2 * m1_tot - 1 - qx]
    return out


def test_next_fft_len_values():
    assert [next_fft_len(k) for k in (1, 2, 3, 5, 7, 31, 199, 699)] == \
        [1, 2, 3, 6, 8, 32, 216, 729]
    for n in range(1, 400):
        val = next_fft_len(n)
        assert val >= n
        while val % 2 == 0:
            val //= 2
        while val % 3 == 0:
            val //= 3
        assert val == 1


@pytest.mark.parametrize("dims", [(2, 2), (3, 5), (7, 4), (9, 9), (16, 11), (16, 16)])
def test_convolution_matches_direct_sum(dims):
    model = CovarianceModel(sigma2=1.2, alpha=4.0, nu=1.0)
    grid = build_padded_grid(UNIT, dims, 1, [])
    embed_dims, spectrum = build_filter_spectrum(model, grid)
    rng = np.random.default_rng(dims[0] * 100 + dims[1])
    for _ in range(5):
        cstar = rng.normal(size=(dims[1], dims[0]))
        fft_out = convolve_filter(spectrum, embed_dims, cstar)
        direct = direct_grid_sum(model, grid, cstar)
        assert np.abs(fft_out - direct).max() < 1e-10 * np.abs(direct).max()


def test_filter_spectrum_is_real_symmetric():
    model = CovarianceModel(sigma2=1.0, alpha=3.0, nu=1.5)
    grid = build_padded_grid(UNIT, (10, 12), 2, [])
    _, spectrum = build_filter_spectrum(model, grid)
    filt = np.fft.ifft2(spectrum)
    assert np.abs(filt.imag).max() < 1e-10 * np.abs(filt.real).max()
    # spectrum of a real even filter is real
    assert np.abs(spectrum.imag).max() < 1e-8 * np.abs(spectrum.real).max()


def test_setup_weight_count_and_interpolation_condition():
    rng = np.random.default_rng(0)
    model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=1.0)
    obs = rng.uniform(0, 1, size=(25, 2))
    for L in (2, 4):
        grid = build_padded_grid(UNIT, (20, 20), L, obs)
        setup = build_setup(model, grid, L, obs)
        assert setup.weights.shape == (25, (2 * L) ** 2)
        kn = neighbor_cov(model, grid, L)
        for i in range(25):
            node_x, node_y = grid.to_coords(setup.neighbor_indices[i])
            k_i = model.covariance(np.hypot(node_x - obs[i, 0], node_y - obs[i, 1]))
            resid = np.abs(kn @ setup.weights[i] - k_i).max()
            assert resid < 1e-8 * np.abs(k_i).max()


def test_on_node_observation_gets_unit_row():
    model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=1.5)
    grid = build_padded_grid(UNIT, (11, 11), 2, [(0.5, 0.5)])
    setup = build_setup(model, grid, 2, [(0.5, 0.5)])
    row = setup.weights[0]
    assert np.count_nonzero(row) == 1
    assert row.max() == 1.0
    node = setup.neighbor_indices[0][np.argmax(row)]
    x, y = grid.to_coords(node)
    assert (x, y) == (0.5, 0.5)
    assert setup.cond_var[0] == 0.0


def test_approximation_residual_small_on_full_grid():
    # direct evaluation of the interpolation condition over the neighbors
    rng = np.random.default_rng(1)
    model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=1.0)
    obs = rng.uniform(0.1, 0.9, size=(5, 2))
    grid = build_padded_grid(UNIT, (12, 12), 2, obs)
    setup = build_setup(model, grid, 2, obs)
    for i in range(5):
        idx = setup.neighbor_indices[i]
        node_x, node_y = grid.to_coords(idx)
        nodes = np.column_stack([node_x, node_y])
        for j in range(len(idx)):
            approx = sum(
                model.covariance(np.hypot(nodes[j, 0] - nodes[q, 0],
                                          nodes[j, 1] - nodes[q, 1])) * setup.weights[i, q]
                for q in range(len(idx)))
            truth = model.covariance(np.hypot(nodes[j, 0] - obs[i, 0],
                                              nodes[j, 1] - obs[i, 1]))
            assert abs(approx - truth) < 1e-8


def test_zero_coefficients_give_fixed_part():
    rng = np.random.default_rng(2)
    model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=1.0)
    obs = rng.uniform(0, 1, size=(8, 2))
    grid = build_padded_grid(UNIT, (10, 10), 2, obs)
    setup = build_setup(model, grid, 2, obs)
    field = predict_rapid(setup, np.zeros(8), np.array([2.5]))
    assert np.abs(field - 2.5).max() < 1e-14


def test_predict_rapid_linearity():
    rng = np.random.default_rng(3)
    model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=1.5)
    obs = rng.uniform(0, 1, size=(10, 2))
    grid = build_padded_grid(UNIT, (14, 14), 2, obs)
    setup = build_setup(model, grid, 2, obs)
    c1, c2 = rng.normal(size=10), rng.normal(size=10)
    lhs = predict_rapid(setup, 1.7 * c1 + c2)
    rhs = 1.7 * predict_rapid(setup, c1) + predict_rapid(setup, c2)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_on_grid_observations_match_exact_prediction():
    rng = np.random.default_rng(4)
    model = CovarianceModel(sigma2=1.0, alpha=6.0, nu=1.5, tau2=0.1)
    dims = (15, 15)
    grid0 = build_padded_grid(UNIT, dims, 2, [])
    nodes = grid0.interior_nodes()
    pick = rng.choice(len(nodes), size=30, replace=False)
    obs = nodes[pick]
    z = rng.normal(size=30)
    krig = fit(model, obs, z)
    grid = build_padded_grid(UNIT, dims, 2, obs)
    setup = build_setup(model, grid, 2, obs)
    rapid_field = predict_rapid(setup, krig.c, krig.beta_hat)
    exact_field = predict_exact(krig, grid.interior_nodes()).reshape(dims[1], dims[0])
    scale = np.abs(exact_field).max()
    assert np.abs(rapid_field - exact_field).max() < 1e-8 * scale


def test_setup_reuse_identical_to_rebuild():
    rng = np.random.default_rng(5)
    model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=1.0)
    obs = rng.uniform(0, 1, size=(12, 2))
    grid = build_padded_grid(UNIT, (12, 12), 2, obs)
    setup1 = build_setup(model, grid, 2, obs)
    c1, c2 = rng.normal(size=12), rng.normal(size=12)
    out_a1 = predict_rapid(setup1, c1)
    out_a2 = predict_rapid(setup1, c2)
    setup2 = build_setup(model, grid, 2, obs)
    assert np.array_equal(setup1.filter_spectrum, setup2.filter_spectrum)
    assert np.abs(out_a1 - predict_rapid(setup2, c1)).max() < 1e-12
    assert np.abs(out_a2 - predict_rapid(setup2, c2)).max() < 1e-12


def test_coincident_observations_share_weights():
    model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=1.0)
    obs = np.array([(0.43, 0.57), (0.43, 0.57), (0.8, 0.2)])
    grid = build_padded_grid(UNIT, (10, 10), 2, obs)
    setup = build_setup(model, grid, 2, obs)
    assert np.array_equal(setup.neighbor_indices[0], setup.neighbor_indices[1])
    assert np.array_equal(setup.weights[0], setup.weights[1])


def test_error_decreases_with_neighbor_order():
    rng = np.random.default_rng(6)
    model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=1.0, tau2=0.05)
    obs = rng.uniform(0, 1, size=(50, 2))
    z = rng.normal(size=50)
    krig = fit(model, obs, z)
    errs = []
    for L in (2, 4, 8):
        grid = build_padded_grid(UNIT, (40, 40), L, obs)
        setup = build_setup(model, grid, L, obs)
        rapid_field = predict_rapid(setup, krig.c, krig.beta_hat)
        exact_field = predict_exact(krig, grid.interior_nodes()).reshape(40, 40)
        errs.append(np.abs(rapid_field - exact_field).mean())
    assert errs[0] > errs[1] > errs[2]


def test_coefficient_length_mismatch():
    model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=1.0)
    obs = np.array([(0.5, 0.5), (0.3, 0.7)])
    grid = build_padded_grid(UNIT, (8, 8), 2, obs)
    setup = build_setup(model, grid, 2, obs)
    with pytest.raises(DomainError):
        predict_rapid(setup, np.zeros(5))


def test_kernel_approx_error_zero_on_node():
    model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=1.0)
    grid = build_padded_grid(UNIT, (11, 11), 2, [(0.5, 0.5)])
    pts = np.random.default_rng(7).uniform(0, 1, size=(500, 2))
    lam = kernel_approx_error(model, grid, 2, (0.5, 0.5), pts)
    assert lam < 1e-12


def test_kernel_approx_error_decreases_with_resolution():
    model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=2.5)
    pts = np.random.default_rng(8).uniform(0, 1, size=(2000, 2))
    lams = []
    for m in (20, 40):
        h = 1.0 / (m - 1)
        s_star = (0.5, 0.5) if m % 2 == 0 else (0.5 + h / 2, 0.5 + h / 2)
        grid = build_padded_grid(UNIT, (m, m), 2, [s_star])
        lams.append(kernel_approx_error(model, grid, 2, s_star, pts))
    assert lams[1] < lams[0]


def test_kernel_approx_error_smoothness_ordering():
    # at equal fill distance the smoother kernel approximates better
    pts = np.random.default_rng(9).uniform(0, 1, size=(2000, 2))
    m = 40
    s_star = (0.5, 0.5)
    lams = {}
    for nu in (0.5, 1.5):
        model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=nu)
        grid = build_padded_grid(UNIT, (m, m), 2, [s_star])
        lams[nu] = kernel_approx_error(model, grid, 2, s_star, pts)
    assert lams[1.5] < lams[0.5]


def test_build_count_instrumentation():
    model = CovarianceModel(sigma2=1.0, alpha=4.0, nu=1.0)
    obs = np.array([(0.5, 0.5)])
    grid = build_padded_grid(UNIT, (8, 8), 2, obs)
    before = rapid.BUILD_COUNT
    build_setup(model, grid, 2, obs)
    build_setup(model, grid, 2, obs)
    assert rapid.BUILD_COUNT == before + 2
