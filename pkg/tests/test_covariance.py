import math

import numpy as np
import pytest
import scipy.special

from rapidkrig.bessel import kv
from rapidkrig.covariance import (CovarianceModel, cov, cov_matrix, matern_phi,
                                  range_from_correlation)
from rapidkrig.errors import DomainError


def test_phi_at_zero_is_exactly_one():
    assert matern_phi(0.0, 1.0) == 1.0
    assert matern_phi(0.0, 0.5) == 1.0


def test_phi_half_integer_closed_forms():
    # nu = 1/2: exp(-d); nu = 3/2: (1+d) exp(-d); nu = 5/2: (1+d+d^2/3) exp(-d)
    d = np.linspace(1e-6, 10.0, 2000)
    assert np.abs(matern_phi(d, 0.5) - np.exp(-d)).max() < 1e-12
    assert np.abs(matern_phi(d, 1.5) - (1 + d) * np.exp(-d)).max() < 1e-12
    assert np.abs(matern_phi(d, 2.5) - (1 + d + d**2 / 3) * np.exp(-d)).max() < 1e-12


def test_phi_known_points():
    assert matern_phi(1.0, 0.5) == pytest.approx(math.exp(-1.0), abs=1e-12)
    assert matern_phi(1.0, 1.5) == pytest.approx(2 * math.exp(-1.0), abs=1e-12)


@pytest.mark.parametrize("nu", [0.5, 1.0, 1.5, 2.5])
def test_phi_nonincreasing(nu):
    d = np.arange(0.0, 5.01, 0.1)
    phi = matern_phi(d, nu)
    assert np.all(np.diff(phi) <= 1e-15)
    assert np.all(phi > 0)
    assert np.all(phi <= 1.0)


@pytest.mark.parametrize("nu", [0.2, 0.5, 1.0, 1.7, 2.5, 4.3, 9.0])
def test_bessel_matches_scipy(nu):
    rng = np.random.default_rng(0)
    x = np.concatenate([rng.uniform(1e-8, 2, 300), rng.uniform(2, 60, 300)])
    ref = scipy.special.kv(nu, x)
    rel = np.abs(kv(nu, x) - ref) / np.abs(ref)
    assert rel.max() < 1e-12


def test_bessel_route_reproduces_half_integer_closed_forms():
    # the Bessel evaluation itself (series + continued fraction + recurrence)
    # must reproduce the closed forms, independent of the fast path
    from rapidkrig.bessel import matern_correlation_bessel
    d = np.linspace(1e-6, 10.0, 2000)
    assert np.abs(matern_correlation_bessel(d, 0.5) - np.exp(-d)).max() < 1e-12
    assert np.abs(matern_correlation_bessel(d, 1.5) - (1 + d) * np.exp(-d)).max() < 1e-12
    assert np.abs(matern_correlation_bessel(d, 2.5)
                  - (1 + d + d**2 / 3) * np.exp(-d)).max() < 1e-12


def test_fast_path_agrees_with_bessel_route():
    from rapidkrig.bessel import matern_correlation_bessel
    d = np.linspace(1e-6, 12.0, 2000)
    for nu in (0.5, 1.5, 2.5, 3.5):
        assert np.abs(matern_phi(d, nu)
                      - matern_correlation_bessel(d, nu)).max() < 1e-12


def test_phi_domain_errors():
    with pytest.raises(DomainError):
        matern_phi(1.0, -0.5)
    with pytest.raises(DomainError):
        matern_phi(-1.0, 0.5)


def test_model_validation():
    with pytest.raises(DomainError):
        CovarianceModel(sigma2=0.0, alpha=1.0, nu=1.0)
    with pytest.raises(DomainError):
        CovarianceModel(sigma2=1.0, alpha=-1.0, nu=1.0)
    with pytest.raises(DomainError):
        CovarianceModel(sigma2=1.0, alpha=1.0, nu=0.0)
    with pytest.raises(DomainError):
        CovarianceModel(sigma2=1.0, alpha=1.0, nu=1.0, tau2=-0.1)


def test_cov_zero_distance_returns_sigma2():
    model = CovarianceModel(sigma2=2.0, alpha=3.0, nu=1.0)
    assert cov(model, (0.3, 0.4), (0.3, 0.4)) == pytest.approx(2.0, abs=1e-15)


def test_cov_closed_form_and_scale_invariance():
    m1 = CovarianceModel(sigma2=1.0, alpha=1.0, nu=0.5)
    assert cov(m1, (0.0, 0.0), (1.0, 0.0)) == pytest.approx(math.exp(-1.0), abs=1e-12)
    # scale-distance product invariance: alpha*d identical
    m2 = CovarianceModel(sigma2=1.0, alpha=2.0, nu=0.5)
    assert cov(m2, (0.0, 0.0), (0.5, 0.0)) == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_cov_symmetric_in_arguments():
    model = CovarianceModel(sigma2=1.4, alpha=2.2, nu=1.3)
    a, b = (0.1, 0.9), (0.7, 0.2)
    assert cov(model, a, b) == cov(model, b, a)


def test_cov_matrix_single_point():
    model = CovarianceModel(sigma2=1.0, alpha=1.0, nu=1.0)
    k = cov_matrix(model, [(0.2, 0.2)])
    assert k.shape == (1, 1)
    assert k[0, 0] == pytest.approx(1.0, abs=1e-15)


def test_cov_matrix_two_points_symmetric_unit_diagonal():
    model = CovarianceModel(sigma2=1.0, alpha=2.0, nu=1.5)
    k = cov_matrix(model, [(0.0, 0.0), (0.4, 0.3)])
    assert k.shape == (2, 2)
    assert np.allclose(np.diag(k), 1.0, atol=1e-15)
    assert k[0, 1] == k[1, 0]


@pytest.mark.parametrize("n,seed", [(5, 1), (25, 2), (50, 3)])
def test_cov_matrix_positive_semidefinite(n, seed):
    rng = np.random.default_rng(seed)
    model = CovarianceModel(sigma2=1.0, alpha=3.0, nu=1.5)
    pts = rng.uniform(0, 1, size=(n, 2))
    k = cov_matrix(model, pts)
    assert np.abs(k - k.T).max() < 1e-14
    assert np.linalg.eigvalsh(k).min() >= -1e-10 * model.sigma2


def test_cov_matrix_empty_input():
    model = CovarianceModel(sigma2=1.0, alpha=1.0, nu=1.0)
    with pytest.raises(DomainError):
        cov_matrix(model, np.empty((0, 2)))


def test_range_from_correlation_closed_form():
    # nu = 1/2: phi(alpha d) = exp(-alpha d), so alpha = -ln(corr)/d
    alpha = range_from_correlation(0.5, math.exp(-1.0), 1.0)
    assert alpha == pytest.approx(1.0, abs=1e-9)
    alpha = range_from_correlation(0.5, 0.7, 0.2)
    assert alpha == pytest.approx(-math.log(0.7) / 0.2, abs=1e-8)


@pytest.mark.parametrize("nu,corr,dist", [
    (1.0, 0.7, 0.4), (1.5, 0.3, 0.8), (0.5, 0.95, 0.1), (2.5, 0.5, 1.3)])
def test_range_from_correlation_self_consistent(nu, corr, dist):
    alpha = range_from_correlation(nu, corr, dist)
    assert float(matern_phi(alpha * dist, nu)) == pytest.approx(corr, abs=1e-9)


def test_range_from_correlation_validation():
    with pytest.raises(DomainError):
        range_from_correlation(1.0, 1.5, 0.2)
    with pytest.raises(DomainError):
        range_from_correlation(1.0, 0.7, -0.2)
