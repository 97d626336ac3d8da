from unittest.mock import patch

import numpy as np
import pytest
import scipy.integrate
from numpy.testing import assert_allclose

from frv_spectra.benchmarks import (
    ArmaParams,
    MpParams,
    SvdBenchParams,
    master_equation_z,
    mp2_density,
    mp2_density_cardano,
    mp_density,
    mp_edges,
    mp_green,
    mp_n_transform,
    mp_spectral_density,
    select_mp_root,
    stationary_density,
    svd_benchmark_density,
    var_autocov,
    varma11_density,
    varma11_m_transform,
    varma11_polynomial,
    varma_autocov,
    varma_autocov_spectrum,
    vma_autocov,
)
from frv_spectra.errors import NumericalError, ParameterError, StationarityError
from frv_spectra.frv import density_from_green, n_transform_identity


def test_mp_edges():
    assert mp_edges(0.25) == (0.25, 2.25)
    assert mp_edges(1.0) == (0.0, 4.0)
    with pytest.raises(ParameterError):
        mp_edges(0.0)


def test_mp_params_scale():
    assert MpParams(0.25, 2.0).edges() == (0.5, 4.5)
    with pytest.raises(ParameterError):
        MpParams(0.25, -1.0)


def test_mp_density_values():
    assert mp_density(1.0, 0.25) == pytest.approx(np.sqrt(1.25 * 0.75) / (2 * np.pi * 0.25))
    assert mp_density(0.1, 0.25) == 0.0
    assert mp_density(3.0, 0.25) == 0.0
    assert mp_density(2.0, 1.0) == pytest.approx(1 / (2 * np.pi))


@pytest.mark.parametrize("r", [0.1, 0.25, 0.5, 0.9])
def test_mp_density_normalized(r):
    lo, hi = mp_edges(r)
    mass, _ = scipy.integrate.quad(lambda x: mp_density(x, r), lo, hi, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_mp_density_large_ratio_has_atom():
    density = mp_spectral_density(4.0)
    assert density.atoms == ((0.0, 0.75),)
    lo, hi = mp_edges(4.0)
    mass, _ = scipy.integrate.quad(lambda x: mp_density(x, 4.0), lo, hi, limit=200)
    assert mass == pytest.approx(0.25, abs=1e-6)


def test_mp_spectral_density_support():
    density = mp_spectral_density(0.25, grid_points=2048)
    assert density.lambdas[0] == 0.25
    assert density.lambdas[-1] == 2.25
    assert density.mass() == pytest.approx(1.0, abs=1e-3)
    assert density.moment(1) == pytest.approx(1.0, abs=1e-3)


def test_mp_green_and_n_transform_are_inverse():
    r = 0.4
    for z in (3.0 + 1.0j, -1.0 + 0.5j, 0.7 + 2.0j):
        m = z * mp_green(z, r) - 1
        assert mp_n_transform(m, r) == pytest.approx(z, rel=1e-10)


def test_select_mp_root_matches_closed_form():
    z = 1.2 + 1e-9j
    assert select_mp_root(z, 0.3) == pytest.approx(mp_green(z, 0.3), rel=1e-6)


def test_svd_bench_params():
    params = SvdBenchParams(0.3, 0.2)
    lo, hi = params.squared_edges()
    centre = 0.3 + 0.2 - 2 * 0.06
    half = 2 * np.sqrt(0.06 * 0.7 * 0.8)
    assert (lo, hi) == pytest.approx((centre - half, centre + half))
    assert params.atoms() == ((0.0, 0.8),)
    (zero, zero_weight), (one, one_weight) = SvdBenchParams(0.7, 0.6).atoms()
    assert (zero, one) == (0.0, 1.0)
    assert (zero_weight, one_weight) == pytest.approx((0.4, 0.3))
    with pytest.raises(ParameterError):
        SvdBenchParams(1.0, 0.5)


@pytest.mark.parametrize("n, m", [(37 / 118, 15 / 118), (0.3, 0.3), (0.7, 0.6), (0.5, 0.2)])
def test_svd_benchmark_normalized(n, m):
    params = SvdBenchParams(n, m)
    density = svd_benchmark_density(params)
    lo, hi = params.edges()
    mass, _ = scipy.integrate.quad(
        lambda s: float(svd_benchmark_density(params, grid=[s]).rho[0]), lo, hi, limit=400
    )
    assert mass + density.atom_mass == pytest.approx(1.0, abs=1e-6)
    assert density.atoms[0] == (0.0, 1.0 - min(n, m))


def test_svd_benchmark_outside_band_is_zero():
    params = SvdBenchParams(0.3, 0.1)
    lo, hi = params.edges()
    assert lo > 0
    density = svd_benchmark_density(params, grid=[lo / 2, hi * 1.01, 1.5])
    assert np.all(density.rho == 0.0)


def test_mp2_density_moments():
    n, m = 0.25, 0.25
    density = mp2_density(SvdBenchParams(n, m))
    assert density.mass() == pytest.approx(1.0, abs=1e-3)
    # first moment of s^2 over the T eigenvalues of D is n m
    lambdas = density.lambdas
    second = scipy.integrate.trapezoid(density.rho * lambdas**2, lambdas)
    assert second == pytest.approx(n * m, rel=1e-2)


def test_mp2_cardano_matches_polynomial_roots():
    params = SvdBenchParams(0.3, 0.4)
    grid = np.linspace(0.01, 1.2, 300)
    polynomial = mp2_density(params, grid=grid)
    cardano = mp2_density_cardano(params, grid)
    assert_allclose(cardano.rho, polynomial.rho, atol=1e-6)


def test_vma_autocov():
    matrix = vma_autocov([1.0, 0.3], 6)
    assert_allclose(np.diag(matrix), 1.09)
    assert_allclose(np.diag(matrix, 1), 0.3)
    assert_allclose(np.diag(matrix, 2), 0.0)


def test_var_autocov_inverts_mapped_vma():
    b, a0 = [0.5], 1.0
    product = var_autocov(b, a0, 128) @ vma_autocov([1.0 / a0, -0.5 / a0], 128)
    assert_allclose(product, np.eye(128), atol=1e-9)


def test_varma_autocov_spectrum_matches_dense():
    params = ArmaParams.varma11(1.0, 0.3, 0.5)
    dense = np.linalg.eigvals(varma_autocov(params, 40)).real
    assert_allclose(np.sort(dense), varma_autocov_spectrum(params, 40), rtol=1e-8)


def test_arma_params_stationarity():
    with pytest.raises(StationarityError):
        ArmaParams.varma11(1.0, 0.0, 1.0)
    with pytest.raises(ParameterError):
        ArmaParams((0.0, 1.0))
    params = ArmaParams.varma11(1.0, 0.3, 0.5)
    assert params.q1 == 1
    assert params.q2 == 1
    assert params.first_moment() == pytest.approx(1.39 / 0.75, rel=1e-8)


def test_varma11_m_transform_white_noise():
    z = 3.0 + 1.0j
    assert varma11_m_transform(z, 1.5, 0.0, 0.0) == pytest.approx(2.25 / (z - 2.25))


def test_varma11_m_transform_asymptote():
    z = 1e6 + 0j
    params = ArmaParams.varma11(1.0, 0.3, 0.5)
    assert z * varma11_m_transform(z, 1.0, 0.3, 0.5) == pytest.approx(
        params.first_moment(), rel=1e-4
    )


def test_varma11_m_transform_rejects_unit_root():
    with pytest.raises(StationarityError):
        varma11_m_transform(2.0, 1.0, 0.3, 1.0)


def test_varma11_polynomial_has_master_equation_root():
    a0, a1, b1, r = 1.0, 0.3, 0.5, 0.25
    x = 2.0 + 0.7j
    m = varma11_m_transform(x, a0, a1, b1) / r
    z = x * r * (1 + m)
    poly = varma11_polynomial(np.array([z]), a0, a1, b1, r)[0]
    value = np.polynomial.polynomial.polyval(m, poly)
    scale = np.sum(np.abs(poly) * np.abs(m) ** np.arange(poly.size))
    assert abs(value) < 1e-10 * scale


def test_varma11_reduces_to_scaled_mp():
    a0, r = 1.3, 0.25
    varma = varma11_density(a0, 0.0, 0.0, r, grid_points=2048)
    mp = mp_spectral_density(r, grid_points=2048, scale=a0**2)
    assert_allclose(varma.lambdas, mp.lambdas)
    assert_allclose(varma.rho, mp.rho, atol=1e-6)


def test_varma11_density_normalized():
    density = varma11_density(1.0, 0.3, 0.5, 0.25)
    assert density.mass() == pytest.approx(1.0, abs=1e-3)
    assert density.moment(1) == pytest.approx(1.39 / 0.75, rel=1e-2)


def test_varma11_density_rejects_bad_ratio():
    with pytest.raises(ParameterError):
        varma11_density(1.0, 0.3, 0.5, 1.5)


def test_varma11_density_macro_panel_shape():
    density = varma11_density(0.8, 0.2, 0.4, 52 / 118)
    assert np.all(np.isfinite(density.rho))
    assert density.mass() == pytest.approx(1.0, abs=1e-3)
    inside = np.flatnonzero(density.rho > 1e-6)
    assert np.all(np.diff(inside) == 1)


@pytest.mark.parametrize(
    "a0, a1, b1, r",
    [
        (1.0, 0.99, 0.0, 0.9),
        (0.5, 0.45, 0.8, 0.9),
        (1.0, -0.5, 0.3, 0.5),
        (1.0, 0.3, -0.7, 0.9),
        (1.0, 0.0, 0.9, 0.5),
        (0.7, -0.6, -0.5, 0.75),
    ],
)
def test_varma11_density_hard_parameters(a0, a1, b1, r):
    density = varma11_density(a0, a1, b1, r)
    assert np.all(np.isfinite(density.rho))
    assert density.mass() == pytest.approx(1.0, abs=1e-3)


def test_varma11_default_grid_refines_tiny_lower_edge():
    density = varma11_density(0.5, 0.45, 0.8, 0.9)
    lo = density.lambdas[0]
    assert lo == pytest.approx((0.05 / 1.8) ** 2 * (1 - np.sqrt(0.9)) ** 2)
    assert np.count_nonzero(density.lambdas < 100 * lo) > 100
    assert np.all(np.diff(density.lambdas) > 0)


def test_master_equation_white_noise():
    # with A = C = identity the master equation gives the MP N-transform
    r, m = 0.3, 0.4 + 0.2j
    z = master_equation_z(m, r, n_transform_identity)
    assert z == pytest.approx(mp_n_transform(m, r), rel=1e-12)


def test_stationary_density_matches_closed_form():
    params = ArmaParams.varma11(1.0, 0.3, 0.5)
    numeric = stationary_density(params, 0.25, grid_points=200)
    epsilon = 2.0 * float(np.mean(np.diff(numeric.lambdas)))
    closed = varma11_density(1.0, 0.3, 0.5, 0.25, grid=numeric.lambdas, epsilon=epsilon)
    assert_allclose(numeric.rho, closed.rho, atol=1e-4)


def test_stationary_density_reads_green_function():
    params = ArmaParams.varma11(1.0, 0.3, 0.5)
    with patch("frv_spectra.benchmarks.density_from_green", wraps=density_from_green) as extract:
        density = stationary_density(params, 0.25, grid_points=64)
    extract.assert_called_once()
    assert extract.call_args.kwargs["detect_atoms"] is False
    assert density.atoms == ()
    assert np.all(density.rho >= 0)


def test_stationary_density_names_failing_lambda():
    params = ArmaParams.varma11(1.0, 0.3, 0.5)
    with patch(
        "frv_spectra.benchmarks.m_transform_stationary",
        side_effect=NumericalError("quadrature diverged"),
    ):
        with pytest.raises(NumericalError, match="stationary ARMA failed at lambda="):
            stationary_density(params, 0.25, grid_points=16)
