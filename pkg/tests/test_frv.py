import numpy as np
import pytest
from numpy.testing import assert_allclose

from frv_spectra.benchmarks import (
    ArmaParams,
    mp_green,
    mp_n_transform,
    varma11_m_transform,
    vma_autocov,
)
from frv_spectra.errors import (
    BranchSelectionError,
    DensityNormalizationError,
    InputError,
    NumericalError,
    ParameterError,
)
from frv_spectra.frv import (
    PolyCoeffs,
    SpectralDensity,
    TransformEvaluator,
    TransformTag,
    compose_n_transforms,
    density_from_green,
    m_transform_identity,
    m_transform_stationary,
    n_transform_identity,
    n_transform_numeric,
    poly_roots,
    poly_roots_batch,
    projector_n_transform,
    select_physical_root,
    spectral_grid,
    stationary_symbol,
    sweep_physical_roots,
)


def test_poly_roots_quadratic():
    roots = poly_roots([2.0, -3.0, 1.0])
    assert_allclose(np.sort_complex(roots), [1.0, 2.0], atol=1e-12)


def test_poly_roots_trims_leading_zeros():
    assert PolyCoeffs((1.0, 1.0, 0.0, 0.0)).degree == 1
    assert_allclose(poly_roots([1.0, 1.0, 0.0]), [-1.0], atol=1e-12)


def test_poly_roots_degree_zero():
    with pytest.raises(InputError):
        poly_roots([3.0])
    with pytest.raises(InputError):
        PolyCoeffs((0.0, 0.0))


def test_poly_roots_batch_matches_single():
    rng = np.random.default_rng(3)
    coefficients = rng.normal(size=(20, 7)) + 1j * rng.normal(size=(20, 7))
    batch = poly_roots_batch(coefficients)
    assert batch.shape == (20, 6)
    for row, roots in zip(coefficients, batch):
        residual = np.polynomial.polynomial.polyval(roots, row)
        assert np.max(np.abs(residual)) < 1e-9 * np.max(np.abs(row))


def test_poly_roots_batch_reduced_degree_row():
    coefficients = np.array([[2.0, -3.0, 1.0], [1.0, 1.0, 0.0]])
    roots = poly_roots_batch(coefficients)
    assert_allclose(np.sort_complex(roots[0]), [1.0, 2.0], atol=1e-12)
    assert roots[1, 0] == pytest.approx(-1.0)
    assert np.isnan(roots[1, 1])


def test_select_physical_root_prefers_negative_imaginary():
    z = 1.0 + 1e-9j
    assert select_physical_root([0.2 + 0.3j, 0.2 - 0.3j], z) == 0.2 - 0.3j


def test_select_physical_root_outside_support_uses_asymptote():
    # z r G^2 - (z + r - 1) G + 1 = 0 at z = 5, r = 0.25: both roots are real
    z = 5.0 + 1e-12j
    roots = poly_roots([1.0, -(z + 0.25 - 1), z * 0.25])
    chosen = select_physical_root(roots, z)
    assert chosen == pytest.approx(mp_green(5.0, 0.25), rel=1e-8)


def test_select_physical_root_follows_previous():
    candidates = [1.0 - 1.0j, 2.0 - 1.0j]
    assert select_physical_root(candidates, 1j, previous=2.1 - 1.0j) == 2.0 - 1.0j
    assert select_physical_root(candidates, 1j, tag=TransformTag.M_TRANSFORM) == 1.0 - 1.0j


def test_select_physical_root_fails():
    with pytest.raises(BranchSelectionError) as info:
        select_physical_root([1.0 + 1.0j, np.nan], 0.5 + 1e-9j)
    assert info.value.z == 0.5 + 1e-9j


def test_sweep_reproduces_mp_green():
    r = 0.5
    lambdas = spectral_grid(0.05, 3.5, 400)
    zs = lambdas + 1e-12j
    coefficients = np.stack([np.ones_like(zs), -(zs + r - 1), zs * r], axis=1)
    chosen = sweep_physical_roots(poly_roots_batch(coefficients), zs)
    assert_allclose(-chosen.imag / np.pi, -mp_green(zs, r).imag / np.pi, atol=1e-5)


def test_spectral_density_mass_and_cdf():
    lambdas = np.linspace(0.0, 2.0, 201)
    density = SpectralDensity(lambdas, np.full(201, 0.25), ((3.0, 0.5),))
    assert density.mass() == pytest.approx(1.0)
    assert density.cdf(1.0) == pytest.approx(0.25)
    assert density.cdf(3.0) == pytest.approx(1.0)
    assert density.cdf_left(3.0) == pytest.approx(0.5)
    assert density.moment(1) == pytest.approx(0.25 * 2 + 1.5)
    assert density.support() == (0.0, 3.0)


def test_spectral_density_histogram_mode():
    edges = np.array([0.0, 1.0, 2.0])
    density = SpectralDensity(np.array([0.5, 1.5]), np.array([0.2, 0.8]), edges=edges)
    assert density.mass() == pytest.approx(1.0)
    assert density.cdf(1.0) == pytest.approx(0.2)
    assert density.cdf(1.5) == pytest.approx(0.6)


def test_spectral_density_validation():
    with pytest.raises(InputError):
        SpectralDensity(np.array([0.0, 1.0]), np.array([1.0, -1.0]))
    with pytest.raises(InputError):
        SpectralDensity(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
    with pytest.raises(DensityNormalizationError):
        SpectralDensity(np.array([0.0, 1.0]), np.array([2.0, 2.0])).check_normalized()


def test_renormalized_continuous_drops_atoms():
    density = SpectralDensity(np.array([0.0, 1.0]), np.array([0.5, 0.5]), ((0.0, 0.5),))
    continuous = density.renormalized_continuous()
    assert continuous.atoms == ()
    assert continuous.mass() == pytest.approx(1.0)


def test_density_from_green_mp_at_r_one():
    # Marcenko-Pastur at r = 1: rho(2) = sqrt(2 * 2) / (2 pi 2) = 1/(2 pi)
    epsilon = 1e-6
    g = TransformEvaluator(lambda z: mp_green(z, 1.0), name="mp", vectorized=True)
    density = density_from_green(g, np.array([1.9, 2.0, 2.1]), epsilon=epsilon)
    assert density.rho[1] == pytest.approx(1 / (2 * np.pi), abs=2 * epsilon)
    assert density.atoms == ()


def test_density_from_green_finds_atom():
    # half the mass at 0 (identity scaled by 0) and half at 1
    g = TransformEvaluator(lambda z: 0.5 / z + 0.5 / (z - 1.0), vectorized=True)
    grid = np.linspace(-0.5, 1.5, 401)
    density = density_from_green(g, grid, epsilon=1e-3)
    positions = [x for x, _ in density.atoms]
    weights = [w for _, w in density.atoms]
    assert_allclose(positions, [0.0, 1.0], atol=1e-4)
    assert_allclose(weights, [0.5, 0.5], rtol=1e-3)
    assert np.max(density.rho) < 1.0


def test_density_from_green_names_failing_lambda():
    def broken(z):
        if abs(z.real - 0.5) < 1e-9:
            raise NumericalError("boom")
        return 1.0 / z

    with pytest.raises(NumericalError, match="lambda=0.5"):
        density_from_green(TransformEvaluator(broken), [0.0, 0.5, 1.0], epsilon=0.1)


def test_as_green_from_m_transform():
    m = TransformEvaluator(m_transform_identity, TransformTag.M_TRANSFORM)
    assert m.as_green()(2.0 + 0j) == pytest.approx(1.0)
    with pytest.raises(InputError):
        TransformEvaluator(n_transform_identity, TransformTag.N_TRANSFORM).as_green()


def test_m_transform_identity_pole():
    with pytest.raises(ParameterError):
        m_transform_identity(1.0)


def test_stationary_symbol_white_noise():
    omega = np.linspace(0.0, 2 * np.pi, 17)
    assert_allclose(stationary_symbol([2.0], [], omega), 4.0)


def test_quadrature_m_transform_matches_closed_form():
    rng = np.random.default_rng(11)
    params = ArmaParams.varma11(1.0, 0.3, 0.5)
    zs = rng.uniform(-2.0, 8.0, 50) + 1j * rng.uniform(0.05, 3.0, 50)
    closed = varma11_m_transform(zs, 1.0, 0.3, 0.5)
    assert_allclose(m_transform_stationary(params, zs), closed, atol=1e-6)


def test_n_transform_numeric_inverts_identity():
    w = 0.7 + 0.2j
    z = n_transform_numeric(m_transform_identity, w, seed_guess=2.0 + 0.5j)
    assert z == pytest.approx(n_transform_identity(w), rel=1e-10)


def test_n_transform_numeric_inverts_mp():
    w = 1.0 + 0.2j

    def m_transform(z):
        return z * mp_green(z, 0.5) - 1.0

    z = n_transform_numeric(m_transform, w, seed_guess=3.2 + 0j)
    assert z == pytest.approx(mp_n_transform(w, 0.5), rel=1e-10)


def test_m_transform_stationary_matches_toeplitz_spectrum():
    eigenvalues = np.linalg.eigvalsh(vma_autocov([1.0, 0.5], 2048))
    params = ArmaParams((1.0, 0.5), ())
    for z in (4.0 + 1.0j, 1.0 + 0.5j, -0.5 + 0.1j):
        finite = np.mean(eigenvalues / (z - eigenvalues))
        assert m_transform_stationary(params, z) == pytest.approx(finite, rel=1e-3, abs=1e-4)


def test_green_functions_schwarz_reflection():
    rng = np.random.default_rng(11)
    zs = rng.uniform(-1, 4, 20) + 1j * rng.uniform(0.01, 2, 20)
    params = ArmaParams.varma11(1.0, 0.3, 0.5)
    assert_allclose(mp_green(zs.conj(), 0.4), mp_green(zs, 0.4).conj(), rtol=1e-12)
    assert_allclose(
        varma11_m_transform(zs.conj(), 1.0, 0.3, 0.5),
        varma11_m_transform(zs, 1.0, 0.3, 0.5).conj(),
        rtol=1e-12,
    )
    assert_allclose(
        m_transform_stationary(params, zs.conj()),
        m_transform_stationary(params, zs).conj(),
        rtol=1e-9,
    )


def _numeric_projector(fraction):
    def n_transform(w):
        return n_transform_numeric(lambda z: fraction / (z - 1.0), w, seed_guess=1.0 + 1.0 / w)

    return TransformEvaluator(n_transform, TransformTag.N_TRANSFORM, f"p{fraction}")


def test_projector_n_transform_closed_form():
    w = 0.4 + 0.3j
    assert projector_n_transform(0.3)(w) == pytest.approx((0.3 + w) / w)


def test_projector_product_n_transform():
    rng = np.random.default_rng(5)
    n, m = 0.3, 0.6
    composed = compose_n_transforms(_numeric_projector(n), _numeric_projector(m))
    for w in rng.uniform(0.5, 2.0, 100) + 1j * rng.uniform(0.1, 1.0, 100):
        expected = (m + w) * (n + w) / (w * (1 + w))
        assert composed(w) == pytest.approx(expected, rel=1e-10)


def test_projector_fraction_range():
    with pytest.raises(ParameterError):
        projector_n_transform(0.0)


def test_spectral_grid():
    grid = spectral_grid(0.25, 2.25, 64)
    assert grid[0] == 0.25
    assert grid[-1] == 2.25
    assert np.all(np.diff(grid) > 0)
    with pytest.raises(InputError):
        spectral_grid(1.0, 1.0, 10)
