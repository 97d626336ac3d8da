import numpy as np
import pytest

from frv_spectra.benchmarks import ArmaParams, SvdBenchParams, mp_spectral_density
from frv_spectra.errors import (
    BranchSelectionError,
    DimensionError,
    FitError,
    InputError,
    ParameterError,
)
from frv_spectra.estimators import (
    cross_matrix,
    eigen_spectrum,
    pearson_cov,
    singular_spectrum,
    whiten,
)
from frv_spectra.fitting import (
    FitResult,
    benchmark_margin,
    benchmark_ratios,
    canonical_varma11,
    fit_varma11,
    flag_significant,
    spectral_distance,
)
from frv_spectra.frv import SpectralDensity
from frv_spectra.montecarlo import gen_varma_panel, gen_white_panel
from frv_spectra.panel import TimePanel, standardize


@pytest.fixture
def uniform():
    return SpectralDensity(np.array([0.0, 1.0]), np.array([1.0, 1.0]))


def test_spectral_distance_uniform(uniform):
    sample = (np.arange(10) + 0.5) / 10
    assert spectral_distance(sample, uniform) == pytest.approx(0.0, abs=1e-15)
    assert spectral_distance([1.0], uniform) == pytest.approx(0.25)


def test_spectral_distance_atoms():
    density = SpectralDensity(np.zeros(0), np.zeros(0), ((1.0, 0.5), (2.0, 0.5)))
    assert spectral_distance([1.0, 2.0, 1.0, 2.0], density) == pytest.approx(0.0)
    assert spectral_distance([1.0, 1.0], density) > 0


def test_spectral_distance_rejects_empty(uniform):
    with pytest.raises(InputError):
        spectral_distance([], uniform)


@pytest.mark.parametrize(
    "params, expected",
    [
        ((1.0, 0.3, 0.5), (1.0, 0.3, 0.5)),
        ((1.0, 0.3, -0.5), (1.0, -0.3, 0.5)),
        ((0.3, 1.0, 0.5), (1.0, 0.3, 0.5)),
        ((-1.0, -0.3, 0.5), (1.0, 0.3, 0.5)),
        ((0.3, -1.0, 0.2), (1.0, -0.3, 0.2)),
    ],
)
def test_canonical_varma11(params, expected):
    assert canonical_varma11(*params) == pytest.approx(expected)


def test_fit_varma11_white_noise():
    panel = gen_white_panel(64, 256, seed=12)
    spectrum = eigen_spectrum(pearson_cov(panel))
    result = fit_varma11(spectrum, 0.25, grid_points=256, multistart=4, max_evaluations=150)
    assert isinstance(result, FitResult)
    assert abs(result.a1) < 0.1
    assert abs(result.b1) < 0.1
    assert result.a0**2 == pytest.approx(1.0, abs=0.1)
    assert result.white_noise
    assert result.objective < 1e-3
    assert len(result.multistart_trace) == 4
    assert result.to_dict()["ratio"] == 0.25


def test_fit_varma11_input_errors():
    with pytest.raises(InputError):
        fit_varma11([-1.0, 1.0], 0.25)
    with pytest.raises(ParameterError):
        fit_varma11([1.0, 2.0], 1.5)


def test_fit_varma11_all_starts_fail(monkeypatch):
    def failing(*args, **kwargs):
        raise BranchSelectionError(0j, [])

    monkeypatch.setattr("frv_spectra.fitting.varma11_density", failing)
    with pytest.raises(FitError):
        fit_varma11([0.5, 1.0, 1.5], 0.25, multistart=2, max_evaluations=10)


@pytest.mark.slow
def test_fit_varma11_round_trip():
    params = ArmaParams.varma11(1.0, 0.3, 0.5)
    panel = gen_varma_panel(256, 1024, params, seed=2)
    spectrum = eigen_spectrum(pearson_cov(panel))
    result = fit_varma11(spectrum, 0.25, threads=4)
    assert result.a0 == pytest.approx(1.0, abs=0.1)
    assert result.a1 == pytest.approx(0.3, abs=0.1)
    assert result.b1 == pytest.approx(0.5, abs=0.1)


def test_flag_significant():
    params = SvdBenchParams(0.3, 0.2)
    edge = params.edges()[1]
    report = flag_significant([edge + 0.2, edge - 0.1, edge + 0.05], params, margin=0.1)
    assert [f.rank for f in report.flagged] == [1]
    assert report.flagged[0].excess == pytest.approx(0.2)
    assert report.threshold == pytest.approx(edge + 0.1)
    assert report.to_dict()["flagged"][0]["rank"] == 1


def test_flag_significant_rejects_negative_margin():
    with pytest.raises(ParameterError):
        flag_significant([0.5], SvdBenchParams(0.3, 0.2), margin=-0.1)


def test_benchmark_ratios():
    params = benchmark_ratios(37, 15, 118)
    assert params.n == pytest.approx(37 / 117)
    assert params.m == pytest.approx(15 / 117)
    with pytest.raises(DimensionError):
        benchmark_ratios(20, 10, 20)


def test_benchmark_margin_is_deterministic():
    first = benchmark_margin(37, 15, 118, seed=0)
    assert first > 0
    assert benchmark_margin(37, 15, 118, seed=0) == first


def _planted_factor_panels(seed: int, lag: int):
    n_obs = 118 + lag
    x = gen_white_panel(37, n_obs, seed=seed).values
    y = gen_white_panel(15, n_obs, seed=seed + 10_000).values.copy()
    y[0, lag:] = x[0, : n_obs - lag]
    x_panel = TimePanel(tuple(f"x{i}" for i in range(37)), x[:, : n_obs - lag])
    y_panel = TimePanel(tuple(f"y{i}" for i in range(15)), y[:, lag:])
    return standardize(x_panel), standardize(y_panel)


@pytest.mark.parametrize("lag", [0, 1])
def test_planted_factor_is_flagged(lag):
    x, y = _planted_factor_panels(seed=3, lag=lag)
    wx, wy = whiten(x), whiten(y)
    spectrum = singular_spectrum(cross_matrix(wy, wx))
    params = benchmark_ratios(wx.rank, wy.rank, x.n_obs)
    margin = benchmark_margin(wx.rank, wy.rank, x.n_obs, seed=3)
    report = flag_significant(spectrum, params, margin)
    assert [f.rank for f in report.flagged] == [1]
    assert report.flagged[0].value == pytest.approx(1.0, abs=1e-8)


@pytest.mark.slow
def test_planted_factor_detection_rate():
    hits, false_positives = 0, 0
    for seed in range(100):
        x, y = _planted_factor_panels(seed=seed, lag=1)
        wx, wy = whiten(x), whiten(y)
        params = benchmark_ratios(wx.rank, wy.rank, x.n_obs)
        margin = benchmark_margin(wx.rank, wy.rank, x.n_obs, seed=seed)
        report = flag_significant(singular_spectrum(cross_matrix(wy, wx)), params, margin)
        hits += [f.rank for f in report.flagged] == [1]

        x0 = standardize(gen_white_panel(37, 118, seed=seed + 500))
        y0 = standardize(gen_white_panel(15, 118, seed=seed + 900))
        clean = singular_spectrum(cross_matrix(whiten(y0), whiten(x0)))
        false_positives += len(flag_significant(clean, params, margin).flagged)
    assert hits >= 95
    assert false_positives <= 5


def _mp_quantiles(r, scale, size):
    density = mp_spectral_density(r, grid_points=4096, scale=scale)
    levels = (np.arange(size) + 0.5) / size
    return np.interp(levels, density.cdf(density.lambdas), density.lambdas)


def test_fit_varma11_scaled_mp_sample():
    sample = _mp_quantiles(0.25, 4.0, 200)
    result = fit_varma11(sample, 0.25, grid_points=256, multistart=4, max_evaluations=150)
    assert result.a0 == pytest.approx(2.0, abs=0.1)
    assert abs(result.a1) < 0.1
    assert abs(result.b1) < 0.1
    assert result.objective <= result.white_noise_objective


def test_fit_varma11_keeps_coloured_fit():
    params = ArmaParams.varma11(1.0, 0.3, 0.5)
    spectrum = eigen_spectrum(pearson_cov(gen_varma_panel(64, 256, params, seed=5)))
    result = fit_varma11(spectrum, 0.25, grid_points=256, multistart=4, max_evaluations=150)
    assert not result.white_noise
    assert result.white_noise_objective > 10 * result.objective


def test_spectral_distance_separates_ratios():
    spectrum = eigen_spectrum(pearson_cov(gen_white_panel(256, 1024, seed=3)))
    matched = spectral_distance(spectrum, mp_spectral_density(0.25))
    mismatched = spectral_distance(spectrum, mp_spectral_density(0.75))
    assert mismatched >= 5 * matched
