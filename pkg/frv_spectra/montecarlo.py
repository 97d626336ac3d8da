"""
Seeded synthetic panels and empirical statistics used to check the analytic
spectra.

Every row of a generated panel draws from its own stream spawned from
(seed, row index), so a panel is a pure function of its parameters and seed
and rows can be generated independently.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import scipy.signal

from . import LOG
from .benchmarks import ArmaParams
from .errors import InputError, ParameterError
from .estimators import CovMatrix, EmpiricalSpectrum, sym_eig
from .frv import SpectralDensity
from .panel import TimePanel

DEFAULT_BURN_IN = 1024


@dataclass(frozen=True)
class HistogramSpec:
    """
    Attributes:
        bin_count (int): Number of bins, at least 1.
        range (tuple[float, float] | None): Histogram range; the sample range
            if None.
    """

    bin_count: int = 100
    range: Tuple[float, float] | None = None

    def __post_init__(self):
        if self.bin_count < 1:
            raise ParameterError(f"Histogram needs at least one bin, got {self.bin_count}")


def row_generators(seed: int, count: int) -> List[np.random.Generator]:
    """One independent generator per row, derived from (seed, row index)."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


def _labels(count: int) -> Tuple[str, ...]:
    width = len(str(max(count - 1, 0)))
    return tuple(f"s{i:0{width}d}" for i in range(count))


def _check_shape(n_series: int, n_obs: int):
    if n_series < 1 or n_obs < 2:
        raise ParameterError(f"Panel needs N >= 1 and T >= 2, got N={n_series}, T={n_obs}")


def gen_white_panel(n_series: int, n_obs: int, seed: int) -> TimePanel:
    """N x T panel of i.i.d. standard normal entries."""
    _check_shape(n_series, n_obs)
    rows = [rng.standard_normal(n_obs) for rng in row_generators(seed, n_series)]
    return TimePanel(_labels(n_series), np.vstack(rows))


def gen_varma_panel(
    n_series: int,
    n_obs: int,
    params: ArmaParams,
    seed: int,
    burn_in: int = DEFAULT_BURN_IN,
) -> TimePanel:
    """
    N independent paths of Y_t - sum_b b_b Y_{t-b} = sum_a a_a eps_{t-a}.

    The recursion starts from rest and runs for `burn_in` steps before the T
    recorded samples; the start-up transient decays like |b|^burn_in.

    Args:
        n_series (int): Number of paths N.
        n_obs (int): Recorded length T.
        params (ArmaParams): Stationary shock coefficients.
        seed (int): Root seed.
        burn_in (int): Discarded warm-up steps.

    Returns:
        TimePanel: The N x T panel.
    """
    _check_shape(n_series, n_obs)
    if burn_in < 0:
        raise ParameterError(f"Burn-in must be non-negative, got {burn_in}")
    params.check_stationary()

    warmup = burn_in + params.q2
    numerator = np.asarray(params.a)
    denominator = np.concatenate(([1.0], -np.asarray(params.b)))

    rows = []
    for rng in row_generators(seed, n_series):
        shocks = rng.standard_normal(n_obs + warmup)
        rows.append(scipy.signal.lfilter(numerator, denominator, shocks)[warmup:])
    return TimePanel(_labels(n_series), np.vstack(rows))


def _psd_sqrt(matrix: np.ndarray, name: str) -> np.ndarray:
    eigenvalues, eigenvectors = sym_eig(matrix)
    floor = -1e-10 * max(1.0, float(np.max(np.abs(eigenvalues))))
    if eigenvalues[0] < floor:
        raise InputError(f"{name} is not positive semi-definite (eigenvalue {eigenvalues[0]:.3g})")
    return (eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))) @ eigenvectors.T


def gen_correlated_wishart_panel(
    cross: "CovMatrix | np.ndarray", temporal: np.ndarray, seed: int
) -> TimePanel:
    """
    Panel Y = C^(1/2) Z A^(1/2) with Z i.i.d. standard normal, so that its
    Pearson estimator is a doubly correlated Wishart matrix.

    Args:
        cross (CovMatrix | np.ndarray): N x N cross-covariance C.
        temporal (np.ndarray): T x T autocovariance A.
        seed (int): Root seed.

    Raises:
        InputError: If C or A is not symmetric positive semi-definite.
    """
    c = cross.entries if isinstance(cross, CovMatrix) else CovMatrix(cross).entries
    a = CovMatrix(temporal).entries
    z = gen_white_panel(c.shape[0], a.shape[0], seed).values
    values = _psd_sqrt(c, "Cross-covariance") @ z @ _psd_sqrt(a, "Autocovariance")
    return TimePanel(_labels(c.shape[0]), values)


def _group_values(values: np.ndarray, tol: float = 1e-12) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted distinct values (ties within tol merged) and their counts."""
    x = np.sort(values)
    if x.size == 0:
        return x, np.zeros(0, dtype=int)
    gaps = np.diff(x) > tol * np.maximum(1.0, np.abs(x[1:]))
    starts = np.concatenate(([0], np.flatnonzero(gaps) + 1))
    counts = np.diff(np.concatenate((starts, [x.size])))
    return x[starts], counts


def empirical_density(
    values: "Sequence[float] | np.ndarray | EmpiricalSpectrum", spec: HistogramSpec | None = None
) -> SpectralDensity:
    """
    Normalized histogram of a sample; values repeated (within 1e-12) at least
    twice become atoms carrying their share of the sample.

    Returns:
        SpectralDensity: Histogram-mode density with total mass 1.
    """
    spec = spec or HistogramSpec()
    x = values.values if isinstance(values, EmpiricalSpectrum) else np.asarray(values, float)
    if x.size == 0:
        raise InputError("Cannot build a histogram of an empty sample")

    distinct, counts = _group_values(x)
    atoms = tuple(
        (float(v), float(c) / x.size) for v, c in zip(distinct, counts) if c >= 2
    )
    rest = np.repeat(distinct[counts < 2], counts[counts < 2])

    if rest.size == 0:
        return SpectralDensity(np.zeros(0), np.zeros(0), atoms)

    heights, edges = np.histogram(rest, bins=spec.bin_count, range=spec.range)
    widths = np.diff(edges)
    centres = 0.5 * (edges[:-1] + edges[1:])
    return SpectralDensity(centres, heights / (x.size * widths), atoms, edges)


def ecdf_steps(values: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct values with the empirical CDF just below and at each of them."""
    distinct, counts = _group_values(values, tol=0.0)
    upper = np.cumsum(counts) / values.size
    return distinct, upper - counts / values.size, upper


def ks_distance(
    values: "Sequence[float] | np.ndarray | EmpiricalSpectrum", theoretical: SpectralDensity
) -> float:
    """
    Kolmogorov-Smirnov distance sup |F_emp - F| between a sample and a
    density (atoms as CDF steps).

    Raises:
        DensityNormalizationError: If the density mass differs from 1 by more
            than 1e-3.
    """
    theoretical.check_normalized()
    x = values.values if isinstance(values, EmpiricalSpectrum) else np.asarray(values, float)
    if x.size == 0:
        raise InputError("Cannot compare an empty sample")

    distinct, below, at = ecdf_steps(x)
    distance = max(
        float(np.max(at - theoretical.cdf(distinct))),
        float(np.max(theoretical.cdf_left(distinct) - below)),
        0.0,
    )
    LOG.debug(f"KS distance {distance:.4g} over {x.size} values")
    return min(distance, 1.0)
