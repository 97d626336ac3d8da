"""
Fitting the VARMA(1,1) Wishart density to an empirical eigenvalue spectrum,
and flagging singular values above the uncorrelated benchmark band.
"""

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
import scipy.optimize

from . import LOG
from .benchmarks import ArmaParams, SvdBenchParams, varma11_density
from .errors import DimensionError, FitError, InputError, NumericalError, ParameterError
from .estimators import EmpiricalSpectrum, cross_matrix, singular_spectrum, whiten
from .frv import SpectralDensity
from .montecarlo import ecdf_steps, gen_white_panel, ks_distance
from .panel import standardize

START_GRID = {
    "a0": (0.5, 1.0, 2.0),
    "a1": (-0.5, 0.0, 0.5),
    "b1": (-0.5, 0.0, 0.5),
}
MAX_AR = 0.99
PENALTY = 1e3
# White noise is kept when its distance is within this factor of the full fit
PARSIMONY_FACTOR = 10.0
# |a1 + a0 b1| <= CANCELLATION_TOL a0: MA zero and AR pole nearly cancel
CANCELLATION_TOL = 0.1
# Distances this small cannot tell two fits apart
DISTANCE_FLOOR = 1e-7


@dataclass
class FitResult:
    """
    Outcome of `fit_varma11`.

    Attributes:
        params (ArmaParams): Best parameters, canonicalized (a0 > 0,
            |a1| <= a0, b1 >= 0).
        objective (float): Cramer-von Mises distance at the optimum.
        evaluations (int): Objective evaluations over all starts.
        converged (bool): Whether the best start met the simplex tolerances.
        multistart_trace (list): (start, final objective) per start.
        ks (float): Kolmogorov-Smirnov distance at the optimum.
        ratio (float): Rectangularity ratio used.
        white_noise_objective (float): Distance of the best scale-only fit.
        white_noise (bool): Whether the scale-only fit was reported instead
            of the full optimum.
    """

    params: ArmaParams
    objective: float
    evaluations: int
    converged: bool
    multistart_trace: List[Tuple[Tuple[float, float, float], float]] = field(default_factory=list)
    ks: float = float("nan")
    ratio: float = float("nan")
    white_noise_objective: float = float("nan")
    white_noise: bool = False

    @property
    def a0(self) -> float:
        return self.params.a[0]

    @property
    def a1(self) -> float:
        return self.params.a[1]

    @property
    def b1(self) -> float:
        return self.params.b[0]

    def to_dict(self) -> dict:
        return {
            "a0": self.a0,
            "a1": self.a1,
            "b1": self.b1,
            "ratio": self.ratio,
            "objective": self.objective,
            "ks": self.ks,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "white_noise_objective": self.white_noise_objective,
            "white_noise": self.white_noise,
            "multistart_trace": [
                {"start": list(start), "objective": value}
                for start, value in self.multistart_trace
            ],
        }


@dataclass
class FlaggedValue:
    rank: int
    value: float
    edge: float
    excess: float


@dataclass
class SignificanceReport:
    """
    Singular values above the benchmark band.

    Attributes:
        flagged (List[FlaggedValue]): Flagged values, by descending value.
        threshold_policy (str): How the threshold was built.
        edge (float): Upper edge of the benchmark band.
        margin (float): Margin added to the edge.
    """

    flagged: List[FlaggedValue]
    threshold_policy: str
    edge: float
    margin: float

    @property
    def threshold(self) -> float:
        return self.edge + self.margin

    def to_dict(self) -> dict:
        return {
            "edge": self.edge,
            "margin": self.margin,
            "threshold": self.threshold,
            "threshold_policy": self.threshold_policy,
            "flagged": [asdict(f) for f in self.flagged],
        }


def _values(spectrum: "EmpiricalSpectrum | Sequence[float] | np.ndarray") -> np.ndarray:
    if isinstance(spectrum, EmpiricalSpectrum):
        return spectrum.values
    return np.asarray(spectrum, dtype=np.float64)


def spectral_distance(
    empirical: "EmpiricalSpectrum | Sequence[float] | np.ndarray", theoretical: SpectralDensity
) -> float:
    """
    Cramer-von Mises distance between a sample and a density.

    Each distinct sample value x contributes (count/n) (F_mid(x) - E_mid(x))^2,
    where F_mid and E_mid average the left and right limits of the
    theoretical and empirical CDFs at x. Without ties this is the usual
    mean of (F(x_i) - (2i - 1)/(2n))^2; a sample placed exactly on the atoms
    of a purely atomic density scores 0.

    Raises:
        InputError: If the sample is empty.
        DensityNormalizationError: If the density mass is not 1 within 1e-3.
    """
    theoretical.check_normalized()
    x = _values(empirical)
    if x.size == 0:
        raise InputError("Cannot compare an empty spectrum")

    distinct, below, at = ecdf_steps(x)
    counts = (at - below) * x.size
    f_mid = 0.5 * (theoretical.cdf(distinct) + theoretical.cdf_left(distinct))
    e_mid = 0.5 * (at + below)
    return float(np.sum(counts * (f_mid - e_mid) ** 2) / x.size)


def canonical_varma11(a0: float, a1: float, b1: float) -> Tuple[float, float, float]:
    """
    Representative of the parameters sharing the same symbol distribution:
    (a1, b1) -> (-a1, -b1), a0 <-> a1 and (a0, a1) -> (-a0, -a1) leave the
    spectrum unchanged. Returns a0 >= 0, |a1| <= a0, b1 >= 0.
    """
    if b1 < 0:
        a1, b1 = -a1, -b1
    if abs(a1) > abs(a0):
        a0, a1 = a1, a0
    if a0 < 0:
        a0, a1 = -a0, -a1
    return a0, a1, b1


def _start_points(mean_eigenvalue: float, multistart: int) -> List[Tuple[float, float, float]]:
    """The start grid, closest to the moment-matched white-noise guess first."""
    guess = np.array([np.sqrt(max(mean_eigenvalue, 1e-12)), 0.0, 0.0])
    grid = list(itertools.product(START_GRID["a0"], START_GRID["a1"], START_GRID["b1"]))
    grid.sort(key=lambda p: float(np.linalg.norm(np.array(p) - guess)))
    return grid[: max(1, multistart)]


def fit_varma11(
    empirical: "EmpiricalSpectrum | Sequence[float] | np.ndarray",
    ratio: float,
    grid_points: int = 512,
    multistart: int = 27,
    max_evaluations: int = 400,
    threads: int = 1,
) -> FitResult:
    """
    Fit (a0, a1, b1) so the VARMA(1,1) Wishart density matches a spectrum.

    Runs a Nelder-Mead simplex from each start of a 3 x 3 x 3 grid over
    a0 in {0.5, 1, 2}, a1 in {-0.5, 0, 0.5} and b1 in {-0.5, 0, 0.5}
    (the `multistart` starts closest to the moment-matched guess), minimizing
    the Cramer-von Mises distance. Starts run on up to `threads` workers.

    Any (a0, a1, b1) with a1 = -a0 b1 has a flat symbol, so white noise has no
    unique optimum. The best scale-only fit (a1 = b1 = 0) is reported instead
    when its distance is within PARSIMONY_FACTOR of the full optimum (or below
    DISTANCE_FLOOR), or within
    PARSIMONY_FACTOR**2 when the optimum nearly cancels its MA zero against its
    AR pole.

    Args:
        empirical (EmpiricalSpectrum | Sequence[float]): Eigenvalues, all >= 0.
        ratio (float): Rectangularity ratio N/T in (0, 1).
        grid_points (int): Density grid size used by the objective.
        multistart (int): Number of starts (at most 27).
        max_evaluations (int): Objective evaluations per start.
        threads (int): Worker threads.

    Returns:
        FitResult: The best fit over all starts.

    Raises:
        InputError: On negative eigenvalues or a ratio outside (0, 1).
        FitError: If every start fails.
    """
    x = _values(empirical)
    if x.size == 0 or np.min(x) < -1e-10:
        raise InputError("Fit needs a non-empty spectrum of non-negative eigenvalues")
    if not 0 < ratio < 1:
        raise ParameterError(f"Rectangularity ratio must lie in (0, 1), got {ratio}")

    def objective(theta: np.ndarray) -> float:
        a0, a1, b1 = canonical_varma11(*map(float, theta))
        if abs(b1) > MAX_AR:
            return PENALTY + abs(b1)
        if a0 <= 1e-8:
            return PENALTY + 1.0
        try:
            density = varma11_density(a0, a1, b1, ratio, grid_points=grid_points)
        except NumericalError as exc:
            LOG.debug(f"Objective failed at {(a0, a1, b1)}: {exc}")
            return PENALTY
        mass = density.mass()
        if not abs(mass - 1.0) < 0.05:
            return PENALTY + abs(mass - 1.0)
        normalized = SpectralDensity(density.lambdas, density.rho / mass)
        return spectral_distance(x, normalized)

    def run(start: Tuple[float, float, float]):
        result = scipy.optimize.minimize(
            objective,
            np.array(start),
            method="Nelder-Mead",
            options={"maxfev": max_evaluations, "xatol": 1e-4, "fatol": 1e-10},
        )
        LOG.debug(f"Start {start}: objective {result.fun:.6g} after {result.nfev} evaluations")
        return start, result

    starts = _start_points(float(np.mean(x)), multistart)
    LOG.info(f"Fitting VARMA(1,1) from {len(starts)} start(s) on {max(1, threads)} thread(s)")
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        outcomes = list(pool.map(run, starts))

    trace = [(start, float(result.fun)) for start, result in outcomes]
    evaluations = sum(int(result.nfev) for _, result in outcomes)
    _, best = min(outcomes, key=lambda outcome: outcome[1].fun)
    if best.fun >= PENALTY:
        raise FitError(f"All {len(starts)} fit starts failed")

    a0, a1, b1 = canonical_varma11(*map(float, best.x))
    objective_value = float(best.fun)

    guess = float(np.sqrt(max(np.mean(x), 1e-12)))
    scale_only = scipy.optimize.minimize_scalar(
        lambda a: objective(np.array([a, 0.0, 0.0])),
        bounds=(0.5 * guess, 1.5 * guess),
        method="bounded",
        options={"xatol": 1e-6},
    )
    evaluations += int(scale_only.nfev)
    white_objective = float(scale_only.fun)
    cancelling = abs(a1 + a0 * b1) <= CANCELLATION_TOL * a0
    white_noise = white_objective < PENALTY and (
        white_objective <= max(PARSIMONY_FACTOR * objective_value, DISTANCE_FLOOR)
        or (cancelling and white_objective <= PARSIMONY_FACTOR**2 * objective_value)
    )
    if white_noise:
        LOG.info(
            f"Symbol of ({a0:.4f}, {a1:.4f}, {b1:.4f}) is close to flat:"
            f" reporting white noise (CvM {white_objective:.3g} vs {objective_value:.3g})"
        )
        a0, a1, b1 = float(scale_only.x), 0.0, 0.0
        objective_value = white_objective

    params = ArmaParams.varma11(a0, a1, b1)
    density = varma11_density(a0, a1, b1, ratio, grid_points=grid_points)
    density = SpectralDensity(density.lambdas, density.rho / density.mass())
    fit = FitResult(
        params=params,
        objective=objective_value,
        evaluations=evaluations,
        converged=bool(best.success),
        multistart_trace=trace,
        ks=ks_distance(x, density),
        ratio=ratio,
        white_noise_objective=white_objective,
        white_noise=white_noise,
    )
    LOG.info(
        f"Fitted a0={a0:.4f}, a1={a1:.4f}, b1={b1:.4f} (CvM {fit.objective:.3g},"
        f" KS {fit.ks:.3g}, {evaluations} evaluations)"
    )
    return fit


def flag_significant(
    svals: "EmpiricalSpectrum | Sequence[float] | np.ndarray",
    params: SvdBenchParams,
    margin: float = 0.0,
) -> SignificanceReport:
    """
    Flag singular values above the upper edge of the uncorrelated benchmark
    band plus a margin.

    Args:
        svals (EmpiricalSpectrum | Sequence[float]): Singular values.
        params (SvdBenchParams): Benchmark ratios.
        margin (float): Non-negative allowance above the edge.

    Returns:
        SignificanceReport: Flagged values, largest first, with 1-based ranks.
    """
    if margin < 0:
        raise ParameterError(f"Margin must be non-negative, got {margin}")
    values = np.sort(_values(svals))[::-1]
    edge = params.edges()[1]
    flagged = [
        FlaggedValue(rank=i + 1, value=float(s), edge=edge, excess=float(s - edge))
        for i, s in enumerate(values)
        if s > edge + margin
    ]
    policy = f"s > s+ ({edge:.6g}) + margin ({margin:.6g}), n={params.n:.6g}, m={params.m:.6g}"
    LOG.info(f"{len(flagged)} singular value(s) above the benchmark threshold {edge + margin:.4g}")
    return SignificanceReport(flagged, policy, edge, margin)


def benchmark_margin(n_inputs: int, n_outputs: int, n_obs: int, seed: int) -> float:
    """
    Twice the mean spacing of the top decile (at least two values) of the
    singular values of one simulated pair of independent whitened panels of
    the given shape.
    """
    x = standardize(gen_white_panel(n_inputs, n_obs, seed))
    y = standardize(gen_white_panel(n_outputs, n_obs, seed + 1))
    spectrum = singular_spectrum(cross_matrix(whiten(y), whiten(x)))
    top = spectrum.values[: max(2, int(np.ceil(0.1 * len(spectrum))))]
    margin = 2.0 * float(np.mean(-np.diff(top)))
    LOG.debug(f"Benchmark margin {margin:.4g} from {len(spectrum)} simulated singular values")
    return margin


def benchmark_ratios(rank_x: int, rank_y: int, n_obs: int) -> SvdBenchParams:
    """
    Benchmark ratios for whitened panels of ranks K_X, K_Y over T standardized
    observations, which span T - 1 dimensions.
    """
    effective = n_obs - 1
    if effective <= max(rank_x, rank_y):
        raise DimensionError(
            f"Need T - 1 > max(N, M) for the benchmark, got T={n_obs}, N={rank_x}, M={rank_y}"
        )
    return SvdBenchParams(rank_x / effective, rank_y / effective)
