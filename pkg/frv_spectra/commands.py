"""
Bodies of the command-line sub-commands. Each command reads its inputs, runs
one pipeline, writes plain CSV/JSON files into an output directory and
records what it did in `run.json`.
"""

import json
import time
from dataclasses import asdict, dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence

import numpy as np
import pandas as pd

from . import LOG
from .benchmarks import (
    ArmaParams,
    MpParams,
    SvdBenchParams,
    mp2_density,
    mp_spectral_density,
    svd_benchmark_density,
    varma11_density,
)
from .errors import DimensionError, ParameterError
from .estimators import (
    CovMatrix,
    EmpiricalSpectrum,
    align_lagged,
    cross_matrix,
    eigen_spectrum,
    lagged_cov,
    mp_edge_threshold,
    pearson_cov,
    singular_spectrum,
    whiten,
)
from .fitting import (
    benchmark_margin,
    benchmark_ratios,
    fit_varma11,
    flag_significant,
    spectral_distance,
)
from .frv import SpectralDensity
from .montecarlo import DEFAULT_BURN_IN, gen_varma_panel, gen_white_panel, ks_distance
from .panel import (
    Orientation,
    TimePanel,
    TransformPlan,
    assemble_panel,
    load_csv,
    save_csv,
    standardize,
)
from .util import format_elapsed, sha256_file

MANIFEST_NAME = "run.json"


class BenchFamily(StrEnum):
    MP = "mp"
    MP2 = "mp2"
    SVD = "svd"
    VARMA11 = "varma11"


class GeneratorKind(StrEnum):
    WHITE = "white"
    VARMA = "varma"


class WhitenPolicy(StrEnum):
    NUMERICAL = "numerical"
    MP_EDGE = "mp-edge"


class MpScale(StrEnum):
    UNIT = "unit"
    VARIANCE = "variance"


@dataclass
class RunManifest:
    """
    Record of one command run.

    Attributes:
        command (str): Sub-command name.
        parameters (dict): Effective parameters after flag/config resolution.
        config (dict | None): Raw config file contents, if one was given.
        input_hashes (dict): SHA-256 of each input file, by path.
        seed (int | None): Root seed, for commands that draw random numbers.
        outputs (list): Written files, relative to the output directory.
        wall_time (float): Elapsed seconds.
    """

    command: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    config: Dict[str, Any] | None = None
    input_hashes: Dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    outputs: List[str] = field(default_factory=list)
    wall_time: float = 0.0

    def write(self, out_dir: str | Path) -> Path:
        path = Path(out_dir) / MANIFEST_NAME
        path.write_text(json.dumps(asdict(self), indent=2, default=str) + "\n")
        return path


class _Outputs:
    """Writes files into one directory and remembers their relative names."""

    def __init__(self, out_dir: str | Path):
        self.root = Path(out_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.names: List[str] = []

    def _path(self, name: str) -> Path:
        self.names.append(name)
        return self.root / name

    def frame(self, name: str, frame: pd.DataFrame, index: bool = False):
        frame.to_csv(self._path(name), index=index, float_format="%.17g", lineterminator="\n")

    def json(self, name: str, payload: Any):
        self._path(name).write_text(json.dumps(payload, indent=2, default=_json_default) + "\n")

    def spectrum(self, name: str, spectrum: EmpiricalSpectrum):
        spectrum.save_csv(self._path(name))

    def density(self, stem: str, density: SpectralDensity, variable: str = "lambda"):
        self.frame(f"{stem}.csv", density.to_frame(variable))
        self.json(f"{stem.removesuffix('_density')}_atoms.json", density.atoms_json())

    def matrix(self, name: str, cov: CovMatrix):
        labels = list(cov.labels) if cov.labels is not None else None
        self.frame(name, pd.DataFrame(cov.entries, index=labels, columns=labels), index=True)

    def panel(self, name: str, panel: TimePanel, orientation: Orientation):
        save_csv(panel, self._path(name), orientation)


def _json_default(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def _finish(manifest: RunManifest, outputs: _Outputs, started: float) -> RunManifest:
    manifest.outputs = list(outputs.names)
    manifest.wall_time = time.perf_counter() - started
    manifest.write(outputs.root)
    LOG.info(
        f"{manifest.command}: wrote {len(manifest.outputs)} file(s) to {outputs.root}"
        f" in {format_elapsed(manifest.wall_time)}"
    )
    return manifest


def _load(path: str | Path, orientation: Orientation | str, plan, outlier_k):
    return assemble_panel(load_csv(path, orientation), plan, outlier_k)


def cmd_spectrum(
    input_path: str | Path,
    out_dir: str | Path,
    orientation: Orientation | str = Orientation.COLS,
    plan: TransformPlan | None = None,
    outlier_k: float | None = 6.0,
    fit: bool = False,
    fit_only: bool = False,
    grid_points: int = 2048,
    epsilon: float | None = None,
    mp_scale: MpScale | str = MpScale.UNIT,
    multistart: int = 27,
    max_evaluations: int = 400,
    fit_grid_points: int = 512,
    threads: int = 1,
    config: Mapping[str, Any] | None = None,
) -> RunManifest:
    """
    Eigenvalue spectrum of a panel's Pearson estimator, its Marcenko-Pastur
    overlay and, on request, a fitted VARMA(1,1) density.

    Args:
        input_path (str | Path): Panel CSV.
        out_dir (str | Path): Output directory.
        orientation (Orientation | str): CSV layout.
        plan (TransformPlan | None): Per-series transforms.
        outlier_k (float | None): IQR multiplier, None to keep outliers.
        fit (bool): Also fit the VARMA(1,1) density.
        fit_only (bool): Fit without writing the Marcenko-Pastur overlay.
        grid_points (int): Size of the written density grids.
        epsilon (float | None): Imaginary offset for root-based densities.
        mp_scale (MpScale | str): Unit-variance or mean-eigenvalue-matched
            overlay.
        multistart, max_evaluations, fit_grid_points, threads: Fit controls.
        config (Mapping | None): Raw config, recorded in the manifest.

    Returns:
        RunManifest: The written manifest.
    """
    started = time.perf_counter()
    outputs = _Outputs(out_dir)
    panel, report = _load(input_path, orientation, plan, outlier_k)
    outputs.json("preprocess.json", report.to_dict())

    spectrum = eigen_spectrum(pearson_cov(panel))
    outputs.spectrum("eigenvalues.csv", spectrum)
    ratio = panel.ratio

    summary: Dict[str, Any] = {"N": panel.n_series, "T": panel.n_obs, "r": ratio}
    if not fit_only:
        scale = float(np.mean(spectrum.values)) if MpScale(mp_scale) == MpScale.VARIANCE else 1.0
        overlay = mp_spectral_density(ratio, grid_points=grid_points, scale=scale)
        outputs.density("mp_density", overlay)
        summary.update(
            mp_scale=scale,
            mp_edges=list(MpParams(ratio, scale).edges()),
            ks=ks_distance(spectrum, overlay),
            cvm=spectral_distance(spectrum, overlay),
        )
        LOG.info(f"r={ratio:.4g}: KS {summary['ks']:.4g} against Marcenko-Pastur")

    if fit or fit_only:
        result = fit_varma11(
            spectrum,
            ratio,
            grid_points=fit_grid_points,
            multistart=multistart,
            max_evaluations=max_evaluations,
            threads=threads,
        )
        outputs.json("fit.json", result.to_dict())
        density = varma11_density(
            result.a0,
            result.a1,
            result.b1,
            ratio,
            grid_points=grid_points,
            **({} if epsilon is None else {"epsilon": epsilon}),
        )
        outputs.density("varma11_density", density)
        summary["fit"] = {"a0": result.a0, "a1": result.a1, "b1": result.b1}

    outputs.json("summary.json", summary)

    manifest = RunManifest(
        command="fit-varma" if fit_only else "spectrum",
        parameters={
            "orientation": str(orientation),
            "transforms": asdict(plan) if plan else None,
            "outlier_k": outlier_k,
            "fit": fit or fit_only,
            "grid_points": grid_points,
            "epsilon": epsilon,
            "mp_scale": str(mp_scale),
            "multistart": multistart,
            "max_evaluations": max_evaluations,
            "fit_grid_points": fit_grid_points,
            "threads": threads,
        },
        config=dict(config) if config else None,
        input_hashes={str(input_path): sha256_file(input_path)},
    )
    return _finish(manifest, outputs, started)


def _whitening_threshold(
    panel: TimePanel, policy: WhitenPolicy, threshold: float, fraction: float
) -> float:
    if policy == WhitenPolicy.MP_EDGE:
        return mp_edge_threshold(panel.ratio, fraction, floor=threshold)
    return threshold


def _singular_cdf(
    spectrum: EmpiricalSpectrum, benchmark: SpectralDensity, grid_points: int
) -> pd.DataFrame:
    """Empirical CDF of the singular values next to the benchmark's continuous CDF."""
    values = spectrum.ascending()
    hi = max(1.0, float(values[-1]) if values.size else 0.0)
    s = np.linspace(0.0, hi, grid_points)
    empirical = np.searchsorted(values, s, side="right") / max(values.size, 1)
    continuous = benchmark.renormalized_continuous()
    return pd.DataFrame({"s": s, "empirical_cdf": empirical, "benchmark_cdf": continuous.cdf(s)})


def cmd_svd_clean(
    input_x: str | Path,
    input_y: str | Path,
    out_dir: str | Path,
    lag: int = 0,
    orientation: Orientation | str = Orientation.COLS,
    plan: TransformPlan | None = None,
    outlier_k: float | None = 6.0,
    whiten_policy: WhitenPolicy | str = WhitenPolicy.NUMERICAL,
    whiten_threshold: float = 1e-10,
    mp_edge_fraction: float = 0.1,
    margin: float | None = None,
    seed: int = 0,
    grid_points: int = 2048,
    epsilon: float | None = None,
    config: Mapping[str, Any] | None = None,
) -> RunManifest:
    """
    Whiten an input and an output panel, take the singular values of their
    cross-correlation and flag those above the uncorrelated benchmark.

    With lag > 0, input observation a is paired with output observation
    a + lag. The raw (un-whitened) cross-covariance of the aligned panels,
    standardized over the T - lag overlap, is compared with the MP2 density
    alongside.

    Raises:
        DimensionError: If the panels differ in length, or T - 1 does not
            exceed the retained ranks.
        LagError: If the lag leaves no usable window.
    """
    started = time.perf_counter()
    outputs = _Outputs(out_dir)
    whiten_policy = WhitenPolicy(whiten_policy)

    x_full, report_x = _load(input_x, orientation, plan, outlier_k)
    y_full, report_y = _load(input_y, orientation, plan, outlier_k)
    x_raw, y_raw = align_lagged(x_full, y_full, lag)
    x, y = standardize(x_raw), standardize(y_raw)
    n_obs = x.n_obs
    if n_obs <= max(x.n_series, y.n_series):
        raise DimensionError(
            f"Need T > max(N, M) after the lag, got T={n_obs}, N={x.n_series}, M={y.n_series}"
        )
    LOG.info(f"Lag {lag}: {x.n_series} inputs, {y.n_series} outputs over {n_obs} observations")

    corr_x, corr_y = pearson_cov(x), pearson_cov(y)
    outputs.matrix("corr_x.csv", corr_x)
    outputs.matrix("corr_y.csv", corr_y)
    outputs.spectrum("eig_x.csv", eigen_spectrum(corr_x))
    outputs.spectrum("eig_y.csv", eigen_spectrum(corr_y))

    thresholds = {
        "x": _whitening_threshold(x, whiten_policy, whiten_threshold, mp_edge_fraction),
        "y": _whitening_threshold(y, whiten_policy, whiten_threshold, mp_edge_fraction),
    }
    wx, wy = whiten(x, thresholds["x"]), whiten(y, thresholds["y"])
    spectrum = singular_spectrum(cross_matrix(wy, wx))
    outputs.spectrum("singular_values.csv", spectrum)

    params = benchmark_ratios(wx.rank, wy.rank, n_obs)
    benchmark = svd_benchmark_density(params, grid_points=grid_points)
    outputs.density("benchmark_density", benchmark, variable="s")
    outputs.frame("singular_cdf.csv", _singular_cdf(spectrum, benchmark, grid_points))

    raw = singular_spectrum(lagged_cov(x, y, 0))
    outputs.spectrum("raw_singular_values.csv", raw)
    raw_params = SvdBenchParams(x.n_series / n_obs, y.n_series / n_obs)
    mp2 = mp2_density(
        raw_params,
        grid_points=grid_points,
        **({} if epsilon is None else {"epsilon": epsilon}),
    )
    outputs.density("mp2_density", mp2, variable="s")

    if margin is None:
        margin = benchmark_margin(wx.rank, wy.rank, n_obs, seed)
    significance = flag_significant(spectrum, params, margin)
    band = spectrum.values[: min(wx.rank, wy.rank)]
    band = band[band < 1.0 - 1e-8]
    payload = significance.to_dict()
    payload.update(
        n=params.n,
        m=params.m,
        ranks={"x": wx.rank, "y": wy.rank},
        whitening_thresholds=thresholds,
        ks_benchmark=(
            ks_distance(band, benchmark.renormalized_continuous()) if band.size else None
        ),
        preprocess={"x": report_x.to_dict(), "y": report_y.to_dict()},
    )
    outputs.json("significance.json", payload)

    manifest = RunManifest(
        command="svd-clean",
        parameters={
            "lag": lag,
            "orientation": str(orientation),
            "transforms": asdict(plan) if plan else None,
            "outlier_k": outlier_k,
            "whiten_policy": str(whiten_policy),
            "whiten_threshold": whiten_threshold,
            "mp_edge_fraction": mp_edge_fraction,
            "margin": margin,
            "grid_points": grid_points,
            "epsilon": epsilon,
        },
        config=dict(config) if config else None,
        input_hashes={str(p): sha256_file(p) for p in (input_x, input_y)},
        seed=seed,
    )
    return _finish(manifest, outputs, started)


def _require(params: Mapping[str, Any], family: BenchFamily, names: Sequence[str]) -> List[float]:
    missing = [name for name in names if params.get(name) is None]
    if missing:
        raise ParameterError(f"Family {family} needs parameter(s) {', '.join(missing)}")
    return [float(params[name]) for name in names]


def bench_density(
    family: BenchFamily | str,
    params: Mapping[str, Any],
    grid_points: int = 2048,
    epsilon: float | None = None,
) -> SpectralDensity:
    """
    Build one analytic benchmark density.

    Args:
        family (BenchFamily | str): `mp` (r, scale), `mp2` or `svd` (n, m),
            `varma11` (a0, a1, b1, r).
        params (Mapping): Family parameters; `scale` defaults to 1.

    Raises:
        ParameterError: On a missing or invalid parameter.
    """
    family = BenchFamily(family)
    extra = {} if epsilon is None else {"epsilon": epsilon}
    if family == BenchFamily.MP:
        (r,) = _require(params, family, ("r",))
        scale = float(params.get("scale") or 1.0)
        return mp_spectral_density(r, grid_points=grid_points, scale=scale)
    if family == BenchFamily.VARMA11:
        a0, a1, b1, r = _require(params, family, ("a0", "a1", "b1", "r"))
        return varma11_density(a0, a1, b1, r, grid_points=grid_points, **extra)

    n, m = _require(params, family, ("n", "m"))
    if family == BenchFamily.SVD:
        return svd_benchmark_density(SvdBenchParams(n, m), grid_points=grid_points)
    return mp2_density(SvdBenchParams(n, m), grid_points=grid_points, **extra)


def cmd_bench_density(
    family: BenchFamily | str,
    params: Mapping[str, Any],
    out_dir: str | Path,
    name: str | None = None,
    grid_points: int = 2048,
    epsilon: float | None = None,
    config: Mapping[str, Any] | None = None,
) -> RunManifest:
    """Write `<name>.csv` and `<name>_atoms.json` for one benchmark density."""
    started = time.perf_counter()
    family = BenchFamily(family)
    name = name or str(family)
    density = bench_density(family, params, grid_points, epsilon)

    outputs = _Outputs(out_dir)
    variable = "s" if family in (BenchFamily.SVD, BenchFamily.MP2) else "lambda"
    outputs.frame(f"{name}.csv", density.to_frame(variable))
    outputs.json(f"{name}_atoms.json", density.atoms_json())

    manifest = RunManifest(
        command="bench-density",
        parameters={
            "family": str(family),
            "params": dict(params),
            "name": name,
            "grid_points": grid_points,
            "epsilon": epsilon,
            "mass": density.mass(),
        },
        config=dict(config) if config else None,
    )
    return _finish(manifest, outputs, started)


def cmd_simulate(
    generator: GeneratorKind | str,
    n_series: int,
    n_obs: int,
    out_dir: str | Path,
    seed: int = 0,
    a: Sequence[float] = (1.0,),
    b: Sequence[float] = (),
    burn_in: int = DEFAULT_BURN_IN,
    name: str = "panel.csv",
    orientation: Orientation | str = Orientation.COLS,
    config: Mapping[str, Any] | None = None,
) -> RunManifest:
    """
    Write a seeded synthetic panel.

    Raises:
        StationarityError: If the AR side of a `varma` generator is not
            stationary.
        ParameterError: On invalid shape or coefficients.
    """
    started = time.perf_counter()
    generator = GeneratorKind(generator)
    if generator == GeneratorKind.WHITE:
        panel = gen_white_panel(n_series, n_obs, seed)
    else:
        panel = gen_varma_panel(n_series, n_obs, ArmaParams(tuple(a), tuple(b)), seed, burn_in)

    outputs = _Outputs(out_dir)
    outputs.panel(name, panel, Orientation(orientation))

    manifest = RunManifest(
        command="simulate",
        parameters={
            "generator": str(generator),
            "n_series": n_series,
            "n_obs": n_obs,
            "a": list(a),
            "b": list(b),
            "burn_in": burn_in,
            "orientation": str(orientation),
        },
        config=dict(config) if config else None,
        seed=seed,
    )
    return _finish(manifest, outputs, started)
