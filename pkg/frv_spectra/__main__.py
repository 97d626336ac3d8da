import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Sequence

from strictyaml import (
    Enum,
    Float,
    Int,
    Map,
    MapPattern,
    Optional,
    Str,
    StrictYAMLError,
    YAMLValidationError,
    dirty_load,
)

from . import LOG
from .commands import (
    BenchFamily,
    GeneratorKind,
    MpScale,
    WhitenPolicy,
    cmd_bench_density,
    cmd_simulate,
    cmd_spectrum,
    cmd_svd_clean,
)
from .errors import InputError, NumericalError
from .montecarlo import DEFAULT_BURN_IN
from .panel import Orientation, TransformKind, transform_plan
from .util import parse_float_list

TRANSFORM_KINDS = [str(kind) for kind in TransformKind]

# Schema for configuration file (YAML, or JSON as flow-style YAML)
SCHEMA = Map(
    {
        Optional("seed"): Int(),
        Optional("threads"): Int(),
        Optional("grid_points"): Int(),
        Optional("epsilon"): Float(),
        Optional("orientation"): Enum([str(o) for o in Orientation]),
        Optional("outlier_k"): Float(),
        Optional("transforms"): Map(
            {
                Optional("default"): Enum(TRANSFORM_KINDS),
                Optional("series"): MapPattern(Str(), Enum(TRANSFORM_KINDS)),
            }
        ),
        Optional("whiten"): Map(
            {
                Optional("threshold"): Float(),
                Optional("policy"): Enum([str(p) for p in WhitenPolicy]),
                Optional("mp_edge_fraction"): Float(),
            }
        ),
        Optional("fit"): Map(
            {
                Optional("multistart"): Int(),
                Optional("max_evaluations"): Int(),
                Optional("grid_points"): Int(),
            }
        ),
        Optional("significance"): Map({Optional("margin"): Float()}),
    }
)

DEFAULTS: Dict[str, Any] = {
    "seed": 0,
    "threads": 1,
    "grid_points": 2048,
    "epsilon": None,
    "orientation": str(Orientation.COLS),
    "outlier_k": 6.0,
    "transforms.default": str(TransformKind.NONE),
    "whiten.threshold": 1e-10,
    "whiten.policy": str(WhitenPolicy.NUMERICAL),
    "whiten.mp_edge_fraction": 0.1,
    "fit.multistart": 27,
    "fit.max_evaluations": 400,
    "fit.grid_points": 512,
    "significance.margin": None,
}


def load_config(path: str | Path | None) -> Dict[str, Any]:
    """
    Read and validate a config file.

    Raises:
        InputError: If the file is missing or does not match the schema.
    """
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"Cannot read config {path}: {exc}") from None
    try:
        return dirty_load(text, SCHEMA, label=str(path), allow_flow_style=True).data
    except (YAMLValidationError, StrictYAMLError) as exc:
        raise InputError(f"Invalid config {path}: {exc}") from None


def resolve(flag: Any, config: Dict[str, Any], key: str) -> Any:
    """Explicit flag, else the (dotted) config key, else the built-in default."""
    if flag is not None:
        return flag
    node: Any = config
    for part in key.split("."):
        if not isinstance(node, dict) or part not in node:
            return DEFAULTS.get(key)
        node = node[part]
    return node


def _parse_series_transforms(items: Sequence[str] | None, config: Dict[str, Any]):
    series = dict((config.get("transforms") or {}).get("series") or {})
    for item in items or []:
        label, sep, kind = item.partition("=")
        if not sep:
            raise InputError(f"Expected LABEL=KIND, got {item!r}")
        series[label] = kind
    return series


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="-v: DEBUG for frv_spectra; -vv: also DEBUG for everything else",
    )
    common.add_argument("-c", "--config", help="YAML or JSON config file")
    common.add_argument("-o", "--out-dir", default="out", help="Output directory")
    common.add_argument("--seed", type=int, help="Root seed (default 0)")
    common.add_argument("--threads", type=int, help="Worker threads (default 1)")
    common.add_argument("--grid-points", type=int, help="Density grid size (default 2048)")
    common.add_argument("--epsilon", type=float, help="Imaginary offset (default auto)")
    common.add_argument("--orientation", choices=[str(o) for o in Orientation])
    common.add_argument("--outlier-k", type=float, help="IQR multiplier (default 6)")
    common.add_argument("--no-outliers", action="store_true", help="Keep outliers as they are")
    common.add_argument("--transform", choices=TRANSFORM_KINDS, help="Default series transform")
    common.add_argument(
        "--series-transform",
        action="append",
        metavar="LABEL=KIND",
        help="Transform for one series (repeatable)",
    )
    return common


def _fit_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--multistart", type=int, help="Fit starts, at most 27")
    parser.add_argument("--max-evaluations", type=int, help="Evaluations per start")
    parser.add_argument("--fit-grid-points", type=int, help="Grid size inside the fit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="frv-spectra",
        description="Random-matrix spectral densities for multivariate time series",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    spectrum = sub.add_parser(
        "spectrum", parents=[common], help="Eigenvalue spectrum with its MP overlay"
    )
    spectrum.add_argument("input", help="Panel CSV")
    spectrum.add_argument("--fit", action="store_true", help="Also fit VARMA(1,1)")
    spectrum.add_argument(
        "--mp-scale", choices=[str(s) for s in MpScale], default=str(MpScale.UNIT)
    )
    _fit_arguments(spectrum)

    fit = sub.add_parser("fit-varma", parents=[common], help="Fit VARMA(1,1) to a spectrum")
    fit.add_argument("input", help="Panel CSV")
    _fit_arguments(fit)

    clean = sub.add_parser(
        "svd-clean", parents=[common], help="Whitened cross-correlation singular values"
    )
    clean.add_argument("input_x", help="Input panel CSV")
    clean.add_argument("input_y", help="Output panel CSV")
    clean.add_argument("--lag", type=int, default=0, help="Lag of Y behind X")
    clean.add_argument("--whiten-policy", choices=[str(p) for p in WhitenPolicy])
    clean.add_argument("--whiten-threshold", type=float)
    clean.add_argument("--mp-edge-fraction", type=float)
    clean.add_argument("--margin", type=float, help="Margin above the benchmark edge")

    bench = sub.add_parser("bench-density", parents=[common], help="Write a benchmark density")
    bench.add_argument("family", choices=[str(f) for f in BenchFamily])
    bench.add_argument("--name", help="Output file stem (default: the family)")
    for name in ("r", "scale", "n", "m", "a0", "a1", "b1"):
        bench.add_argument(f"--{name}", type=float)

    simulate = sub.add_parser("simulate", parents=[common], help="Write a synthetic panel")
    simulate.add_argument("generator", choices=[str(g) for g in GeneratorKind])
    simulate.add_argument("--n-series", type=int, required=True)
    simulate.add_argument("--n-obs", type=int, required=True)
    simulate.add_argument("--a", default="1", help="MA coefficients a0,a1,...")
    simulate.add_argument("--b", default="", help="AR coefficients b1,b2,...")
    simulate.add_argument("--burn-in", type=int, default=DEFAULT_BURN_IN)
    simulate.add_argument("--output", default="panel.csv", help="Panel file name")

    return parser


def run(args: argparse.Namespace):
    config = load_config(args.config)

    orientation = resolve(args.orientation, config, "orientation")
    outlier_k = None if args.no_outliers else resolve(args.outlier_k, config, "outlier_k")
    plan = transform_plan(
        resolve(args.transform, config, "transforms.default"),
        _parse_series_transforms(args.series_transform, config),
    )
    grid_points = resolve(args.grid_points, config, "grid_points")
    epsilon = resolve(args.epsilon, config, "epsilon")
    seed = resolve(args.seed, config, "seed")
    threads = resolve(args.threads, config, "threads")

    if args.command in ("spectrum", "fit-varma"):
        return cmd_spectrum(
            args.input,
            args.out_dir,
            orientation=orientation,
            plan=plan,
            outlier_k=outlier_k,
            fit=getattr(args, "fit", False),
            fit_only=args.command == "fit-varma",
            grid_points=grid_points,
            epsilon=epsilon,
            mp_scale=getattr(args, "mp_scale", MpScale.UNIT),
            multistart=resolve(args.multistart, config, "fit.multistart"),
            max_evaluations=resolve(args.max_evaluations, config, "fit.max_evaluations"),
            fit_grid_points=resolve(args.fit_grid_points, config, "fit.grid_points"),
            threads=threads,
            config=config,
        )

    if args.command == "svd-clean":
        return cmd_svd_clean(
            args.input_x,
            args.input_y,
            args.out_dir,
            lag=args.lag,
            orientation=orientation,
            plan=plan,
            outlier_k=outlier_k,
            whiten_policy=resolve(args.whiten_policy, config, "whiten.policy"),
            whiten_threshold=resolve(args.whiten_threshold, config, "whiten.threshold"),
            mp_edge_fraction=resolve(args.mp_edge_fraction, config, "whiten.mp_edge_fraction"),
            margin=resolve(args.margin, config, "significance.margin"),
            seed=seed,
            grid_points=grid_points,
            epsilon=epsilon,
            config=config,
        )

    if args.command == "bench-density":
        params = {name: getattr(args, name) for name in ("r", "scale", "n", "m", "a0", "a1", "b1")}
        return cmd_bench_density(
            args.family,
            {k: v for k, v in params.items() if v is not None},
            args.out_dir,
            name=args.name,
            grid_points=grid_points,
            epsilon=epsilon,
            config=config,
        )

    return cmd_simulate(
        args.generator,
        args.n_series,
        args.n_obs,
        args.out_dir,
        seed=seed,
        a=parse_float_list(args.a),
        b=parse_float_list(args.b),
        burn_in=args.burn_in,
        name=args.output,
        orientation=orientation,
        config=config,
    )


def main(argv: List[str] | None = None) -> int:
    """
    Entry point of the frv-spectra command.

    Returns:
        int: 0 on success, 1 on a numerical failure, 2 on bad input.
    """
    args = build_parser().parse_args(argv)

    # Set up the logger based on args
    pkg_level = logging.DEBUG if args.verbose >= 1 else logging.INFO
    other_level = logging.DEBUG if args.verbose >= 2 else logging.WARNING

    logging.getLogger("frv_spectra").setLevel(pkg_level)
    logging.getLogger().setLevel(other_level)

    try:
        run(args)
    except InputError as exc:
        if args.verbose:
            LOG.exception(f"Input error: {exc}")
        else:
            LOG.error(f"Input error: {exc}")
        return 2
    except FileNotFoundError as exc:
        LOG.error(f"Input error: {exc}")
        return 2
    except NumericalError as exc:
        if args.verbose:
            LOG.exception(f"Numerical failure: {exc}")
        else:
            LOG.critical(f"Numerical failure: {exc}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())  # pragma: no cover
