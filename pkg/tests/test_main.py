import json
import logging
from unittest.mock import patch

import pandas as pd
import pytest

from frv_spectra.__main__ import DEFAULTS, build_parser, load_config, main, resolve
from frv_spectra.errors import BranchSelectionError, InputError
from frv_spectra.montecarlo import gen_white_panel
from frv_spectra.panel import save_csv


@pytest.fixture
def mock_config():
    return """\
seed: 5
grid_points: 64
outlier_k: 8
whiten:
  policy: mp-edge
  mp_edge_fraction: 0.2
fit:
  multistart: 3
significance:
  margin: 0.05
"""


@pytest.fixture
def mock_config_json():
    return (
        '{"grid_points": 96,'
        ' "transforms": {"default": "none", "series": {"s0": "first-difference"}}}\n'
    )


@pytest.fixture
def panel_csv(tmp_path):
    return save_csv(gen_white_panel(12, 60, seed=9), tmp_path / "panel.csv")


def test_load_config_yaml(tmp_path, mock_config):
    path = tmp_path / "config.yaml"
    path.write_text(mock_config)

    config = load_config(path)

    assert config["seed"] == 5
    assert config["outlier_k"] == 8.0
    assert config["whiten"] == {"policy": "mp-edge", "mp_edge_fraction": 0.2}
    assert config["fit"]["multistart"] == 3


def test_load_config_json(tmp_path, mock_config_json):
    path = tmp_path / "config.json"
    path.write_text(mock_config_json)

    config = load_config(path)

    assert config["grid_points"] == 96
    assert config["transforms"]["series"] == {"s0": "first-difference"}


def test_load_config_none():
    assert load_config(None) == {}


def test_load_config_errors(tmp_path):
    with pytest.raises(InputError, match="Cannot read"):
        load_config(tmp_path / "missing.yaml")

    path = tmp_path / "bad.yaml"
    path.write_text("grid_points: many\n")
    with pytest.raises(InputError, match="Invalid config"):
        load_config(path)

    path.write_text("unknown_key: 1\n")
    with pytest.raises(InputError):
        load_config(path)


def test_resolve_precedence():
    config = {"seed": 5, "whiten": {"policy": "mp-edge"}}

    assert resolve(7, config, "seed") == 7
    assert resolve(None, config, "seed") == 5
    assert resolve(None, config, "whiten.policy") == "mp-edge"
    assert resolve(None, config, "whiten.threshold") == DEFAULTS["whiten.threshold"]
    assert resolve(None, {}, "grid_points") == 2048
    assert resolve(0, config, "seed") == 0


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_main_bench_density(tmp_path):
    out = tmp_path / "out"
    argv = ["bench-density", "mp", "--r", "0.25", "--grid-points", "33", "-o", str(out)]

    assert main(argv) == 0

    frame = pd.read_csv(out / "mp.csv")
    assert len(frame) == 33
    assert frame["lambda"].iloc[-1] == 2.25
    assert json.loads((out / "run.json").read_text())["parameters"]["grid_points"] == 33


def test_main_config_and_flag_precedence(tmp_path, mock_config):
    config = tmp_path / "config.yaml"
    config.write_text(mock_config)

    argv = ["bench-density", "mp", "--r", "0.5", "-c", str(config)]

    assert main(argv + ["-o", str(tmp_path / "a")]) == 0
    assert len(pd.read_csv(tmp_path / "a" / "mp.csv")) == 64

    assert main(argv + ["--grid-points", "40", "-o", str(tmp_path / "b")]) == 0
    assert len(pd.read_csv(tmp_path / "b" / "mp.csv")) == 40

    manifest = json.loads((tmp_path / "b" / "run.json").read_text())
    assert manifest["config"]["seed"] == 5


def test_main_spectrum(tmp_path, panel_csv):
    out = tmp_path / "out"

    assert main(["spectrum", str(panel_csv), "--grid-points", "64", "-o", str(out)]) == 0

    manifest = json.loads((out / "run.json").read_text())
    assert manifest["command"] == "spectrum"
    assert "eigenvalues.csv" in manifest["outputs"]


def test_main_simulate_uses_seed(tmp_path):
    argv = ["simulate", "varma", "--n-series", "3", "--n-obs", "20", "--a", "1,0.5", "--b", "0.2"]

    assert main(argv + ["--seed", "11", "-o", str(tmp_path / "a")]) == 0
    assert main(argv + ["--seed", "11", "-o", str(tmp_path / "b")]) == 0

    first = (tmp_path / "a" / "panel.csv").read_text()
    assert first == (tmp_path / "b" / "panel.csv").read_text()
    assert json.loads((tmp_path / "a" / "run.json").read_text())["seed"] == 11


def test_main_empty_input(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")

    assert main(["spectrum", str(empty), "-o", str(tmp_path / "out")]) == 2


def test_main_missing_input(tmp_path):
    assert main(["spectrum", str(tmp_path / "nope.csv"), "-o", str(tmp_path / "out")]) == 2


def test_main_lag_too_large(tmp_path, panel_csv):
    out = str(tmp_path / "out")

    assert main(["svd-clean", str(panel_csv), str(panel_csv), "--lag", "60", "-o", out]) == 2


def test_main_bad_config(tmp_path, panel_csv):
    config = tmp_path / "config.yaml"
    config.write_text("whiten:\n  policy: sometimes\n")

    assert main(["spectrum", str(panel_csv), "-c", str(config), "-o", str(tmp_path / "o")]) == 2


def test_main_bad_series_transform(tmp_path, panel_csv):
    argv = ["spectrum", str(panel_csv), "--series-transform", "s0", "-o", str(tmp_path / "o")]

    assert main(argv) == 2


def test_main_missing_family_parameter(tmp_path):
    assert main(["bench-density", "svd", "--n", "0.3", "-o", str(tmp_path)]) == 2


@patch("frv_spectra.__main__.cmd_bench_density")
def test_main_numerical_failure(mock_bench, tmp_path):
    mock_bench.side_effect = BranchSelectionError(1.0 + 0.1j, [0.5 + 0.2j])

    assert main(["bench-density", "mp", "--r", "0.5", "-o", str(tmp_path)]) == 1
    assert main(["bench-density", "mp", "--r", "0.5", "-v", "-o", str(tmp_path)]) == 1


@patch("frv_spectra.__main__.cmd_bench_density")
def test_main_verbosity_sets_levels(mock_bench, tmp_path):
    main(["bench-density", "mp", "--r", "0.5", "-o", str(tmp_path)])
    assert logging.getLogger("frv_spectra").level == logging.INFO
    assert logging.getLogger().level == logging.WARNING

    main(["bench-density", "mp", "--r", "0.5", "-vv", "-o", str(tmp_path)])
    assert logging.getLogger("frv_spectra").level == logging.DEBUG
    assert logging.getLogger().level == logging.DEBUG
