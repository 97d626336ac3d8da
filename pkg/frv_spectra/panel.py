"""
Loading, transforming, cleaning and standardizing multivariate time-series
panels.

A panel is an N x T matrix of observations, one row per series. Everything
downstream (estimators, spectra, fits) expects stationary, zero-mean,
unit-variance rows, which is what `assemble_panel` produces.
"""

from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd

from . import LOG
from .errors import (
    ConstantSeriesError,
    InputError,
    PanelParseError,
    RaggedPanelError,
    TransformError,
)


class TransformKind(StrEnum):
    """
    Enum of the stationarity-inducing transforms applied to a single series.
    """

    NONE = "none"
    FIRST_DIFFERENCE = "first-difference"
    LOG_FIRST_DIFFERENCE = "log-first-difference"
    LOG_SECOND_DIFFERENCE = "log-second-difference"

    @property
    def order(self) -> int:
        """Number of observations lost to differencing."""
        return {
            TransformKind.NONE: 0,
            TransformKind.FIRST_DIFFERENCE: 1,
            TransformKind.LOG_FIRST_DIFFERENCE: 1,
            TransformKind.LOG_SECOND_DIFFERENCE: 2,
        }[self]

    @property
    def uses_log(self) -> bool:
        return self in (TransformKind.LOG_FIRST_DIFFERENCE, TransformKind.LOG_SECOND_DIFFERENCE)


class Orientation(StrEnum):
    """
    Enum of the two CSV layouts: one series per row, or one series per column.
    """

    ROWS = "rows"
    COLS = "cols"


@dataclass(frozen=True)
class TransformSpec:
    """The transform to apply to one series."""

    kind: TransformKind = TransformKind.NONE

    @classmethod
    def parse(cls, value: "str | TransformKind | TransformSpec") -> "TransformSpec":
        if isinstance(value, TransformSpec):
            return value
        try:
            return cls(TransformKind(value))
        except ValueError:
            choices = ", ".join(k.value for k in TransformKind)
            raise TransformError(f"Unknown transform {value!r}; expected one of {choices}")


@dataclass(frozen=True, eq=False)
class TimePanel:
    """
    An N x T panel of real observations.

    Attributes:
        labels (tuple[str, ...]): Series identifiers, length N.
        values (np.ndarray): N x T matrix of finite reals (read-only).
        time_index (tuple[str, ...] | None): Optional ISO-8601 months, length T.
    """

    labels: Tuple[str, ...]
    values: np.ndarray
    time_index: Tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise RaggedPanelError(f"Panel values must be two-dimensional, got {values.ndim}D")
        if values.shape[1] < 2:
            raise InputError(f"Panel needs at least 2 observations, got {values.shape[1]}")
        if len(self.labels) != values.shape[0]:
            raise InputError(
                f"Panel has {values.shape[0]} rows but {len(self.labels)} labels"
            )
        if not np.all(np.isfinite(values)):
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise InputError(
                f"Non-finite value in series {self.labels[row]!r} at observation {col}"
            )
        if self.time_index is not None and len(self.time_index) != values.shape[1]:
            raise InputError(
                f"Time index has {len(self.time_index)} entries for {values.shape[1]} observations"
            )
        values.setflags(write=False)
        object.__setattr__(self, "labels", tuple(str(label) for label in self.labels))
        object.__setattr__(self, "values", values)
        if self.time_index is not None:
            object.__setattr__(self, "time_index", tuple(self.time_index))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TimePanel):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.time_index == other.time_index
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def n_series(self) -> int:
        return self.values.shape[0]

    @property
    def n_obs(self) -> int:
        return self.values.shape[1]

    @property
    def ratio(self) -> float:
        """Rectangularity ratio N/T."""
        return self.n_series / self.n_obs

    def row(self, label: str) -> np.ndarray:
        return self.values[self.labels.index(label)]

    def with_values(
        self, values: np.ndarray, time_index: Sequence[str] | None = None
    ) -> "TimePanel":
        """Return a panel with the same labels and new values."""
        return TimePanel(self.labels, values, None if time_index is None else tuple(time_index))

    def window(self, start: int, stop: int) -> "TimePanel":
        """Return the observations [start, stop) of every series."""
        index = None if self.time_index is None else self.time_index[start:stop]
        return TimePanel(self.labels, self.values[:, start:stop], index)


@dataclass
class TransformPlan:
    """
    Which transform each series of a panel receives.

    Attributes:
        default (TransformKind): Transform for series without an override.
        series (Dict[str, TransformKind]): Per-label overrides.
    """

    default: TransformKind = TransformKind.NONE
    series: Dict[str, TransformKind] = field(default_factory=dict)

    def kind_for(self, label: str) -> TransformKind:
        return self.series.get(label, self.default)


@dataclass
class PreprocessReport:
    """
    What `assemble_panel` did to each series.

    Attributes:
        transforms (Dict[str, str]): Transform applied per series.
        replaced (Dict[str, List[int]]): Indices (into the transformed series)
            replaced by the median.
        dropped_leading (int): Observations dropped from the start of the
            original panel to reach the common length.
        outlier_k (float | None): IQR multiplier used, None if disabled.
    """

    transforms: Dict[str, str] = field(default_factory=dict)
    replaced: Dict[str, List[int]] = field(default_factory=dict)
    dropped_leading: int = 0
    outlier_k: float | None = None

    def to_dict(self) -> dict:
        return {
            "transforms": self.transforms,
            "replaced": self.replaced,
            "dropped_leading": self.dropped_leading,
            "outlier_k": self.outlier_k,
        }


def _is_time_column(cells: Sequence[str]) -> bool:
    """A column is a time stamp column when most of its non-empty cells are not numbers."""
    filled = [cell for cell in cells if cell.strip()]
    if not filled:
        return False
    numeric = pd.to_numeric(pd.Series(filled), errors="coerce").notna().sum()
    return numeric * 2 < len(filled)


def _parse_months(cells: Sequence[str], column: str) -> Tuple[str, ...]:
    parsed = pd.to_datetime(pd.Series(list(cells)), format="ISO8601", errors="coerce")
    if parsed.isna().any():
        bad = int(np.flatnonzero(parsed.isna().to_numpy())[0])
        raise PanelParseError(
            f"Value {cells[bad]!r} is neither numeric nor an ISO-8601 date",
            row=bad + 2,
            column=column,
        )
    return tuple(stamp.strftime("%Y-%m") for stamp in parsed)


def _parse_numeric(cells: Sequence[str], row_offset: int, column: str) -> np.ndarray:
    """Convert one column of cells, reporting the first offending cell."""
    try:
        values = np.asarray(cells, dtype=np.float64)
    except ValueError:
        for i, cell in enumerate(cells):
            if cell.strip() == "":
                raise PanelParseError("Missing value", row=i + row_offset, column=column)
            try:
                float(cell)
            except ValueError:
                raise PanelParseError(
                    f"Non-numeric value {cell!r}", row=i + row_offset, column=column
                ) from None
        raise
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise PanelParseError(
            f"Non-finite value {cells[bad]!r}", row=bad + row_offset, column=column
        )
    return values


def load_csv(path: str | Path, orientation: Orientation | str = Orientation.COLS) -> TimePanel:
    """
    Load a panel from a CSV file.

    With `cols` orientation the header holds the series labels and each line is
    one observation; an optional first column of ISO-8601 months becomes the
    time index. With `rows` orientation each line is one series: the first cell
    is its label and the header (after its first cell) holds the time stamps.

    Args:
        path (str | Path): CSV file (UTF-8, '.' decimal point).
        orientation (Orientation | str): `cols` (default) or `rows`.

    Returns:
        TimePanel: The panel as stored in the file.

    Raises:
        PanelParseError: If the file is empty or a cell is missing or not numeric.
        RaggedPanelError: If lines have inconsistent lengths.
    """
    orientation = Orientation(orientation)
    try:
        frame = pd.read_csv(
            path, header=0, dtype=str, keep_default_na=False, na_filter=False, encoding="utf-8"
        )
    except pd.errors.EmptyDataError:
        raise PanelParseError(f"Panel file {str(path)!r} is empty", row=1) from None
    except pd.errors.ParserError as exc:
        raise RaggedPanelError(f"Panel file {str(path)!r} is ragged: {exc}") from None

    if frame.shape[0] == 0 or frame.shape[1] == 0:
        raise PanelParseError(f"Panel file {str(path)!r} holds no observations", row=2)
    frame = frame.fillna("")

    headers = [str(h) for h in frame.columns]

    if orientation == Orientation.COLS:
        first = frame.iloc[:, 0].tolist()
        time_index = None
        data_columns = headers
        if _is_time_column(first) and len(headers) > 1:
            time_index = _parse_months(first, headers[0])
            data_columns = headers[1:]
        rows = [
            _parse_numeric(frame[column].tolist(), row_offset=2, column=column)
            for column in data_columns
        ]
        panel = TimePanel(tuple(data_columns), np.vstack(rows), time_index)
    else:
        labels = frame.iloc[:, 0].tolist()
        stamps = headers[1:]
        rows = []
        for i, label in enumerate(labels):
            cells = frame.iloc[i, 1:].tolist()
            try:
                rows.append(np.asarray(cells, dtype=np.float64))
            except ValueError:
                for cell, column in zip(cells, stamps):
                    _parse_numeric([cell], row_offset=i + 2, column=column)
            if not np.all(np.isfinite(rows[-1])):
                raise PanelParseError("Non-finite value", row=i + 2, column=str(label))
        time_index = None
        if stamps and _is_time_column(stamps):
            try:
                time_index = _parse_months(stamps, "header")
            except PanelParseError:
                time_index = None
        panel = TimePanel(tuple(labels), np.vstack(rows), time_index)

    LOG.info(
        f"Loaded panel {Path(path).name}: N={panel.n_series}, T={panel.n_obs}"
        f" ({orientation} orientation)"
    )
    return panel


def save_csv(
    panel: TimePanel, path: str | Path, orientation: Orientation | str = Orientation.COLS
) -> Path:
    """
    Write a panel in the layout `load_csv` reads; values round-trip exactly.

    Args:
        panel (TimePanel): Panel to write.
        path (str | Path): Destination file.
        orientation (Orientation | str): `cols` (default) or `rows`.

    Returns:
        Path: The written file.
    """
    orientation = Orientation(orientation)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    if orientation == Orientation.COLS:
        frame = pd.DataFrame(panel.values.T, columns=list(panel.labels))
        if panel.time_index is not None:
            frame.insert(0, "date", list(panel.time_index))
    else:
        stamps = (
            list(panel.time_index)
            if panel.time_index is not None
            else [f"t{a}" for a in range(panel.n_obs)]
        )
        frame = pd.DataFrame(panel.values, columns=stamps)
        frame.insert(0, "series", list(panel.labels))

    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def transform_series(
    series: Sequence[float] | np.ndarray, spec: TransformSpec | TransformKind | str
) -> np.ndarray:
    """
    Apply a stationarity-inducing transform to one series.

    Args:
        series (Sequence[float]): Raw observations.
        spec (TransformSpec | TransformKind | str): Transform to apply.

    Returns:
        np.ndarray: Transformed series, shorter by the differencing order.

    Raises:
        TransformError: If the series is too short or a log variant meets a
            non-positive value.
    """
    kind = TransformSpec.parse(spec).kind
    x = np.asarray(series, dtype=np.float64)

    if x.size < max(2, kind.order + 1):
        raise TransformError(
            f"{kind} needs at least {max(2, kind.order + 1)} observations, got {x.size}"
        )

    if kind.uses_log:
        if np.any(x <= 0):
            bad = int(np.flatnonzero(x <= 0)[0])
            raise TransformError(f"{kind} requires positive values; got {x[bad]} at index {bad}")
        x = np.log(x)

    if kind.order:
        return np.diff(x, n=kind.order)
    return x.copy()


def remove_outliers(
    series: Sequence[float] | np.ndarray, k: float = 6.0
) -> Tuple[np.ndarray, List[int]]:
    """
    Replace observations far from the median by the median.

    An observation is an outlier when |x - median| > k * IQR. With a degenerate
    IQR of zero, every value different from the median is replaced.

    Args:
        series (Sequence[float]): Observations (at least 4).
        k (float): IQR multiplier, 6 by default.

    Returns:
        Tuple[np.ndarray, List[int]]: Cleaned copy and the replaced indices.
    """
    x = np.array(series, dtype=np.float64)
    if x.size < 4:
        raise InputError(f"Outlier detection needs at least 4 observations, got {x.size}")

    median = float(np.median(x))
    q1, q3 = np.percentile(x, [25.0, 75.0])
    outliers = np.abs(x - median) > k * (q3 - q1)

    x[outliers] = median
    return x, [int(i) for i in np.flatnonzero(outliers)]


def standardize(panel: TimePanel) -> TimePanel:
    """
    Shift and scale each series to zero mean and unit variance (divisor T).

    Raises:
        ConstantSeriesError: If a series has zero variance.
    """
    mean = panel.values.mean(axis=1, keepdims=True)
    centred = panel.values - mean
    std = np.sqrt(np.mean(centred**2, axis=1, keepdims=True))

    for label, s, mu in zip(panel.labels, std[:, 0], mean[:, 0]):
        if s <= 1e-14 * max(1.0, abs(mu)):
            raise ConstantSeriesError(label)

    return panel.with_values(centred / std, panel.time_index)


def assemble_panel(
    panel: TimePanel,
    plan: TransformPlan | None = None,
    outlier_k: float | None = 6.0,
) -> Tuple[TimePanel, PreprocessReport]:
    """
    Transform, clean, align and standardize every series of a raw panel.

    Series are truncated to the shortest common length after their transforms,
    keeping the most recent observations.

    Args:
        panel (TimePanel): Raw panel.
        plan (TransformPlan | None): Transform per series; no transform if None.
        outlier_k (float | None): IQR multiplier for outlier replacement, None
            to skip it.

    Returns:
        Tuple[TimePanel, PreprocessReport]: The standardized panel and a report.
    """
    plan = plan or TransformPlan()
    report = PreprocessReport(outlier_k=outlier_k)

    transformed = []
    for label, row in zip(panel.labels, panel.values):
        kind = plan.kind_for(label)
        try:
            series = transform_series(row, kind)
        except TransformError as exc:
            raise TransformError(f"Series {label!r}: {exc}") from None
        if outlier_k is not None:
            series, replaced = remove_outliers(series, outlier_k)
            if replaced:
                LOG.info(f"Series {label}: replaced {len(replaced)} outlier(s) by the median")
                report.replaced[label] = replaced
        report.transforms[label] = str(kind)
        transformed.append(series)

    length = min(len(s) for s in transformed)
    report.dropped_leading = panel.n_obs - length
    values = np.vstack([s[len(s) - length :] for s in transformed])
    index = None if panel.time_index is None else panel.time_index[panel.n_obs - length :]

    return standardize(TimePanel(panel.labels, values, index)), report


def transform_plan(default: str | TransformKind, series: Mapping[str, str] | None = None):
    """Build a TransformPlan from configuration strings."""
    return TransformPlan(
        TransformSpec.parse(default).kind,
        {label: TransformSpec.parse(kind).kind for label, kind in (series or {}).items()},
    )
