"""
Loading loss tables and return series, empirical diagnostics and series files.

Inputs are delimited text with an optional header. Columns are selected by
header name or by 1-based position. Row numbers in error messages are file
line numbers, header included.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    TypeAdapter,
    field_validator,
    model_validator,
)

from .core import OrderedSample, PlotSeries, PriceMode
from .decorators import record_failures
from .dynamic_risk import ReturnSeries
from .exceptions import (
    DataParseError,
    EmptyDataError,
    InputFileNotFoundError,
    InsufficientDataError,
    InvalidInputError,
    InvalidRecordError,
)
from .reinsurance import empirical_mean_excess
from .utils.patterns import DEFAULT_DELIMITER, DEFAULT_LEVEL, PLOTTING_POSITION_OFFSET
from .utils.utils import ArrayOrFloat, as_checked_array, to_output

logger = logging.getLogger(__name__)

ColumnSelector = Union[int, str]


class LossTable(BaseModel):
    """
    Positive losses in file order, with optional period labels such as years.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    losses: np.ndarray
    periods: Optional[np.ndarray] = None
    source: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("losses", mode="before")
    @classmethod
    def _positive(cls, value: Any) -> np.ndarray:
        arr = np.array(value, dtype=float).ravel()
        if arr.size < 1:
            raise ValueError("LossTable needs at least one loss")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise ValueError("Losses must be finite and positive")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _aligned(self) -> "LossTable":
        if self.periods is not None and len(self.periods) != self.losses.size:
            raise ValueError(
                f"{len(self.periods)} period labels for {self.losses.size} losses"
            )
        return self

    @property
    def n(self) -> int:
        return int(self.losses.size)

    def to_sample(self) -> OrderedSample:
        return OrderedSample(values=self.losses)

    def claims_per_period(self, years: Optional[float] = None) -> float:
        """Number of claims divided by the number of periods covered."""
        if years is None:
            if self.periods is None:
                raise InvalidInputError("claims_per_period needs periods or years")
            years = len(pd.unique(self.periods))
        if not years > 0:
            raise InvalidInputError(f"Number of periods must be positive, got {years}")
        return self.n / float(years)


# --- Readers ---


def _read_table(path: Union[str, Path], delimiter: str, header: bool) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise InputFileNotFoundError(f"Input file not found: {path}")
    try:
        frame = pd.read_csv(
            path,
            sep=delimiter,
            header=0 if header else None,
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError as exc:
        raise EmptyDataError(f"{path} contains no data") from exc
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise DataParseError(f"Could not parse {path}: {exc}") from exc
    if frame.empty:
        raise EmptyDataError(f"{path} contains no data rows")
    return frame


def _select(frame: pd.DataFrame, column: ColumnSelector) -> pd.Series:
    if isinstance(column, str) and column not in frame.columns:
        if column.isdigit():
            column = int(column)
        else:
            raise DataParseError(
                f"Column {column!r} not found; columns are {list(frame.columns)}"
            )
    if isinstance(column, int):
        if not 1 <= column <= frame.shape[1]:
            raise DataParseError(f"Column index {column} outside 1..{frame.shape[1]}")
        return frame.iloc[:, column - 1]
    return frame[column]


def _numeric(raw: pd.Series, header: bool, what: str) -> np.ndarray:
    values = pd.to_numeric(raw.str.strip(), errors="coerce").to_numpy(dtype=float)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        row = int(bad[0]) + 1 + int(header)
        raise InvalidRecordError(
            f"{what} {raw.iloc[bad[0]]!r} is not a finite number", row
        )
    return values


def _check_positive(values: np.ndarray, header: bool, what: str) -> None:
    bad = np.flatnonzero(values <= 0.0)
    if bad.size:
        row = int(bad[0]) + 1 + int(header)
        raise InvalidRecordError(f"{what} {values[bad[0]]} is not positive", row)


def load_losses(
    path: Union[str, Path],
    column: ColumnSelector = 1,
    delimiter: str = DEFAULT_DELIMITER,
    header: bool = True,
    period_column: Optional[ColumnSelector] = None,
) -> LossTable:
    """
    Read positive losses from one column of a delimited file.

    Args:
        path: File path
        column: Header name or 1-based position of the loss column
        delimiter: Field separator
        header: Whether the first line holds column names
        period_column: Optional column of period labels, such as years

    Returns:
        LossTable in file order
    """
    frame = _read_table(path, delimiter, header)
    losses = _numeric(_select(frame, column), header, "Loss")
    _check_positive(losses, header, "Loss")
    periods = None
    if period_column is not None:
        periods = _select(frame, period_column).str.strip().to_numpy()
    logger.info("Loaded %d losses from %s", losses.size, path)
    return LossTable(
        losses=losses,
        periods=periods,
        source={"path": str(path), "column": column, "delimiter": delimiter},
    )


def _timestamps(raw: pd.Series) -> np.ndarray:
    stripped = raw.str.strip()
    numeric = pd.to_numeric(stripped, errors="coerce")
    if not numeric.isna().any():
        return numeric.to_numpy(dtype=float)
    try:
        return pd.to_datetime(stripped, errors="raise").to_numpy()
    except (ValueError, TypeError) as exc:
        raise DataParseError(
            f"Timestamps are neither numbers nor dates: {exc}"
        ) from exc


def load_returns(
    path: Union[str, Path],
    mode: PriceMode = PriceMode.PRICE,
    value_column: ColumnSelector = 2,
    time_column: Optional[ColumnSelector] = 1,
    delimiter: str = DEFAULT_DELIMITER,
    header: bool = True,
) -> ReturnSeries:
    """
    Read a return series, computing log-returns log(P_t / P_{t-1}) in price mode.

    Args:
        path: File path
        mode: ``price`` or ``return``
        value_column: Column of prices or returns
        time_column: Column of timestamps; row positions when None
        delimiter: Field separator
        header: Whether the first line holds column names

    Returns:
        ReturnSeries; in price mode it is one shorter than the file
    """
    mode = PriceMode(mode)
    frame = _read_table(path, delimiter, header)
    values = _numeric(_select(frame, value_column), header, "Value")
    if time_column is None:
        stamps = np.arange(values.size)
    else:
        stamps = _timestamps(_select(frame, time_column))
    if stamps.size > 1 and not np.all(stamps[1:] > stamps[:-1]):
        first = int(np.flatnonzero(~(stamps[1:] > stamps[:-1]))[0]) + 2 + int(header)
        raise DataParseError(f"Timestamps are not strictly increasing at row {first}")

    if mode is PriceMode.PRICE:
        _check_positive(values, header, "Price")
        if values.size < 2:
            raise EmptyDataError(
                f"Price mode needs at least 2 prices, got {values.size}"
            )
        values = np.diff(np.log(values))
        stamps = stamps[1:]
    logger.info("Loaded %d returns from %s", values.size, path)
    return ReturnSeries(timestamps=stamps, returns=values)


# --- Empirical diagnostics ---


def empirical_cdf(sample: OrderedSample, x: ArrayOrFloat) -> ArrayOrFloat:
    """Right-continuous empirical distribution function."""
    arr, scalar = as_checked_array(x)
    counts = np.searchsorted(sample.values, arr, side="right")
    return to_output(counts / sample.n, scalar)


def pareto_plot(
    sample: OrderedSample, u: float, offset: float = PLOTTING_POSITION_OFFSET
) -> PlotSeries:
    """
    Log-log plot of the exceedances of u against their conditional survival.

    The j-th smallest of n_u exceedances is plotted at y = 1 - (j - offset) / n_u,
    so that y stays in (0, 1]. A strict Pareto tail gives a line of slope
    -alpha; the fitted slope and intercept go to the metadata.

    Args:
        sample: Ordered sample
        u: Threshold
        offset: Plotting position offset in (0, 1]

    Returns:
        PlotSeries with x = exceedances and y = survival positions
    """
    if not 0.0 < offset <= 1.0:
        raise InvalidInputError(
            f"Plotting position offset must lie in (0, 1], got {offset}"
        )
    x = sample.exceedances(u)
    n_u = x.size
    if n_u < 2:
        raise InsufficientDataError(
            f"Pareto plot needs 2 exceedances above u={u}, got {n_u}",
            diagnostics={"n_exceed": int(n_u), "u": u},
        )
    y = 1.0 - (np.arange(1, n_u + 1) - offset) / n_u
    log_x = np.log(x)
    vertical = bool(np.ptp(log_x) == 0.0)
    slope = intercept = None
    if not vertical:
        slope, intercept = (float(c) for c in np.polyfit(log_x, np.log(y), 1))
    return PlotSeries(
        x=x.tolist(),
        y=y.tolist(),
        metadata={
            "x": "loss",
            "y": "conditional_survival",
            "log_x": True,
            "log_y": True,
            "u": u,
            "offset": offset,
            "slope": slope,
            "intercept": intercept,
            "vertical_stack": vertical,
        },
    )


def mean_excess_plot(
    sample: OrderedSample, d_grid: Sequence[float], level: float = DEFAULT_LEVEL
) -> PlotSeries:
    """
    Empirical mean excess with normal bands over a grid of levels.

    Levels with fewer than two observations above them are gaps, listed in
    ``metadata["failures"]``.
    """
    point = record_failures("mean_excess")(empirical_mean_excess)
    ys: List[Optional[float]] = []
    lo: List[Optional[float]] = []
    hi: List[Optional[float]] = []
    n_over: List[int] = []
    failures: List[str] = []
    for d in d_grid:
        estimate, notes = point(sample, float(d), level)
        if estimate is None:
            ys.append(None)
            lo.append(None)
            hi.append(None)
            n_over.append(int(sample.exceedances(float(d)).size))
            failures.extend(f"d={d}: {note}" for note in notes)
            continue
        ys.append(estimate.value)
        lo.append(estimate.ci.lo)
        hi.append(estimate.ci.hi)
        n_over.append(estimate.n_over)
    return PlotSeries(
        x=[float(d) for d in d_grid],
        y=ys,
        lo=lo,
        hi=hi,
        metadata={
            "x": "d",
            "y": "mean_excess",
            "level": level,
            "n_over": n_over,
            "failures": failures,
        },
    )


# --- Writers ---


_JSON_PAYLOAD = TypeAdapter(Dict[str, Any])


def write_json(
    payload: Union[BaseModel, Dict[str, Any]], path: Union[str, Path]
) -> Path:
    """Write a model, or a mapping holding models and plain values, as JSON."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        text = _JSON_PAYLOAD.dump_json(payload, indent=2).decode("utf-8")
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_series_json(series: PlotSeries, path: Union[str, Path]) -> Path:
    return write_json(series, path)


def read_series_json(path: Union[str, Path]) -> PlotSeries:
    path = Path(path)
    if not path.is_file():
        raise InputFileNotFoundError(f"Series file not found: {path}")
    try:
        return PlotSeries.model_validate_json(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise DataParseError(f"Could not parse series file {path}: {exc}") from exc


def write_series_delimited(
    series: PlotSeries, path: Union[str, Path], delimiter: str = DEFAULT_DELIMITER
) -> Path:
    """
    Write x, y and the bands as columns; gaps become empty fields.

    Metadata is not written; use write_series_json to keep it.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = {"x": series.x, "y": series.y}
    if series.lo is not None:
        columns["lo"] = series.lo
    if series.hi is not None:
        columns["hi"] = series.hi
    frame = pd.DataFrame({k: pd.Series(v, dtype=float) for k, v in columns.items()})
    frame.to_csv(path, sep=delimiter, index=False, float_format="%.17g")
    return path
