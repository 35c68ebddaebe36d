"""Data ingestion, return transforms, and structured report emission.

Raw inputs are per-asset CSV files with a date column and one or more
numeric columns.  Ingestion drops rows with missing cells per series,
rejects unparseable cells (naming file, row, and column), and aligns all
series on the intersection of their dates.

The response series is transformed to demeaned log-returns in percent,
eps_t = 100 * (log P_t - log P_{t-1}) - mean.  Covariates use their level
standardized by its sample mean, or the absolute/squared percent
log-return of their own series; all are aligned contemporaneously with
eps_t, and the variance recursion lags them by one period internally, so
no transform looks ahead.

Reports are plain data: JSON (sorted keys) or a flat dotted-key/value
text format, both free of timestamps and environment details so repeated
runs on the same inputs are byte-identical.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .exceptions import DataError
from .model import Dataset
from .qmle import FitResult
from .selection import SelectionOutcome

SCHEMA_VERSION = 1

TRANSFORMS = ("level", "abs_log_return_x100", "squared_log_return_x100")


@dataclass(frozen=True)
class SeriesTable:
    """Named series aligned on a common, strictly increasing date grid.

    ``rows_in`` and ``dropped`` account for the cleaning pass per series:
    raw row count and rows dropped for missing cells (before alignment),
    so nothing is ever silently imputed.  ``source`` maps each series to
    the file it came from.
    """

    dates: tuple[str, ...]
    columns: dict[str, np.ndarray]
    rows_in: dict[str, int] = field(default_factory=dict)
    dropped: dict[str, int] = field(default_factory=dict)
    source: dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, values in self.columns.items():
            if len(values) != len(self.dates):
                raise DataError(
                    f"series {name!r} has {len(values)} values for "
                    f"{len(self.dates)} dates"
                )
        if any(a >= b for a, b in zip(self.dates, self.dates[1:])):
            raise DataError("dates must be strictly increasing")


def _read_one_csv(
    path: Path, date_column: str
) -> dict[str, tuple[pd.Series, int, int]]:
    """Per-series (values, raw row count, dropped count) from one file.

    Rows with a missing cell are dropped per series and counted; rows with
    a non-empty but unparseable cell are an error naming row and column.
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"{path}: cannot read CSV ({exc})") from exc
    if date_column not in frame.columns:
        raise DataError(f"{path}: missing date column {date_column!r}")
    raw_dates = frame[date_column]
    dates = pd.to_datetime(raw_dates, errors="coerce", format="mixed")
    bad = dates.isna() & raw_dates.notna()
    if bad.any():
        row = int(np.nonzero(bad.to_numpy())[0][0])
        raise DataError(
            f"{path}: unparseable date {raw_dates.iloc[row]!r} at row {row + 2}"
        )
    iso = dates.dt.strftime("%Y-%m-%d")
    value_columns = [c for c in frame.columns if c != date_column]
    if not value_columns:
        raise DataError(f"{path}: no value columns besides {date_column!r}")
    out: dict[str, pd.Series] = {}
    for col in value_columns:
        raw = frame[col]
        values = pd.to_numeric(raw, errors="coerce")
        present = raw.notna()
        if present.any():
            text = raw.astype(str).str.strip()
            present &= text != ""
        unparseable = values.isna() & present
        if unparseable.any():
            row = int(np.nonzero(unparseable.to_numpy())[0][0])
            raise DataError(
                f"{path}: unparseable value {raw.iloc[row]!r} at row {row + 2}, "
                f"column {col!r}"
            )
        keep = values.notna() & dates.notna()
        series = pd.Series(
            values[keep].to_numpy(dtype=float), index=iso[keep].to_numpy()
        )
        if series.index.duplicated().any():
            dup = series.index[series.index.duplicated()][0]
            raise DataError(f"{path}: duplicate date {dup} in column {col!r}")
        name = path.stem if len(value_columns) == 1 else f"{path.stem}:{col}"
        out[name] = (series, len(frame), int((~keep).sum()))
    return out


def ingest_csv(paths, date_column: str = "Date") -> SeriesTable:
    """Load one or more CSV files and align all series on common dates."""
    paths = [Path(p) for p in paths]
    if not paths:
        raise DataError("at least one input file is required")
    series: dict[str, pd.Series] = {}
    rows_in: dict[str, int] = {}
    dropped: dict[str, int] = {}
    source: dict[str, str] = {}
    for path in paths:
        for name, (values, n_in, n_dropped) in _read_one_csv(
            path, date_column
        ).items():
            if name in series:
                raise DataError(f"duplicate series name {name!r}")
            series[name] = values
            rows_in[name] = n_in
            dropped[name] = n_dropped
            source[name] = str(path)
    common = None
    for values in series.values():
        dates = set(values.index)
        common = dates if common is None else common & dates
    if not common:
        raise DataError("the input series share no common dates")
    grid = tuple(sorted(common))
    columns = {
        name: values.loc[list(grid)].to_numpy(dtype=float)
        for name, values in series.items()
    }
    return SeriesTable(
        dates=grid, columns=columns, rows_in=rows_in, dropped=dropped,
        source=source,
    )


def log_returns_x100(prices: np.ndarray, name: str = "series") -> np.ndarray:
    """100 * diff(log(prices)); prices must be strictly positive."""
    prices = np.asarray(prices, dtype=float)
    if len(prices) < 2:
        raise DataError(f"{name}: need at least 2 observations for returns")
    if np.any(prices <= 0.0):
        raise DataError(f"{name}: prices must be strictly positive")
    return 100.0 * np.diff(np.log(prices))


@dataclass(frozen=True)
class PreparedData:
    """Model-ready data with the names and dates it came from."""

    dataset: Dataset
    names: tuple[str, ...]
    dates: tuple[str, ...]


def transform_series(
    table: SeriesTable,
    response: str,
    covariates,
    demean: bool = True,
) -> PreparedData:
    """Build a Dataset from aligned series.

    ``covariates`` is a sequence of (series name, transform) pairs with
    transform one of ``level``, ``abs_log_return_x100``,
    ``squared_log_return_x100``.  The first observation is consumed by the
    return transform, so the output covers dates[1:].
    """
    if response not in table.columns:
        raise DataError(f"unknown response series {response!r}")
    r = log_returns_x100(table.columns[response], name=response)
    eps = r - r.mean() if demean else r
    cols = []
    names = []
    for name, transform in covariates:
        if name not in table.columns:
            raise DataError(f"unknown covariate series {name!r}")
        values = table.columns[name]
        if transform == "level":
            x = np.asarray(values[1:], dtype=float)
            if np.any(x < 0.0):
                raise DataError(f"{name}: level covariate must be >= 0")
            scale = float(x.mean())
            if scale <= 0.0:
                raise DataError(f"{name}: level covariate is identically zero")
            # Standardize by the sample mean: keeps positivity, makes the
            # fitted gamma unit-free without changing which set is selected.
            x = x / scale
        elif transform == "abs_log_return_x100":
            x = np.abs(log_returns_x100(values, name=name))
        elif transform == "squared_log_return_x100":
            x = log_returns_x100(values, name=name) ** 2
        else:
            raise DataError(
                f"unknown transform {transform!r}; choose from {TRANSFORMS}"
            )
        cols.append(x)
        names.append(f"{name}:{transform}")
    X = np.column_stack(cols) if cols else np.empty((len(eps), 0))
    dataset = Dataset(eps=eps, X=X)
    return PreparedData(
        dataset=dataset, names=tuple(names), dates=tuple(table.dates[1:])
    )


def write_prepared_csv(path, prepared: PreparedData) -> None:
    """Write a model-ready dataset as date,eps,<covariates...> CSV."""
    data = {"date": list(prepared.dates)} if prepared.dates else {}
    data["eps"] = prepared.dataset.eps
    for i, name in enumerate(prepared.names):
        data[name] = prepared.dataset.X[:, i]
    pd.DataFrame(data).to_csv(path, index=False)


def read_prepared_csv(path) -> PreparedData:
    """Read a model-ready dataset; requires an ``eps`` column, no gaps."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError) as exc:
        raise DataError(f"{path}: cannot read CSV ({exc})") from exc
    if "eps" not in frame.columns:
        raise DataError(f"{path}: missing required column 'eps'")
    dates: tuple[str, ...] = ()
    if "date" in frame.columns:
        dates = tuple(str(v) for v in frame["date"])
    names = [c for c in frame.columns if c not in ("date", "eps")]
    numeric = frame[["eps"] + names].apply(pd.to_numeric, errors="coerce")
    missing = numeric.isna()
    if missing.to_numpy().any():
        rows, cols = np.nonzero(missing.to_numpy())
        raise DataError(
            f"{path}: missing or unparseable value at row {rows[0] + 2}, "
            f"column {missing.columns[cols[0]]!r}"
        )
    eps = numeric["eps"].to_numpy(dtype=float)
    X = numeric[names].to_numpy(dtype=float) if names else np.empty((len(eps), 0))
    return PreparedData(
        dataset=Dataset(eps=eps, X=X), names=tuple(names), dates=dates
    )


def fit_summary(fit: FitResult) -> dict:
    """Plain-data summary of one fitted model."""
    theta = fit.theta_hat
    se = np.sqrt(np.diag(fit.Sigma_hat) / fit.n_obs)
    return {
        "p": fit.spec.p,
        "q": fit.spec.q,
        "d": fit.spec.d,
        "omega": theta.omega,
        "alpha": list(theta.alpha),
        "beta": list(theta.beta),
        "gamma": list(theta.gamma),
        "std_err": [float(v) for v in se],
        "loglik": fit.loglik,
        "objective": fit.objective,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "boundary": [bool(b) for b in fit.boundary_mask],
        "n_obs": fit.n_obs,
    }


def _ic_summary(outcome: SelectionOutcome) -> dict:
    return {
        label: {
            "loglik": ic.loglik,
            "n_params": ic.n_params,
            "aic": ic.aic,
            "bic": ic.bic,
        }
        for label, ic in outcome.ic.items()
    }


def selection_report(outcome: SelectionOutcome, names=None) -> dict:
    """Structured report of a full selection workflow.

    Contains no timestamps or environment details: equal inputs give
    byte-identical serialized reports.  The selected-model block is
    omitted when no covariate is selected.
    """
    selection = outcome.selection
    d = outcome.fit_full.spec.d
    if names is None:
        names = [f"x{k}" for k in range(1, d + 1)]
    names = list(names)
    if len(names) != d:
        raise DataError(f"got {len(names)} names for {d} covariates")
    tests = []
    for report in selection.reports or ():
        k = report.index
        tests.append(
            {
                "index": k,
                "name": names[k - 1],
                "gamma_hat": report.gamma_hat,
                "std_err": report.std_err,
                "t_stat": report.t_stat,
                "p_value": report.p_value,
                "adjusted_p": float(selection.adjusted_p[k - 1]),
                "selected": k in selection.selected,
            }
        )
    out = {
        "schema_version": SCHEMA_VERSION,
        "kind": "selection_report",
        "method": selection.method,
        "alpha": selection.alpha,
        "cutoff_index": selection.cutoff_index,
        "selected": list(selection.selected),
        "selected_names": [names[k - 1] for k in selection.selected],
        "tests": tests,
        "fits": {
            "full": fit_summary(outcome.fit_full),
            "null": fit_summary(outcome.fit_null),
        },
        "ic": _ic_summary(outcome),
    }
    if selection.selected:
        out["fits"]["selected"] = fit_summary(outcome.fit_selected)
    return out


def _flatten(node, prefix: str, lines: list[str]) -> None:
    if isinstance(node, dict) and node:
        for key in sorted(node):
            if "." in str(key) or "|" in str(key):
                raise DataError(f"key {key!r} cannot be serialized")
            _flatten(node[key], f"{prefix}{key}." if prefix else f"{key}.", lines)
    elif isinstance(node, (list, tuple)) and len(node):
        for i, item in enumerate(node):
            _flatten(item, f"{prefix}{i}.", lines)
    else:
        key = prefix[:-1]
        if isinstance(node, tuple):
            node = list(node)
        lines.append(f"{key}|{json.dumps(node)}")


def emit_report(report: dict, fmt: str = "json") -> str:
    """Serialize a report dict as JSON or dotted-key delimited text."""
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    if fmt == "dsv":
        lines: list[str] = []
        _flatten(report, "", lines)
        return "\n".join(lines) + "\n"
    raise DataError(f"unknown report format {fmt!r}; use 'json' or 'dsv'")


def read_report(text: str) -> dict:
    """Parse a report produced by ``emit_report`` (either format)."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return json.loads(text)
    root: dict = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        if "|" not in line:
            raise DataError(f"malformed report line: {line!r}")
        key, _, payload = line.partition("|")
        try:
            value = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise DataError(f"malformed report value in line {line!r}") from exc
        parts = key.split(".")
        node = root
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise DataError(f"conflicting report keys at {key!r}")
        node[parts[-1]] = value

    def convert(node):
        if isinstance(node, dict):
            converted = {k: convert(v) for k, v in node.items()}
            if converted and all(str(k).isdigit() for k in converted):
                order = sorted(converted, key=int)
                if [int(k) for k in order] == list(range(len(order))):
                    return [converted[k] for k in order]
            return converted
        return node

    return convert(root)
