"""CSV / key-value file formats.

* prices: ``date,close`` (ISO dates, positive closes)
* series: ``t,x,y`` -- row t = 0 carries x_0 and an empty y; ``x`` may be
  empty (or the column absent) for real data
* traces: ``iteration,<parameter names...>,loglik,accepted``
* summaries: one ``key = value`` per line, values comma-separated for vectors

Floats are written with Python's shortest round-trip ``repr`` so reading a
file back reproduces every value exactly.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .exceptions import InputError
from .models import TimeSeries
from .pmh import ChainTrace


def fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple
    closes: np.ndarray

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=float)
        object.__setattr__(self, "closes", closes)
        if len(self.dates) != closes.size:
            raise InputError("dates and closes differ in length")
        for i, c in enumerate(closes):
            if not c > 0:
                raise InputError(f"non-positive price {c}", row=i + 1)
        parsed = [dt.date.fromisoformat(d) for d in self.dates]
        for i in range(1, len(parsed)):
            if parsed[i] <= parsed[i - 1]:
                raise InputError("dates must be strictly increasing", row=i + 1)


def compute_log_returns(prices: PriceSeries) -> TimeSeries:
    """y_t = 100 * (log s_t - log s_{t-1})."""
    s = np.asarray(prices.closes, dtype=float)
    if s.size < 2:
        raise InputError("need at least two prices to form a return")
    bad = np.nonzero(~(s > 0))[0]
    if bad.size:
        raise InputError(f"non-positive price {s[bad[0]]}", row=int(bad[0]) + 1)
    return TimeSeries(100.0 * np.diff(np.log(s)))


def _read_rows(path):
    path = Path(path)
    if not path.exists():
        raise InputError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path} is empty") from None
        rows = [r for r in reader if any(cell.strip() for cell in r)]
    return header, rows


def _number(cell, row, column):
    try:
        return float(cell)
    except ValueError:
        raise InputError(f"non-numeric value {cell!r} in column {column!r}", row=row) from None


def load_prices(path) -> PriceSeries:
    """Read a ``date,close`` file. A file in descending date order is reversed."""
    header, rows = _read_rows(path)
    close_col = next((c for c in ("close", "index value", "close price") if c in header), None)
    if "date" not in header or close_col is None:
        raise InputError(f"price file needs a 'date' and a 'close' column, got {header}")
    di, ci = header.index("date"), header.index(close_col)
    dates, closes = [], []
    for n, r in enumerate(rows, start=1):
        if len(r) <= max(di, ci):
            raise InputError("missing cells", row=n)
        try:
            dt.date.fromisoformat(r[di].strip())
        except ValueError:
            raise InputError(f"unparsable date {r[di]!r}", row=n) from None
        dates.append(r[di].strip())
        closes.append(_number(r[ci], n, close_col))
    if len(dates) > 1 and dates[0] > dates[-1]:
        dates.reverse()
        closes.reverse()
    return PriceSeries(tuple(dates), np.array(closes))


def write_series(series: TimeSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("t,x,y\n")
        x = series.states
        x0 = fmt(x[0]) if x is not None else ""
        fh.write(f"0,{x0},\n")
        for t, y in enumerate(series.observations, start=1):
            xt = fmt(x[t]) if x is not None else ""
            fh.write(f"{t},{xt},{fmt(y)}\n")


def load_series(path) -> TimeSeries:
    header, rows = _read_rows(path)
    if "t" not in header or "y" not in header:
        raise InputError(f"series file needs 't' and 'y' columns, got {header}")
    ti, yi = header.index("t"), header.index("y")
    xi = header.index("x") if "x" in header else None
    ys, xs = [], []
    for n, r in enumerate(rows, start=1):
        if len(r) < len(header):
            raise InputError("missing cells", row=n)
        t = int(_number(r[ti], n, "t"))
        if xi is not None and r[xi].strip():
            xs.append(_number(r[xi], n, "x"))
        if t == 0:
            continue
        ys.append(_number(r[yi], n, "y"))
    states = np.array(xs) if xs and len(xs) == len(ys) + 1 else None
    x0 = float(states[0]) if states is not None else 0.0
    return TimeSeries(np.array(ys), states, x0)


def load_data(path) -> TimeSeries:
    """Load either a synthetic ``t,x,y`` series or a ``date,close`` price file."""
    header, _ = _read_rows(path)
    if "date" in header:
        return compute_log_returns(load_prices(path))
    return load_series(path)


def bundled_path(name: str) -> Path:
    return Path(resources.files("ssm_pmh") / "data" / name)


def write_trace(trace: ChainTrace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(["iteration", *trace.names, "loglik", "accepted"]) + "\n")
        for k in range(len(trace)):
            cells = [str(k), *(fmt(v) for v in trace.parameters[k]),
                     fmt(trace.log_likelihoods[k]), fmt(bool(trace.accepted[k]))]
            fh.write(",".join(cells) + "\n")


def read_trace(path) -> ChainTrace:
    header, rows = _read_rows(path)
    if header[:1] != ["iteration"] or header[-2:] != ["loglik", "accepted"]:
        raise InputError(f"not a trace file (header {header})")
    names = tuple(header[1:-2])
    if not rows:
        raise InputError("trace file has no rows")
    data = np.empty((len(rows), len(header)))
    for n, r in enumerate(rows, start=1):
        if len(r) != len(header):
            raise InputError("wrong number of cells", row=n)
        data[n - 1] = [_number(c, n, h) for c, h in zip(r, header)]
    return ChainTrace(names, data[:, 1:-2], data[:, -2], data[:, -1].astype(bool))


def summary_text(value) -> str:
    if isinstance(value, str):
        return value
    if np.ndim(value) == 0:
        return fmt(value)
    return ",".join(fmt(v) for v in np.ravel(value))


def write_summary(values: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in values.items():
            fh.write(f"{key} = {summary_text(value)}\n")


def read_summary(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            key, _, text = line.partition("=")
            out[key.strip()] = text.strip()
    return out


def summary_floats(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


def write_matrix(matrix, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.atleast_2d(matrix):
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise InputError(f"covariance file not found: {path}")
    rows = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if line.strip() and not line.lstrip().startswith("#"):
                rows.append([_number(c, n, "covariance") for c in line.split(",")])
    if len({len(r) for r in rows}) > 1:
        raise InputError("covariance rows have different lengths")
    matrix = np.array(rows)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InputError(f"covariance must be a square matrix, got shape {matrix.shape}")
    return matrix


def write_table(path, header, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) if not isinstance(v, str) else v for v in row) + "\n")

