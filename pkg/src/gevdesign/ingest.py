"""Raw series parsing and block-maxima extraction.

Input CSV contract: header row with a `time` column (ISO-8601, UTC) and an
`hs` column (meters); an optional `scenario` column labels the run. Missing
value tokens are the empty string, NA and NaN. Lines starting with `#` are
metadata comments and are skipped.

Blocks are calendar months or years in UTC. Coverage is the fraction of
expected samples (at the nominal step) that are present and non-missing;
blocks below the coverage threshold are kept but flagged excluded and never
enter a likelihood.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from gevdesign.errors import DataError, ParseError

__all__ = ["RawSeries", "BlockRecord", "BlockMaximaSeries", "parse_series",
           "extract_block_maxima"]

MISSING_TOKENS = {"", "na", "nan"}
DEFAULT_COLUMNS = {"time": "time", "hs": "hs", "scenario": "scenario"}


@dataclass
class RawSeries:
    timestamps: np.ndarray            # datetime64[s], strictly increasing
    values: np.ndarray                # float64, NaN marks missing
    step: np.timedelta64              # nominal sampling interval
    scenario: Optional[str] = None

    def __post_init__(self):
        if self.timestamps.size != self.values.size:
            raise DataError("timestamps and values length mismatch")
        if self.timestamps.size >= 2 and not np.all(np.diff(self.timestamps).astype(np.int64) > 0):
            raise DataError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return int(self.timestamps.size)

    def months(self) -> np.ndarray:
        return self.timestamps.astype("datetime64[M]").astype(int) % 12 + 1


@dataclass
class BlockRecord:
    year: int
    month: Optional[int]              # None for annual blocks
    maximum: float                    # NaN when the block holds no data
    coverage: float
    included: bool


@dataclass
class BlockMaximaSeries:
    records: list[BlockRecord]
    block_kind: str                   # "monthly" | "annual"
    scenario_label: str = "unlabeled"
    min_coverage: float = 0.8

    def __post_init__(self):
        if self.block_kind not in ("monthly", "annual"):
            raise DataError(f"block_kind must be monthly or annual, got {self.block_kind}")
        seen = set()
        for r in self.records:
            key = (r.year, r.month)
            if key in seen:
                raise DataError(f"duplicate block record for {key}")
            seen.add(key)

    def included_records(self) -> list[BlockRecord]:
        return [r for r in self.records if r.included]

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(years, months, maxima) over included records, in record order."""
        inc = self.included_records()
        years = np.array([r.year for r in inc], dtype=int)
        months = np.array([1 if r.month is None else r.month for r in inc], dtype=int)
        values = np.array([r.maximum for r in inc], dtype=float)
        return years, months, values

    def n_included(self) -> int:
        return len(self.included_records())


def _parse_time(token: str, line_no: int) -> datetime:
    try:
        dt = datetime.fromisoformat(token.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ParseError(f"unparseable timestamp {token!r}", line=line_no) from exc
    if dt.tzinfo is not None:
        if dt.utcoffset().total_seconds() != 0:
            raise ParseError(f"timestamp {token!r} is not UTC", line=line_no)
        dt = dt.replace(tzinfo=None)
    return dt


def _parse_value(token: str, line_no: int) -> float:
    if token.strip().lower() in MISSING_TOKENS:
        return float("nan")
    try:
        v = float(token)
    except ValueError as exc:
        raise ParseError(f"unparseable value {token!r}", line=line_no) from exc
    return v


def parse_series(path, column_map: Optional[dict] = None, step_hours: Optional[float] = None,
                 scenario: Optional[str] = None) -> RawSeries:
    """Parse a raw CSV series; rejects duplicates and enforces time ordering."""
    cols = dict(DEFAULT_COLUMNS)
    if column_map:
        cols.update(column_map)

    times: list[datetime] = []
    values: list[float] = []
    scenarios: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = None
        for line_no, row in enumerate(reader, start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if header is None:
                header = [h.strip() for h in row]
                for required in (cols["time"], cols["hs"]):
                    if required not in header:
                        raise ParseError(f"missing required column {required!r}", line=line_no)
                i_time = header.index(cols["time"])
                i_hs = header.index(cols["hs"])
                i_scen = header.index(cols["scenario"]) if cols["scenario"] in header else None
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=line_no)
            if i_scen is not None:
                label = row[i_scen].strip()
                if scenario is not None and label != scenario:
                    continue
                scenarios.add(label)
            t = _parse_time(row[i_time].strip(), line_no)
            if times and t <= times[-1]:
                kind = "duplicate" if t == times[-1] else "non-monotone"
                raise ParseError(f"{kind} timestamp {t.isoformat()}", line=line_no)
            times.append(t)
            values.append(_parse_value(row[i_hs], line_no))

    if header is None:
        raise ParseError("empty file: no header row", line=1)
    if not times:
        raise ParseError("no data rows", line=1)
    if scenario is None and len(scenarios) > 1:
        raise ParseError(
            f"multiple scenarios in one file ({sorted(scenarios)}); pass scenario= to select one"
        )

    ts = np.array([np.datetime64(t, "s") for t in times])
    vals = np.array(values, dtype=float)
    if step_hours is not None:
        step = np.timedelta64(int(round(step_hours * 3600)), "s")
    else:
        if ts.size < 2:
            raise ParseError("cannot infer sampling step from a single row; pass step_hours")
        diffs, counts = np.unique(np.diff(ts), return_counts=True)
        step = diffs[np.argmax(counts)]
    label = scenario if scenario is not None else (scenarios.pop() if scenarios else None)
    return RawSeries(timestamps=ts, values=vals, step=step, scenario=label)


def _block_edges(first: datetime, last: datetime, kind: str) -> list[tuple[int, Optional[int], datetime, datetime]]:
    edges = []
    if kind == "monthly":
        y, m = first.year, first.month
        while (y, m) <= (last.year, last.month):
            start = datetime(y, m, 1)
            ny, nm = (y + 1, 1) if m == 12 else (y, m + 1)
            edges.append((y, m, start, datetime(ny, nm, 1)))
            y, m = ny, nm
    else:
        for y in range(first.year, last.year + 1):
            edges.append((y, None, datetime(y, 1, 1), datetime(y + 1, 1, 1)))
    return edges


def extract_block_maxima(s: RawSeries, kind: str, min_coverage: float = 0.8) -> BlockMaximaSeries:
    """Per-block maxima with coverage accounting over calendar blocks (UTC)."""
    if kind not in ("monthly", "annual"):
        raise DataError(f"block kind must be monthly or annual, got {kind!r}")
    if len(s) == 0:
        raise DataError("empty series")
    if not 0.0 <= min_coverage <= 1.0:
        raise DataError(f"min_coverage must lie in [0, 1], got {min_coverage}")

    first = s.timestamps[0].astype("datetime64[s]").item()
    last = s.timestamps[-1].astype("datetime64[s]").item()
    step_s = s.step.astype("timedelta64[s]").astype(np.int64)
    records = []
    for year, month, start, end in _block_edges(first, last, kind):
        t0 = np.datetime64(start, "s")
        t1 = np.datetime64(end, "s")
        i0, i1 = np.searchsorted(s.timestamps, [t0, t1], side="left")
        block = s.values[i0:i1]
        observed = int(np.sum(np.isfinite(block)))
        expected = max(int(round((t1 - t0).astype(np.int64) / step_s)), 1)
        coverage = min(observed / expected, 1.0)
        maximum = float(np.nanmax(block)) if observed else float("nan")
        included = bool(coverage >= min_coverage and np.isfinite(maximum))
        records.append(BlockRecord(year=year, month=month, maximum=maximum,
                                   coverage=coverage, included=included))
    return BlockMaximaSeries(records=records, block_kind=kind,
                             scenario_label=s.scenario or "unlabeled",
                             min_coverage=min_coverage)
