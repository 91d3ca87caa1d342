"""CSV ingestion of sensor data, model-bank persistence, monitor reports."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    CorruptionError,
    EmptyDatasetError,
    FormatError,
    MpcaError,
    SchemaError,
    UnsupportedVersionError,
)

if TYPE_CHECKING:
    from .condition_bank import ModelBank
    from .monitor import MonitorRecord

META_PREFIX = "meta:"
FORMAT_VERSION = 1

REPORT_COLUMNS = (
    "sample_index",
    "timestamp",
    "condition_id",
    "t2",
    "spe",
    "phi",
    "t2_limit",
    "spe_limit",
    "phi_limit",
    "alarm",
)


@dataclass
class TimeSeriesDataset:
    """Timestamped n x m sample matrix plus per-sample categorical tags.

    ``timestamps`` are integer epoch seconds, ``meta`` maps a tag name
    (without the ``meta:`` prefix) to one string per sample.
    """

    timestamps: np.ndarray
    variable_names: list[str]
    values: np.ndarray
    meta: dict[str, list[str]] = field(default_factory=dict)
    dropped_count: int = 0

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.variable_names = list(self.variable_names)
        if self.values.ndim != 2:
            raise SchemaError("values must be a 2-D matrix")
        n, m = self.values.shape
        if m != len(self.variable_names):
            raise SchemaError(
                f"{m} value columns but {len(self.variable_names)} variable names"
            )
        if self.timestamps.shape != (n,):
            raise SchemaError(f"{self.timestamps.shape[0]} timestamps for {n} rows")
        if n > 1 and np.any(np.diff(self.timestamps) <= 0):
            raise FormatError("timestamps must be strictly increasing")
        for tag, vals in self.meta.items():
            if len(vals) != n:
                raise SchemaError(f"meta tag {tag!r} has {len(vals)} entries for {n} rows")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def subset(self, rows) -> "TimeSeriesDataset":
        """Rows selected by a boolean mask or an index array, order kept."""
        idx = np.asarray(rows)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        return TimeSeriesDataset(
            timestamps=self.timestamps[idx],
            variable_names=self.variable_names,
            values=self.values[idx],
            meta={k: [v[i] for i in idx] for k, v in self.meta.items()},
            dropped_count=self.dropped_count,
        )

    def with_values(self, values: np.ndarray) -> "TimeSeriesDataset":
        return TimeSeriesDataset(
            timestamps=self.timestamps.copy(),
            variable_names=self.variable_names,
            values=values,
            meta={k: list(v) for k, v in self.meta.items()},
            dropped_count=self.dropped_count,
        )

    def column(self, name: str) -> int:
        try:
            return self.variable_names.index(name)
        except ValueError:
            raise SchemaError(f"unknown variable {name!r}") from None


def parse_timestamp(text: str) -> int:
    """ISO-8601 text to epoch seconds; naive times are taken as UTC."""
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise FormatError(f"unparseable timestamp {text!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(epoch: int) -> str:
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%S")


def _parse_real(cell: str) -> Optional[float]:
    cell = cell.strip()
    if not cell:
        return None
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def read_csv(path: str | Path, meta_columns: Sequence[str] = ()) -> TimeSeriesDataset:
    """Read a sensor CSV.

    Column 1 holds ISO-8601 timestamps. Columns named with the ``meta:``
    prefix, or listed in ``meta_columns``, are categorical tags; the rest
    must be numeric. Rows with a missing or unparseable numeric cell are
    dropped and counted in ``dropped_count``.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise EmptyDatasetError(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2 or any(not h for h in header) or len(set(header)) != len(header):
        raise FormatError(f"{path}: malformed header {header!r}")
    explicit = set(meta_columns)
    missing = explicit - set(header)
    if missing:
        raise FormatError(f"{path}: meta columns not in header: {sorted(missing)}")
    meta_idx = [i for i, h in enumerate(header[1:], 1) if h in explicit or h.startswith(META_PREFIX)]
    num_idx = [i for i in range(1, len(header)) if i not in meta_idx]
    if not num_idx:
        raise FormatError(f"{path}: no numeric columns")

    timestamps, values = [], []
    meta_vals: list[list[str]] = [[] for _ in meta_idx]
    dropped = 0
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(header):
            raise FormatError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
        nums = [_parse_real(row[i]) for i in num_idx]
        if any(v is None for v in nums):
            dropped += 1
            continue
        timestamps.append(parse_timestamp(row[0]))
        values.append(nums)
        for slot, i in zip(meta_vals, meta_idx):
            slot.append(row[i].strip())
    if not values:
        raise EmptyDatasetError(f"{path}: no rows survived ingestion ({dropped} dropped)")

    def tag_name(h: str) -> str:
        return h[len(META_PREFIX):] if h.startswith(META_PREFIX) else h

    return TimeSeriesDataset(
        timestamps=np.array(timestamps, dtype=np.int64),
        variable_names=[header[i] for i in num_idx],
        values=np.array(values, dtype=np.float64),
        meta={tag_name(header[i]): slot for i, slot in zip(meta_idx, meta_vals)},
        dropped_count=dropped,
    )


def write_csv(data: TimeSeriesDataset, path: str | Path) -> None:
    """Write a dataset in the same layout ``read_csv`` accepts.

    Reals use ``repr`` so a read-back is bit-exact.
    """
    tags = list(data.meta)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp", *data.variable_names, *(META_PREFIX + t for t in tags)])
        for i in range(data.n):
            writer.writerow(
                [
                    format_timestamp(data.timestamps[i]),
                    *(repr(float(v)) for v in data.values[i]),
                    *(data.meta[t][i] for t in tags),
                ]
            )


# -- model bank -------------------------------------------------------------


def _checksum(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def save_bank(bank: "ModelBank", path: str | Path) -> None:
    """Write the bank as a single JSON document with a SHA-256 checksum."""
    bank.validate()
    payload = bank.to_dict()
    payload["checksum"] = _checksum(payload)
    text = json.dumps(payload, indent=1, sort_keys=True)
    try:
        Path(path).write_text(text + "\n", encoding="utf-8")
    except OSError as exc:
        raise MpcaError(f"cannot write model bank to {path}: {exc}") from exc


def load_bank(path: str | Path) -> "ModelBank":
    from .condition_bank import ModelBank

    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorruptionError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise FormatError(f"{path}: not a model bank file")
    if payload["format_version"] != FORMAT_VERSION:
        raise UnsupportedVersionError(
            f"{path}: format_version {payload['format_version']!r} is not supported "
            f"(expected {FORMAT_VERSION})"
        )
    stored = payload.pop("checksum", None)
    if stored != _checksum(payload):
        raise CorruptionError(f"{path}: checksum mismatch")
    bank = ModelBank.from_dict(payload)
    bank.validate()
    return bank


# -- monitor reports --------------------------------------------------------


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def write_monitor_report(records: Iterable["MonitorRecord"], path: str | Path) -> None:
    records = list(records)
    if not records:
        raise MpcaError("refusing to write an empty monitor report")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REPORT_COLUMNS)
            for r in records:
                matched = r.condition_id is not None
                writer.writerow(
                    [
                        r.sample_index,
                        format_timestamp(r.timestamp),
                        r.condition_id if matched else "none",
                        _fmt(r.t2),
                        _fmt(r.spe),
                        _fmt(r.phi),
                        _fmt(r.t2_limit),
                        _fmt(r.spe_limit),
                        _fmt(r.phi_limit),
                        r.alarm_flag,
                    ]
                )
    except OSError as exc:
        raise MpcaError(f"cannot write monitor report {path}: {exc}") from exc


def read_monitor_report(path: str | Path) -> list["MonitorRecord"]:
    from .monitor import Alarm, MonitorRecord

    def real(cell: str) -> Optional[float]:
        return float(cell) if cell != "" else None

    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise EmptyDatasetError(f"{path}: empty report")
            if tuple(header) != REPORT_COLUMNS:
                raise FormatError(f"{path}: unexpected report header {header!r}")
            records = []
            for row in reader:
                cond = None if row[2] == "none" else int(row[2])
                alarm = {"true": Alarm.FAULT, "false": Alarm.NORMAL, "unmatched": Alarm.UNMATCHED}[row[9]]
                records.append(
                    MonitorRecord(
                        sample_index=int(row[0]),
                        timestamp=parse_timestamp(row[1]),
                        condition_id=cond,
                        t2=real(row[3]),
                        spe=real(row[4]),
                        phi=real(row[5]),
                        t2_limit=real(row[6]),
                        spe_limit=real(row[7]),
                        phi_limit=real(row[8]),
                        alarm=alarm,
                    )
                )
    except (KeyError, ValueError, IndexError) as exc:
        raise FormatError(f"{path}: malformed report row ({exc})") from exc
    if not records:
        raise EmptyDatasetError(f"{path}: report has no records")
    return records
