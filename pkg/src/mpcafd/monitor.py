"""Online scoring of new samples against a model bank, plus detection metrics."""
from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .condition_bank import UNMATCHED, ModelBank
from .dataset_io import TimeSeriesDataset
from .errors import SchemaError


class Alarm(str, enum.Enum):
    NORMAL = "normal"
    FAULT = "fault"
    UNMATCHED = "unmatched"


@dataclass(frozen=True)
class MonitorRecord:
    sample_index: int
    timestamp: int
    condition_id: Optional[int]
    t2: Optional[float]
    spe: Optional[float]
    phi: Optional[float]
    t2_limit: Optional[float]
    spe_limit: Optional[float]
    phi_limit: Optional[float]
    alarm: Alarm

    @property
    def alarm_flag(self) -> str:
        """Report encoding: ``true`` iff phi exceeds its limit."""
        if self.alarm is Alarm.UNMATCHED:
            return "unmatched"
        return "true" if self.alarm is Alarm.FAULT else "false"

    @property
    def t2_exceeded(self) -> Optional[bool]:
        return None if self.t2 is None else self.t2 > self.t2_limit

    @property
    def spe_exceeded(self) -> Optional[bool]:
        return None if self.spe is None else self.spe > self.spe_limit


@dataclass
class DetectionReport:
    n_test: int
    n_matched: int
    n_alarms: int
    detection_rate: float
    detection_rate_total: float
    first_exceed_index: Optional[int]
    first_sustained_index: Optional[int]
    run_length: int
    fault_start_index: int
    per_condition: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def monitor_stream(data: TimeSeriesDataset, bank: ModelBank) -> list[MonitorRecord]:
    """Route every sample to a condition and score it with that submodel.

    Only standardization is applied online; outlier and transient filters
    are training tools and would hide the faults being looked for.
    """
    if list(data.variable_names) != list(bank.variable_names):
        raise SchemaError(
            f"dataset variables {data.variable_names} do not match bank {bank.variable_names}"
        )
    ids, _ = bank.match_many(data.values)
    t2 = np.full(data.n, np.nan)
    spe = np.full(data.n, np.nan)
    phi = np.full(data.n, np.nan)
    for sm in bank.submodels:
        rows = np.flatnonzero(ids == sm.condition_id)
        if rows.size:
            t2[rows], spe[rows], phi[rows] = sm.score(sm.standardize(data.values[rows]))

    records = []
    for i in range(data.n):
        cid = int(ids[i])
        ts = int(data.timestamps[i])
        if cid == UNMATCHED:
            records.append(
                MonitorRecord(i, ts, None, None, None, None, None, None, None, Alarm.UNMATCHED)
            )
            continue
        sm = bank.submodel(cid)
        records.append(
            MonitorRecord(
                sample_index=i,
                timestamp=ts,
                condition_id=cid,
                t2=float(t2[i]),
                spe=float(spe[i]),
                phi=float(phi[i]),
                t2_limit=sm.t2_limit,
                spe_limit=sm.spe_limit,
                phi_limit=sm.phi_limit,
                alarm=Alarm.FAULT if phi[i] > sm.phi_limit else Alarm.NORMAL,
            )
        )
    return records


def first_sustained_run(alarms: Sequence[bool], r: int) -> Optional[int]:
    """Start index of the first run of at least ``r`` consecutive ``True``."""
    run = 0
    for i, a in enumerate(alarms):
        run = run + 1 if a else 0
        if run >= r:
            return i - r + 1
    return None


def detection_metrics(
    records: Sequence[MonitorRecord], fault_start_index: int = 0, r: int = 10
) -> DetectionReport:
    """Detection rates and onset indices over the window from
    ``fault_start_index`` to the end of ``records``.

    ``detection_rate`` divides alarms by matched samples, ``detection_rate_total``
    by all samples in the window. Indices are positions in ``records``.
    """
    n = len(records)
    if n == 0:
        raise ValueError("no records")
    if not 0 <= fault_start_index < n:
        raise ValueError(f"fault_start_index {fault_start_index} outside [0, {n})")
    window = records[fault_start_index:]
    fault = [rec.alarm is Alarm.FAULT for rec in window]
    n_test = len(window)
    n_matched = sum(rec.alarm is not Alarm.UNMATCHED for rec in window)
    n_alarms = sum(fault)
    first = next((i for i, a in enumerate(fault) if a), None)
    sustained = first_sustained_run(fault, r)
    per_condition: dict[str, int] = {}
    for rec in window:
        key = "none" if rec.condition_id is None else str(rec.condition_id)
        per_condition[key] = per_condition.get(key, 0) + 1
    return DetectionReport(
        n_test=n_test,
        n_matched=n_matched,
        n_alarms=n_alarms,
        detection_rate=n_alarms / n_matched if n_matched else 0.0,
        detection_rate_total=n_alarms / n_test,
        first_exceed_index=None if first is None else first + fault_start_index,
        first_sustained_index=None if sustained is None else sustained + fault_start_index,
        run_length=r,
        fault_start_index=fault_start_index,
        per_condition=dict(sorted(per_condition.items())),
    )
