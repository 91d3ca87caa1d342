"""Desk-scale replicas of the bias and drift sensor-fault experiments.

A bank is trained on the ``train`` schedule of a plant config, a fault
is injected into the ``test`` schedule (a fresh draw with its own seed)
and the faulted stream is monitored.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .condition_bank import ModelBank
from .config import GlobalConfig
from .dataset_io import TimeSeriesDataset
from .faultlab import FaultSpec, SynthPlantConfig, generate_plant, inject_fault, load_plant_config
from .monitor import DetectionReport, MonitorRecord, detection_metrics, monitor_stream
from .pipeline import train_bank

TEST_SEED_OFFSET = 1000


@dataclass
class ReplicaRun:
    bank: ModelBank
    test: TimeSeriesDataset
    records: list[MonitorRecord]
    report: DetectionReport


def within_mode_std(plant: SynthPlantConfig, variable: str, schedule: str = "test") -> float:
    """Standard deviation of ``variable`` in the first mode of a schedule."""
    mode = plant.mode(plant.schedule(schedule)[0][0])
    return mode.variable_std(plant.variable_names.index(variable))


def run_replica(
    kind: str,
    sigmas: float,
    k_override: Optional[int] = None,
    plant: str | SynthPlantConfig = "replica_3mode",
    variable: Optional[str] = None,
    config: Optional[GlobalConfig] = None,
    bank: Optional[ModelBank] = None,
) -> ReplicaRun:
    """Inject a ``kind`` fault of ``sigmas`` within-mode standard deviations
    over the whole test window and report detection metrics."""
    plant = load_plant_config(plant) if isinstance(plant, str) else plant
    config = config or GlobalConfig()
    variable = variable or plant.variable_names[0]
    if bank is None:
        bank, _ = train_bank(generate_plant(plant, "train"), config, k_override)
    test = generate_plant(plant, "test", seed=plant.seed + TEST_SEED_OFFSET)
    spec = FaultSpec(
        kind=kind,
        variable=variable,
        magnitude=sigmas * within_mode_std(plant, variable),
        start_index=0,
        ramp_length=test.n,
    )
    faulty = inject_fault(test, spec)
    records = monitor_stream(faulty, bank)
    return ReplicaRun(bank, faulty, records, detection_metrics(records, 0, config.run_length_r))
