"""Sensor fault injection and a synthetic multi-mode chiller-loop generator."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .condition_bank import PRIOR_TAGS, PriorKey
from .dataset_io import TimeSeriesDataset, parse_timestamp
from .errors import MpcaError, ParameterError, SchemaError

REPLICA_CONFIGS = ("replica_3mode", "replica_1mode")


@dataclass(frozen=True)
class FaultSpec:
    """Additive sensor fault.

    ``bias`` adds ``magnitude`` from ``start_index`` on; ``drift`` ramps
    linearly from 0 at ``start_index`` to ``magnitude`` after
    ``ramp_length`` samples and holds it.
    """

    kind: str
    variable: str
    magnitude: float
    start_index: int = 0
    ramp_length: int = 1

    def __post_init__(self):
        if self.kind not in ("bias", "drift"):
            raise ParameterError(f"fault kind must be bias or drift, got {self.kind!r}")
        if self.magnitude == 0 or not math.isfinite(self.magnitude):
            raise ParameterError("fault magnitude must be finite and non-zero")
        if self.start_index < 0:
            raise ParameterError("start_index must be >= 0")
        if self.ramp_length < 1:
            raise ParameterError("ramp_length must be >= 1")

    def offsets(self, n: int) -> np.ndarray:
        """Additive offset for each of ``n`` samples."""
        t = np.arange(n, dtype=np.float64)
        off = np.zeros(n)
        on = t >= self.start_index
        if self.kind == "bias":
            off[on] = self.magnitude
        else:
            off[on] = self.magnitude * np.minimum(1.0, (t[on] - self.start_index) / self.ramp_length)
        return off


def parse_fault(text: str, data: Optional[TimeSeriesDataset] = None) -> FaultSpec:
    """Parse ``bias:var=<name>,mag=<real>,start=<int>`` or
    ``drift:var=<name>,mag=<real>,start=<int>,ramp=<int>``.

    ``pct=<real>`` may replace ``mag``; the magnitude is then that percent
    of the variable's mean in ``data``. ``ramp`` defaults to the number of
    samples from ``start`` to the end of ``data``.
    """
    kind, _, rest = text.partition(":")
    fields: dict[str, str] = {}
    for part in filter(None, rest.split(",")):
        key, sep, value = part.partition("=")
        if not sep:
            raise ParameterError(f"bad fault field {part!r} in {text!r}")
        fields[key.strip()] = value.strip()
    unknown = set(fields) - {"var", "mag", "pct", "start", "ramp"}
    if unknown:
        raise ParameterError(f"unknown fault fields {sorted(unknown)}")
    if "var" not in fields:
        raise ParameterError(f"fault {text!r} lacks var=")
    try:
        start = int(fields.get("start", "0"))
        if "mag" in fields:
            magnitude = float(fields["mag"])
        elif "pct" in fields:
            if data is None:
                raise ParameterError("pct= needs the dataset to compute a mean")
            mean = float(data.values[:, data.column(fields["var"])].mean())
            magnitude = float(fields["pct"]) / 100.0 * mean
        else:
            raise ParameterError(f"fault {text!r} lacks mag= or pct=")
        if "ramp" in fields:
            ramp = int(fields["ramp"])
        elif kind == "drift" and data is not None:
            ramp = max(data.n - start, 1)
        else:
            ramp = 1
    except ValueError as exc:
        raise ParameterError(f"bad number in fault {text!r}: {exc}") from None
    return FaultSpec(kind=kind.strip(), variable=fields["var"], magnitude=magnitude,
                     start_index=start, ramp_length=ramp)


def inject_fault(data: TimeSeriesDataset, spec: FaultSpec) -> TimeSeriesDataset:
    """Return a copy of ``data`` with the fault added to one variable."""
    j = data.column(spec.variable)
    if spec.start_index >= data.n:
        raise ParameterError(f"start_index {spec.start_index} beyond {data.n} samples")
    values = data.values.copy()
    off = spec.offsets(data.n)
    on = off != 0
    values[on, j] = values[on, j] + off[on]
    return data.with_values(values)


# -- synthetic plant ----------------------------------------------------------


@dataclass
class ModeConfig:
    name: str
    prior_key: PriorKey
    mean: np.ndarray
    loadings: np.ndarray  # m x q
    factor_std: float
    noise_std: np.ndarray  # length m (a scalar in the file is broadcast)
    duration: int

    def covariance(self) -> np.ndarray:
        w = self.loadings
        return self.factor_std ** 2 * w @ w.T + np.diag(self.noise_std ** 2)

    def variable_std(self, j: int) -> float:
        return float(math.sqrt(self.covariance()[j, j]))


@dataclass
class SynthPlantConfig:
    variable_names: list[str]
    modes: list[ModeConfig]
    transition_length: int = 0
    seed: int = 0
    start: str = "2019-10-01T00:00:00"
    cadence_seconds: int = 60
    schedules: dict[str, list[tuple[str, int]]] = field(default_factory=dict)

    def __post_init__(self):
        m = len(self.variable_names)
        if not self.modes:
            raise ParameterError("plant config needs at least one mode")
        for mode in self.modes:
            if mode.mean.shape != (m,) or mode.loadings.ndim != 2 or mode.loadings.shape[0] != m:
                raise SchemaError(f"mode {mode.name!r}: dimensions do not match {m} variables")
            if mode.noise_std.shape != (m,):
                raise SchemaError(f"mode {mode.name!r}: noise_std needs {m} entries")
            if not (mode.factor_std > 0 and np.all(mode.noise_std > 0)):
                raise ParameterError(f"mode {mode.name!r}: standard deviations must be > 0")
            if mode.duration < 0:
                raise ParameterError(f"mode {mode.name!r}: negative duration")
        if self.transition_length < 0:
            raise ParameterError("transition_length must be >= 0")
        names = {mode.name for mode in self.modes}
        for sched, steps in self.schedules.items():
            for mode_name, duration in steps:
                if mode_name not in names:
                    raise ParameterError(f"schedule {sched!r} names unknown mode {mode_name!r}")
                if duration < 1:
                    raise ParameterError(f"schedule {sched!r}: durations must be >= 1")

    def mode(self, name: str) -> ModeConfig:
        for mode in self.modes:
            if mode.name == name:
                return mode
        raise KeyError(name)

    def schedule(self, name: Optional[str] = None) -> list[tuple[str, int]]:
        if name is None:
            return [(mode.name, mode.duration) for mode in self.modes]
        if name not in self.schedules:
            raise ParameterError(f"unknown schedule {name!r}; have {sorted(self.schedules)}")
        return self.schedules[name]

    @classmethod
    def from_dict(cls, d: dict) -> "SynthPlantConfig":
        m = len(d["variable_names"])
        try:
            modes = [
                ModeConfig(
                    name=md["name"],
                    prior_key=PriorKey(**md["prior_key"]),
                    mean=np.array(md["mean"], dtype=np.float64),
                    loadings=np.atleast_2d(np.array(md["loadings"], dtype=np.float64)),
                    factor_std=float(md["factor_std"]),
                    noise_std=np.broadcast_to(np.array(md["noise_std"], dtype=np.float64), (m,)).copy(),
                    duration=int(md.get("duration", 0)),
                )
                for md in d["modes"]
            ]
        except ValueError as exc:
            raise SchemaError(f"plant config has inconsistent dimensions: {exc}") from exc
        schedules = {
            name: [(step["mode"], int(step["duration"])) for step in steps]
            for name, steps in d.get("schedules", {}).items()
        }
        return cls(
            variable_names=list(d["variable_names"]),
            modes=modes,
            transition_length=int(d.get("transition_length", 0)),
            seed=int(d.get("seed", 0)),
            start=d.get("start", "2019-10-01T00:00:00"),
            cadence_seconds=int(d.get("cadence_seconds", 60)),
            schedules=schedules,
        )


def load_plant_config(path_or_name: str | Path) -> SynthPlantConfig:
    """Load a plant config from a JSON path or a shipped replica name."""
    if str(path_or_name) in REPLICA_CONFIGS:
        text = resources.files("mpcafd").joinpath(f"configs/{path_or_name}.json").read_text("utf-8")
    else:
        try:
            text = Path(path_or_name).read_text(encoding="utf-8")
        except OSError as exc:
            raise MpcaError(f"cannot read plant config {path_or_name}: {exc.strerror}") from exc
    try:
        return SynthPlantConfig.from_dict(json.loads(text))
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise MpcaError(f"invalid plant config {path_or_name}: {exc}") from exc


def generate_plant(
    config: SynthPlantConfig, schedule: Optional[str] = None, seed: Optional[int] = None
) -> TimeSeriesDataset:
    """Sample the factor model ``x = mean + W f + e`` mode by mode.

    Consecutive schedule steps are joined by ``transition_length`` samples
    that interpolate linearly between the two modes; those carry the tag
    ``transient=1`` and the prior key of the mode being entered.
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    m = len(config.variable_names)
    blocks: list[np.ndarray] = []
    meta: dict[str, list[str]] = {t: [] for t in (*PRIOR_TAGS, "transient")}

    def tag(key: PriorKey, count: int, transient: bool) -> None:
        for t in PRIOR_TAGS:
            meta[t].extend([getattr(key, t)] * count)
        meta["transient"].extend(["1" if transient else "0"] * count)

    def draw(mode: ModeConfig, count: int) -> np.ndarray:
        q = mode.loadings.shape[1]
        f = rng.standard_normal((count, q)) * mode.factor_std
        e = rng.standard_normal((count, m)) * mode.noise_std
        return f @ mode.loadings.T + e

    prev: Optional[ModeConfig] = None
    for mode_name, duration in config.schedule(schedule):
        mode = config.mode(mode_name)
        if prev is not None and prev is not mode and config.transition_length:
            k = config.transition_length
            w = (np.arange(1, k + 1) / (k + 1))[:, None]
            lo, hi = draw(prev, k), draw(mode, k)
            blocks.append((1 - w) * (prev.mean + lo) + w * (mode.mean + hi))
            tag(mode.prior_key, k, True)
        blocks.append(mode.mean + draw(mode, duration))
        tag(mode.prior_key, duration, False)
        prev = mode
    values = np.vstack(blocks)
    t0 = parse_timestamp(config.start)
    timestamps = t0 + config.cadence_seconds * np.arange(values.shape[0], dtype=np.int64)
    return TimeSeriesDataset(
        timestamps=timestamps, variable_names=config.variable_names, values=values, meta=meta
    )


def mixture_std(config: SynthPlantConfig, schedule: Optional[str] = None) -> np.ndarray:
    """Per-variable standard deviation of the stationary mixture of modes
    visited by a schedule (transitions ignored)."""
    steps = config.schedule(schedule)
    weights = np.array([d for _, d in steps], dtype=np.float64)
    weights = weights / weights.sum() if weights.sum() > 0 else np.full(len(steps), 1.0 / len(steps))
    modes = [config.mode(name) for name, _ in steps]
    mean = sum(w * md.mean for w, md in zip(weights, modes))
    second = sum(w * (md.covariance() + np.outer(md.mean, md.mean)) for w, md in zip(weights, modes))
    return np.sqrt(np.diag(second - np.outer(mean, mean)))


def mode_separation(config: SynthPlantConfig, schedule: Optional[str] = None) -> float:
    """Smallest pairwise distance between mode means, in within-mode
    standard deviations along the line joining them.

    Distances are measured after scaling every variable by the mixture
    standard deviation, the space in which samples are routed.
    """
    scale = mixture_std(config, schedule)
    best = math.inf
    for a in range(len(config.modes)):
        for b in range(a + 1, len(config.modes)):
            ma, mb = config.modes[a], config.modes[b]
            d = (mb.mean - ma.mean) / scale
            u = d / np.linalg.norm(d)
            spread = max(
                math.sqrt(u @ (ma.covariance() / np.outer(scale, scale)) @ u),
                math.sqrt(u @ (mb.covariance() / np.outer(scale, scale)) @ u),
            )
            best = min(best, float(np.linalg.norm(d) / spread))
    return best
