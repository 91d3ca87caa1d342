"""Run configuration: the knobs the method leaves unstated."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .errors import ParameterError

VARIANTS = ("standard", "paper_printed")


@dataclass(frozen=True)
class GlobalConfig:
    alpha: float = 0.99
    cpv_target: float = 0.85
    t2_limit_variant: str = "standard"
    spe_h0_variant: str = "standard"
    chauvenet: bool = True
    transient_k: float = 3.0
    denoise_levels: int = 0
    run_length_r: int = 10
    match_slack: float = 1.5
    # None means 10 * m, resolved once m is known
    min_samples_per_condition: Optional[int] = None
    kmeans_max_iter: int = 100

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.cpv_target <= 1.0:
            raise ParameterError(f"cpv_target must lie in (0, 1], got {self.cpv_target}")
        for name in ("t2_limit_variant", "spe_h0_variant"):
            if getattr(self, name) not in VARIANTS:
                raise ParameterError(f"{name} must be one of {VARIANTS}")
        if self.denoise_levels < 0:
            raise ParameterError("denoise_levels must be >= 0")
        if self.run_length_r < 1:
            raise ParameterError("run_length_r must be >= 1")
        if self.match_slack <= 0:
            raise ParameterError("match_slack must be > 0")

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "GlobalConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path: str | Path) -> "GlobalConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def with_overrides(self, **overrides: Any) -> "GlobalConfig":
        """Return a copy with every non-None override applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **changes)

    def min_samples_for(self, m: int) -> int:
        if self.min_samples_per_condition is None:
            return 10 * m
        return self.min_samples_per_condition
