"""Toolkit configuration with published defaults.

Loadable from a JSON file (``--config`` or the FAIRWAY_CONFIG environment
variable); unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .errors import DomainError, ParseError

ENV_VAR = "FAIRWAY_CONFIG"


@dataclass(frozen=True)
class Config:
    v_min: float = 2.65  # km/h
    tail_fraction: float = 0.001
    k1: float = 4.0  # vessels/km
    v_f: Optional[float] = None  # km/h override; None = derive from data
    gap_bin_width: float = 5.0  # m
    density_bin_width: float = 0.2  # vessels/km
    kmeans_seed: int = 0
    kmeans_max_iter: int = 300
    kmeans_tol: float = 1e-6  # km/h
    k_range_min: int = 2
    k_range_max: int = 9

    def __post_init__(self):
        for name in ("v_min", "tail_fraction", "k1", "gap_bin_width",
                     "density_bin_width", "kmeans_max_iter"):
            if getattr(self, name) <= 0:
                raise DomainError(f"config field {name} must be positive")
        if self.v_f is not None and self.v_f <= 0:
            raise DomainError("config field v_f must be positive when set")
        if self.kmeans_tol < 0:
            raise DomainError("config field kmeans_tol must be >= 0")
        if not 2 <= self.k_range_min <= self.k_range_max:
            raise DomainError("k_range must satisfy 2 <= min <= max")

    @property
    def k_range(self) -> range:
        return range(self.k_range_min, self.k_range_max + 1)


def load_config(path: Optional[str] = None) -> Config:
    """Config from an explicit path, else FAIRWAY_CONFIG, else defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None:
        return Config()
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: cannot read config: {exc}") from exc
    known = {f.name for f in fields(Config)}
    unknown = set(raw) - known
    if unknown:
        raise ParseError(f"{path}: unknown config keys {sorted(unknown)}")
    return replace(Config(), **raw)
