"""Run configuration: scenario distributions, generation settings, hashing.

A generation run is fully described by the array geometry, the scenario
parameter distributions, the batch size and the master seed. Everything
except the seed is folded into a 64-bit FNV-1a digest over the canonical
config JSON so that files from mixed configurations can be told apart.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import ArrayGeometry, default_ula

DEFAULT_CLASS_GRID = (0.0, 5.0, 180.0)  # start, step, stop (inclusive)
DEFAULT_R_RANGE = (1.0, 3.0)
DEFAULT_SNR_RANGE_DB = (0.0, 30.0)
DEFAULT_DRR_RANGE_DB = (-9.0, 0.0)
DEFAULT_BATCH_SIZE = 512


def class_grid(start: float, step: float, stop: float) -> np.ndarray:
    """Angle grid start, start+step, ... up to and including stop."""
    if step <= 0:
        raise ValueError("class step must be positive")
    n = int(round((stop - start) / step)) + 1
    grid = start + step * np.arange(n, dtype=np.float64)
    return grid[grid <= stop + 1e-9]


SIGNAL_LAWS = ("gaussian",)


@dataclass(frozen=True)
class ScenarioDistributions:
    """Sampling ranges for one scenario draw.

    The class angle is drawn uniformly from ``theta_classes``; distance, SNR
    and DRR are drawn from independent continuous uniform distributions.
    ``signal_law`` selects the source/noise law; only the circular-symmetric
    complex Gaussian is implemented.
    """

    theta_classes: np.ndarray = field(default_factory=lambda: class_grid(*DEFAULT_CLASS_GRID))
    r_range: tuple[float, float] = DEFAULT_R_RANGE
    snr_range_db: tuple[float, float] = DEFAULT_SNR_RANGE_DB
    drr_range_db: tuple[float, float] = DEFAULT_DRR_RANGE_DB
    signal_law: str = "gaussian"

    def __post_init__(self) -> None:
        classes = np.asarray(self.theta_classes, dtype=np.float64)
        if classes.size == 0:
            raise ValueError("theta_classes must be nonempty")
        if np.any(np.diff(classes) <= 0):
            raise ValueError("theta_classes must be strictly increasing")
        if classes[0] < 0.0 or classes[-1] > 180.0:
            raise ValueError("theta_classes must lie within [0, 180]")
        for name in ("r_range", "snr_range_db", "drr_range_db"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name}: lower bound {lo} exceeds upper bound {hi}")
        r_lo, r_hi = self.r_range
        if not (np.isfinite(r_lo) and np.isfinite(r_hi)) or r_lo <= 0.0:
            raise ValueError("r_range bounds must be finite and positive")
        if self.signal_law not in SIGNAL_LAWS:
            raise ValueError(
                f"signal_law {self.signal_law!r} not implemented; choose from {SIGNAL_LAWS}"
            )
        classes.flags.writeable = False
        object.__setattr__(self, "theta_classes", classes)
        object.__setattr__(self, "r_range", (float(self.r_range[0]), float(self.r_range[1])))
        object.__setattr__(
            self, "snr_range_db", (float(self.snr_range_db[0]), float(self.snr_range_db[1]))
        )
        object.__setattr__(
            self, "drr_range_db", (float(self.drr_range_db[0]), float(self.drr_range_db[1]))
        )

    @property
    def n_classes(self) -> int:
        return self.theta_classes.size

    def to_dict(self) -> dict:
        return {
            "theta_classes": self.theta_classes.tolist(),
            "r_range": list(self.r_range),
            "snr_range_db": list(self.snr_range_db),
            "drr_range_db": list(self.drr_range_db),
            "signal_law": self.signal_law,
        }


@dataclass(frozen=True)
class GenerationConfig:
    """Everything that determines generated bits apart from the master seed."""

    geom: ArrayGeometry = field(default_factory=default_ula)
    dists: ScenarioDistributions = field(default_factory=ScenarioDistributions)
    batch_size: int = DEFAULT_BATCH_SIZE
    frames_per_scenario: int = 1

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.frames_per_scenario < 1:
            raise ValueError("frames_per_scenario must be >= 1")

    def canonical_json(self) -> str:
        d = {
            "geometry": self.geom.to_dict(),
            "distributions": self.dists.to_dict(),
            "batch_size": self.batch_size,
            "frames_per_scenario": self.frames_per_scenario,
        }
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    def digest(self) -> int:
        return fnv1a64(self.canonical_json().encode("utf-8"))


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h
