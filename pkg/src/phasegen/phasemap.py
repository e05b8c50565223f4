"""Phase-map feature extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def extract_phase(y: np.ndarray) -> np.ndarray:
    """Principal-value phase of each entry, in (-pi, pi].

    Zero entries map to phase 0. Entries that land exactly on -pi (possible
    for negative reals with a negative-zero imaginary part) are folded to +pi
    so the half-open convention holds.
    """
    phi = np.angle(y)
    return np.where(phi == -np.pi, np.pi, phi)


@dataclass(frozen=True)
class PhaseMapSample:
    """Phase map (n_bins, M) in radians plus its class label."""

    phi: np.ndarray
    class_index: int

    def __post_init__(self) -> None:
        phi = np.asarray(self.phi)
        if phi.ndim != 2:
            raise ValueError("phi must be a 2-D (n_bins, M) array")
        phi.flags.writeable = False
        object.__setattr__(self, "phi", phi)
        if self.class_index < 0:
            raise ValueError("class_index must be nonnegative")
