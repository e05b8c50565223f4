"""Microphone array geometry and direct-path propagation.

The array is described by cartesian microphone positions (meters). Sources
live on the z=0 plane at an angle/distance relative to the array center,
which is assumed to be at the origin. Frequency bins are numbered 1..n_bins
(one-sided spectrum, DC excluded, Nyquist included).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_SPEED_OF_SOUND = 343.0
DEFAULT_SAMPLE_RATE = 16000.0
DEFAULT_DFT_LEN = 512

# 4-mic uniform linear array on the x-axis, 0.08 m spacing, centered at origin.
DEFAULT_ULA_X = (-0.12, -0.04, 0.04, 0.12)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ArrayGeometry:
    """Immutable microphone array description.

    Attributes:
        mics: (M, 3) microphone positions in meters.
        c: speed of sound in m/s.
        fs: sampling frequency in Hz.
        n_bins: number of one-sided DFT bins (DC excluded).
    """

    mics: np.ndarray
    c: float = DEFAULT_SPEED_OF_SOUND
    fs: float = DEFAULT_SAMPLE_RATE
    n_bins: int = DEFAULT_DFT_LEN // 2
    pair_dists: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        mics = np.asarray(self.mics, dtype=np.float64)
        if mics.ndim != 2 or mics.shape[1] != 3:
            raise ValueError("mics must have shape (M, 3)")
        if mics.shape[0] < 2:
            raise ValueError("need at least 2 microphones")
        if not np.all(np.isfinite(mics)):
            raise ValueError("microphone positions must be finite")
        dists = np.linalg.norm(mics[:, None, :] - mics[None, :, :], axis=2)
        if not np.any(dists > 0.0):
            raise ValueError("at least two microphone positions must differ")
        if not (self.c > 0.0 and self.fs > 0.0):
            raise ValueError("c and fs must be positive")
        if self.n_bins < 1:
            raise ValueError("n_bins must be >= 1")
        object.__setattr__(self, "mics", _readonly(mics))
        object.__setattr__(self, "pair_dists", _readonly(dists))

    @property
    def n_mics(self) -> int:
        return self.mics.shape[0]

    @property
    def bin_numbers(self) -> np.ndarray:
        """Physical bin numbers 1..n_bins as float64."""
        return np.arange(1, self.n_bins + 1, dtype=np.float64)

    def phase_slope(self) -> float:
        """Radians of direct-path phase per (meter of path length x bin number)."""
        return np.pi * self.fs / (self.c * self.n_bins)

    def to_dict(self) -> dict:
        return {
            "c": self.c,
            "fs": self.fs,
            "dft_len": 2 * self.n_bins,
            "mics": self.mics.tolist(),
        }


def default_ula(
    c: float = DEFAULT_SPEED_OF_SOUND,
    fs: float = DEFAULT_SAMPLE_RATE,
    dft_len: int = DEFAULT_DFT_LEN,
) -> ArrayGeometry:
    """Default 4-microphone linear array (0.08 m spacing) on the x-axis."""
    mics = np.array([[x, 0.0, 0.0] for x in DEFAULT_ULA_X])
    return geometry_from_dict({"c": c, "fs": fs, "dft_len": dft_len, "mics": mics.tolist()})


def geometry_from_dict(d: dict) -> ArrayGeometry:
    """Build an ArrayGeometry from the JSON file schema.

    Expected keys: ``c`` (m/s), ``fs`` (Hz), ``dft_len`` (even, full DFT
    length; the one-sided bin count is dft_len/2) and ``mics`` ((M, 3) list).
    """
    try:
        c = float(d.get("c", DEFAULT_SPEED_OF_SOUND))
        fs = float(d.get("fs", DEFAULT_SAMPLE_RATE))
        dft_len = int(d.get("dft_len", DEFAULT_DFT_LEN))
        mics = d["mics"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"invalid geometry description: {exc}") from exc
    if dft_len < 2 or dft_len % 2 != 0:
        raise ValueError("dft_len must be a positive even integer")
    return ArrayGeometry(mics=np.asarray(mics, dtype=np.float64), c=c, fs=fs, n_bins=dft_len // 2)


def load_geometry(path: str | Path) -> ArrayGeometry:
    """Load an ArrayGeometry from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        return geometry_from_dict(json.load(fh))


@dataclass(frozen=True)
class SourcePosition:
    """Source location on the z=0 plane.

    ``xyz`` is [r*cos(theta), r*sin(theta), 0] with theta measured in degrees
    from the positive x-axis.
    """

    xyz: np.ndarray
    theta_deg: float
    r: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "xyz", _readonly(np.asarray(self.xyz, dtype=np.float64)))


def source_position(theta_deg: float, r: float) -> SourcePosition:
    """Place a source at angle ``theta_deg`` in [0, 180] and distance ``r`` > 0."""
    if not r > 0.0:
        raise ValueError(f"source distance must be positive, got {r}")
    if not 0.0 <= theta_deg <= 180.0:
        raise ValueError(f"source angle must be in [0, 180] degrees, got {theta_deg}")
    t = np.deg2rad(theta_deg)
    xyz = np.array([r * np.cos(t), r * np.sin(t), 0.0])
    return SourcePosition(xyz=xyz, theta_deg=float(theta_deg), r=float(r))


def direct_distances(geom: ArrayGeometry, s: SourcePosition) -> np.ndarray:
    """Euclidean source-to-microphone distances, shape (M,)."""
    return np.linalg.norm(geom.mics - s.xyz[None, :], axis=1)


def direct_phases(geom: ArrayGeometry, s: SourcePosition) -> np.ndarray:
    """Unwrapped direct-path phases for all bins and mics, shape (n_bins, M).

    Row k-1 holds bin k; the phase is nonnegative and linear in the bin
    number: ``dist / c * pi * fs * k / n_bins``.
    """
    dists = direct_distances(geom, s)
    return np.outer(geom.bin_numbers, dists) * geom.phase_slope()


def direct_phase(geom: ArrayGeometry, s: SourcePosition, mic: int, bin_number: int) -> float:
    """Direct-path phase for one microphone and bin (both numbered from 1).

    Raises IndexError when ``mic`` is outside 1..M or ``bin_number`` outside
    1..n_bins.
    """
    if not 1 <= mic <= geom.n_mics:
        raise IndexError(f"mic index {mic} outside 1..{geom.n_mics}")
    if not 1 <= bin_number <= geom.n_bins:
        raise IndexError(f"bin number {bin_number} outside 1..{geom.n_bins}")
    dist = float(np.linalg.norm(geom.mics[mic - 1] - s.xyz))
    return dist * bin_number * geom.phase_slope()
