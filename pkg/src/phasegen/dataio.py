"""PGD1 dataset container: phase maps + labels + provenance in one stream.

Layout (all integers little-endian):

    magic   4 bytes         b"PGD1"
    hlen    u32             byte length of the JSON header
    header  hlen bytes      UTF-8 JSON: {"B","K","M","C","dtype":"f32",
                            "seed","batch_index","config_hash"}
    phases  B*K*M*4 bytes   float32 radians, sample-major, then bin, then mic
    labels  B*4 bytes       int32 class indices
    params  JSON array      one record per sample (ASCII, self-delimiting)

Containers may be concatenated back to back in one file; each embeds its
own batch_index, so files are position-independent.
"""

from __future__ import annotations

import io
import json
import math
import struct
from pathlib import Path
from typing import BinaryIO, Iterator

import numpy as np

from .coherence import CoherenceFactors, build_coherence, factorize
from .config import GenerationConfig
from .generator import DatasetBatch, ScenarioParams, gen_batch

MAGIC = b"PGD1"
FACTORS_MAGIC = b"PGF1"
_HEADER_KEYS = ("B", "K", "M", "C", "dtype", "seed", "batch_index", "config_hash")
# params JSON is ASCII, so raw_decode character offsets equal byte offsets
_PARAMS_PROBE = 1 << 16


class ContainerError(ValueError):
    """Base class for malformed-container errors."""


class BadMagicError(ContainerError):
    """Stream does not start with the PGD1 magic."""


class TruncatedPayloadError(ContainerError):
    """Stream ended before a declared section was complete."""


class HeaderMismatchError(ContainerError):
    """Header fields and payload contents disagree."""


def write_batch(batch: DatasetBatch, sink: BinaryIO) -> int:
    """Serialize one batch; returns the number of bytes written."""
    phases = np.ascontiguousarray(batch.phases, dtype="<f4")
    labels = np.ascontiguousarray(batch.labels, dtype="<i4")
    if phases.ndim != 3 or labels.shape != (phases.shape[0],):
        raise ValueError("batch arrays have inconsistent shapes")
    if len(batch.params) != phases.shape[0]:
        raise ValueError("batch params length does not match batch size")
    header = {
        "B": int(phases.shape[0]),
        "K": int(phases.shape[1]),
        "M": int(phases.shape[2]),
        "C": int(batch.n_classes),
        "dtype": "f32",
        "seed": int(batch.master_seed),
        "batch_index": int(batch.batch_index),
        "config_hash": int(batch.config_hash),
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    params_bytes = json.dumps(
        [_finite_json(p.to_dict()) for p in batch.params],
        sort_keys=True,
        separators=(",", ":"),
        allow_nan=False,
    ).encode("utf-8")

    written = 0
    for chunk in (
        MAGIC,
        struct.pack("<I", len(header_bytes)),
        header_bytes,
        phases.tobytes(),
        labels.tobytes(),
        params_bytes,
    ):
        sink.write(chunk)
        written += len(chunk)
    return written


def _finite_json(record: dict) -> dict:
    # RFC 8259 has no Infinity/NaN; non-finite floats ride as strings and
    # ScenarioParams.from_dict coerces them back
    return {
        k: (v if not isinstance(v, float) or math.isfinite(v) else str(v))
        for k, v in record.items()
    }


def _read_exact(source: BinaryIO, n: int, what: str) -> bytes:
    data = source.read(n)
    if len(data) != n:
        raise TruncatedPayloadError(
            f"truncated payload: expected {n} bytes of {what}, got {len(data)}"
        )
    return data


def read_batch(source: BinaryIO) -> DatasetBatch:
    """Parse one container from the current stream position.

    The stream must be seekable when containers are concatenated: the params
    section is self-delimiting JSON and the cursor is rewound to its exact
    end so the next container can be read directly after.
    """
    magic = source.read(4)
    if len(magic) < 4:
        raise TruncatedPayloadError("truncated payload: stream ends inside the magic")
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    (hlen,) = struct.unpack("<I", _read_exact(source, 4, "header length"))
    try:
        header = json.loads(_read_exact(source, hlen, "header"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderMismatchError(f"header is not valid JSON: {exc}") from exc
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise HeaderMismatchError(f"header missing keys {missing}")
    if header["dtype"] != "f32":
        raise HeaderMismatchError(f"unsupported dtype {header['dtype']!r}")
    n_samples, n_bins, n_mics, n_classes = (int(header[k]) for k in ("B", "K", "M", "C"))
    if min(n_samples, n_bins, n_mics, n_classes) < 1:
        raise HeaderMismatchError("header dimensions must be positive")

    phase_bytes = _read_exact(source, n_samples * n_bins * n_mics * 4, "phases")
    phases = np.frombuffer(phase_bytes, dtype="<f4").reshape(n_samples, n_bins, n_mics)
    label_bytes = _read_exact(source, n_samples * 4, "labels")
    labels = np.frombuffer(label_bytes, dtype="<i4")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise HeaderMismatchError(
            f"labels outside [0, {n_classes}): min {labels.min()}, max {labels.max()}"
        )

    params = _read_params_array(source, n_samples)
    return DatasetBatch(
        phases=phases.copy(),
        labels=labels.astype(np.int32),
        params=params,
        master_seed=int(header["seed"]),
        batch_index=int(header["batch_index"]),
        config_hash=int(header["config_hash"]),
        n_classes=n_classes,
    )


def _read_params_array(source: BinaryIO, expected: int) -> list:
    decoder = json.JSONDecoder()
    buf = b""
    while True:
        chunk = source.read(_PARAMS_PROBE)
        buf += chunk
        try:
            obj, end = decoder.raw_decode(buf.decode("utf-8", errors="replace"))
            break
        except json.JSONDecodeError:
            if not chunk:
                raise TruncatedPayloadError("truncated payload: params array incomplete") from None
    if source.seekable():
        source.seek(end - len(buf), io.SEEK_CUR)
    if not isinstance(obj, list) or len(obj) != expected:
        raise HeaderMismatchError(
            f"params array has {len(obj) if isinstance(obj, list) else 'no'} entries, "
            f"header says {expected}"
        )
    try:
        return [ScenarioParams.from_dict(d) for d in obj]
    except (KeyError, TypeError) as exc:
        raise HeaderMismatchError(f"malformed params record: {exc}") from exc


def write_factors(factors: CoherenceFactors, sink: BinaryIO) -> int:
    """Dump coherence factors for inspection, in the container idiom:
    magic "PGF1" | u32 header length | JSON {"K","M","dtype":"f64"} | payload."""
    payload = np.ascontiguousarray(factors.factors, dtype="<f8")
    header = {"K": factors.n_bins, "M": factors.n_mics, "dtype": "f64"}
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    written = 0
    for chunk in (
        FACTORS_MAGIC,
        struct.pack("<I", len(header_bytes)),
        header_bytes,
        payload.tobytes(),
    ):
        sink.write(chunk)
        written += len(chunk)
    return written


def read_factors(source: BinaryIO) -> CoherenceFactors:
    magic = source.read(4)
    if len(magic) < 4:
        raise TruncatedPayloadError("truncated payload: stream ends inside the magic")
    if magic != FACTORS_MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {FACTORS_MAGIC!r}")
    (hlen,) = struct.unpack("<I", _read_exact(source, 4, "header length"))
    try:
        header = json.loads(_read_exact(source, hlen, "header"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderMismatchError(f"header is not valid JSON: {exc}") from exc
    if header.get("dtype") != "f64":
        raise HeaderMismatchError(f"unsupported dtype {header.get('dtype')!r}")
    n_bins, n_mics = int(header["K"]), int(header["M"])
    data = _read_exact(source, n_bins * n_mics * n_mics * 8, "factors")
    matrices = np.frombuffer(data, dtype="<f8").reshape(n_bins, n_mics, n_mics)
    return CoherenceFactors(factors=matrices.copy())


def iter_batches(stream: BinaryIO) -> Iterator[DatasetBatch]:
    """Yield concatenated containers from a seekable stream until EOF."""
    while True:
        probe = stream.read(1)
        if not probe:
            return
        stream.seek(-1, io.SEEK_CUR)
        yield read_batch(stream)


def read_batches(path: str | Path) -> Iterator[DatasetBatch]:
    """Yield every container from a file of one or more concatenated batches."""
    with open(path, "rb") as fh:
        yield from iter_batches(fh)


def stream_batches(
    config: GenerationConfig,
    master_seed: int,
    count: int | None = None,
    start_index: int = 0,
    workers: int | None = None,
) -> Iterator[DatasetBatch]:
    """Lazily generate batches with strictly increasing batch_index.

    Factorization happens once up front; memory use is independent of
    ``count`` (None streams forever).
    """
    factors = factorize(build_coherence(config.geom))
    index = start_index
    produced = 0
    while count is None or produced < count:
        yield gen_batch(
            master_seed,
            index,
            config.batch_size,
            config.dists,
            config.geom,
            factors,
            frames_per_scenario=config.frames_per_scenario,
            workers=workers,
        )
        index += 1
        produced += 1
