"""Phase-only steered-response-power scoring.

A classical frequency-domain DOA estimator used to certify that generated
phase maps actually encode their class labels. The score steers unit
phasors of the observed phases against direct-path steering vectors for
every candidate class; magnitudes are discarded on purpose so that the
check consumes exactly the exported feature.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby
from typing import Iterable, Sequence

import numpy as np

from .generator import DatasetBatch
from .geometry import ArrayGeometry, direct_phases, source_position
from .phasemap import PhaseMapSample

DEFAULT_STEERING_DISTANCE = 2.0
PACC_TOLERANCE_DEG = 5.0


@dataclass(frozen=True)
class SteeringTable:
    """Unit-modulus steering phasors, shape (C, n_bins, M)."""

    vectors: np.ndarray
    classes_deg: np.ndarray
    r_ref: float

    def __post_init__(self) -> None:
        v = np.asarray(self.vectors)
        c = np.asarray(self.classes_deg, dtype=np.float64)
        if v.ndim != 3 or v.shape[0] != c.size:
            raise ValueError("vectors must have shape (C, n_bins, M)")
        v.flags.writeable = False
        c.flags.writeable = False
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "classes_deg", c)

    @property
    def n_classes(self) -> int:
        return self.classes_deg.size


@dataclass(frozen=True)
class DoaDecision:
    """Per-class scores with the winning class (ties break to lowest index)."""

    scores: np.ndarray
    argmax_class: int
    est_theta: float
    classes_deg: np.ndarray | None = None


def build_steering(
    geom: ArrayGeometry,
    classes_deg: Sequence[float] | np.ndarray,
    r_ref: float = DEFAULT_STEERING_DISTANCE,
) -> SteeringTable:
    """Direct-path steering phasors exp(-j phi_dir) for each candidate angle."""
    classes = np.asarray(classes_deg, dtype=np.float64)
    if classes.size == 0:
        raise ValueError("classes_deg must be nonempty")
    vectors = np.empty((classes.size, geom.n_bins, geom.n_mics), dtype=np.complex128)
    for c, theta in enumerate(classes):
        vectors[c] = np.exp(-1j * direct_phases(geom, source_position(theta, r_ref)))
    return SteeringTable(vectors=vectors, classes_deg=classes, r_ref=float(r_ref))


def _as_phases(sample: np.ndarray | PhaseMapSample) -> np.ndarray:
    if isinstance(sample, PhaseMapSample):
        return np.asarray(sample.phi, dtype=np.float64)
    arr = np.asarray(sample)
    if np.iscomplexobj(arr):
        return np.angle(arr)
    return arr.astype(np.float64, copy=False)


def srp_phase(sample: np.ndarray | PhaseMapSample, table: SteeringTable) -> DoaDecision:
    """Score every candidate class against one frame.

    ``sample`` is either a complex (n_bins, M) microphone-signal matrix
    (phases are extracted) or an already extracted phase map. The score for
    class c is the power of the coherently steered sum, accumulated over
    bins: sum_k |sum_i exp(j phi[k, i]) * conj(a_c[k, i])|^2.
    """
    phases = _as_phases(sample)
    if phases.shape != table.vectors.shape[1:]:
        raise ValueError(
            f"sample shape {phases.shape} does not match steering table {table.vectors.shape[1:]}"
        )
    phasors = np.exp(1j * phases)
    steered = np.einsum("km,ckm->ck", phasors, np.conj(table.vectors))
    scores = np.sum(np.abs(steered) ** 2, axis=1)
    best = int(np.argmax(scores))
    return DoaDecision(
        scores=scores,
        argmax_class=best,
        est_theta=float(table.classes_deg[best]),
        classes_deg=table.classes_deg,
    )


def block_decision(decisions: Sequence[DoaDecision]) -> DoaDecision:
    """Fuse frame decisions by averaging their normalized score vectors."""
    if len(decisions) == 0:
        raise ValueError("cannot fuse an empty list of decisions")
    n_classes = decisions[0].scores.size
    acc = np.zeros(n_classes, dtype=np.float64)
    classes = None
    for d in decisions:
        if d.scores.size != n_classes:
            raise ValueError("decisions disagree on the number of classes")
        total = d.scores.sum()
        acc += d.scores / total if total > 0 else np.full(n_classes, 1.0 / n_classes)
        if classes is None and d.classes_deg is not None:
            classes = d.classes_deg
    acc /= len(decisions)
    best = int(np.argmax(acc))
    theta = float(classes[best]) if classes is not None else float("nan")
    return DoaDecision(scores=acc, argmax_class=best, est_theta=theta, classes_deg=classes)


def metrics(
    decisions: Sequence[DoaDecision], truths_deg: Iterable[float]
) -> dict[str, float]:
    """Mean absolute error (degrees) and pseudo-accuracy at the 5 deg bound.

    An estimate counts as correct when |estimate - truth| <= 5 degrees
    (boundary inclusive).
    """
    truths = np.asarray(list(truths_deg), dtype=np.float64)
    if len(decisions) != truths.size:
        raise ValueError(f"{len(decisions)} decisions vs {truths.size} truths")
    if truths.size == 0:
        raise ValueError("metrics need at least one decision")
    est = np.array([d.est_theta for d in decisions], dtype=np.float64)
    err = np.abs(est - truths)
    return {
        "mae": float(np.mean(err)),
        "pacc": float(np.mean(err <= PACC_TOLERANCE_DEG)),
    }


def evaluate_batches(
    batches: Sequence[DatasetBatch],
    geom: ArrayGeometry,
    classes_deg: Sequence[float] | np.ndarray,
    r_ref: float = DEFAULT_STEERING_DISTANCE,
    block_size: int = 50,
    include_records: bool = False,
) -> tuple[dict[str, float], list[dict]]:
    """Frame-level and block-level oracle metrics over a dataset.

    Frames are scored one by one; for the block level, runs of consecutive
    frames sharing identical scenario parameters are chunked into blocks of
    up to ``block_size`` and fused with block_decision. Datasets without
    repeated parameters degenerate to single-frame blocks.

    Returns the metrics dict {mae, pacc, mae50, pacc50, n_frames, n_blocks}
    and, when requested, one record {class_true, class_est, scores} per frame.
    """
    table = build_steering(geom, classes_deg, r_ref)
    decisions: list[DoaDecision] = []
    truths: list[float] = []
    all_params: list = []
    records: list[dict] = []
    for batch in batches:
        for i in range(batch.batch_size):
            d = srp_phase(batch.phases[i], table)
            decisions.append(d)
            truths.append(batch.params[i].theta_deg)
            all_params.append(batch.params[i])
            if include_records:
                records.append(
                    {
                        "class_true": int(batch.labels[i]),
                        "class_est": d.argmax_class,
                        "scores": [float(s) for s in d.scores],
                    }
                )
    frame = metrics(decisions, truths)

    block_decisions: list[DoaDecision] = []
    block_truths: list[float] = []
    pos = 0
    for params, group in groupby(all_params):
        run = len(list(group))
        for lo in range(pos, pos + run, block_size):
            hi = min(lo + block_size, pos + run)
            block_decisions.append(block_decision(decisions[lo:hi]))
            block_truths.append(params.theta_deg)
        pos += run
    blocks = metrics(block_decisions, block_truths)

    report = {
        "mae": frame["mae"],
        "pacc": frame["pacc"],
        "mae50": blocks["mae"],
        "pacc50": blocks["pacc"],
        "n_frames": float(len(decisions)),
        "n_blocks": float(len(block_decisions)),
    }
    return report, records
