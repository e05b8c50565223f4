"""Monte Carlo sample generation.

One sample is produced from an independent, deterministically derived random
stream keyed by (master_seed, batch_index, sample_index), so any sub-range
of a run can be regenerated bit-identically, out of order, and in parallel.

Draw order within a sample's stream is fixed: class angle, distance, SNR,
DRR, then the reverberation, source and noise variates.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coherence import CoherenceFactors
from .config import GenerationConfig, ScenarioDistributions
from .geometry import ArrayGeometry, direct_distances, source_position
from .phasemap import extract_phase
from .rtf import complex_normal, gen_rtf


def ratio_db_to_variance(ratio_db: float) -> float:
    """Map a dB power ratio (DRR or SNR) to the variance of the weaker part."""
    return 10.0 ** (-float(ratio_db) / 10.0)


@dataclass(frozen=True)
class ScenarioParams:
    """One scenario draw plus the variances derived from it."""

    theta_deg: float
    class_index: int
    r: float
    snr_db: float
    drr_db: float
    rev_var: float
    noise_var: float

    @classmethod
    def from_draw(
        cls, theta_deg: float, class_index: int, r: float, snr_db: float, drr_db: float
    ) -> "ScenarioParams":
        return cls(
            theta_deg=float(theta_deg),
            class_index=int(class_index),
            r=float(r),
            snr_db=float(snr_db),
            drr_db=float(drr_db),
            rev_var=ratio_db_to_variance(drr_db),
            noise_var=ratio_db_to_variance(snr_db),
        )

    def to_dict(self) -> dict:
        return {
            "theta_deg": self.theta_deg,
            "class_index": self.class_index,
            "r": self.r,
            "snr_db": self.snr_db,
            "drr_db": self.drr_db,
            "rev_var": self.rev_var,
            "noise_var": self.noise_var,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioParams":
        # non-finite dB values travel through JSON as strings ("inf", "-inf")
        return cls(
            theta_deg=float(d["theta_deg"]),
            class_index=int(d["class_index"]),
            r=float(d["r"]),
            snr_db=float(d["snr_db"]),
            drr_db=float(d["drr_db"]),
            rev_var=float(d["rev_var"]),
            noise_var=float(d["noise_var"]),
        )


def _draw_uniform(rng: np.random.Generator, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    if lo == hi:
        # pin degenerate ranges exactly; also admits +inf dB (variance 0)
        return lo
    return float(rng.uniform(lo, hi))


def sample_params(rng: np.random.Generator, dists: ScenarioDistributions) -> ScenarioParams:
    """Draw one scenario: uniform class angle, then uniform r, SNR, DRR."""
    class_index = int(rng.integers(dists.n_classes))
    theta = float(dists.theta_classes[class_index])
    r = _draw_uniform(rng, dists.r_range)
    snr_db = _draw_uniform(rng, dists.snr_range_db)
    drr_db = _draw_uniform(rng, dists.drr_range_db)
    return ScenarioParams.from_draw(theta, class_index, r, snr_db, drr_db)


def gen_sample(
    rng: np.random.Generator,
    params: ScenarioParams,
    geom: ArrayGeometry,
    factors: CoherenceFactors,
) -> np.ndarray:
    """Compose one frame of microphone signals, shape (n_bins, M) complex.

    Y = X * H + N with a unit-variance complex Gaussian source X(k), the
    transfer function H from gen_rtf, and additive complex Gaussian noise of
    variance ``params.noise_var``, all independent across bins.
    """
    s = source_position(params.theta_deg, params.r)
    h = gen_rtf(rng, factors, params.rev_var, geom, s)
    x = complex_normal(rng, (geom.n_bins,))
    n = complex_normal(rng, (geom.n_bins, geom.n_mics), params.noise_var)
    return x[:, None] * h + n


def sample_rng(master_seed: int, batch_index: int, sample_index: int) -> np.random.Generator:
    """The random stream owned by one sample of one batch."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(batch_index, sample_index))
    return np.random.default_rng(ss)


@dataclass
class DatasetBatch:
    """A generated minibatch plus the provenance needed to regenerate it."""

    phases: np.ndarray  # (B, n_bins, M) float32 radians
    labels: np.ndarray  # (B,) int32 class indices
    params: list
    master_seed: int
    batch_index: int
    config_hash: int
    n_classes: int

    @property
    def batch_size(self) -> int:
        return self.phases.shape[0]


# samples crunched per vectorized step; bounds working memory (~60 MB at
# the default 256 x 4 spectral size)
_CRUNCH_CHUNK = 1024


def gen_batch(
    master_seed: int,
    batch_index: int,
    batch_size: int,
    dists: ScenarioDistributions,
    geom: ArrayGeometry,
    factors: CoherenceFactors,
    frames_per_scenario: int = 1,
    workers: int | None = None,
) -> DatasetBatch:
    """Generate one batch of phase-map samples with labels and parameters.

    Samples are grouped into runs of ``frames_per_scenario`` consecutive
    frames sharing one parameter draw (taken from the stream of the first
    frame in the run); signal variates are always fresh per frame. The
    default of 1 gives fully independent samples.

    Variates are drawn per sample from that sample's own stream, then the
    mixing, composition and phase extraction run as chunked array ops (the
    parts that release the GIL, which is what lets ``workers`` threads
    overlap). The output is bit-identical for any worker count and matches
    gen_sample applied stream-by-stream.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if frames_per_scenario < 1:
        raise ValueError("frames_per_scenario must be >= 1")
    cfg = GenerationConfig(
        geom=geom, dists=dists, batch_size=batch_size, frames_per_scenario=frames_per_scenario
    )

    phases = np.empty((batch_size, geom.n_bins, geom.n_mics), dtype=np.float32)
    labels = np.empty(batch_size, dtype=np.int32)
    params_out: list = [None] * batch_size

    def scenario_at(run_start: int, cache: dict) -> tuple:
        # params live at the start of each run; non-start frames replay just
        # the parameter draws of the run-start stream
        params = cache.get(run_start)
        if params is None:
            params = sample_params(sample_rng(master_seed, batch_index, run_start), dists)
            cache[run_start] = params
        return params

    def fill_chunk(lo: int, hi: int) -> None:
        n = hi - lo
        n_bins, n_mics = geom.n_bins, geom.n_mics
        normals_rev = np.empty((n, 2, n_bins, n_mics))
        normals_src = np.empty((n, 2, n_bins))
        normals_noise = np.empty((n, 2, n_bins, n_mics))
        rev_var = np.empty(n)
        noise_var = np.empty(n)
        mic_dists = np.empty((n, n_mics))
        cache: dict = {}
        for i, b in enumerate(range(lo, hi)):
            run_start = (b // frames_per_scenario) * frames_per_scenario
            if b == run_start:
                rng = sample_rng(master_seed, batch_index, b)
                params = sample_params(rng, dists)
                cache[run_start] = params
            else:
                params = scenario_at(run_start, cache)
                rng = sample_rng(master_seed, batch_index, b)
            rng.standard_normal(out=normals_rev[i])
            rng.standard_normal(out=normals_src[i])
            rng.standard_normal(out=normals_noise[i])
            labels[b] = params.class_index
            params_out[b] = params
            rev_var[i] = params.rev_var
            noise_var[i] = params.noise_var
            s = source_position(params.theta_deg, params.r)
            mic_dists[i] = direct_distances(geom, s)

        z = np.sqrt(0.5) * (normals_rev[:, 0] + 1j * normals_rev[:, 1])
        h = np.einsum("kij,nkj->nki", factors.factors, z)
        h *= np.sqrt(rev_var)[:, None, None]
        phi_dir = geom.bin_numbers[None, :, None] * mic_dists[:, None, :] * geom.phase_slope()
        h += np.exp(-1j * phi_dir)
        x = np.sqrt(0.5) * (normals_src[:, 0] + 1j * normals_src[:, 1])
        y = x[:, :, None] * h
        y += np.sqrt(noise_var / 2.0)[:, None, None] * (
            normals_noise[:, 0] + 1j * normals_noise[:, 1]
        )
        phases[lo:hi] = extract_phase(y)

    def fill_span(lo: int, hi: int) -> None:
        for chunk_lo in range(lo, hi, _CRUNCH_CHUNK):
            fill_chunk(chunk_lo, min(chunk_lo + _CRUNCH_CHUNK, hi))

    n_workers = workers if workers is not None else (os.cpu_count() or 1)
    n_workers = max(1, min(n_workers, batch_size))
    if n_workers == 1:
        fill_span(0, batch_size)
    else:
        per_worker = -(-batch_size // n_workers)
        spans = [
            (lo, min(lo + per_worker, batch_size))
            for lo in range(0, batch_size, per_worker)
        ]
        with ThreadPoolExecutor(max_workers=len(spans)) as pool:
            futures = [pool.submit(fill_span, lo, hi) for lo, hi in spans]
            for fut in futures:
                fut.result()

    return DatasetBatch(
        phases=phases,
        labels=labels,
        params=params_out,
        master_seed=int(master_seed),
        batch_index=int(batch_index),
        config_hash=cfg.digest(),
        n_classes=dists.n_classes,
    )
