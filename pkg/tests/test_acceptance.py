"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Monte Carlo criteria run at fixed seeds, so every number below reproduces
bit-for-bit; tolerances are derived from draw counts, not tuned.
"""

import hashlib
import io
import math
import time

import numpy as np
import pytest

from phasegen import (
    DatasetBatch,
    ScenarioDistributions,
    ScenarioParams,
    block_decision,
    build_coherence,
    build_steering,
    check_variances,
    complex_normal,
    default_ula,
    estimate_coherence,
    factorize,
    gen_batch,
    gen_sample,
    metrics,
    read_batch,
    sample_params,
    sample_rng,
    srp_phase,
    write_batch,
)
from phasegen.cli import main
from phasegen.config import class_grid
from phasegen.srp import DoaDecision

CLASSES = class_grid(0.0, 5.0, 180.0)

# Block-level PACC50 measured by the first calibration run of the phase-only
# steered-response check under the training condition (DRR U(-9,0) dB,
# SNR U(0,30) dB, r U(1,3) m, r_ref 2 m): 200 blocks x 50 frames at
# CALIBRATION_SEED gave 0.985. Regression tolerance: 2 percentage points.
CALIBRATED_BLOCK_PACC50 = 0.985
CALIBRATION_SEED = 20240
REGRESSION_TOLERANCE = 0.02


def report(num: int, description: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    suffix = f" | {detail}" if detail else ""
    print(f"criterion {num:2d}: {status} - {description}{suffix}")
    assert passed, f"criterion {num} failed: {description}{suffix}"


@pytest.fixture(scope="module")
def geom():
    return default_ula()


@pytest.fixture(scope="module")
def factors(geom):
    return factorize(build_coherence(geom))


def test_criterion_1_variance_mapping_exact():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        drr = float(rng.uniform(-30.0, 30.0))
        snr = float(rng.uniform(-30.0, 30.0))
        p = ScenarioParams.from_draw(45.0, 9, 2.0, snr, drr)
        for got, x in ((p.rev_var, drr), (p.noise_var, snr)):
            expected = 10.0 ** (-x / 10.0)
            ulps = abs(got - expected) / math.ulp(expected)
            worst = max(worst, ulps)
    elapsed = time.perf_counter() - t0
    report(
        1,
        "DRR/SNR to variance mapping exact to <= 1 ulp over 1000 pairs",
        worst <= 1.0 and elapsed < 1.0,
        f"worst {worst:.1f} ulp, {elapsed * 1e3:.0f} ms",
    )


def test_criterion_2_coherence_convergence(geom, factors):
    n = 100_000
    bins = (1, 64, 128, 256)
    t0 = time.perf_counter()
    est = estimate_coherence(geom, n, bins=bins, seed=7, factors=factors)
    worst = 0.0
    for b, k in enumerate(bins):
        for i in range(geom.n_mics):
            for j in range(geom.n_mics):
                if i == j:
                    continue
                x = geom.pair_dists[i, j] / geom.c * math.pi * geom.fs * k / geom.n_bins
                target = math.sin(x) / x if x != 0.0 else 1.0
                worst = max(worst, abs(est.values[b, i, j] - target))
    elapsed = time.perf_counter() - t0
    report(
        2,
        "sample coherence within 0.011 of the sinc law (4 bins, all pairs, n=1e5)",
        worst <= 0.011 and elapsed < 30.0,
        f"worst |dev| {worst:.5f}, {elapsed:.1f} s",
    )


def test_criterion_3_factorization_fidelity(geom):
    t0 = time.perf_counter()
    coh = build_coherence(geom)
    fac = factorize(coh)
    # independent PSD projection of the symmetrized coherence
    sym = 0.5 * (coh.gammas + np.transpose(coh.gammas, (0, 2, 1)))
    w, v = np.linalg.eigh(sym)
    projected = np.einsum("kij,kj,klj->kil", v, np.clip(w, 0.0, None), v)
    errs = np.linalg.norm(fac.gram() - projected, axis=(1, 2))
    elapsed = time.perf_counter() - t0
    report(
        3,
        "factor reconstruction error <= 1e-8 over all 256 bins (incl. k=1)",
        float(errs.max()) <= 1e-8 and elapsed < 1.0,
        f"max {errs.max():.2e} at k={int(np.argmax(errs)) + 1}, err(k=1) {errs[0]:.2e}, "
        f"{elapsed * 1e3:.0f} ms",
    )


def test_criterion_4_circular_symmetry(geom, factors):
    n = 100_000
    bins = (1, 128, 256)
    idx = np.asarray(bins) - 1
    rng = np.random.default_rng(42)
    z = complex_normal(rng, (n, len(bins), geom.n_mics))
    h = np.einsum("kij,nkj->nki", factors.factors[idx], z)
    pseudo = np.abs(np.mean(h**2, axis=0))  # per (bin, mic), rev_var = 1
    worst = float(pseudo.max())
    report(
        4,
        "pseudo-variance |E[H_rev^2]| <= 0.011 at n=1e5 for 3 bins",
        worst <= 0.011,
        f"worst {worst:.5f} over bins {bins}",
    )


def test_criterion_5_variance_calibration(geom, factors):
    results = check_variances(
        geom,
        dists=ScenarioDistributions(),
        n_draws=100_000,
        n_param_draws=5,
        seed=5,
        factors=factors,
    )
    bad = [r for r in results if not r.passed]
    worst = max(abs(r.estimate - r.target) / r.tolerance for r in results)
    report(
        5,
        "E|X|^2, E|N|^2, E|H_rev|^2 within 3-sigma bounds (5 scenario draws, n=1e5)",
        not bad,
        f"{len(results)} checks, worst deviation {worst:.2f} of tolerance",
    )


def test_criterion_6_oracle_matched_case(geom, factors):
    table = build_steering(geom, CLASSES, r_ref=2.0)
    t0 = time.perf_counter()
    decisions, truths = [], []
    for c, theta in enumerate(CLASSES):
        params = ScenarioParams.from_draw(float(theta), c, 2.0, math.inf, math.inf)
        for seed in range(20):
            y = gen_sample(sample_rng(seed, 0, c), params, geom, factors)
            decisions.append(srp_phase(y, table))
            truths.append(float(theta))
    m = metrics(decisions, truths)
    elapsed = time.perf_counter() - t0
    report(
        6,
        "matched noise-free frames classify perfectly (37 classes x 20 seeds)",
        m["pacc"] == 1.0 and elapsed < 10.0,
        f"PACC {m['pacc']:.4f} over {len(decisions)} frames, {elapsed:.1f} s",
    )


def test_criterion_7_oracle_realistic_case(geom, factors):
    dists = ScenarioDistributions()  # the training condition
    table = build_steering(geom, CLASSES, r_ref=2.0)
    decisions, truths = [], []
    for t in range(200):
        rng = sample_rng(CALIBRATION_SEED, t, 0)
        params = sample_params(rng, dists)
        frames = []
        for n in range(50):
            frame_rng = rng if n == 0 else sample_rng(CALIBRATION_SEED, t, n)
            frames.append(srp_phase(gen_sample(frame_rng, params, geom, factors), table))
        decisions.append(block_decision(frames))
        truths.append(params.theta_deg)
    m = metrics(decisions, truths)
    floor = CALIBRATED_BLOCK_PACC50 - REGRESSION_TOLERANCE
    report(
        7,
        "block-level PACC50 under the training condition meets the calibrated floor",
        m["pacc"] >= floor,
        f"PACC50 {m['pacc']:.4f} vs calibrated {CALIBRATED_BLOCK_PACC50:.4f} "
        f"(floor {floor:.4f}), MAE50 {m['mae']:.2f} deg",
    )


def test_criterion_8_generation_determinism(tmp_path):
    digests = []
    for run in ("a", "b"):
        out = tmp_path / run
        code = main(
            [
                "generate",
                "--batches", "8",
                "--batch-size", "512",
                "--seed", "42",
                "--out", str(out),
            ]
        )
        assert code == 0
        files = sorted(out.glob("*.pgd1"))
        assert len(files) == 8
        digests.append([hashlib.sha256(f.read_bytes()).hexdigest() for f in files])
    report(
        8,
        "two generate runs (8 x 512, seed 42) are byte-identical",
        digests[0] == digests[1],
        f"first file sha256 {digests[0][0][:16]}...",
    )


def test_criterion_9_roundtrip_identity():
    rng = np.random.default_rng(909)
    failures = 0
    for _ in range(100):
        n_samples = int(rng.integers(1, 9))
        n_bins = int(rng.integers(1, 33))
        n_mics = int(rng.integers(2, 6))
        n_classes = int(rng.integers(1, 40))
        params = [
            ScenarioParams.from_draw(
                float(rng.uniform(0, 180)), int(rng.integers(n_classes)),
                float(rng.uniform(0.1, 5)), float(rng.uniform(-20, 40)),
                float(rng.uniform(-20, 10)),
            )
            for _ in range(n_samples)
        ]
        batch = DatasetBatch(
            phases=rng.uniform(-np.pi, np.pi, (n_samples, n_bins, n_mics)).astype(np.float32),
            labels=np.array([p.class_index for p in params], dtype=np.int32),
            params=params,
            master_seed=int(rng.integers(2**63)),
            batch_index=int(rng.integers(2**31)),
            config_hash=int(rng.integers(2**64, dtype=np.uint64)),
            n_classes=n_classes,
        )
        sink = io.BytesIO()
        write_batch(batch, sink)
        sink.seek(0)
        back = read_batch(sink)
        same = (
            np.array_equal(back.phases, batch.phases)
            and np.array_equal(back.labels, batch.labels)
            and back.params == batch.params
            and back.master_seed == batch.master_seed
            and back.batch_index == batch.batch_index
            and back.config_hash == batch.config_hash
        )
        failures += not same
    report(9, "write/read round-trip is the identity on 100 random batches", failures == 0)


def test_criterion_10_throughput(geom, factors):
    dists = ScenarioDistributions()
    gen_batch(0, 0, 64, dists, geom, factors)  # warm-up
    t0 = time.perf_counter()
    factors_timed = factorize(build_coherence(geom))
    factorize_ms = 1e3 * (time.perf_counter() - t0)
    t0 = time.perf_counter()
    gen_batch(0, 0, 512, dists, geom, factors_timed)
    batch_ms = 1e3 * (time.perf_counter() - t0)
    report(
        10,
        "default minibatch (512 x 256 x 4) generated in < 500 ms after factorization",
        batch_ms < 500.0,
        f"batch {batch_ms:.0f} ms ({512 / (batch_ms / 1e3):.0f} samples/s), "
        f"one-time factorization {factorize_ms:.1f} ms",
    )


def test_criterion_11_metric_definitions():
    def dec(theta: float) -> DoaDecision:
        return DoaDecision(scores=np.ones(37), argmax_class=0, est_theta=theta)

    exactly_5 = metrics([dec(50.0), dec(10.0)], [45.0, 5.0])
    just_over = metrics([dec(50.1)], [45.0])
    perfect = metrics([dec(90.0)], [90.0])
    mixed = metrics([dec(0.0), dec(10.0)], [0.0, 0.0])
    ok = (
        exactly_5 == {"mae": 5.0, "pacc": 1.0}
        and just_over["pacc"] == 0.0
        and perfect == {"mae": 0.0, "pacc": 1.0}
        and mixed == {"mae": 5.0, "pacc": 0.5}
    )
    report(
        11,
        "PACC boundary inclusive at 5 deg; MAE/PACC worked examples hold",
        ok,
        f"boundary pacc {exactly_5['pacc']}, 5.1-deg pacc {just_over['pacc']}",
    )
