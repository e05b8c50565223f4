"""Statistical validation of the generator against its declared laws.

Every check is a Monte Carlo estimate compared against an analytical target
with a tolerance derived from the draw count (3-sigma for variance-type
estimators, 3.3/sqrt(n) for null correlations), never a magic number. All
checks are deterministic given the seed: a failure reproduces bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherence import CoherenceFactors, build_coherence, coherence_matrix, factorize
from .config import ScenarioDistributions
from .generator import sample_params
from .geometry import ArrayGeometry
from .rtf import complex_normal

NULL_CORRELATION_SIGMA = 3.3
VARIANCE_SIGMA = 3.0

# Fixed stream tags so the individual checks stay decoupled.
_COHERENCE_STREAM = 1
_VARIANCE_STREAM = 2
_INDEPENDENCE_STREAM = 3


def _check_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


@dataclass(frozen=True)
class CheckResult:
    check: str
    target: float
    estimate: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "target": self.target,
            "estimate": self.estimate,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class SuiteReport:
    checks: list[CheckResult]
    n_draws: int
    seed: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_draws": self.n_draws,
            "seed": self.seed,
            "checks": [c.to_dict() for c in self.checks],
        }

    def summary_lines(self) -> list[str]:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(
                f"[{status}] {c.check}: estimate {c.estimate:+.6f} vs target "
                f"{c.target:+.6f} (tol {c.tolerance:.6f})"
            )
        overall = "PASS" if self.passed else "FAIL"
        lines.append(f"[{overall}] {len(self.checks)} checks, n_draws={self.n_draws}")
        return lines


@dataclass(frozen=True)
class CoherenceEstimate:
    """Sample coherence of the reverberant part at selected bins.

    ``values[b, i, j]`` is the normalized cross-moment between mics i and j
    at bin ``bins[b]``; Hermitian with a unit diagonal by construction.
    """

    values: np.ndarray
    bins: tuple[int, ...]
    n_draws: int


def estimate_coherence(
    geom: ArrayGeometry,
    n_draws: int,
    bins: tuple[int, ...] | None = None,
    seed: int = 0,
    factors: CoherenceFactors | None = None,
) -> CoherenceEstimate:
    """Empirical spatial coherence from independent reverberation draws.

    Bins are 1-based; by default a small spread over the band is probed.
    Only the requested bins are drawn (bins are independent by model), which
    keeps n_draws = 1e5 cheap.
    """
    if n_draws < 100:
        raise ValueError("need at least 100 draws for a coherence estimate")
    if factors is None:
        factors = factorize(build_coherence(geom))
    if bins is None:
        bins = default_probe_bins(geom.n_bins)
    idx = np.asarray(bins, dtype=np.int64) - 1
    if np.any(idx < 0) or np.any(idx >= geom.n_bins):
        raise ValueError(f"probe bins {bins} outside 1..{geom.n_bins}")

    rng = _check_rng(seed, _COHERENCE_STREAM)
    z = complex_normal(rng, (n_draws, len(bins), geom.n_mics))
    h = np.einsum("kij,nkj->nki", factors.factors[idx], z)
    cross = np.einsum("nki,nkj->kij", h, np.conj(h))
    power = np.real(np.einsum("kii->ki", cross))
    denom = np.sqrt(power[:, :, None] * power[:, None, :])
    values = cross / denom
    # self-coherence is 1 by definition; don't leave it to sqrt rounding
    values[:, range(geom.n_mics), range(geom.n_mics)] = 1.0
    return CoherenceEstimate(values=values, bins=tuple(int(b) for b in bins), n_draws=n_draws)


def default_probe_bins(n_bins: int) -> tuple[int, ...]:
    """A low bin, two mid-band bins and the top bin, deduplicated."""
    candidates = (1, max(1, n_bins // 4), max(1, n_bins // 2), n_bins)
    return tuple(sorted(set(candidates)))


def check_coherence(
    geom: ArrayGeometry,
    n_draws: int = 100_000,
    bins: tuple[int, ...] | None = None,
    seed: int = 0,
    factors: CoherenceFactors | None = None,
) -> list[CheckResult]:
    """Compare sample coherence against the sinc law for every mic pair.

    The pass criterion bounds the complex deviation |estimate - target|;
    the recorded estimate is the real part (the target is real).
    """
    if bins is None:
        bins = default_probe_bins(geom.n_bins)
    est = estimate_coherence(geom, n_draws, bins=bins, seed=seed, factors=factors)
    targets = coherence_matrix(geom, np.asarray(bins, dtype=np.float64))
    tol = NULL_CORRELATION_SIGMA / math.sqrt(n_draws)
    results = []
    for b, k in enumerate(est.bins):
        for i in range(geom.n_mics):
            for j in range(i + 1, geom.n_mics):
                dev = abs(est.values[b, i, j] - targets[b, i, j])
                results.append(
                    CheckResult(
                        check=f"coherence[k={k},mics=({i + 1},{j + 1})]",
                        target=float(targets[b, i, j]),
                        estimate=float(np.real(est.values[b, i, j])),
                        tolerance=tol,
                        passed=bool(dev <= tol),
                    )
                )
    return results


def check_variances(
    geom: ArrayGeometry,
    dists: ScenarioDistributions | None = None,
    n_draws: int = 100_000,
    n_param_draws: int = 5,
    seed: int = 0,
    factors: CoherenceFactors | None = None,
    probe_bin: int = 1,
) -> list[CheckResult]:
    """Verify the empirical powers of source, noise and reverberation.

    E|X|^2 must sit within 3 sigma of 1 and, for each sampled scenario,
    E|N|^2 and E|H_rev|^2 within 3 sigma of their configured variances
    (|CN(0, v)|^2 is exponential, so the estimator sigma is v/sqrt(n)).
    """
    if dists is None:
        dists = ScenarioDistributions()
    if factors is None:
        factors = factorize(build_coherence(geom))
    rng = _check_rng(seed, _VARIANCE_STREAM)
    results = []

    x = complex_normal(rng, (n_draws,))
    results.append(_variance_check("source_power", np.mean(np.abs(x) ** 2), 1.0, n_draws))

    mix = factors.factors[probe_bin - 1]
    for p in range(n_param_draws):
        params = sample_params(rng, dists)
        noise = complex_normal(rng, (n_draws,), params.noise_var)
        results.append(
            _variance_check(
                f"noise_power[draw={p},snr={params.snr_db:.2f}dB]",
                np.mean(np.abs(noise) ** 2),
                params.noise_var,
                n_draws,
            )
        )
        z = complex_normal(rng, (n_draws, geom.n_mics))
        h_rev = math.sqrt(params.rev_var) * z @ mix.T
        results.append(
            _variance_check(
                f"reverb_power[draw={p},drr={params.drr_db:.2f}dB,k={probe_bin}]",
                np.mean(np.abs(h_rev) ** 2),
                params.rev_var,
                n_draws,
            )
        )
    return results


def _variance_check(name: str, estimate: float, target: float, n: int) -> CheckResult:
    tol = VARIANCE_SIGMA * target / math.sqrt(n)
    return CheckResult(
        check=name,
        target=float(target),
        estimate=float(estimate),
        tolerance=tol,
        passed=bool(abs(estimate - target) <= tol),
    )


def default_bin_pairs(n_bins: int) -> tuple[tuple[int, int], ...]:
    pairs = ((1, 2), (1, n_bins // 2), (n_bins // 2 - 1, n_bins // 2))
    return tuple(p for p in pairs if p[0] >= 1 and p[1] <= n_bins and p[0] != p[1])


def check_bin_independence(
    geom: ArrayGeometry,
    n_draws: int = 100_000,
    seed: int = 0,
    bin_pairs: tuple[tuple[int, int], ...] | None = None,
    factors: CoherenceFactors | None = None,
    block: int = 2048,
) -> list[CheckResult]:
    """Cross-bin correlations and per-bin pseudo-variances of X, N, H_rev.

    Full-width (all bins) variates are drawn through the same mixing path
    the generator uses, in blocks, and only the probed bins are accumulated.
    Independence across bins means every cross-bin correlation is bounded by
    3.3/sqrt(n); circular symmetry means the normalized pseudo-variance
    |E[A^2]| / E[|A|^2] obeys the same bound.
    """
    if factors is None:
        factors = factorize(build_coherence(geom))
    if bin_pairs is None:
        bin_pairs = default_bin_pairs(geom.n_bins)
    probe = sorted({k for pair in bin_pairs for k in pair})
    for k in probe:
        if not 1 <= k <= geom.n_bins:
            raise ValueError(f"probe bin {k} outside 1..{geom.n_bins}")
    idx = {k: i for i, k in enumerate(probe)}
    sel = np.asarray(probe) - 1

    rng = _check_rng(seed, _INDEPENDENCE_STREAM)
    quantities = ("source", "noise", "reverb")
    n_probe = len(probe)
    cross = {q: np.zeros((len(bin_pairs),), dtype=np.complex128) for q in quantities}
    power = {q: np.zeros((n_probe,), dtype=np.float64) for q in quantities}
    # reverb pseudo-variance is tracked per mic; source/noise per probed bin
    pseudo = {q: np.zeros((n_probe,), dtype=np.complex128) for q in ("source", "noise")}
    pseudo_rev = np.zeros((n_probe, geom.n_mics), dtype=np.complex128)
    power_rev = np.zeros((n_probe, geom.n_mics), dtype=np.float64)

    done = 0
    while done < n_draws:
        b = min(block, n_draws - done)
        x = complex_normal(rng, (b, geom.n_bins))
        noise = complex_normal(rng, (b, geom.n_bins, geom.n_mics))
        z = complex_normal(rng, (b, geom.n_bins, geom.n_mics))
        h = np.einsum("kij,bkj->bki", factors.factors, z)

        probes = {"source": x[:, sel], "noise": noise[:, sel, 0], "reverb": h[:, sel, 0]}
        for q, arr in probes.items():
            power[q] += np.sum(np.abs(arr) ** 2, axis=0)
            for pi, (ka, kb) in enumerate(bin_pairs):
                cross[q][pi] += np.vdot(arr[:, idx[kb]], arr[:, idx[ka]])
        for q in ("source", "noise"):
            pseudo[q] += np.sum(probes[q] ** 2, axis=0)
        h_sel = h[:, sel, :]
        pseudo_rev += np.sum(h_sel**2, axis=0)
        power_rev += np.sum(np.abs(h_sel) ** 2, axis=0)
        done += b

    tol = NULL_CORRELATION_SIGMA / math.sqrt(n_draws)
    results = []
    for q in quantities:
        for pi, (ka, kb) in enumerate(bin_pairs):
            rho = cross[q][pi] / math.sqrt(power[q][idx[ka]] * power[q][idx[kb]])
            results.append(
                CheckResult(
                    check=f"bin_correlation[{q},k=({ka},{kb})]",
                    target=0.0,
                    estimate=float(abs(rho)),
                    tolerance=tol,
                    passed=bool(abs(rho) <= tol),
                )
            )
    for q in ("source", "noise"):
        for k in probe:
            val = abs(pseudo[q][idx[k]]) / power[q][idx[k]]
            results.append(
                CheckResult(
                    check=f"pseudo_variance[{q},k={k}]",
                    target=0.0,
                    estimate=float(val),
                    tolerance=tol,
                    passed=bool(val <= tol),
                )
            )
    for k in probe:
        vals = np.abs(pseudo_rev[idx[k]]) / power_rev[idx[k]]
        worst = float(np.max(vals))
        results.append(
            CheckResult(
                check=f"pseudo_variance[reverb,k={k}]",
                target=0.0,
                estimate=worst,
                tolerance=tol,
                passed=bool(worst <= tol),
            )
        )
    return results


def run_suite(
    geom: ArrayGeometry,
    n_draws: int = 100_000,
    seed: int = 0,
    dists: ScenarioDistributions | None = None,
) -> SuiteReport:
    """Run every generator-law check with streams derived from one seed."""
    factors = factorize(build_coherence(geom))
    checks: list[CheckResult] = []
    checks += check_coherence(geom, n_draws=n_draws, seed=seed, factors=factors)
    checks += check_variances(geom, dists=dists, n_draws=n_draws, seed=seed, factors=factors)
    checks += check_bin_independence(geom, n_draws=n_draws, seed=seed, factors=factors)
    return SuiteReport(checks=checks, n_draws=n_draws, seed=seed)
