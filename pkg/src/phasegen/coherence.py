"""Spatial coherence of the diffuse reverberant field.

The inter-microphone coherence of an ideal diffuse (isotropic) field is
``sinc(d_ij / c * pi * fs * k / n_bins)`` with the unnormalized sinc
(sin x / x, sinc 0 = 1). Each per-bin coherence matrix is factorized once
so that correlated complex Gaussian reverberation can be drawn with a
single matrix-vector product per bin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry

# Frobenius tolerance for L L^T against the PSD-projected coherence matrix.
RECONSTRUCTION_TOL = 1e-8


class FactorizationError(RuntimeError):
    """Eigendecomposition or reconstruction failed for one coherence matrix."""

    def __init__(self, bin_number: int, message: str):
        super().__init__(f"bin {bin_number}: {message}")
        self.bin_number = bin_number


@dataclass(frozen=True)
class CoherenceSet:
    """Per-bin diffuse-field coherence matrices, shape (n_bins, M, M)."""

    gammas: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.gammas, dtype=np.float64)
        if g.ndim != 3 or g.shape[1] != g.shape[2]:
            raise ValueError("gammas must have shape (n_bins, M, M)")
        g.flags.writeable = False
        object.__setattr__(self, "gammas", g)

    @property
    def n_bins(self) -> int:
        return self.gammas.shape[0]

    @property
    def n_mics(self) -> int:
        return self.gammas.shape[1]


@dataclass(frozen=True)
class CoherenceFactors:
    """Per-bin factors L with L(k) L(k)^T equal to the PSD projection of the
    coherence matrix, shape (n_bins, M, M). Real-valued by construction."""

    factors: np.ndarray

    def __post_init__(self) -> None:
        f = np.asarray(self.factors, dtype=np.float64)
        if f.ndim != 3 or f.shape[1] != f.shape[2]:
            raise ValueError("factors must have shape (n_bins, M, M)")
        f.flags.writeable = False
        object.__setattr__(self, "factors", f)

    @property
    def n_bins(self) -> int:
        return self.factors.shape[0]

    @property
    def n_mics(self) -> int:
        return self.factors.shape[1]

    def gram(self) -> np.ndarray:
        """Reconstructed covariance L L^T per bin."""
        return np.einsum("kij,klj->kil", self.factors, self.factors)


def coherence_matrix(geom: ArrayGeometry, bin_numbers: np.ndarray) -> np.ndarray:
    """Coherence matrices at the given (1-based) bin numbers, shape (len, M, M)."""
    k = np.asarray(bin_numbers, dtype=np.float64)
    args = geom.pair_dists[None, :, :] * geom.phase_slope() * k[:, None, None]
    # np.sinc is the normalized sin(pi x)/(pi x); rescale for sin(x)/x.
    return np.sinc(args / np.pi)


def build_coherence(geom: ArrayGeometry) -> CoherenceSet:
    """Diffuse-field coherence for every bin 1..n_bins of the geometry."""
    return CoherenceSet(gammas=coherence_matrix(geom, geom.bin_numbers))


def factorize(coh: CoherenceSet) -> CoherenceFactors:
    """Factor each coherence matrix for correlated Gaussian sampling.

    Uses a symmetrized eigendecomposition with negative eigenvalues clipped
    to zero. Plain Cholesky is not applicable: at low bins the coherence
    matrix approaches the singular all-ones matrix.

    Raises:
        FactorizationError: when the eigensolver fails or the factors do not
            reproduce the PSD-projected matrix to within 1e-8 (Frobenius),
            with the offending 1-based bin number.
    """
    sym = 0.5 * (coh.gammas + np.transpose(coh.gammas, (0, 2, 1)))
    try:
        eigvals, eigvecs = np.linalg.eigh(sym)
    except np.linalg.LinAlgError:
        # Locate the failing bin for the error report.
        for k, g in enumerate(sym, start=1):
            try:
                np.linalg.eigh(g)
            except np.linalg.LinAlgError as exc:
                raise FactorizationError(k, f"eigendecomposition failed: {exc}") from exc
        raise
    clipped = np.clip(eigvals, 0.0, None)
    factors = eigvecs * np.sqrt(clipped)[:, None, :]

    projected = np.einsum("kij,kj,klj->kil", eigvecs, clipped, eigvecs)
    gram = np.einsum("kij,klj->kil", factors, factors)
    errs = np.linalg.norm(gram - projected, axis=(1, 2))
    # NaN errors (eigh propagates NaN inputs silently) must fail too
    bad = ~(errs <= RECONSTRUCTION_TOL)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise FactorizationError(k + 1, f"reconstruction error {errs[k]:.3e}")
    return CoherenceFactors(factors=factors)
