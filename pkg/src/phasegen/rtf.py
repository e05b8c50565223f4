"""Room-transfer-function realizations: deterministic direct path plus
spatially correlated diffuse reverberation."""

from __future__ import annotations

import numpy as np

from .coherence import CoherenceFactors
from .geometry import ArrayGeometry, SourcePosition, direct_phases


def complex_normal(rng: np.random.Generator, shape: tuple, variance: float = 1.0) -> np.ndarray:
    """Circular-symmetric complex Gaussian draw.

    Real and imaginary parts are independent zero-mean Gaussians with
    variance ``variance / 2`` each.
    """
    pair = rng.standard_normal((2,) + tuple(shape))
    return np.sqrt(variance / 2.0) * (pair[0] + 1j * pair[1])


def gen_rtf(
    rng: np.random.Generator,
    factors: CoherenceFactors,
    rev_var: float,
    geom: ArrayGeometry,
    s: SourcePosition,
) -> np.ndarray:
    """One transfer-function realization per bin and mic, shape (n_bins, M).

    The direct path is the unit-modulus phasor exp(-j phi_dir); the
    reverberant part is drawn per bin from a complex Gaussian with
    covariance rev_var * Gamma(k), realized as sqrt(rev_var) * L(k) @ z.
    Distance affects phase only; there is no direct-path attenuation.
    """
    if rev_var < 0.0:
        raise ValueError("rev_var must be nonnegative")
    if factors.n_bins != geom.n_bins or factors.n_mics != geom.n_mics:
        raise ValueError(
            f"factors shape {factors.factors.shape} does not match geometry "
            f"({geom.n_bins} bins, {geom.n_mics} mics)"
        )
    z = complex_normal(rng, (geom.n_bins, geom.n_mics))
    h_rev = np.sqrt(rev_var) * np.einsum("kij,kj->ki", factors.factors, z)
    h_dir = np.exp(-1j * direct_phases(geom, s))
    return h_dir + h_rev
