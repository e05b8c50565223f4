import math

import numpy as np
import pytest

from phasegen import ArrayGeometry, CoherenceSet, build_coherence, factorize
from phasegen.coherence import FactorizationError, coherence_matrix


def sinc_oracle(dist: float, c: float, fs: float, k: int, n_bins: int) -> float:
    """Independent scalar evaluation of the diffuse-coherence law."""
    x = dist / c * math.pi * fs * k / n_bins
    return math.sin(x) / x if x != 0.0 else 1.0


def test_unit_diagonal(geom):
    coh = build_coherence(geom)
    for k in (0, 100, 255):
        np.testing.assert_array_equal(np.diag(coh.gammas[k]), np.ones(geom.n_mics))


def test_adjacent_pair_low_bin_value(geom):
    coh = build_coherence(geom)
    expected = sinc_oracle(0.08, 343.0, 16000.0, 1, 256)
    assert abs(coh.gammas[0, 0, 1] - expected) < 1e-14
    assert round(expected, 5) == 0.99965


def test_full_matrix_against_scalar_oracle(geom):
    coh = build_coherence(geom)
    for k in (1, 64, 256):
        for i in range(geom.n_mics):
            for j in range(geom.n_mics):
                expected = sinc_oracle(
                    float(geom.pair_dists[i, j]), geom.c, geom.fs, k, geom.n_bins
                )
                assert abs(coh.gammas[k - 1, i, j] - expected) < 1e-13


def test_sinc_zero_crossing():
    # distance chosen so the argument is exactly pi at bin 128
    d = 343.0 * 256 / (16000.0 * 128)
    g = ArrayGeometry(mics=np.array([[0.0, 0.0, 0.0], [d, 0.0, 0.0]]), n_bins=256)
    coh = build_coherence(g)
    assert abs(coh.gammas[127, 0, 1]) < 1e-15


def test_translation_rotation_invariance():
    rng = np.random.default_rng(3)
    mics = rng.uniform(-0.3, 0.3, size=(5, 3))
    g1 = ArrayGeometry(mics=mics, n_bins=64)
    # translate and rotate the whole array
    a = 0.7
    rot = np.array(
        [[math.cos(a), -math.sin(a), 0.0], [math.sin(a), math.cos(a), 0.0], [0.0, 0.0, 1.0]]
    )
    g2 = ArrayGeometry(mics=mics @ rot.T + np.array([1.0, -2.0, 0.5]), n_bins=64)
    np.testing.assert_allclose(
        build_coherence(g1).gammas, build_coherence(g2).gammas, atol=1e-12
    )


def test_envelope_bound(geom):
    coh = build_coherence(geom)
    args = geom.pair_dists[None, :, :] * geom.phase_slope() * geom.bin_numbers[:, None, None]
    envelope = np.minimum(1.0, np.divide(1.0, args, out=np.full_like(args, np.inf), where=args > 0))
    assert np.all(np.abs(coh.gammas) <= envelope + 1e-12)


def test_factorize_identity():
    eye = np.broadcast_to(np.eye(3), (4, 3, 3)).copy()
    fac = factorize(CoherenceSet(gammas=eye))
    np.testing.assert_allclose(fac.gram(), eye, atol=1e-12)


def test_factorize_all_ones_rank_one():
    ones = np.ones((2, 4, 4))
    fac = factorize(CoherenceSet(gammas=ones))
    gram = fac.gram()
    np.testing.assert_allclose(gram, ones, atol=1e-10)
    assert np.linalg.matrix_rank(gram[0], tol=1e-8) == 1


def test_factorize_reconstruction_random_geometries():
    rng = np.random.default_rng(11)
    for _ in range(5):
        n_mics = int(rng.integers(2, 7))
        mics = rng.uniform(-0.5, 0.5, size=(n_mics, 3))
        g = ArrayGeometry(mics=mics, n_bins=128)
        coh = build_coherence(g)
        fac = factorize(coh)
        sym = 0.5 * (coh.gammas + np.transpose(coh.gammas, (0, 2, 1)))
        w, v = np.linalg.eigh(sym)
        projected = np.einsum("kij,kj,klj->kil", v, np.clip(w, 0.0, None), v)
        err = np.linalg.norm(fac.gram() - projected, axis=(1, 2))
        assert err.max() <= 1e-8


def test_factorize_idempotent_in_effect(geom):
    fac1 = factorize(build_coherence(geom))
    fac2 = factorize(CoherenceSet(gammas=fac1.gram()))
    assert np.abs(fac2.gram() - fac1.gram()).max() <= 1e-8


def test_factorize_rejects_bad_reconstruction():
    # a wildly asymmetric matrix survives symmetrization, so force the error
    # path with NaNs, which eigh rejects
    g = np.ones((3, 2, 2))
    g[1] = np.nan
    with pytest.raises((FactorizationError, np.linalg.LinAlgError)) as excinfo:
        factorize(CoherenceSet(gammas=g))
    if isinstance(excinfo.value, FactorizationError):
        assert excinfo.value.bin_number == 2


def test_coherence_matrix_subset(geom):
    sub = coherence_matrix(geom, np.array([1.0, 64.0]))
    full = build_coherence(geom).gammas
    np.testing.assert_array_equal(sub[0], full[0])
    np.testing.assert_array_equal(sub[1], full[63])
