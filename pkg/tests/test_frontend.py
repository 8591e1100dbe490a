import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from csiamp.frontend import (ReceivedFrame, amplitude_feature, ls_estimate, noise_variance, synthesize_reception,
                             zc_pilot)
from csiamp.rf_distortion import DistortionMatrix, DistortionParams, sample_distortion


def cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def coprime_pairs():
    return st.integers(2, 97).flatmap(
        lambda n: st.tuples(st.just(n), st.integers(1, n - 1).filter(lambda u: math.gcd(u, n) == 1)))


def test_zc_length_four_by_hand():
    x = zc_pilot(4, 1).x
    want = np.exp(1j * np.array([0, -math.pi / 4, -math.pi, -9 * math.pi / 4]))
    np.testing.assert_allclose(x, want, atol=1e-12)


@given(coprime_pairs())
def test_zc_constant_modulus_and_ideal_autocorrelation(pair):
    n, u = pair
    x = zc_pilot(n, u).x
    assert np.max(np.abs(np.abs(x) - 1)) < 1e-12
    for lag in range(1, n):
        assert abs(np.vdot(np.roll(x, lag), x)) < 1e-9 * n


def test_zc_rejects_shared_factor():
    with pytest.raises(ValueError):
        zc_pilot(64, 2)
    with pytest.raises(ValueError):
        zc_pilot(1)


def test_noise_free_identity_reception_is_outer_product(rng):
    g, p = cvec(rng, 8), zc_pilot(8)
    frame = synthesize_reception(g, p, math.inf, DistortionMatrix.identity(8), None)
    assert np.array_equal(frame.y, np.outer(g, p.x))


def test_zero_db_noise_energy_matches_signal():
    rng = np.random.default_rng(0)
    g, p = cvec(rng, 16), zc_pilot(16)
    signal = np.linalg.norm(np.outer(g, p.x)) ** 2
    noise = [np.linalg.norm(synthesize_reception(g, p, 0.0, None, rng).y - np.outer(g, p.x)) ** 2
             for _ in range(10_000)]
    assert abs(np.mean(noise) / signal - 1) < 0.01


def test_distorted_rows_scale_noisy_reception(rng):
    g, p = cvec(rng, 8), zc_pilot(8)
    d = sample_distortion(rng, DistortionParams(), 8)
    clean = synthesize_reception(g, p, 5.0, None, np.random.default_rng(9)).y
    dist = synthesize_reception(g, p, 5.0, d, np.random.default_rng(9)).y
    np.testing.assert_allclose(dist, d.gains[:, None] * clean, rtol=1e-12)


def test_finite_snr_requires_stream(rng):
    with pytest.raises(ValueError):
        synthesize_reception(cvec(rng, 4), zc_pilot(4), 10.0, None, None)
    with pytest.raises(ValueError):
        synthesize_reception(cvec(rng, 5), zc_pilot(4), math.inf, None, None)


def test_noise_variance_definition(rng):
    g, p = cvec(rng, 8), zc_pilot(8)
    assert noise_variance(g, p, math.inf) == 0.0
    var = noise_variance(g, p, 10.0)
    assert var * 64 * 10 == pytest.approx(np.linalg.norm(np.outer(g, p.x)) ** 2, rel=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(2, 64))
def test_ls_inverts_noise_free_reception(seed, n):
    r = np.random.default_rng(seed)
    g, p = cvec(r, n), zc_pilot(n, 1)
    est = ls_estimate(synthesize_reception(g, p, math.inf, DistortionMatrix.identity(n), None), p)
    assert np.linalg.norm(est - g) <= 1e-10 * np.linalg.norm(g)


def test_ls_with_distortion_returns_scaled_channel(rng):
    g, p = cvec(rng, 32), zc_pilot(32)
    d = sample_distortion(rng, DistortionParams(), 32)
    est = ls_estimate(synthesize_reception(g, p, math.inf, d, None), p)
    np.testing.assert_allclose(est, d.gains * g, rtol=1e-10)


def test_ls_of_zero_frame_is_zero():
    p = zc_pilot(6, 5)
    assert np.array_equal(ls_estimate(np.zeros((6, 6), complex), p), np.zeros(6, complex))
    with pytest.raises(ValueError):
        ls_estimate(ReceivedFrame(np.zeros((6, 5)), 0.0), p)


def test_ls_error_falls_with_snr():
    rng = np.random.default_rng(4)
    p = zc_pilot(16)
    g = cvec(rng, 16)
    errs = [np.mean([np.linalg.norm(ls_estimate(synthesize_reception(g, p, s, None, rng), p) - g) ** 2
                     for _ in range(1000)]) for s in (0.0, 10.0, 20.0)]
    assert errs[0] > errs[1] > errs[2]


def test_amplitude_feature_examples():
    assert amplitude_feature([3 + 4j, 0, -2]).tolist() == [5.0, 0.0, 2.0]
    np.testing.assert_allclose(amplitude_feature(zc_pilot(16).x), 1.0, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_amplitude_is_homogeneous(seed, c):
    v = cvec(np.random.default_rng(seed), 9)
    np.testing.assert_allclose(amplitude_feature(c * v), abs(c) * amplitude_feature(v), rtol=1e-12, atol=1e-300)


def test_distorted_amplitude_is_product(rng):
    g = cvec(rng, 12)
    d = sample_distortion(rng, DistortionParams(), 12)
    np.testing.assert_allclose(amplitude_feature(d.gains * g), d.amplitudes * np.abs(g), rtol=1e-12)


def test_distorted_feature_approaches_product_at_high_snr():
    rng = np.random.default_rng(5)
    p = zc_pilot(16)
    g = cvec(rng, 16)
    d = sample_distortion(rng, DistortionParams(), 16)
    target = d.amplitudes * np.abs(g)
    gaps = [np.linalg.norm(amplitude_feature(ls_estimate(synthesize_reception(g, p, s, d, rng), p)) - target)
            for s in (0.0, 30.0, 60.0)]
    assert gaps[0] > gaps[1] > gaps[2]
