import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from csiamp.channel import (SPEED_OF_LIGHT, CarrierConfig, ClusterConfig, PathSet, channel_pair_from,
                            from_angular, power_profile, sample_channel_pair, sample_path_set,
                            spatial_channel, steering_matrix, to_angular)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_subnormal=False)


def complex_vectors(n):
    return arrays(np.float64, (2, n), elements=finite).map(lambda a: a[0] + 1j * a[1])


def single_path(theta, phase=0.0):
    return PathSet(np.array([theta]), np.array([1.0]), np.zeros(1))


def test_single_path_power_is_one():
    assert power_profile(1, 0.2).tolist() == [1.0]


def test_power_profile_matches_geometric_closed_form():
    gamma, p = 0.5, 24
    q = math.exp(-gamma)
    norm = (1 - q ** p) / (1 - q)
    expected = [q ** k / norm for k in range(p)]
    prof = power_profile(p, gamma)
    np.testing.assert_allclose(prof, expected, rtol=1e-12)
    assert abs(prof.sum() - 1.0) < 1e-12


def test_path_set_is_deterministic_given_stream_state():
    cfg = ClusterConfig()
    a = sample_path_set(np.random.default_rng(7), cfg)
    b = sample_path_set(np.random.default_rng(7), cfg)
    assert np.array_equal(a.angles, b.angles) and np.array_equal(a.powers, b.powers)
    assert np.all(np.abs(a.angles) <= np.deg2rad(cfg.sector_deg))


def test_cluster_config_rejects_bad_values():
    with pytest.raises(ValueError):
        ClusterConfig(n_paths=0)
    with pytest.raises(ValueError):
        ClusterConfig(sector_deg=0)


def test_carrier_defaults_to_half_uplink_wavelength():
    c = CarrierConfig()
    assert c.spacing_m == pytest.approx(SPEED_OF_LIGHT / 5.1e9 / 2)
    with pytest.raises(ValueError):
        CarrierConfig(f_ul_hz=5e9, f_dl_hz=5e9)


def test_broadside_path_is_all_ones():
    cfg = CarrierConfig(n_antennas=8)
    v = spatial_channel(single_path(0.0), cfg.f_ul_hz, [0.0], cfg)
    assert np.array_equal(v, np.ones(8, dtype=complex))


@given(st.floats(-1.0, 1.0), st.floats(-math.pi, math.pi))
def test_single_path_has_constant_modulus(theta, phi):
    cfg = CarrierConfig(n_antennas=16)
    v = spatial_channel(single_path(theta), cfg.f_dl_hz, [phi], cfg)
    np.testing.assert_allclose(np.abs(v), 1.0, atol=1e-12)


def test_two_paths_match_direct_summation():
    cfg = CarrierConfig(n_antennas=6)
    ps = PathSet(np.array([0.3, -0.7]), np.array([0.6, 0.4]), np.zeros(2))
    phases = [1.1, -2.0]
    got = spatial_channel(ps, cfg.f_ul_hz, phases, cfg)
    lam = SPEED_OF_LIGHT / cfg.f_ul_hz
    for n in range(6):
        want = sum(math.sqrt(p) * complex(math.cos(ph), math.sin(ph))
                   * complex(math.cos(-2 * math.pi * n * cfg.spacing_m * math.sin(t) / lam),
                             math.sin(-2 * math.pi * n * cfg.spacing_m * math.sin(t) / lam))
                   for t, p, ph in zip(ps.angles, ps.powers, phases))
        assert abs(got[n] - want) < 1e-12


def test_phase_count_is_checked():
    cfg = CarrierConfig(n_antennas=4)
    with pytest.raises(ValueError):
        spatial_channel(single_path(0.1), cfg.f_ul_hz, [0.0, 1.0], cfg)


def test_constant_vector_lands_in_bin_zero():
    out = to_angular(np.ones(16))
    assert abs(out[0] - 4.0) < 1e-12
    assert np.max(np.abs(out[1:])) < 1e-12


@pytest.mark.parametrize("m", [1, 5, 12])
def test_grid_steering_vector_lands_in_one_bin(m):
    # d sin(theta) / lambda = m / N makes the steering vector a pure DFT column
    n = 16
    cfg = CarrierConfig(n_antennas=n, spacing_m=SPEED_OF_LIGHT / (2 * 5.1e9))
    lam = SPEED_OF_LIGHT / cfg.f_ul_hz
    s = m / n if m < n / 2 else m / n - 1
    theta = math.asin(s * lam / cfg.spacing_m)
    out = to_angular(steering_matrix([theta], cfg.f_ul_hz, cfg)[:, 0])
    assert abs(abs(out[m]) - math.sqrt(n)) < 1e-9
    assert np.max(np.abs(np.delete(out, m))) < 1e-9


@given(complex_vectors(12))
def test_angular_transform_is_unitary(v):
    out = to_angular(v)
    scale = max(np.linalg.norm(v), 1e-300)
    assert abs(np.linalg.norm(out) - np.linalg.norm(v)) <= 1e-10 * scale
    assert np.linalg.norm(from_angular(out) - v) <= 1e-10 * scale


def test_channel_generation_is_pure():
    cfg = CarrierConfig(n_antennas=32)
    ps = sample_path_set(np.random.default_rng(3), ClusterConfig())
    ph = np.linspace(-1, 1, ps.n_paths)
    a = channel_pair_from(ps, ph, -ph, cfg)
    b = channel_pair_from(ps, ph, -ph, cfg)
    assert a.g.tobytes() == b.g.tobytes() and a.h.tobytes() == b.h.tobytes()


def test_equal_carriers_and_phases_give_equal_amplitudes():
    # FDD configs reject f_UL == f_DL, so evaluate both links at one carrier directly
    cfg = CarrierConfig(n_antennas=32)
    ps = sample_path_set(np.random.default_rng(4), ClusterConfig(n_paths=1))
    g = to_angular(spatial_channel(ps, cfg.f_ul_hz, [0.4], cfg))
    h = to_angular(spatial_channel(ps, cfg.f_ul_hz, [0.4], cfg))
    np.testing.assert_allclose(np.abs(g), np.abs(h), atol=1e-9)


def test_links_share_the_path_set():
    pair = sample_channel_pair(np.random.default_rng(5), ClusterConfig(), CarrierConfig(n_antennas=16))
    assert pair.path_set.n_paths == 24
    ps = pair.path_set
    rebuilt = channel_pair_from(ps, np.zeros(24), np.zeros(24), CarrierConfig(n_antennas=16))
    assert rebuilt.path_set is ps


def test_different_seeds_give_different_channels():
    cl, ca = ClusterConfig(), CarrierConfig(n_antennas=16)
    a = sample_channel_pair(np.random.default_rng(1), cl, ca)
    b = sample_channel_pair(np.random.default_rng(2), cl, ca)
    assert not np.allclose(a.g, b.g)


def test_single_path_channel_energy_is_n():
    cfg = CarrierConfig(n_antennas=32)
    cl = ClusterConfig(n_paths=1)
    rng = np.random.default_rng(6)
    energies = [np.linalg.norm(spatial_channel(sample_path_set(rng, cl), cfg.f_ul_hz,
                                               rng.uniform(-np.pi, np.pi, 1), cfg)) ** 2
                for _ in range(2000)]
    assert abs(np.mean(energies) / 32 - 1) < 0.02


def test_amplitude_correlation_between_links():
    # frozen pilot threshold: the default model gives about 0.55
    rng = np.random.default_rng(2024)
    cl, ca = ClusterConfig(), CarrierConfig(n_antennas=64)
    g, h = [], []
    for _ in range(10_000):
        pair = sample_channel_pair(rng, cl, ca)
        g.append(np.abs(pair.g))
        h.append(np.abs(pair.h))
    r = np.corrcoef(np.ravel(g), np.ravel(h))[0, 1]
    assert r > 0.5


def test_unshared_magnitudes_still_run():
    pair = sample_channel_pair(np.random.default_rng(8), ClusterConfig(share_magnitudes=False),
                               CarrierConfig(n_antennas=8))
    assert pair.g.shape == pair.h.shape == (8,)
