"""Amplitude-correlated uplink/downlink channel pairs in the angular domain.

A simplified clustered multipath model: each realization draws a set of
frequency-independent paths (angle, mean power, delay) that is shared by both
links, and independent per-path gain phases for the uplink and the downlink.
The two links are evaluated on the same uniform linear array at their own
carrier wavelength and mapped to the angular domain with a unitary DFT.

Angular-domain convention (used for both links): ``to_angular(x) = F^H x``
with ``F[n, k] = exp(-j 2 pi n k / N) / sqrt(N)``, i.e. ``numpy.fft.ifft`` with
``norm="ortho"``. A steering vector with spatial frequency ``d sin(theta) /
lambda = m / N`` lands in bin ``m mod N``. Bins are not fft-shifted.
"""

from dataclasses import dataclass, field

import numpy as np

SPEED_OF_LIGHT = 2.998e8


@dataclass(frozen=True)
class ClusterConfig:
    """Path-model parameters.

    ``decay_per_path`` is the exponent of the power profile
    ``p_k ~ exp(-decay * k)`` for path index ``k = 0..P-1``.
    """

    n_paths: int = 24
    decay_per_path: float = 0.2
    sector_deg: float = 60.0
    delay_spread_s: float = 100e-9
    share_magnitudes: bool = True

    def __post_init__(self):
        if int(self.n_paths) < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if not 0.0 < self.sector_deg <= 90.0:
            raise ValueError(f"sector_deg must lie in (0, 90], got {self.sector_deg}")
        if self.decay_per_path < 0:
            raise ValueError("decay_per_path must be non-negative")
        if self.delay_spread_s < 0:
            raise ValueError("delay_spread_s must be non-negative")

    @property
    def sector_rad(self) -> float:
        return float(np.deg2rad(self.sector_deg))


@dataclass(frozen=True)
class CarrierConfig:
    """FDD carrier pair and array geometry.

    ``spacing_m`` defaults to half a wavelength at the uplink carrier; the
    downlink reuses the same physical spacing with its own wavelength.
    """

    n_antennas: int = 64
    f_ul_hz: float = 5.1e9
    f_dl_hz: float = 5.3e9
    spacing_m: float | None = None
    light_speed_mps: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if int(self.n_antennas) < 1:
            raise ValueError("n_antennas must be >= 1")
        if self.f_ul_hz <= 0 or self.f_dl_hz <= 0:
            raise ValueError("carrier frequencies must be positive")
        if self.f_ul_hz == self.f_dl_hz:
            raise ValueError("FDD requires distinct uplink and downlink carriers")
        if self.light_speed_mps <= 0:
            raise ValueError("light_speed_mps must be positive")
        if self.spacing_m is None:
            object.__setattr__(self, "spacing_m", self.light_speed_mps / (2.0 * self.f_ul_hz))
        elif self.spacing_m <= 0:
            raise ValueError("spacing_m must be positive")


@dataclass(frozen=True)
class PathSet:
    angles: np.ndarray  # radians
    powers: np.ndarray  # linear, sums to one
    delays: np.ndarray  # seconds, carried only

    @property
    def n_paths(self) -> int:
        return int(self.angles.size)


@dataclass(frozen=True)
class ChannelPair:
    g: np.ndarray  # uplink, angular domain
    h: np.ndarray  # downlink, angular domain
    path_set: PathSet = field(repr=False)


def power_profile(n_paths: int, decay: float) -> np.ndarray:
    k = np.arange(n_paths, dtype=np.float64)
    p = np.exp(-decay * k)
    return p / p.sum()


def sample_path_set(rng: np.random.Generator, config: ClusterConfig) -> PathSet:
    """Draw path angles uniformly in the sector; powers follow the decay profile."""
    if config.n_paths < 1:
        raise ValueError("at least one path is required")
    theta_max = config.sector_rad
    if theta_max <= 0:
        raise ValueError("angular sector is empty")
    angles = rng.uniform(-theta_max, theta_max, size=config.n_paths)
    if config.delay_spread_s > 0:
        delays = np.sort(rng.exponential(config.delay_spread_s, size=config.n_paths))
        delays -= delays[0]
    else:
        delays = np.zeros(config.n_paths)
    return PathSet(angles=angles, powers=power_profile(config.n_paths, config.decay_per_path), delays=delays)


def steering_matrix(angles, carrier_hz: float, config: CarrierConfig) -> np.ndarray:
    """Columns ``a(theta)_n = exp(-j 2 pi n d sin(theta) / lambda)``, shape (N, P)."""
    wavelength = config.light_speed_mps / carrier_hz
    n = np.arange(config.n_antennas)[:, None]
    return np.exp(-2j * np.pi * n * config.spacing_m * np.sin(np.atleast_1d(angles))[None, :] / wavelength)


def spatial_channel(path_set: PathSet, carrier_hz: float, gain_phases, config: CarrierConfig,
                    magnitudes=None) -> np.ndarray:
    """Sum of ``sqrt(p) * exp(j phi) * a(theta)`` over the paths.

    ``magnitudes`` replaces ``sqrt(p)`` when per-link gains are drawn
    independently (``share_magnitudes=False``).
    """
    gain_phases = np.asarray(gain_phases, dtype=np.float64)
    if gain_phases.shape != (path_set.n_paths,):
        raise ValueError(f"expected {path_set.n_paths} gain phases, got shape {gain_phases.shape}")
    mags = np.sqrt(path_set.powers) if magnitudes is None else np.asarray(magnitudes, dtype=np.float64)
    gains = mags * np.exp(1j * gain_phases)
    return steering_matrix(path_set.angles, carrier_hz, config) @ gains


def to_angular(spatial) -> np.ndarray:
    return np.fft.ifft(np.asarray(spatial, dtype=np.complex128), norm="ortho")


def from_angular(angular) -> np.ndarray:
    return np.fft.fft(np.asarray(angular, dtype=np.complex128), norm="ortho")


def channel_pair_from(path_set: PathSet, phases_ul, phases_dl, carrier: CarrierConfig,
                      magnitudes_ul=None, magnitudes_dl=None) -> ChannelPair:
    g = to_angular(spatial_channel(path_set, carrier.f_ul_hz, phases_ul, carrier, magnitudes_ul))
    h = to_angular(spatial_channel(path_set, carrier.f_dl_hz, phases_dl, carrier, magnitudes_dl))
    return ChannelPair(g=g, h=h, path_set=path_set)


def sample_channel_pair(rng: np.random.Generator, cluster: ClusterConfig, carrier: CarrierConfig) -> ChannelPair:
    path_set = sample_path_set(rng, cluster)
    p = path_set.n_paths
    phases_ul = rng.uniform(-np.pi, np.pi, size=p)
    phases_dl = rng.uniform(-np.pi, np.pi, size=p)
    if cluster.share_magnitudes:
        return channel_pair_from(path_set, phases_ul, phases_dl, carrier)
    # Rayleigh magnitudes with the same mean power on each link
    scale = np.sqrt(path_set.powers / 2.0)
    mag_ul = np.hypot(rng.standard_normal(p), rng.standard_normal(p)) * scale
    mag_dl = np.hypot(rng.standard_normal(p), rng.standard_normal(p)) * scale
    return channel_pair_from(path_set, phases_ul, phases_dl, carrier, mag_ul, mag_dl)
