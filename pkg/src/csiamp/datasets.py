"""Amplitude datasets: generation from the physical chain and the binary file format.

File layout (little-endian)::

    b"CSIA" | version u8 | flags u8 | reserved u16 | N u32 | count u64 | snr_db f64
    distortion fingerprint (32 bytes) | config hash (32 bytes)
    count records of 3N float64: distorted uplink amplitude, uplink amplitude, downlink amplitude
    crc32 u32 over all preceding bytes

``flags`` bit 0 marks a mixed-SNR file (``snr_db`` is then NaN).
"""

import hashlib
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import CarrierConfig, ClusterConfig, sample_channel_pair
from .errors import ChecksumError, DataError, FormatVersionError
from .frontend import PilotSequence, amplitude_feature, ls_estimate, synthesize_reception
from .rf_distortion import DistortionMatrix, DistortionParams, sample_distortion

MAGIC = b"CSIA"
VERSION = 1
FLAG_MIXED_SNR = 1
_HEADER = struct.Struct("<4sBBHIQd32s32s")


@dataclass(eq=False)
class AmplitudeSet:
    features: np.ndarray  # distorted, estimated uplink amplitude
    uplink: np.ndarray  # |g|
    downlink: np.ndarray  # |h|
    snr_db: float
    distortion_fingerprint: bytes = b"\0" * 32
    config_hash: bytes = b"\0" * 32
    mixed_snr: bool = False

    def __post_init__(self):
        shapes = {self.features.shape, self.uplink.shape, self.downlink.shape}
        if len(shapes) != 1 or self.features.ndim != 2:
            raise ValueError(f"inconsistent amplitude arrays: {shapes}")

    @property
    def n(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.features.shape[0]

    def header_bytes(self) -> bytes:
        flags = FLAG_MIXED_SNR if self.mixed_snr else 0
        return _HEADER.pack(MAGIC, VERSION, flags, 0, self.n, len(self), float(self.snr_db),
                            self.distortion_fingerprint, self.config_hash)

    def records_bytes(self) -> bytes:
        records = np.concatenate([self.features, self.uplink, self.downlink], axis=1)
        return np.ascontiguousarray(records, dtype="<f8").tobytes()

    def to_bytes(self) -> bytes:
        body = self.header_bytes() + self.records_bytes()
        return body + struct.pack("<I", zlib.crc32(body))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.header_bytes() + self.records_bytes()).hexdigest()

    def subset(self, idx) -> "AmplitudeSet":
        return AmplitudeSet(self.features[idx], self.uplink[idx], self.downlink[idx], self.snr_db,
                            self.distortion_fingerprint, self.config_hash, self.mixed_snr)


def dataset_from_bytes(data: bytes) -> AmplitudeSet:
    if len(data) < _HEADER.size + 4 or data[:4] != MAGIC:
        raise DataError("not a dataset file (bad magic or too short)")
    if data[4] != VERSION:
        raise FormatVersionError(f"dataset format version {data[4]} is not supported")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise ChecksumError("dataset checksum mismatch (truncated or corrupted)")
    _, _, flags, _, n, count, snr_db, dist_fp, cfg_hash = _HEADER.unpack_from(body)
    expected = _HEADER.size + count * 3 * n * 8
    if len(body) != expected:
        raise DataError(f"record count {count} does not match payload size")
    rec = np.frombuffer(body, dtype="<f8", offset=_HEADER.size).astype(np.float64).reshape(count, 3 * n)
    if np.any(rec < 0) or not np.all(np.isfinite(rec)):
        raise DataError("dataset contains negative or non-finite amplitudes")
    return AmplitudeSet(rec[:, :n].copy(), rec[:, n:2 * n].copy(), rec[:, 2 * n:].copy(), snr_db,
                        dist_fp, cfg_hash, bool(flags & FLAG_MIXED_SNR))


def write_dataset(path, ds: AmplitudeSet) -> None:
    Path(path).write_bytes(ds.to_bytes())


def read_dataset(path) -> AmplitudeSet:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    return dataset_from_bytes(data)


def per_sample_fingerprint(params: DistortionParams) -> bytes:
    """Stand-in fingerprint for datasets whose distortion is redrawn per record."""
    text = f"per-sample:{params.delta_r2!r}:{params.theta_r!r}"
    return hashlib.sha256(text.encode()).digest()


def generate_amplitude_set(count: int, carrier: CarrierConfig, cluster: ClusterConfig, pilot: PilotSequence,
                           snr_db, *, channel_rng: np.random.Generator, noise_rng: np.random.Generator,
                           distortion: DistortionMatrix | None = None,
                           distortion_params: DistortionParams | None = None,
                           distortion_rng: np.random.Generator | None = None,
                           snr_rng: np.random.Generator | None = None,
                           config_hash: bytes = b"\0" * 32) -> AmplitudeSet:
    """Simulate ``count`` records through channel, reception, distortion and LS estimation.

    Pass ``distortion`` for a fixed hardware instance, or ``distortion_params``
    with ``distortion_rng`` to redraw it for every record. ``snr_db`` may be a
    sequence, in which case each record picks one entry with ``snr_rng``.
    """
    n = carrier.n_antennas
    if pilot.n != n:
        raise ValueError("pilot length must equal the antenna count")
    if (distortion is None) == (distortion_params is None):
        raise ValueError("give exactly one of distortion / distortion_params")
    mixed = np.ndim(snr_db) > 0
    if mixed and snr_rng is None:
        raise ValueError("mixed-SNR generation needs snr_rng")
    grid = np.atleast_1d(np.asarray(snr_db, dtype=np.float64))
    feats = np.empty((count, n))
    up = np.empty((count, n))
    down = np.empty((count, n))
    for i in range(count):
        pair = sample_channel_pair(channel_rng, cluster, carrier)
        d = distortion if distortion is not None else sample_distortion(distortion_rng, distortion_params, n)
        snr = float(grid[snr_rng.integers(grid.size)]) if mixed else float(grid[0])
        frame = synthesize_reception(pair.g, pilot, snr, d, noise_rng)
        feats[i] = amplitude_feature(ls_estimate(frame, pilot))
        up[i] = amplitude_feature(pair.g)
        down[i] = amplitude_feature(pair.h)
    if distortion is not None:
        fp = bytes.fromhex(distortion.fingerprint())
    else:
        fp = per_sample_fingerprint(distortion_params)
    return AmplitudeSet(feats, up, down, float("nan") if mixed else float(grid[0]), fp, config_hash, mixed)
