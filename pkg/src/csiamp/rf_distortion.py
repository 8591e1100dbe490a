"""Quasi-static receiver distortion of the base-station RF chains.

Each antenna branch n multiplies its received samples by a complex gain
``r_n = |r_n| exp(j phi_n)`` with ``ln|r_n| ~ N(0, delta_r2)`` and
``phi_n ~ U[-theta_r, theta_r]``. Crosstalk between branches is neglected, so
the distortion acts as ``diag(r) @ Y`` on an N x N reception.
"""

import hashlib
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ChecksumError, DataError


class RefreshPolicy(str, Enum):
    PER_EXPERIMENT = "per-experiment"
    PER_SAMPLE = "per-sample"


@dataclass(frozen=True)
class DistortionParams:
    delta_r2: float = 1.0
    theta_r: float = np.pi
    refresh: RefreshPolicy = RefreshPolicy.PER_EXPERIMENT

    def __post_init__(self):
        if self.delta_r2 < 0:
            raise ValueError(f"delta_r2 must be non-negative, got {self.delta_r2}")
        if not 0.0 <= self.theta_r <= np.pi:
            raise ValueError(f"theta_r must lie in [0, pi], got {self.theta_r}")
        object.__setattr__(self, "refresh", RefreshPolicy(self.refresh))


_MAGIC = b"RDST"
_VERSION = 1


@dataclass(frozen=True, eq=False)
class DistortionMatrix:
    """Diagonal of the receiver distortion matrix."""

    gains: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = np.ascontiguousarray(self.gains, dtype=np.complex128)
        if g.ndim != 1:
            raise ValueError("gains must be a vector")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)

    @classmethod
    def identity(cls, n: int) -> "DistortionMatrix":
        return cls(np.ones(n, dtype=np.complex128))

    @property
    def n(self) -> int:
        return self.gains.size

    @property
    def amplitudes(self) -> np.ndarray:
        return np.abs(self.gains)

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.gains)

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.gains)

    def to_bytes(self) -> bytes:
        """Magic, version, N, then (re, im) little-endian float64 pairs and a SHA-256 trailer."""
        body = _MAGIC + struct.pack("<BI", _VERSION, self.n) + self.gains.astype("<c16").tobytes()
        return body + hashlib.sha256(body).digest()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "DistortionMatrix":
        if len(blob) < 4 + 5 + 32 or blob[:4] != _MAGIC:
            raise DataError("not a distortion file")
        body, digest = blob[:-32], blob[-32:]
        if hashlib.sha256(body).digest() != digest:
            raise ChecksumError("distortion file checksum mismatch")
        version, n = struct.unpack_from("<BI", body, 4)
        if version != _VERSION:
            raise DataError(f"unsupported distortion format version {version}")
        gains = np.frombuffer(body, dtype="<c16", count=n, offset=9)
        return cls(gains.astype(np.complex128))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.gains.astype("<c16").tobytes()).hexdigest()

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "DistortionMatrix":
        return cls.from_bytes(Path(path).read_bytes())


def sample_distortion(rng: np.random.Generator, params: DistortionParams, n: int) -> DistortionMatrix:
    if n < 1:
        raise ValueError("N must be >= 1")
    if params.delta_r2 < 0:
        raise ValueError("delta_r2 must be non-negative")
    log_amp = rng.normal(0.0, np.sqrt(params.delta_r2), size=n)
    phase = rng.uniform(-params.theta_r, params.theta_r, size=n)
    return DistortionMatrix(np.exp(log_amp) * np.exp(1j * phase))


def apply_distortion(distortion: DistortionMatrix, received: np.ndarray) -> np.ndarray:
    """Scale row n of the reception by ``r_n``."""
    received = np.asarray(received)
    if received.ndim != 2 or received.shape[0] != distortion.n:
        raise ValueError(f"reception of shape {received.shape} does not match N={distortion.n}")
    return distortion.gains[:, None] * received


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int | None = None  # normaliser; defaults to the binned count

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def density(self) -> np.ndarray:
        widths = np.diff(self.edges)
        total = self.counts.sum() if self.total is None else self.total
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(widths > 0, self.counts / (total * np.where(widths > 0, widths, 1.0)), np.inf)


@dataclass
class DistortionPdfReport:
    n_samples: int
    amplitude: Histogram
    phase: Histogram
    amplitude_mean: float
    amplitude_var: float
    log_amplitude_mean: float
    log_amplitude_var: float
    phase_mean: float
    phase_var: float

    def to_text(self) -> str:
        lines = [
            f"samples: {self.n_samples}",
            f"|r|      mean {self.amplitude_mean:.6f}  var {self.amplitude_var:.6f}",
            f"ln|r|    mean {self.log_amplitude_mean:.6f}  var {self.log_amplitude_var:.6f}",
            f"phase    mean {self.phase_mean:.6f}  var {self.phase_var:.6f}",
            "amplitude pdf (center, density):",
        ]
        lines += [f"  {c:10.5f} {d:10.5f}" for c, d in zip(self.amplitude.centers, self.amplitude.density)]
        lines.append("phase pdf (center, density):")
        lines += [f"  {c:10.5f} {d:10.5f}" for c, d in zip(self.phase.centers, self.phase.density)]
        return "\n".join(lines)


MIN_PDF_SAMPLES = 10_000


def _histogram(values: np.ndarray, bins: int, value_range=None) -> Histogram:
    if np.ptp(values) == 0:
        v = float(values[0])
        return Histogram(np.array([v, v]), np.array([values.size]))
    counts, edges = np.histogram(values, bins=bins, range=value_range)
    return Histogram(edges, counts)


def distortion_pdf_report(samples, amplitude_bins: int = 60, phase_bins: int = 20,
                          amplitude_quantile: float = 0.995) -> DistortionPdfReport:
    """Binned empirical PDFs of ``|r|`` and ``angle(r)`` for a pool of gains.

    The amplitude histogram spans ``[0, quantile]`` of the data; densities are
    normalised by the full sample count so the tail beyond the range is simply
    not drawn.
    """
    r = np.ravel(np.asarray(samples, dtype=np.complex128))
    if r.size < MIN_PDF_SAMPLES:
        raise ValueError(f"need at least {MIN_PDF_SAMPLES} samples, got {r.size}")
    amp = np.abs(r)
    phase = np.angle(r)
    if np.ptp(amp) == 0:
        amp_hist = _histogram(amp, amplitude_bins)
    else:
        counts, edges = np.histogram(amp, bins=amplitude_bins,
                                     range=(0.0, float(np.quantile(amp, amplitude_quantile))))
        amp_hist = Histogram(edges, counts, total=amp.size)
    with np.errstate(divide="ignore"):
        log_amp = np.log(amp)
    return DistortionPdfReport(
        n_samples=r.size,
        amplitude=amp_hist,
        phase=_histogram(phase, phase_bins),
        amplitude_mean=float(amp.mean()),
        amplitude_var=float(amp.var()),
        log_amplitude_mean=float(log_amp.mean()),
        log_amplitude_var=float(log_amp.var()),
        phase_mean=float(phase.mean()),
        phase_var=float(phase.var()),
    )
