"""Uplink pilot reception, LS channel estimation and amplitude extraction.

The equivalent SNR of a frame is ``10 log10(||g x||_F^2 / E||Nz||_F^2)``,
measured before the receiver distortion is applied. Distortion acts on the
noisy reception as a whole.
"""

import math
from dataclasses import dataclass

import numpy as np

from .rf_distortion import DistortionMatrix, apply_distortion


@dataclass(frozen=True, eq=False)
class PilotSequence:
    x: np.ndarray
    root: int

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def energy(self) -> float:
        return float(np.vdot(self.x, self.x).real)


@dataclass(frozen=True, eq=False)
class ReceivedFrame:
    y: np.ndarray
    snr_db: float


def zc_pilot(n: int, root: int = 1) -> PilotSequence:
    """Zadoff-Chu sequence of length ``n`` with the given root.

    Even length: ``exp(-j pi u k^2 / N)``; odd length: ``exp(-j pi u k (k+1) / N)``.
    """
    if n < 2:
        raise ValueError("ZC length must be >= 2")
    if math.gcd(int(root), int(n)) != 1:
        raise ValueError(f"ZC root {root} is not coprime with N={n}")
    k = np.arange(n, dtype=np.float64)
    # reduce the exponent modulo 2N before scaling to keep the phase argument small
    if n % 2 == 0:
        num = np.mod(root * k * k, 2 * n)
    else:
        num = np.mod(root * k * (k + 1), 2 * n)
    return PilotSequence(x=np.exp(-1j * np.pi * num / n), root=int(root))


def noise_variance(g: np.ndarray, pilot: PilotSequence, snr_db: float) -> float:
    """Per-entry noise variance that puts the frame at ``snr_db``."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    signal = float(np.vdot(g, g).real) * pilot.energy
    return signal / (g.size * pilot.n) / 10.0 ** (snr_db / 10.0)


def synthesize_reception(g, pilot: PilotSequence, snr_db: float, distortion: DistortionMatrix | None,
                         rng: np.random.Generator | None) -> ReceivedFrame:
    """Form ``D (g x + Nz)``; ``snr_db = inf`` disables the noise and draws nothing."""
    g = np.asarray(g, dtype=np.complex128)
    if g.ndim != 1 or g.size != pilot.n:
        raise ValueError(f"channel length {g.shape} does not match pilot length {pilot.n}")
    y = np.outer(g, pilot.x)
    var = noise_variance(g, pilot, snr_db)
    if var > 0:
        if rng is None:
            raise ValueError("a random stream is required for finite SNR")
        std = math.sqrt(var / 2.0)
        y = y + std * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    if distortion is not None:
        y = apply_distortion(distortion, y)
    return ReceivedFrame(y=y, snr_db=float(snr_db))


def ls_estimate(frame, pilot: PilotSequence) -> np.ndarray:
    """Least-squares estimate ``Y x^H / ||x||^2``."""
    y = frame.y if isinstance(frame, ReceivedFrame) else np.asarray(frame)
    energy = pilot.energy
    if energy <= 0:
        raise ValueError("pilot has zero energy")
    if y.ndim != 2 or y.shape[1] != pilot.n:
        raise ValueError(f"frame of shape {y.shape} does not match pilot length {pilot.n}")
    return y @ pilot.x.conj() / energy


def amplitude_feature(v) -> np.ndarray:
    return np.abs(np.asarray(v))
