"""NMSE, FLOPs formulas and mobility figures."""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .channel import SPEED_OF_LIGHT

PER_SAMPLE = "per-sample"
RATIO_OF_SUMS = "ratio-of-sums"


@dataclass(frozen=True)
class NmseResult:
    linear: float
    samples: int
    snr_db: float | None = None
    scheme: str = ""

    @property
    def db(self) -> float:
        if self.linear <= 0:
            raise ValueError("dB NMSE is undefined for a zero error")
        return 10.0 * math.log10(self.linear)


def nmse(pred, truth, *, normalization: str = PER_SAMPLE, snr_db: float | None = None,
         scheme: str = "") -> NmseResult:
    """Normalised MSE of amplitude predictions (rows are samples).

    ``per-sample`` averages ``||p_i - t_i||^2 / ||t_i||^2`` over rows;
    ``ratio-of-sums`` divides the total error energy by the total truth energy.
    """
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    truth = np.atleast_2d(np.asarray(truth, dtype=np.float64))
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {truth.shape}")
    if truth.shape[0] < 1:
        raise ValueError("need at least one sample")
    err = np.sum((pred - truth) ** 2, axis=1)
    energy = np.sum(truth ** 2, axis=1)
    if np.any(energy == 0):
        raise ValueError("truth contains an all-zero row")
    if normalization == PER_SAMPLE:
        value = float(np.mean(err / energy))
    elif normalization == RATIO_OF_SUMS:
        value = float(err.sum() / energy.sum())
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return NmseResult(value, truth.shape[0], snr_db, scheme)


PROPOSED = "proposed"
REF_II3 = "ref_ii3"
REF_I2 = "ref_i2"
SCHEMES = (REF_II3, REF_I2, PROPOSED)

_FORMULAS = {
    PROPOSED: lambda n: Fraction(16 * n * n - 6 * n),
    REF_II3: lambda n: Fraction(20 * n * n - 6 * n),
    REF_I2: lambda n: Fraction(n * n, 2) + Fraction(26841 * n, 8),
}
FORMULA_TEXT = {PROPOSED: "16N^2 - 6N", REF_II3: "20N^2 - 6N", REF_I2: "N^2/2 + 26841N/8"}


def flops_exact(scheme: str, n: int) -> Fraction:
    if scheme not in _FORMULAS:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if n < 1:
        raise ValueError("N must be >= 1")
    return _FORMULAS[scheme](int(n))


def flops(scheme: str, n: int) -> int:
    """FLOPs of one inference; non-integral values are rounded half-up (see ``flops_exact``)."""
    value = flops_exact(scheme, n)
    return int(math.floor(value + Fraction(1, 2)))


@dataclass
class ComplexityReport:
    antennas: list
    counts: dict  # scheme -> list of ints aligned with antennas
    rounded: dict  # scheme -> list of bools (value was not an integer)
    crossover_n: int
    notes: list = field(default_factory=list)

    def to_text(self) -> str:
        width = max(12, *(len(f"{c:,}") + 2 for v in self.counts.values() for c in v))
        head = f"{'scheme':<10}{'formula':<20}" + "".join(f"{'N=' + str(n):>{width}}" for n in self.antennas)
        lines = [head]
        for s in SCHEMES:
            cells = "".join(f"{format(c, ',') + ('*' if r else ''):>{width}}"
                            for c, r in zip(self.counts[s], self.rounded[s]))
            lines.append(f"{s:<10}{FORMULA_TEXT[s]:<20}{cells}")
        lines += self.notes
        return "\n".join(lines)


def crossover_n(limit: int = 100_000) -> int:
    """Smallest N at which ``ref_i2`` needs fewer FLOPs than ``proposed`` (integer scan)."""
    for n in range(1, limit + 1):
        if flops_exact(REF_I2, n) < flops_exact(PROPOSED, n):
            return n
    raise ValueError(f"no crossover below N={limit}")


def complexity_report(antennas) -> ComplexityReport:
    antennas = [int(n) for n in antennas]
    counts = {s: [flops(s, n) for n in antennas] for s in SCHEMES}
    rounded = {s: [flops_exact(s, n).denominator != 1 for n in antennas] for s in SCHEMES}
    n_x = crossover_n()
    notes = [f"crossover: proposed has the fewest FLOPs for N < {n_x}; "
             f"for N >= {n_x} {REF_I2} is cheaper"]
    if any(any(r) for r in rounded.values()):
        notes.append("* non-integral formula value, rounded half-up (N not divisible by 8)")
    return ComplexityReport(antennas, counts, rounded, n_x, notes)


def kmh_to_mps(speed_kmh: float) -> float:
    return speed_kmh / 3.6


def max_doppler(speed_mps: float, carrier_hz: float, light_speed_mps: float = SPEED_OF_LIGHT) -> float:
    if speed_mps < 0 or carrier_hz <= 0 or light_speed_mps <= 0:
        raise ValueError("speed must be non-negative and frequencies/light speed positive")
    return speed_mps * carrier_hz / light_speed_mps


def coherence_time(doppler_hz: float) -> float:
    """``9 / (16 pi f_m)`` seconds."""
    if doppler_hz <= 0:
        raise ValueError("maximum Doppler shift must be positive")
    return 9.0 / (16.0 * math.pi * doppler_hz)
