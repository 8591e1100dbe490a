"""Per-sample online inference latency of the cascade.

Two engines are timed the same way: ``"fused"`` (``FusedCascade``, the
deployment path with Dist-LeaNet folded into one affine map) and
``"reference"`` (the generic layer-by-layer ``predict``).
"""

import json
import os
import platform
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .fused import FusedCascade
from .metrics import coherence_time, kmh_to_mps, max_doppler
from .nn import MlpModel
from .pipeline import predict

MIN_TRIALS = 10_000
WARMUP = 100
FUSED = "fused"
REFERENCE = "reference"
ENGINES = (FUSED, REFERENCE)
# downlink coherence time at 300 km/h and 5.3 GHz
REFERENCE_DOPPLER_HZ = max_doppler(kmh_to_mps(300.0), 5.3e9)


@dataclass
class TimingReport:
    n: int
    trials: int
    mean_ms: float
    median_ms: float
    p99_ms: float
    coherence_ms: float
    warmup: int = WARMUP
    engine: str = FUSED
    exclusive: bool = True
    host: dict = field(default_factory=dict)

    @property
    def passes(self) -> bool:
        return self.mean_ms < self.coherence_ms

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passes"] = self.passes
        return d

    def to_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def measure_latency(dist: MlpModel, amp: MlpModel, trials: int = 100_000, *, rng=None,
                    warmup: int = WARMUP, doppler_hz: float = REFERENCE_DOPPLER_HZ, engine: str = FUSED,
                    return_samples: bool = False):
    """Wall-clock time of single-sample cascade inference, one timed call per trial.

    The first ``warmup`` calls are discarded. Inputs are fresh non-negative
    random amplitude vectors drawn up front so that sampling is not timed;
    folding the fused engine happens once, before timing. The caller is
    responsible for running this without concurrent load.
    """
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if engine == FUSED:
        call = FusedCascade.from_models(dist, amp).predict_one
        shape = (dist.in_dim,)
    elif engine == REFERENCE:
        def call(x):
            return predict(dist, amp, x)
        shape = (1, dist.in_dim)
    else:
        raise ValueError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    n = dist.in_dim
    rng = np.random.default_rng(0) if rng is None else rng
    inputs = np.abs(rng.standard_normal((warmup + trials, *shape)))
    for i in range(warmup):
        call(inputs[i])
    clock = time.perf_counter_ns
    samples = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        x = inputs[warmup + i]
        t0 = clock()
        call(x)
        samples[i] = clock() - t0
    ms = samples / 1e6
    report = TimingReport(
        n=n,
        trials=int(samples.size),
        mean_ms=float(ms.mean()),
        median_ms=float(np.median(ms)),
        p99_ms=float(np.quantile(ms, 0.99)),
        coherence_ms=coherence_time(doppler_hz) * 1e3,
        warmup=warmup,
        engine=engine,
        host={"machine": platform.machine(), "python": platform.python_version(),
              "numpy": np.__version__, "cpus": os.cpu_count()},
    )
    return (report, ms) if return_samples else report
