import numpy as np
import pytest

from csiamp.pipeline import build_networks
from csiamp.timing import MIN_TRIALS, measure_latency


@pytest.fixture(scope="module")
def nets():
    return build_networks(16, np.random.default_rng(0))


@pytest.mark.parametrize("engine", ["fused", "reference"])
def test_report_records_every_trial(nets, engine):
    rep, samples = measure_latency(*nets, trials=MIN_TRIALS, engine=engine, return_samples=True)
    assert rep.trials == samples.size == MIN_TRIALS
    assert rep.engine == engine and rep.warmup == 100
    assert 0 < rep.median_ms <= rep.p99_ms
    assert abs(rep.coherence_ms - 0.1215) < 0.001
    assert rep.to_dict()["passes"] == (rep.mean_ms < rep.coherence_ms)


def test_too_few_trials_or_unknown_engine(nets):
    with pytest.raises(ValueError):
        measure_latency(*nets, trials=100)
    with pytest.raises(ValueError):
        measure_latency(*nets, trials=MIN_TRIALS, engine="gpu")


@pytest.mark.slow
def test_wider_networks_are_not_faster():
    small = measure_latency(*build_networks(64, np.random.default_rng(0)), trials=MIN_TRIALS)
    large = measure_latency(*build_networks(256, np.random.default_rng(0)), trials=MIN_TRIALS)
    assert small.mean_ms <= large.mean_ms
