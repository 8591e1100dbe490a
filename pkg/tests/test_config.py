import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from csiamp.config import ExperimentConfig, load_config, parse_config, save_config, serialize_config
from csiamp.errors import ConfigError
from csiamp.pipeline import TrainConfig
from csiamp.rf_distortion import DistortionParams, RefreshPolicy


def test_defaults():
    cfg = ExperimentConfig(seed=1)
    assert cfg.antennas == (64,)
    assert cfg.snr_db == (0.0, 5.0, 10.0, 15.0, 20.0)
    assert cfg.dataset.sizes() == {"train": 30_000, "val": 5_000, "test": 15_000}
    assert cfg.distortion.delta_r2 == 1.0 and cfg.distortion.theta_r == math.pi
    assert cfg.distortion.refresh is RefreshPolicy.PER_EXPERIMENT
    assert cfg.train.batch_size == 256 and cfg.train.max_epochs == 200 and cfg.train.patience == 20


def test_seed_is_mandatory():
    with pytest.raises(ConfigError, match="seed"):
        parse_config("antennas = [8]\n")
    with pytest.raises(ValueError):
        ExperimentConfig(seed=None)


def test_parse_sections():
    cfg = parse_config("""
seed = 3
antennas = [8, 16]
snr_db = [0, 20]

[distortion]
delta_r2 = 0.5
theta_r_rad = 1.0
refresh = "per-sample"

[train]
lr = 0.01
schedule = "simultaneous"
shared_model = true
""")
    assert cfg.antennas == (8, 16) and cfg.snr_db == (0.0, 20.0)
    assert cfg.distortion == DistortionParams(0.5, 1.0, RefreshPolicy.PER_SAMPLE)
    assert cfg.train.lr == 0.01 and cfg.train.schedule == "simultaneous" and cfg.shared_model


def test_errors_point_at_the_line(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("seed = 1\n\n[paths]\nn_paths = 4\nsector_deg = 120\n")
    with pytest.raises(ConfigError, match=r"bad\.toml:5: paths\.sector_deg"):
        load_config(path)
    with pytest.raises(ConfigError, match=":2: colour"):
        parse_config("seed = 1\ncolour = 'red'\n")
    with pytest.raises(ConfigError, match="distortion.refresh"):
        parse_config("seed = 1\n[distortion]\nrefresh = 'hourly'\n")
    with pytest.raises(ConfigError):
        parse_config("seed = [1\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.toml")


seeds = st.integers(0, 2**31)
grids = st.lists(st.floats(-20, 40, allow_nan=False), min_size=1, max_size=5)


@given(seeds, st.lists(st.integers(2, 512), min_size=1, max_size=4), grids,
       st.floats(0, 4), st.floats(0, math.pi), st.sampled_from(list(RefreshPolicy)),
       st.booleans(), st.sampled_from(["two-phase", "simultaneous"]))
def test_round_trip(seed, antennas, snrs, d2, theta, refresh, shared, schedule):
    cfg = ExperimentConfig(seed=seed, antennas=antennas, snr_db=snrs,
                           distortion=DistortionParams(d2, theta, refresh), shared_model=shared,
                           train=TrainConfig(schedule=schedule))
    assert parse_config(serialize_config(cfg)) == cfg


def test_save_and_load(tmp_path):
    cfg = ExperimentConfig(seed=9, out_dir=str(tmp_path))
    save_config(cfg, tmp_path / "c.toml")
    assert load_config(tmp_path / "c.toml") == cfg


def test_data_hash_tracks_data_shaping_fields():
    a = ExperimentConfig(seed=1)
    assert a.data_hash(64) == ExperimentConfig(seed=1, snr_db=(3.0,)).data_hash(64)
    assert a.data_hash(64) != a.data_hash(32)
    assert a.data_hash(64) != ExperimentConfig(seed=2).data_hash(64)
    assert a.data_hash(64) != a.replace(distortion=DistortionParams(0.5)).data_hash(64)
