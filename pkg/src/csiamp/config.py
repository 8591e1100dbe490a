"""Experiment configuration in TOML with units spelled out in key names.

Example::

    seed = 2024
    antennas = [64]
    snr_db = [0.0, 5.0, 10.0, 15.0, 20.0]
    out_dir = "runs/default"
    speed_kmh = 300.0
    pilot_root = 1

    [carrier]
    f_ul_hz = 5.1e9
    f_dl_hz = 5.3e9
    light_speed_mps = 2.998e8
    # spacing_m = 0.0294   (defaults to half the uplink wavelength)

    [paths]
    n_paths = 24
    decay_per_path = 0.2
    sector_deg = 60.0
    delay_spread_s = 1e-7
    share_magnitudes = true

    [distortion]
    delta_r2 = 1.0
    theta_r_rad = 3.141592653589793
    refresh = "per-experiment"

    [dataset]
    train = 30000
    val = 5000
    test = 15000
    mixed_snr = false

    [train]
    batch_size = 256
    ...  (fields of pipeline.TrainConfig)
    shared_model = false
"""

import dataclasses
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import tomli
import tomli_w

from .channel import SPEED_OF_LIGHT, CarrierConfig, ClusterConfig
from .errors import ConfigError
from .pipeline import TrainConfig
from .rf_distortion import DistortionParams, RefreshPolicy


@dataclass(frozen=True)
class CarrierSection:
    f_ul_hz: float = 5.1e9
    f_dl_hz: float = 5.3e9
    light_speed_mps: float = SPEED_OF_LIGHT
    spacing_m: float | None = None


@dataclass(frozen=True)
class DatasetSection:
    train: int = 30_000
    val: int = 5_000
    test: int = 15_000
    mixed_snr: bool = False

    def __post_init__(self):
        for name in ("train", "val", "test"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} size must be positive")

    def sizes(self) -> dict:
        return {"train": self.train, "val": self.val, "test": self.test}


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    antennas: tuple = (64,)
    snr_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    out_dir: str = "runs/default"
    speed_kmh: float = 300.0
    pilot_root: int = 1
    shared_model: bool = False
    carrier: CarrierSection = field(default_factory=CarrierSection)
    paths: ClusterConfig = field(default_factory=ClusterConfig)
    distortion: DistortionParams = field(default_factory=DistortionParams)
    dataset: DatasetSection = field(default_factory=DatasetSection)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.seed is None or isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be an explicit non-negative integer")
        object.__setattr__(self, "antennas", tuple(int(n) for n in self.antennas))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        if not self.antennas or any(n < self.train.min_antennas for n in self.antennas):
            raise ValueError(f"antennas must be a non-empty list of ints >= {self.train.min_antennas}")
        if not self.snr_db or any(math.isnan(s) for s in self.snr_db):
            raise ValueError("snr_db must be a non-empty list of numbers")
        if self.speed_kmh < 0:
            raise ValueError("speed_kmh must be non-negative")

    def carrier_for(self, n: int) -> CarrierConfig:
        c = self.carrier
        return CarrierConfig(n, c.f_ul_hz, c.f_dl_hz, c.spacing_m, c.light_speed_mps)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def data_hash(self, n: int) -> bytes:
        """Digest of everything that shapes the generated data for width ``n`` except SNR and sizes."""
        payload = {
            "seed": self.seed, "antennas": n, "pilot_root": self.pilot_root,
            "carrier": dataclasses.asdict(self.carrier), "paths": dataclasses.asdict(self.paths),
            "distortion": {"delta_r2": self.distortion.delta_r2, "theta_r_rad": self.distortion.theta_r,
                           "refresh": self.distortion.refresh.value},
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).digest()


_SECTIONS = {
    "carrier": CarrierSection,
    "paths": ClusterConfig,
    "dataset": DatasetSection,
}
_TOP_KEYS = {"seed", "antennas", "snr_db", "out_dir", "speed_kmh", "pilot_root"}
_DISTORTION_KEYS = {"delta_r2", "theta_r_rad", "refresh"}


def _locate(text: str, section: str | None, key: str) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (top level when section is None)."""
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        m = re.match(r"^\[([^\]]+)\]", stripped)
        if m:
            current = m.group(1).strip()
            continue
        if current == section and re.match(rf"^{re.escape(key)}\s*=", stripped):
            return lineno
    return None


def _err(source: str, text: str, section, key, msg) -> ConfigError:
    line = _locate(text, section, key) if text else None
    where = f"{source}:{line}" if line else source
    name = f"{section}.{key}" if section else key
    return ConfigError(f"{where}: {name}: {msg}")


def _build_section(cls, values: dict, section: str, source: str, text: str):
    known = {f.name for f in dataclasses.fields(cls)}
    for k in values:
        if k not in known:
            raise _err(source, text, section, k, "unknown key")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        key = next((k for k in values if k in str(exc)), next(iter(values), ""))
        raise _err(source, text, section, key, str(exc)) from exc


def config_from_dict(data: dict, source: str = "<config>", text: str = "") -> ExperimentConfig:
    data = dict(data)
    kwargs = {}
    for k in list(data):
        if k in _SECTIONS or k in ("distortion", "train"):
            continue
        if k not in _TOP_KEYS:
            raise _err(source, text, None, k, "unknown key")
        kwargs[k] = data.pop(k)
    if "seed" not in kwargs:
        raise ConfigError(f"{source}: seed: required (no implicit entropy)")
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _build_section(cls, data.pop(name), name, source, text)
    if "distortion" in data:
        d = dict(data.pop("distortion"))
        for k in d:
            if k not in _DISTORTION_KEYS:
                raise _err(source, text, "distortion", k, "unknown key")
        if "theta_r_rad" in d:
            d["theta_r"] = d.pop("theta_r_rad")
        try:
            if "refresh" in d:
                d["refresh"] = RefreshPolicy(d["refresh"])
            kwargs["distortion"] = DistortionParams(**d)
        except ValueError as exc:
            key = "refresh" if "RefreshPolicy" in str(exc) else ("delta_r2" if "delta" in str(exc) else "theta_r_rad")
            raise _err(source, text, "distortion", key, str(exc)) from exc
    if "train" in data:
        t = dict(data.pop("train"))
        if "shared_model" in t:
            kwargs["shared_model"] = t.pop("shared_model")
        kwargs["train"] = _build_section(TrainConfig, t, "train", source, text)
    for k, v in (("seed", int), ("pilot_root", int)):
        if k in kwargs and (isinstance(kwargs[k], bool) or not isinstance(kwargs[k], v)):
            raise _err(source, text, None, k, f"expected an integer, got {kwargs[k]!r}")
    try:
        return ExperimentConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        key = next((k for k in kwargs if k in str(exc)), "seed")
        raise _err(source, text, None, key, str(exc)) from exc


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return config_from_dict(data, source, text)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def config_to_dict(cfg: ExperimentConfig) -> dict:
    carrier = {k: v for k, v in dataclasses.asdict(cfg.carrier).items() if v is not None}
    train = dataclasses.asdict(cfg.train)
    train["shared_model"] = cfg.shared_model
    return {
        "seed": cfg.seed,
        "antennas": list(cfg.antennas),
        "snr_db": list(cfg.snr_db),
        "out_dir": cfg.out_dir,
        "speed_kmh": cfg.speed_kmh,
        "pilot_root": cfg.pilot_root,
        "carrier": carrier,
        "paths": dataclasses.asdict(cfg.paths),
        "distortion": {"delta_r2": cfg.distortion.delta_r2, "theta_r_rad": cfg.distortion.theta_r,
                       "refresh": cfg.distortion.refresh.value},
        "dataset": dataclasses.asdict(cfg.dataset),
        "train": train,
    }


def serialize_config(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(serialize_config(cfg))
