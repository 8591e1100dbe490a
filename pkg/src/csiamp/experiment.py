"""Per-cell dataset generation, training and the (N, SNR) sweep.

A cell is one (antenna count, SNR) point. Its datasets live in
``<out_dir>/N<n>/snr<db>/{train,val,test}.bin``; the per-experiment hardware
instance for width ``n`` is pinned in ``<out_dir>/N<n>/distortion.bin``.
"""

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .datasets import AmplitudeSet, generate_amplitude_set, read_dataset, write_dataset
from .errors import CsiAmpError
from .frontend import zc_pilot
from .metrics import nmse
from .pipeline import ABLATION, CASCADE, TrainStreams, joint_train, train_ablation
from .rf_distortion import DistortionMatrix, RefreshPolicy, sample_distortion
from .rng import snr_label, substream

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
MIXED = "mixed"


def cell_dir(out_dir, n: int, snr_db) -> Path:
    tag = MIXED if snr_db == MIXED else f"snr{float(snr_db):g}"
    return Path(out_dir) / f"N{n}" / tag


def experiment_distortion(cfg: ExperimentConfig, n: int) -> DistortionMatrix:
    """The hardware instance shared by every dataset of width ``n``."""
    return sample_distortion(substream(cfg.seed, "distortion", f"N={n}"), cfg.distortion, n)


def generate_split(cfg: ExperimentConfig, n: int, snr_db, split: str, count: int | None = None,
                   distortion: DistortionMatrix | None = None) -> AmplitudeSet:
    """One split of one cell.

    Channel streams depend only on ``(N, split)`` so every SNR point sees the
    same channel realizations; noise streams are keyed by SNR as well.
    ``snr_db == "mixed"`` draws each record's SNR from the configured grid.
    """
    count = cfg.dataset.sizes()[split] if count is None else count
    snr_key = MIXED if snr_db == MIXED else snr_label(snr_db)
    kwargs = {}
    if cfg.distortion.refresh == RefreshPolicy.PER_SAMPLE:
        kwargs["distortion_params"] = cfg.distortion
        kwargs["distortion_rng"] = substream(cfg.seed, "distortion", f"N={n}", snr_key, split)
    else:
        kwargs["distortion"] = distortion if distortion is not None else experiment_distortion(cfg, n)
    snr = cfg.snr_db if snr_db == MIXED else float(snr_db)
    if snr_db == MIXED:
        kwargs["snr_rng"] = substream(cfg.seed, "snr-choice", f"N={n}", split)
    return generate_amplitude_set(
        count, cfg.carrier_for(n), cfg.paths, zc_pilot(n, cfg.pilot_root), snr,
        channel_rng=substream(cfg.seed, "channel", f"N={n}", split),
        noise_rng=substream(cfg.seed, "noise", f"N={n}", snr_key, split),
        config_hash=cfg.data_hash(n), **kwargs,
    )


def generate_cell(cfg: ExperimentConfig, n: int, snr_db, splits=SPLITS) -> dict:
    distortion = None
    if cfg.distortion.refresh == RefreshPolicy.PER_EXPERIMENT:
        distortion = experiment_distortion(cfg, n)
    return {s: generate_split(cfg, n, snr_db, s, distortion=distortion) for s in splits}


def write_cell(cfg: ExperimentConfig, n: int, snr_db, data: dict) -> dict:
    d = cell_dir(cfg.out_dir, n, snr_db)
    d.mkdir(parents=True, exist_ok=True)
    paths = {}
    for split, ds in data.items():
        paths[split] = d / f"{split}.bin"
        write_dataset(paths[split], ds)
    if cfg.distortion.refresh == RefreshPolicy.PER_EXPERIMENT:
        experiment_distortion(cfg, n).save(d.parent / "distortion.bin")
    return paths


def read_cell(out_dir, n: int, snr_db) -> dict:
    d = cell_dir(out_dir, n, snr_db)
    return {s: read_dataset(d / f"{s}.bin") for s in SPLITS if (d / f"{s}.bin").exists()}


def train_cell(cfg: ExperimentConfig, train: AmplitudeSet, val: AmplitudeSet, scheme: str, snr_key):
    """Train one scheme on one cell.

    Streams are keyed by (N, SNR) but not by scheme: the ablation and the
    cascade's Amp-PreNet share initial weights and batch order.
    """
    streams = TrainStreams.from_seed(cfg.seed, f"N={train.n}", MIXED if snr_key == MIXED else snr_label(snr_key))
    trainer = joint_train if scheme == CASCADE else train_ablation
    return trainer(train, val, cfg.train, streams, seed=cfg.seed)


RESULT_COLUMNS = ("scheme", "N", "snr_db", "seed", "nmse_db", "nmse_linear", "samples")


@dataclass
class SweepRow:
    scheme: str
    n: int
    snr_db: float
    seed: int
    nmse_linear: float
    samples: int
    error: str = ""

    @property
    def nmse_db(self) -> float:
        return 10 * math.log10(self.nmse_linear) if self.nmse_linear > 0 else math.nan


def sweep(cfg: ExperimentConfig, schemes=(CASCADE, ABLATION)) -> list:
    """Train and test every scheme in every (N, SNR) cell of the configuration.

    A failing cell is logged and reported with NaN NMSE; the others still run.
    With ``shared_model`` one model per (N, scheme) is trained on mixed-SNR
    data and evaluated on every SNR's test split.
    """
    rows = []
    for n in cfg.antennas:
        shared = {}
        if cfg.shared_model:
            mixed = generate_cell(cfg, n, MIXED, splits=("train", "val"))
            for scheme in schemes:
                try:
                    shared[scheme] = train_cell(cfg, mixed["train"], mixed["val"], scheme, MIXED)
                except CsiAmpError as exc:
                    log.error("N=%d %s shared model failed: %s", n, scheme, exc)
        for snr in cfg.snr_db:
            if cfg.shared_model:
                data = generate_cell(cfg, n, snr, splits=("test",))
            else:
                data = generate_cell(cfg, n, snr)
            test = data["test"]
            for scheme in schemes:
                try:
                    if cfg.shared_model:
                        if scheme not in shared:
                            raise CsiAmpError("shared model unavailable")
                        run = shared[scheme]
                    else:
                        run = train_cell(cfg, data["train"], data["val"], scheme, snr)
                    value = nmse(run.predict(test.features), test.downlink).linear
                    rows.append(SweepRow(scheme, n, snr, cfg.seed, value, len(test)))
                except (CsiAmpError, ValueError, FloatingPointError) as exc:
                    log.error("cell N=%d snr=%g %s failed: %s", n, snr, scheme, exc)
                    rows.append(SweepRow(scheme, n, snr, cfg.seed, math.nan, len(test), str(exc)))
                else:
                    log.info("N=%d snr=%g %s nmse %.3f dB", n, snr, scheme, rows[-1].nmse_db)
    return rows


def format_result_table(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in rows:
        w.writerow([r.scheme, r.n, f"{r.snr_db:g}", r.seed, f"{r.nmse_db:.6f}", repr(r.nmse_linear), r.samples])
    return buf.getvalue()


def parse_result_table(text: str) -> list:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append(SweepRow(rec["scheme"], int(rec["N"]), float(rec["snr_db"]), int(rec["seed"]),
                             float(rec["nmse_linear"]), int(rec["samples"])))
    return rows


def distortion_samples(cfg: ExperimentConfig, count: int) -> np.ndarray:
    """Pool of i.i.d. gains from the configured distribution, for PDF reports."""
    rng = substream(cfg.seed, "distortion-pdf")
    return sample_distortion(rng, cfg.distortion, count).gains
