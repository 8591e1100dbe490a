"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

import argparse
import dataclasses
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import experiment as exp
from .config import ExperimentConfig, load_config, save_config
from .datasets import read_dataset
from .errors import ConfigError, DataError, FingerprintError, NumericError
from .metrics import SCHEMES, complexity_report, coherence_time, kmh_to_mps, max_doppler, nmse
from .nn import load_model, save_model
from .pipeline import ABLATION, CASCADE, build_networks, predict, predict_ablation
from .rf_distortion import RefreshPolicy, distortion_pdf_report
from .timing import ENGINES, FUSED, measure_latency

log = logging.getLogger("csiamp")

EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4
DIST_FILE = "dist_leanet.mlp"
AMP_FILE = "amp_prenet.mlp"
ABLATION_FILE = "amp_prenet_ablation.mlp"
RUN_FILE = "run.json"
ABLATION_RUN_FILE = "run_ablation.json"


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _add_experiment_flags(p):
    p.add_argument("--config", type=Path, help="TOML experiment config")
    p.add_argument("--seed", type=int)
    p.add_argument("--antennas", type=_int_list, help="comma-separated antenna counts")
    p.add_argument("--snr-db", type=_float_list, help="comma-separated SNR grid in dB ('inf' allowed)")
    p.add_argument("--delta-r2", type=float, help="variance of ln|r|")
    p.add_argument("--theta-r", type=float, help="phase half-range in radians")
    p.add_argument("--samples", type=_int_list, help="train,val,test record counts")
    p.add_argument("--out", type=Path, help="output directory")


def _add_train_flags(p):
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)


def experiment_config(args) -> ExperimentConfig:
    """Config file (if any) with command-line overrides applied."""
    if args.config is not None:
        cfg = load_config(args.config)
        seed = args.seed if getattr(args, "seed", None) is not None else cfg.seed
    else:
        if getattr(args, "seed", None) is None:
            raise ConfigError("a seed is required: pass --seed or --config")
        seed = args.seed
        cfg = None
    try:
        cfg = cfg.replace(seed=seed) if cfg is not None else ExperimentConfig(seed=seed)
        if getattr(args, "antennas", None):
            cfg = cfg.replace(antennas=tuple(args.antennas))
        if getattr(args, "snr_db", None):
            cfg = cfg.replace(snr_db=tuple(args.snr_db))
        if getattr(args, "delta_r2", None) is not None or getattr(args, "theta_r", None) is not None:
            d = cfg.distortion
            cfg = cfg.replace(distortion=type(d)(
                args.delta_r2 if args.delta_r2 is not None else d.delta_r2,
                args.theta_r if args.theta_r is not None else d.theta_r, d.refresh))
        if getattr(args, "samples", None):
            if len(args.samples) != 3:
                raise ConfigError("--samples expects train,val,test")
            ds = cfg.dataset
            cfg = cfg.replace(dataset=type(ds)(*args.samples, ds.mixed_snr))
        if getattr(args, "out", None) is not None:
            cfg = cfg.replace(out_dir=str(args.out))
        overrides = {k: getattr(args, a) for k, a in (("max_epochs", "epochs"), ("lr", "lr"), ("batch_size", "batch"))
                     if getattr(args, a, None) is not None}
        if overrides:
            cfg = cfg.replace(train=dataclasses.replace(cfg.train, **overrides))
    except ValueError as exc:
        raise ConfigError(f"invalid option: {exc}") from exc
    return cfg


def cmd_gen_data(args) -> int:
    cfg = experiment_config(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.toml")
    cells = [exp.MIXED] if cfg.dataset.mixed_snr else list(cfg.snr_db)
    for n in cfg.antennas:
        for snr in cells:
            data = exp.generate_cell(cfg, n, snr)
            paths = exp.write_cell(cfg, n, snr, data)
            print(f"N={n} snr={snr}: " + ", ".join(f"{s}={len(data[s])} -> {p}" for s, p in paths.items()))
    return 0


def _check_compatible(ref, other, what):
    if ref.n != other.n:
        raise FingerprintError(f"{what}: antenna count {other.n} != {ref.n}")
    if ref.distortion_fingerprint != other.distortion_fingerprint:
        raise FingerprintError(f"{what}: distortion fingerprint differs")
    if ref.config_hash != other.config_hash:
        raise FingerprintError(f"{what}: generated under a different configuration")
    same_snr = (ref.mixed_snr and other.mixed_snr) or ref.snr_db == other.snr_db or \
        (math.isnan(ref.snr_db) and math.isnan(other.snr_db))
    if not same_snr:
        raise FingerprintError(f"{what}: SNR {other.snr_db} != {ref.snr_db}")


def _train_paths(args):
    if args.data is not None:
        return args.data / "train.bin", args.data / "val.bin"
    if args.train is None or args.val is None:
        raise ConfigError("pass --data DIR or both --train and --val")
    return args.train, args.val


def cmd_train(args) -> int:
    train_path, val_path = _train_paths(args)
    train = read_dataset(train_path)
    val = read_dataset(val_path)
    _check_compatible(train, val, "validation set")
    if args.config is None and args.seed is None:
        # fall back to the config that gen-data stored next to the cell directories
        stored = Path(train_path).parent.parent.parent / "config.toml"
        if stored.exists():
            args.config = stored
    cfg = experiment_config(args)
    out = Path(args.out) if args.out is not None else Path(train_path).parent / "models"
    out.mkdir(parents=True, exist_ok=True)
    snr_key = exp.MIXED if train.mixed_snr else train.snr_db
    scheme = ABLATION if args.no_dist_leanet else CASCADE
    run = exp.train_cell(cfg, train, val, scheme, snr_key)
    if scheme == CASCADE:
        save_model(run.dist, out / DIST_FILE)
        save_model(run.amp, out / AMP_FILE)
        (out / RUN_FILE).write_text(run.report_text())
    else:
        save_model(run.amp, out / ABLATION_FILE)
        (out / ABLATION_RUN_FILE).write_text(run.report_text())
    print(f"{scheme}: epochs={len(run.epoch_losses)} best={run.best_epoch} "
          f"val_nmse={10 * math.log10(run.best_val_nmse):.3f} dB -> {out}")
    return 0


def _check_run_against(report_path: Path, test):
    if not report_path.exists():
        return
    rep = json.loads(report_path.read_text())
    if rep.get("distortion_fingerprint") and rep["distortion_fingerprint"] != test.distortion_fingerprint.hex():
        raise FingerprintError(f"test set distortion fingerprint differs from {report_path}")
    if rep.get("config_hash") and rep["config_hash"] != test.config_hash.hex():
        raise FingerprintError(f"test set was generated under a different configuration than {report_path}")
    if rep.get("antennas") != test.n:
        raise FingerprintError(f"model width {rep.get('antennas')} != test width {test.n}")


def cmd_eval(args) -> int:
    test = read_dataset(args.test)
    models = Path(args.models)
    rows = []
    if (models / DIST_FILE).exists() and (models / AMP_FILE).exists():
        _check_run_against(models / RUN_FILE, test)
        dist, amp = load_model(models / DIST_FILE), load_model(models / AMP_FILE)
        if dist.in_dim != test.n:
            raise FingerprintError(f"model width {dist.in_dim} != test width {test.n}")
        pred = predict(dist, amp, test.features)[1]
        rows.append(nmse(pred, test.downlink, snr_db=test.snr_db, scheme=CASCADE))
    if (models / ABLATION_FILE).exists():
        _check_run_against(models / ABLATION_RUN_FILE, test)
        amp = load_model(models / ABLATION_FILE)
        if amp.in_dim != test.n:
            raise FingerprintError(f"model width {amp.in_dim} != test width {test.n}")
        rows.append(nmse(predict_ablation(amp, test.features), test.downlink, snr_db=test.snr_db, scheme=ABLATION))
    if not rows:
        raise DataError(f"no model files found in {models}")
    table = exp.format_result_table(
        [exp.SweepRow(r.scheme, test.n, r.snr_db, -1, r.linear, r.samples) for r in rows])
    print(table, end="")
    if args.out is not None:
        Path(args.out).write_text(table)
    return 0


def cmd_sweep(args) -> int:
    cfg = experiment_config(args)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_config(cfg, out / "config.toml")
    rows = exp.sweep(cfg)
    table = exp.format_result_table(rows)
    (out / "results.csv").write_text(table)
    print(table, end="")
    return EXIT_NUMERIC if any(r.error for r in rows) else 0


def cmd_flops(args) -> int:
    print(complexity_report(args.n).to_text())
    return 0


def cmd_timing(args) -> int:
    results = []
    for n in args.n:
        if args.models is not None:
            dist = load_model(Path(args.models) / DIST_FILE)
            amp = load_model(Path(args.models) / AMP_FILE)
            if dist.in_dim != n:
                continue
        else:
            dist, amp = build_networks(n, np.random.default_rng(args.seed))
        for engine in ENGINES if args.engine == "all" else (args.engine,):
            rep = measure_latency(dist, amp, args.trials, engine=engine)
            results.append(rep.to_dict())
            verdict = "PASS" if rep.passes else "FAIL"
            print(f"N={n} [{engine}]: mean {rep.mean_ms:.4f} ms, p99 {rep.p99_ms:.4f} ms over {rep.trials} "
                  f"trials (coherence {rep.coherence_ms:.4f} ms) {verdict}")
    if args.out is not None:
        Path(args.out).write_text(json.dumps(results, indent=2))
    return 0


def cmd_report(args) -> int:
    cfg = experiment_config(args)
    v = kmh_to_mps(cfg.speed_kmh)
    c = cfg.carrier.light_speed_mps
    f_ul = max_doppler(v, cfg.carrier.f_ul_hz, c)
    f_dl = max_doppler(v, cfg.carrier.f_dl_hz, c)
    print(f"speed {cfg.speed_kmh:g} km/h: max Doppler uplink {f_ul:.1f} Hz, downlink {f_dl:.1f} Hz")
    if f_dl > 0:
        print(f"downlink coherence time {coherence_time(f_dl) * 1e3:.4f} ms")
    print()
    print(complexity_report(cfg.antennas).to_text())
    print()
    if cfg.distortion.refresh == RefreshPolicy.PER_EXPERIMENT:
        print("distortion refresh: per-experiment (one hardware instance per antenna count)")
    else:
        print("distortion refresh: per-sample")
    print(distortion_pdf_report(exp.distortion_samples(cfg, args.pdf_samples)).to_text())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="csiamp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="simulate train/val/test amplitude datasets")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the cascade (or the ablation) on one cell")
    p.add_argument("--data", type=Path, help="cell directory with train.bin and val.bin")
    p.add_argument("--train", type=Path)
    p.add_argument("--val", type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-dist-leanet", action="store_true", help="train the Amp-PreNet-only ablation")
    p.add_argument("--out", type=Path, help="model output directory")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="test NMSE of trained models")
    p.add_argument("--models", type=Path, required=True)
    p.add_argument("--test", type=Path, required=True)
    p.add_argument("--out", type=Path, help="write the result table here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="generate, train and test every (N, SNR) cell")
    _add_experiment_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("flops", help="FLOPs table and crossover")
    p.add_argument("--n", type=_int_list, default=[64, 128, 256])
    p.set_defaults(func=cmd_flops)

    p = sub.add_parser("timing", help="per-sample inference latency vs coherence time")
    p.add_argument("--n", type=_int_list, default=[64, 128, 256])
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--models", type=Path, help="use trained models instead of random weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--engine", choices=(*ENGINES, "all"), default=FUSED,
                   help="fused: Dist-LeaNet folded to one affine map; reference: layer-by-layer predict")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_timing)

    p = sub.add_parser("report", help="distortion PDFs, mobility figures and complexity")
    _add_experiment_flags(p)
    p.add_argument("--pdf-samples", type=int, default=100_000)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
