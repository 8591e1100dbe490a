"""Dist-LeaNet / Amp-PreNet construction, joint training and cascaded inference.

Dist-LeaNet: input batch norm, N -> 2N (linear) -> N (linear).
Amp-PreNet:  N -> 2N (leaky ReLU) -> N (linear), no batch norm.

Dist-LeaNet is fitted to the clean uplink amplitude and Amp-PreNet to the
downlink amplitude, either in two phases (default) or simultaneously on
``w_ul * MSE(g_hat, |g|) + w_dl * MSE(h_hat, |h|)`` with the downlink error
back-propagated through both networks. The ablation trains Amp-PreNet alone
on distorted inputs.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .datasets import AmplitudeSet
from .errors import NumericError
from .metrics import nmse
from .nn import LINEAR, LRELU, Adam, BatchNorm, DenseLayer, MlpModel, backward, forward, mse_loss
from .rng import substream

log = logging.getLogger(__name__)

CASCADE = "proposed"
ABLATION = "proposed-without-dist-leanet"
TWO_PHASE = "two-phase"
SIMULTANEOUS = "simultaneous"
SCHEDULES = (TWO_PHASE, SIMULTANEOUS)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 256
    max_epochs: int = 200
    patience: int = 20
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    lrelu_alpha: float = 0.01
    bn_momentum: float = 0.99
    bn_eps: float = 1e-5
    weight_uplink: float = 1.0
    weight_downlink: float = 1.0
    min_antennas: int = 2
    schedule: str = "two-phase"

    def __post_init__(self):
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (input batch norm)")
        if self.max_epochs < 1 or self.patience < 1:
            raise ValueError("max_epochs and patience must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")


def build_dist_leanet(n: int, rng: np.random.Generator, config: TrainConfig = TrainConfig()) -> MlpModel:
    _check_width(n, config)
    return MlpModel(
        [DenseLayer.glorot(n, 2 * n, rng, LINEAR), DenseLayer.glorot(2 * n, n, rng, LINEAR)],
        BatchNorm.fresh(n, config.bn_momentum, config.bn_eps),
        name="dist-leanet",
    )


def build_amp_prenet(n: int, rng: np.random.Generator, config: TrainConfig = TrainConfig()) -> MlpModel:
    _check_width(n, config)
    return MlpModel(
        [DenseLayer.glorot(n, 2 * n, rng, LRELU, config.lrelu_alpha),
         DenseLayer.glorot(2 * n, n, rng, LINEAR, config.lrelu_alpha)],
        None,
        name="amp-prenet",
    )


def build_networks(n: int, rng: np.random.Generator, config: TrainConfig = TrainConfig()):
    """Both networks of the cascade; Dist-LeaNet is initialised first from ``rng``."""
    return build_dist_leanet(n, rng, config), build_amp_prenet(n, rng, config)


def _check_width(n, config):
    if n < config.min_antennas:
        raise ValueError(f"N={n} is below the configured floor {config.min_antennas}")


def hidden_width(model: MlpModel) -> int:
    return model.layers[0].out_dim


def cascade_step(dist: MlpModel, amp: MlpModel, x, g, h, w_ul: float = 1.0, w_dl: float = 1.0,
                 update_stats: bool = True):
    """Joint loss and gradients for one batch.

    Returns ``(total, uplink_mse, downlink_mse, grads)`` where ``grads`` keys
    are ``dist.<param>`` / ``amp.<param>``.
    """
    g_hat, c1 = forward(dist, x, "train", update_stats)
    h_hat, c2 = forward(amp, g_hat, "train")
    l_ul, d_ul = mse_loss(g_hat, g)
    l_dl, d_dl = mse_loss(h_hat, h)
    grads_amp, d_in = backward(amp, c2, w_dl * d_dl)
    grads_dist, _ = backward(dist, c1, w_ul * d_ul + d_in)
    grads = {f"dist.{k}": v for k, v in grads_dist.items()}
    grads.update({f"amp.{k}": v for k, v in grads_amp.items()})
    return w_ul * l_ul + w_dl * l_dl, l_ul, l_dl, grads


def ablation_step(amp: MlpModel, x, h):
    h_hat, cache = forward(amp, x, "train")
    loss, d = mse_loss(h_hat, h)
    grads, _ = backward(amp, cache, d)
    return loss, {f"amp.{k}": v for k, v in grads.items()}


def predict(dist: MlpModel, amp: MlpModel, features):
    """Infer-mode cascade: ``(calibrated uplink amplitude, predicted downlink amplitude)``."""
    features = np.atleast_2d(features)
    if features.shape[1] != dist.in_dim:
        raise ValueError(f"feature width {features.shape[1]} != N={dist.in_dim}")
    g_hat, _ = forward(dist, features)
    h_hat, _ = forward(amp, g_hat)
    return g_hat, h_hat


def predict_ablation(amp: MlpModel, features):
    features = np.atleast_2d(features)
    if features.shape[1] != amp.in_dim:
        raise ValueError(f"feature width {features.shape[1]} != N={amp.in_dim}")
    return forward(amp, features)[0]


@dataclass
class TrainingRun:
    mode: str
    n: int
    seed: int | None
    config: TrainConfig
    amp: MlpModel = field(repr=False)
    dist: MlpModel | None = field(default=None, repr=False)
    epoch_losses: list = field(default_factory=list)  # dicts: phase, total, uplink, downlink
    val_nmse: list = field(default_factory=list)  # downlink, final phase
    val_uplink_nmse: list = field(default_factory=list)  # Dist-LeaNet phase of the two-phase schedule
    best_epoch: int = 0
    stopped_early: bool = False
    dataset_fingerprints: dict = field(default_factory=dict)
    distortion_fingerprint: str = ""
    config_hash: str = ""
    snr_db: float | None = None

    @property
    def best_val_nmse(self) -> float:
        return self.val_nmse[self.best_epoch - 1]

    def predict(self, features) -> np.ndarray:
        if self.dist is None:
            return predict_ablation(self.amp, features)
        return predict(self.dist, self.amp, features)[1]

    def report(self) -> dict:
        return {
            "mode": self.mode,
            "antennas": self.n,
            "seed": self.seed,
            "snr_db": _json_float(self.snr_db),
            "epochs_completed": len(self.epoch_losses),
            "best_epoch": self.best_epoch,
            "stopped_early": self.stopped_early,
            "final_val_nmse": self.best_val_nmse,
            "final_val_nmse_db": 10 * math.log10(self.best_val_nmse) if self.best_val_nmse > 0 else None,
            "epoch_losses": self.epoch_losses,
            "val_nmse": self.val_nmse,
            "val_uplink_nmse": self.val_uplink_nmse,
            "dataset_fingerprints": self.dataset_fingerprints,
            "distortion_fingerprint": self.distortion_fingerprint,
            "config_hash": self.config_hash,
            "train_config": asdict(self.config),
        }

    def report_text(self) -> str:
        return json.dumps(self.report(), indent=2, allow_nan=False)


def _json_float(x):
    if x is None:
        return None
    return x if math.isfinite(x) else str(x)


@dataclass
class TrainStreams:
    """Random streams for initialisation and epoch shuffling of each network.

    The ablation draws from the Amp-PreNet streams only, so with streams from
    ``from_seed`` it starts from the same weights and sees the same batch
    order as the cascade's Amp-PreNet; the two runs then differ only in their
    input features.
    """

    dist_init: np.random.Generator
    amp_init: np.random.Generator
    dist_shuffle: np.random.Generator
    amp_shuffle: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int, *labels) -> "TrainStreams":
        return cls(*(substream(seed, kind, net, *labels)
                     for kind, net in (("init", "dist-leanet"), ("init", "amp-prenet"),
                                       ("shuffle", "dist-leanet"), ("shuffle", "amp-prenet"))))

    @classmethod
    def single(cls, rng: np.random.Generator) -> "TrainStreams":
        """Every draw comes from ``rng`` in call order."""
        return cls(rng, rng, rng, rng)


def _streams(rng) -> TrainStreams:
    return rng if isinstance(rng, TrainStreams) else TrainStreams.single(rng)


def _check_pair(train: AmplitudeSet, val: AmplitudeSet):
    if train.n != val.n:
        raise ValueError(f"train width {train.n} != validation width {val.n}")


def _batches(rng, count, batch_size):
    perm = rng.permutation(count)
    for start in range(0, count, batch_size):
        idx = perm[start:start + batch_size]
        if idx.size >= 2:
            yield idx


@dataclass
class _History:
    losses: list = field(default_factory=list)
    val: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False


def _fit(label: str, models: dict, step_fn, val_fn, count: int, shuffle_rng, config: TrainConfig) -> _History:
    """Mini-batch Adam with early stopping on ``val_fn``; restores the best epoch's weights."""
    opt = Adam.for_models(models, lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps)
    hist = _History()
    best = {k: m.copy() for k, m in models.items()}
    best_score = math.inf
    since_best = 0
    for epoch in range(1, config.max_epochs + 1):
        sums = np.zeros(3)
        seen = 0
        for step, idx in enumerate(_batches(shuffle_rng, count, config.batch_size)):
            losses, grads = step_fn(idx)
            if not math.isfinite(losses[0]):
                raise NumericError(f"{label}: non-finite loss {losses} at epoch {epoch}, step {step}")
            opt.step(grads)
            sums += np.asarray(losses) * idx.size
            seen += idx.size
        total, up, down = (None if math.isnan(v) else float(v) for v in sums / seen)
        hist.losses.append({"total": total, "uplink": up, "downlink": down})
        score = val_fn()
        if not math.isfinite(score):
            raise NumericError(f"{label}: non-finite validation NMSE at epoch {epoch}")
        hist.val.append(score)
        log.debug("%s epoch %d loss %.6g val nmse %.6g", label, epoch, total, score)
        if score < best_score:
            best_score, since_best, hist.best_epoch = score, 0, epoch
            best = {k: m.copy() for k, m in models.items()}
        else:
            since_best += 1
            if since_best >= config.patience:
                hist.stopped_early = True
                break
    for k, m in models.items():
        m.load_state(best[k])
    return hist


def _new_run(mode, train, val, config, seed, amp, dist=None) -> TrainingRun:
    return TrainingRun(mode, train.n, seed, config, amp, dist, snr_db=train.snr_db,
                       dataset_fingerprints={"train": train.fingerprint(), "val": val.fingerprint()},
                       distortion_fingerprint=train.distortion_fingerprint.hex(),
                       config_hash=train.config_hash.hex())


def _record(run: TrainingRun, hist: _History, phase: int) -> None:
    run.epoch_losses += [dict(rec, phase=phase) for rec in hist.losses]


def joint_train(train: AmplitudeSet, val: AmplitudeSet, config: TrainConfig, rng,
                seed: int | None = None) -> TrainingRun:
    """Train the Dist-LeaNet -> Amp-PreNet cascade.

    ``rng`` is a ``TrainStreams`` or a single generator used for everything.

    ``schedule="two-phase"`` (default) first fits Dist-LeaNet to the clean
    uplink amplitude, early-stopping on validation uplink NMSE, then fits
    Amp-PreNet to the downlink amplitude on the frozen Dist-LeaNet output.
    ``schedule="simultaneous"`` minimises the weighted sum of both MSEs in one
    pass, back-propagating the downlink error through both networks. Either
    way the final phase early-stops on validation downlink NMSE and the best
    weights are restored.
    """
    _check_pair(train, val)
    streams = _streams(rng)
    dist = build_dist_leanet(train.n, streams.dist_init, config)
    amp = build_amp_prenet(train.n, streams.amp_init, config)
    run = _new_run(CASCADE, train, val, config, seed, amp, dist)

    if config.schedule == SIMULTANEOUS:
        w_ul, w_dl = config.weight_uplink, config.weight_downlink

        def step_fn(idx):
            total, l_ul, l_dl, grads = cascade_step(dist, amp, train.features[idx], train.uplink[idx],
                                                    train.downlink[idx], w_ul, w_dl)
            return (total, l_ul, l_dl), grads

        def val_fn():
            return nmse(predict(dist, amp, val.features)[1], val.downlink).linear

        hist = _fit(CASCADE, {"dist": dist, "amp": amp}, step_fn, val_fn, len(train), streams.amp_shuffle,
                    config)
        _record(run, hist, 1)
    else:
        def dist_step(idx):
            g_hat, cache = forward(dist, train.features[idx], "train")
            loss, d = mse_loss(g_hat, train.uplink[idx])
            grads, _ = backward(dist, cache, d)
            return (loss, loss, math.nan), {f"dist.{k}": v for k, v in grads.items()}

        def dist_val():
            return nmse(forward(dist, val.features)[0], val.uplink).linear

        hist1 = _fit(CASCADE + "/dist-leanet", {"dist": dist}, dist_step, dist_val, len(train),
                     streams.dist_shuffle, config)
        _record(run, hist1, 1)
        run.val_uplink_nmse = hist1.val
        g_train = forward(dist, train.features)[0]
        g_val = forward(dist, val.features)[0]

        def amp_step(idx):
            loss, grads = ablation_step(amp, g_train[idx], train.downlink[idx])
            return (loss, math.nan, loss), grads

        def amp_val():
            return nmse(forward(amp, g_val)[0], val.downlink).linear

        hist = _fit(CASCADE + "/amp-prenet", {"amp": amp}, amp_step, amp_val, len(train), streams.amp_shuffle,
                    config)
        _record(run, hist, 2)
    run.val_nmse = hist.val
    run.best_epoch = hist.best_epoch
    run.stopped_early = hist.stopped_early
    return run


def train_ablation(train: AmplitudeSet, val: AmplitudeSet, config: TrainConfig, rng,
                   seed: int | None = None) -> TrainingRun:
    """Amp-PreNet trained from scratch on distorted amplitudes (no Dist-LeaNet)."""
    _check_pair(train, val)
    streams = _streams(rng)
    amp = build_amp_prenet(train.n, streams.amp_init, config)
    run = _new_run(ABLATION, train, val, config, seed, amp)

    def step_fn(idx):
        loss, grads = ablation_step(amp, train.features[idx], train.downlink[idx])
        return (loss, math.nan, loss), grads

    def val_fn():
        return nmse(predict_ablation(amp, val.features), val.downlink).linear

    hist = _fit(ABLATION, {"amp": amp}, step_fn, val_fn, len(train), streams.amp_shuffle, config)
    _record(run, hist, 1)
    run.val_nmse = hist.val
    run.best_epoch = hist.best_epoch
    run.stopped_early = hist.stopped_early
    return run
