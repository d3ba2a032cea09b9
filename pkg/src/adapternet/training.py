"""Training loops: backbone pre-training, adapter training, fine-tuning.

All three share one minibatch loop. Runs are deterministic for a fixed
config: epoch e shuffles with np.random.default_rng([seed, e]), so results
do not depend on how many times the RNG was consumed beforehand.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .data import LabeledDataset, Split, require_trainable
from .models import Backbone, BackboneConfig, Pipeline, build_backbone
from .optim import make_optimizer


class NotFrozenError(RuntimeError):
    """Raised when adapter training would also update backbone weights."""


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 60
    early_stop_patience: int = 8
    seed: int = 0
    verbose: bool = False

    def validate(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.early_stop_patience < 1:
            raise ValueError(
                f"early_stop_patience must be >= 1, got {self.early_stop_patience}")
        return self


ADAPTER_DEFAULTS = TrainConfig(learning_rate=1e-2)
FINETUNE_DEFAULTS = TrainConfig(learning_rate=1e-4)
BACKBONE_DEFAULTS = TrainConfig(max_epochs=15, early_stop_patience=3)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_top1: float
    seconds: float


@dataclass
class TrainLog:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_val_top1: float = 0.0
    stopped_early: bool = False

    def to_csv(self) -> str:
        """Per-epoch curve for plotting: epoch, train loss, val top-1."""
        lines = ["epoch,train_loss,val_top1"]
        for r in self.epochs:
            lines.append(f"{r.epoch},{r.train_loss:.6f},{r.val_top1:.6f}")
        return "\n".join(lines) + "\n"


def _epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    return np.random.default_rng([int(seed), int(epoch)]).permutation(n)


def _eval_pass(forward, split: Split, batch_size: int) -> tuple[float, float]:
    """Mean loss and top-1 accuracy without recording gradients."""
    total_loss = 0.0
    correct = 0
    n = len(split)
    with ad.no_grad():
        for lo in range(0, n, batch_size):
            xb = split.images[lo:lo + batch_size]
            yb = split.labels[lo:lo + batch_size]
            logits = forward(xb)
            loss = ad.softmax_cross_entropy(logits, yb)
            total_loss += float(loss.data) * len(yb)
            correct += int(np.sum(np.argmax(logits.data, axis=1) == yb))
    return total_loss / n, correct / n


def _train_loop(params, forward, train: Split, val: Split,
                cfg: TrainConfig) -> TrainLog:
    """Minimize cross-entropy over params; keep best-val-accuracy weights."""
    cfg.validate()
    opt = make_optimizer(cfg.optimizer, params, cfg.learning_rate)
    log = TrainLog()
    best = [p.data.copy() for p in params]
    since_improve = 0

    for epoch in range(cfg.max_epochs):
        t0 = time.monotonic()
        order = _epoch_order(len(train), cfg.seed, epoch)
        running = 0.0
        for lo in range(0, len(order), cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            xb = train.images[idx]
            yb = train.labels[idx]
            opt.zero_grad()
            with ad.record():
                loss = ad.softmax_cross_entropy(forward(xb), yb)
            loss.backward()
            opt.step()
            running += float(loss.data) * len(idx)

        val_loss, val_top1 = _eval_pass(forward, val, cfg.batch_size)
        rec = EpochRecord(epoch, running / len(order), val_loss, val_top1,
                          time.monotonic() - t0)
        log.epochs.append(rec)
        if cfg.verbose:
            print(f"epoch {epoch:3d}  train {rec.train_loss:.4f}  "
                  f"val {val_loss:.4f}  top1 {val_top1:.4f}  {rec.seconds:.1f}s")

        if val_top1 > log.best_val_top1:
            log.best_val_top1 = val_top1
            log.best_epoch = epoch
            best = [p.data.copy() for p in params]
            since_improve = 0
        else:
            since_improve += 1
            if since_improve >= cfg.early_stop_patience:
                log.stopped_early = True
                break

    for p, b in zip(params, best):
        p.data[...] = b
    return log


def train_backbone(dataset: LabeledDataset, config: BackboneConfig | None = None,
                   train_cfg: TrainConfig | None = None,
                   ) -> tuple[Backbone, np.ndarray, TrainLog]:
    """Pre-train a backbone on clean images.

    Returns (backbone, per-channel means, log). The means are computed over
    the training split and subtracted from every input at inference time, so
    they travel with the backbone from here on.
    """
    config = config or BackboneConfig()
    cfg = train_cfg or BACKBONE_DEFAULTS
    backbone = build_backbone(config)
    train, val = dataset.train, dataset.val

    x_train = train.images.astype(np.float32) / np.float32(255.0) \
        if train.images.dtype == np.uint8 else train.images.astype(np.float32)
    means = x_train.reshape(-1, x_train.shape[-1]).mean(axis=0).astype(np.float32)
    backbone.channel_means = means

    pipe = Pipeline(backbone=backbone, channel_means=means)
    log = _train_loop(backbone.parameters(), pipe.forward, train, val, cfg)
    return backbone, means, log


def train_adapter(pipeline: Pipeline, dataset: LabeledDataset,
                  train_cfg: TrainConfig | None = None,
                  require_identity_init: bool = True):
    """Train the pipeline's adapter against its frozen backbone.

    The backbone must be fully frozen; its weights are fingerprinted before
    and after so any accidental update is an error, not a silent drift. The
    adapter must be freshly identity-initialized (random init fails to learn;
    pass require_identity_init=False only for that negative control).
    Returns (adapter, log).
    """
    if pipeline.adapter is None:
        raise ValueError("pipeline has no adapter to train")
    if not pipeline.backbone.is_fully_frozen():
        raise NotFrozenError(
            "adapter training requires a fully frozen backbone; call "
            "freeze_all() first")
    if require_identity_init and not pipeline.adapter.is_identity():
        raise ValueError(
            "adapter is not identity-initialized; build a fresh one, or pass "
            "require_identity_init=False for the random-init negative control")
    require_trainable(dataset.train)
    require_trainable(dataset.val)
    cfg = train_cfg or ADAPTER_DEFAULTS

    before = pipeline.backbone.weight_fingerprints()
    log = _train_loop(pipeline.adapter.parameters(), pipeline.forward,
                      dataset.train, dataset.val, cfg)
    after = pipeline.backbone.weight_fingerprints()
    if before != after:
        raise NotFrozenError("backbone weights changed during adapter training")
    return pipeline.adapter, log


def fine_tune(backbone: Backbone, n_last: int, dataset: LabeledDataset,
              train_cfg: TrainConfig | None = None):
    """Fine-tune the last n_last trainable layers on a (cloned) backbone.

    The input backbone is left untouched; returns (tuned_clone, log).
    """
    require_trainable(dataset.train)
    require_trainable(dataset.val)
    cfg = train_cfg or FINETUNE_DEFAULTS

    tuned = backbone.clone()
    tuned.set_trainable_last(n_last)
    params = tuned.parameters(trainable_only=True)
    pipe = Pipeline(backbone=tuned)
    log = _train_loop(params, pipe.forward, dataset.train, dataset.val, cfg)
    return tuned, log
