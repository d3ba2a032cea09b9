"""Adapter network, desk-scale backbone classifier, and the composed pipeline.

The adapter is a stack of spatially-1x1, 3-channel conv layers with ReLU,
initialized so the whole stack is exactly the identity on non-negative input:
unit intra-channel weights, zero inter-channel weights, zero biases. The
backbone is a small VGG-style classifier trained in-repo; it stands in for a
large pre-trained model and is kept frozen while the adapter trains.

Inference order: adapter -> subtract per-channel means -> backbone.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .colorsim import quantize_u8


class AdapterNet:
    """k conv layers, each spatially 1x1 with 3 in/out channels, ReLU after each."""

    def __init__(self, k: int = 5, init: str = "identity", seed: int = 0):
        if k < 1:
            raise ValueError(f"adapter needs at least 1 layer, got k={k}")
        if init not in ("identity", "random"):
            raise ValueError(f"adapter init must be 'identity' or 'random', got {init!r}")
        self.k = k
        self.init = init
        self.layers = []
        rng = np.random.default_rng(seed)
        for _ in range(k):
            if init == "identity":
                w = np.zeros((1, 1, 3, 3), dtype=np.float32)
                w[0, 0, np.arange(3), np.arange(3)] = 1.0
            else:
                # negative control: He init, known to train poorly here
                scale = math.sqrt(2.0 / 3.0)  # python float keeps float32
                w = rng.standard_normal((1, 1, 3, 3), dtype=np.float32) * scale
            b = np.zeros(3, dtype=np.float32)
            self.layers.append((Tensor(w, requires_grad=True),
                                Tensor(b, requires_grad=True)))

    def forward(self, x: Tensor) -> Tensor:
        for w, b in self.layers:
            x = ad.relu(ad.conv2d(x, w, b, stride=1, padding="same"))
        return x

    def parameters(self) -> list[Tensor]:
        return [t for pair in self.layers for t in pair]

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = []
        for i, (w, b) in enumerate(self.layers):
            out.append((f"adapter{i}.w", w))
            out.append((f"adapter{i}.b", b))
        return out

    def is_identity(self) -> bool:
        """True while every layer still computes x -> x (untrained identity init)."""
        eye = np.zeros((1, 1, 3, 3), dtype=np.float32)
        eye[0, 0, np.arange(3), np.arange(3)] = 1.0
        return all(np.array_equal(w.data, eye) and not b.data.any()
                   for w, b in self.layers)

    def arch_descriptor(self) -> dict:
        return {"kind": "adapter", "k": self.k, "init": self.init}


def build_adapter(k: int, init: str = "identity", seed: int = 0) -> AdapterNet:
    """Identity-initialized adapter; forward(x) == x for any x >= 0."""
    return AdapterNet(k=k, init=init, seed=seed)


# ---------------------------------------------------------------------------
# backbone
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BackboneConfig:
    """Small VGG-style net: conv blocks (two 3x3 convs + 2x2 pool each),
    then a hidden dense layer and the classifier head."""

    input_size: int = 32
    in_channels: int = 3
    blocks: tuple[tuple[int, ...], ...] = ((16, 16), (32, 32))
    hidden_units: int = 128
    num_classes: int = 10
    seed: int = 0

    def validate(self):
        if self.input_size < 4 or self.input_size % (2 ** len(self.blocks)) != 0:
            raise ValueError(f"input_size {self.input_size} not divisible by "
                             f"2^{len(self.blocks)} (one pool per block)")
        if self.in_channels < 1 or self.hidden_units < 1 or self.num_classes < 2:
            raise ValueError("in_channels/hidden_units must be >= 1, num_classes >= 2")
        if not self.blocks or any(c < 1 for blk in self.blocks for c in blk):
            raise ValueError(f"invalid conv block spec {self.blocks}")


class _Conv:
    def __init__(self, name, w, b):
        self.name = name
        self.w = w
        self.b = b

    def __call__(self, x):
        return ad.conv2d(x, self.w, self.b, stride=1, padding="same")


class _Dense:
    def __init__(self, name, w, b):
        self.name = name
        self.w = w
        self.b = b

    def __call__(self, x):
        return ad.dense(x, self.w, self.b)


class _Relu:
    name = "relu"

    def __call__(self, x):
        return ad.relu(x)


class _Pool:
    name = "maxpool2"

    def __call__(self, x):
        return ad.maxpool2(x)


class _Flatten:
    name = "flatten"

    def __call__(self, x):
        return ad.reshape(x, (x.shape[0], -1))


class Backbone:
    """Frozen-able classifier with enumerable weight-bearing layers.

    ``trainable_layers`` lists the weight-bearing layers input->output;
    "last trainable layer" means the one nearest the output (the classifier
    head). Pool/relu/flatten layers carry no weights and do not count.
    """

    def __init__(self, config: BackboneConfig):
        config.validate()
        self.config = config
        self.channel_means: np.ndarray | None = None  # set when trained
        self.clean_top1: float | None = None          # cached clean baseline
        rng = np.random.default_rng(config.seed)

        def he_conv(cin, cout):
            std = np.sqrt(2.0 / (3 * 3 * cin))
            return rng.standard_normal((3, 3, cin, cout), dtype=np.float32) * np.float32(std)

        def he_dense(cin, cout):
            std = np.sqrt(2.0 / cin)
            return rng.standard_normal((cin, cout), dtype=np.float32) * np.float32(std)

        self.layers = []
        self.trainable_layers = []
        cin = config.in_channels
        size = config.input_size
        for bi, block in enumerate(config.blocks):
            for ci, cout in enumerate(block):
                conv = _Conv(f"conv{bi}_{ci}",
                             Tensor(he_conv(cin, cout), requires_grad=True),
                             Tensor(np.zeros(cout, dtype=np.float32), requires_grad=True))
                self.layers.append(conv)
                self.trainable_layers.append(conv)
                self.layers.append(_Relu())
                cin = cout
            self.layers.append(_Pool())
            size //= 2
        self.layers.append(_Flatten())
        flat = size * size * cin
        hidden = _Dense("dense_hidden",
                        Tensor(he_dense(flat, config.hidden_units), requires_grad=True),
                        Tensor(np.zeros(config.hidden_units, dtype=np.float32),
                               requires_grad=True))
        self.layers.append(hidden)
        self.trainable_layers.append(hidden)
        self.layers.append(_Relu())
        head = _Dense("dense_head",
                      Tensor(he_dense(config.hidden_units, config.num_classes),
                             requires_grad=True),
                      Tensor(np.zeros(config.num_classes, dtype=np.float32),
                             requires_grad=True))
        self.layers.append(head)
        self.trainable_layers.append(head)

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x

    # -- weight bookkeeping ------------------------------------------------

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = []
        for layer in self.trainable_layers:
            out.append((f"{layer.name}.w", layer.w))
            out.append((f"{layer.name}.b", layer.b))
        return out

    def parameters(self, trainable_only: bool = False) -> list[Tensor]:
        params = [t for _, t in self.named_parameters()]
        if trainable_only:
            params = [t for t in params if t.requires_grad]
        return params

    def parameter_count(self) -> int:
        return sum(t.size for t in self.parameters())

    def freeze_all(self):
        for t in self.parameters():
            t.requires_grad = False

    def set_trainable_last(self, n_last: int):
        """Unfreeze exactly the last n_last weight-bearing layers."""
        total = len(self.trainable_layers)
        if not 1 <= n_last <= total:
            raise ValueError(f"n_last must be in [1, {total}], got {n_last}")
        self.freeze_all()
        for layer in self.trainable_layers[-n_last:]:
            layer.w.requires_grad = True
            layer.b.requires_grad = True

    def is_fully_frozen(self) -> bool:
        return not any(t.requires_grad for t in self.parameters())

    def weight_fingerprints(self) -> dict[str, str]:
        """sha256 of each parameter's raw bytes, for freeze-integrity checks."""
        return {name: hashlib.sha256(t.data.tobytes()).hexdigest()
                for name, t in self.named_parameters()}

    def clone(self) -> "Backbone":
        other = Backbone(self.config)
        for (_, src), (_, dst) in zip(self.named_parameters(), other.named_parameters()):
            dst.data = src.data.copy()
            dst.requires_grad = src.requires_grad
        other.channel_means = None if self.channel_means is None else self.channel_means.copy()
        other.clean_top1 = self.clean_top1
        return other

    def arch_descriptor(self) -> dict:
        c = self.config
        return {"kind": "backbone", "input_size": c.input_size,
                "in_channels": c.in_channels,
                "blocks": [list(b) for b in c.blocks],
                "hidden_units": c.hidden_units, "num_classes": c.num_classes,
                "seed": c.seed}


def build_backbone(config: BackboneConfig | None = None) -> Backbone:
    return Backbone(config if config is not None else BackboneConfig())


# ---------------------------------------------------------------------------
# composed pipeline
# ---------------------------------------------------------------------------

@dataclass
class Pipeline:
    """adapter (optional) -> subtract channel means -> backbone."""

    backbone: Backbone
    adapter: AdapterNet | None = None
    channel_means: np.ndarray | None = None
    input_tolerance: float = field(default=1e-6, repr=False)

    def __post_init__(self):
        if self.channel_means is None:
            self.channel_means = self.backbone.channel_means
        if self.channel_means is None:
            raise ValueError("pipeline needs channel means (train the backbone first "
                             "or pass channel_means explicitly)")
        self.channel_means = np.asarray(self.channel_means, dtype=np.float32)
        if self.channel_means.shape != (3,):
            raise ValueError(f"channel_means must have shape (3,), "
                             f"got {self.channel_means.shape}")

    def forward(self, images) -> Tensor:
        """Images: NHWC float batch in [0,1] (uint8 accepted and scaled)."""
        if isinstance(images, Tensor):
            x = images
        else:
            arr = np.asarray(images)
            if arr.dtype == np.uint8:
                arr = arr.astype(np.float32) / np.float32(255.0)
            x = Tensor(arr)
        lo, hi = float(x.data.min()), float(x.data.max())
        if lo < -self.input_tolerance or hi > 1.0 + self.input_tolerance:
            raise ValueError(f"pipeline input outside [0,1]: range [{lo:.6g}, {hi:.6g}] "
                             "(identity-init guarantees need non-negative input)")
        if self.adapter is not None:
            x = self.adapter.forward(x)
        x = ad.sub(x, Tensor(self.channel_means))
        return self.backbone.forward(x)


def detach_and_export(adapter: AdapterNet, images_u8: np.ndarray) -> np.ndarray:
    """Run the adapter alone on uint8 images; clamp and requantize for viewing."""
    arr = np.asarray(images_u8)
    single = arr.ndim == 3
    if single:
        arr = arr[None]
    x = Tensor(arr.astype(np.float32) / np.float32(255.0))
    with ad.no_grad():
        y = adapter.forward(x).data
    out = quantize_u8(np.clip(y, 0.0, 1.0))
    return out[0] if single else out
