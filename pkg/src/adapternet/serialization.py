"""Self-describing binary model files with bit-exact round trips.

Layout: 8-byte magic "ADPTNET1", little-endian u32 header length, UTF-8 JSON
header, then all parameter tensors concatenated as little-endian float32 in
header-declared order. The header carries the architecture descriptor,
per-parameter shapes, channel means, cached clean top-1, the seed, and a
precision tag, so a loader needs nothing but the file.

Failure modes are distinct types: wrong magic, unparseable/contradictory
header, payload length mismatch, short read. Writes are atomic
(temp file + rename) so a crashed save never leaves a half-written model.
"""

from __future__ import annotations

import json
import math
import os
import struct
from pathlib import Path

import numpy as np

from .models import AdapterNet, Backbone, BackboneConfig

MAGIC = b"ADPTNET1"
_LEN = struct.Struct("<I")


class ModelFileError(Exception):
    """Base for all model-file format errors."""


class BadMagicError(ModelFileError):
    pass


class HeaderError(ModelFileError):
    pass


class PayloadMismatchError(ModelFileError):
    pass


class TruncatedFileError(ModelFileError):
    pass


def _header_for(model, seed: int) -> dict:
    header = {
        "arch": model.arch_descriptor(),
        "params": [{"name": name, "shape": list(t.data.shape)}
                   for name, t in model.named_parameters()],
        "channel_means": None,
        "clean_top1": None,
        "seed": int(seed),
        "precision": "float32",
    }
    means = getattr(model, "channel_means", None)
    if means is not None:
        header["channel_means"] = [float(v) for v in means]
    top1 = getattr(model, "clean_top1", None)
    if top1 is not None:
        header["clean_top1"] = float(top1)
    return header


def save_model(path, model, seed: int = 0) -> Path:
    """Write model to path atomically; returns the path."""
    path = Path(path)
    header_json = json.dumps(_header_for(model, seed), sort_keys=True).encode()
    payload = b"".join(
        np.ascontiguousarray(t.data, dtype="<f4").tobytes()
        for _, t in model.named_parameters())
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(MAGIC + _LEN.pack(len(header_json)) + header_json + payload)
    os.replace(tmp, path)
    return path


def _rebuild(arch: dict):
    try:
        kind = arch.get("kind")
        if kind == "adapter":
            return AdapterNet(k=int(arch["k"]),
                              init=str(arch.get("init", "identity")))
        if kind == "backbone":
            return Backbone(BackboneConfig(
                input_size=int(arch["input_size"]),
                in_channels=int(arch["in_channels"]),
                blocks=tuple(tuple(int(c) for c in blk) for blk in arch["blocks"]),
                hidden_units=int(arch["hidden_units"]),
                num_classes=int(arch["num_classes"]),
                seed=int(arch["seed"])))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise HeaderError(f"bad architecture descriptor {arch!r}: {exc}") from exc
    raise HeaderError(f"unknown model kind {kind!r}")


def load_model(path):
    """Load a model file; returns (model, header dict)."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < len(MAGIC):
        raise TruncatedFileError(f"{path}: {len(blob)} bytes, shorter than magic")
    if blob[:len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: magic {blob[:len(MAGIC)]!r} != {MAGIC!r}")
    if len(blob) < len(MAGIC) + _LEN.size:
        raise TruncatedFileError(f"{path}: header length field missing")
    (hlen,) = _LEN.unpack_from(blob, len(MAGIC))
    body = len(MAGIC) + _LEN.size
    if len(blob) < body + hlen:
        raise TruncatedFileError(f"{path}: header declared {hlen} bytes, "
                                 f"only {len(blob) - body} present")
    try:
        header = json.loads(blob[body:body + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderError(f"{path}: header is not valid JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise HeaderError(f"{path}: header must be an object, got "
                          f"{type(header).__name__}")
    try:
        arch = header["arch"]
        declared = header["params"]
        precision = header["precision"]
    except (KeyError, TypeError) as exc:
        raise HeaderError(f"{path}: header missing required key {exc}") from exc
    if precision != "float32":
        raise HeaderError(f"{path}: unsupported precision {precision!r}")

    try:
        counts = [math.prod(p["shape"]) for p in declared]
        names = [p["name"] for p in declared]
    except (KeyError, TypeError) as exc:
        raise HeaderError(f"{path}: malformed params entry: {exc}") from exc
    expected = 4 * sum(counts)
    payload = blob[body + hlen:]
    if len(payload) < expected:
        raise TruncatedFileError(f"{path}: payload has {len(payload)} bytes, "
                                 f"header declares {expected}")
    if len(payload) > expected:
        raise PayloadMismatchError(f"{path}: payload has {len(payload)} bytes, "
                                   f"header declares {expected}")

    model = _rebuild(arch)
    target = model.named_parameters()
    if names != [n for n, _ in target]:
        raise HeaderError(f"{path}: parameter list {names} does not match "
                          f"architecture {arch.get('kind')!r}")
    offset = 0
    for (name, tensor), entry, count in zip(target, declared, counts):
        shape = tuple(int(s) for s in entry["shape"])
        if shape != tensor.data.shape:
            raise HeaderError(f"{path}: parameter {name!r} declared shape "
                              f"{shape}, architecture needs {tensor.data.shape}")
        flat = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        tensor.data = flat.reshape(shape).astype(np.float32, copy=True)
        offset += 4 * count

    if isinstance(model, Backbone):
        if header.get("channel_means") is not None:
            model.channel_means = np.asarray(header["channel_means"],
                                             dtype=np.float32)
        model.clean_top1 = header.get("clean_top1")
    return model, header
