"""Dataset ingestion and split handling.

CIFAR-10 binary batches are the ingestion format: 3073-byte records, one
label byte followed by 3072 channel-planar pixels (1024 R, 1024 G, 1024 B,
row-major). Records get stable 1-based IDs in file order.

Splits are typed handles: the test split is marked held-out and training
code refuses it, so the only reader of test samples is the evaluation API.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .colorsim import Scenario

RECORD_BYTES = 3073  # 1 label + 32*32*3 pixels
IMAGE_SHAPE = (32, 32, 3)
NUM_CLASSES = 10


class CifarFormatError(ValueError):
    """Malformed CIFAR-10 binary data; message names file and offset."""


class LeakageError(RuntimeError):
    """A held-out split was handed to training code."""


@dataclass
class Split:
    name: str
    ids: np.ndarray       # stable 1-based IDs
    images: np.ndarray    # (N, 32, 32, 3) uint8
    labels: np.ndarray    # (N,) int64
    held_out: bool = False

    def __len__(self):
        return len(self.labels)


@dataclass
class LabeledDataset:
    train: Split
    val: Split
    test: Split | None = None


def require_trainable(split: Split):
    if split.held_out:
        raise LeakageError(f"split {split.name!r} is held out; training code "
                           "must not read it")


# ---------------------------------------------------------------------------
# CIFAR-10 binary ingestion
# ---------------------------------------------------------------------------

@dataclass
class CifarRecords:
    images: np.ndarray   # (N, 32, 32, 3) uint8
    labels: np.ndarray   # (N,) int64
    ids: np.ndarray      # (N,) 1-based, file order
    files: list[str]

    def __len__(self):
        return len(self.labels)


def read_cifar_batch(path) -> tuple[np.ndarray, np.ndarray]:
    """Decode one binary batch file into (images, labels)."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) == 0 or len(raw) % RECORD_BYTES != 0:
        offset = len(raw) - (len(raw) % RECORD_BYTES)
        raise CifarFormatError(
            f"{path}: size {len(raw)} is not a multiple of {RECORD_BYTES} "
            f"(truncated record at offset {offset})")
    rec = np.frombuffer(raw, dtype=np.uint8).reshape(-1, RECORD_BYTES)
    labels = rec[:, 0].astype(np.int64)
    bad = np.nonzero(labels >= NUM_CLASSES)[0]
    if bad.size:
        raise CifarFormatError(
            f"{path}: label {labels[bad[0]]} out of range at offset "
            f"{bad[0] * RECORD_BYTES}")
    images = rec[:, 1:].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1).copy()
    return images, labels


def ingest_cifar10_files(files) -> CifarRecords:
    images, labels = [], []
    for f in files:
        im, lb = read_cifar_batch(f)
        images.append(im)
        labels.append(lb)
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    ids = np.arange(1, len(labels) + 1, dtype=np.int64)
    return CifarRecords(images, labels, ids, [str(f) for f in files])


def ingest_cifar10(path) -> CifarRecords:
    """Ingest a batch file, or every *.bin under a directory (sorted by name)."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.bin"))
        if not files:
            raise CifarFormatError(f"{path}: no *.bin batch files found")
    else:
        if not path.exists():
            raise FileNotFoundError(f"dataset file not found: {path}")
        files = [path]
    return ingest_cifar10_files(files)


def load_benchmark_pools(root) -> tuple[CifarRecords, CifarRecords]:
    """Standard layout: data_batch_*.bin pre-train the backbone, test_batch.bin
    is the held-out pool the benchmark splits (the original train data is
    treated as inaccessible once the backbone exists)."""
    root = Path(root)
    train_files = sorted(root.glob("data_batch_*.bin"))
    test_file = root / "test_batch.bin"
    if not train_files or not test_file.exists():
        raise CifarFormatError(
            f"{root}: expected data_batch_*.bin and test_batch.bin")
    return ingest_cifar10_files(train_files), ingest_cifar10(test_file)


def pretrain_dataset(records: CifarRecords, val_fraction: float = 0.1) -> LabeledDataset:
    """Contiguous train/val carve-up of the backbone's own training pool."""
    n = len(records)
    n_val = max(1, int(n * val_fraction))
    n_train = n - n_val
    if n_train < 1:
        raise ValueError(f"pre-train pool too small: {n} records")
    train = Split("train", records.ids[:n_train], records.images[:n_train],
                  records.labels[:n_train])
    val = Split("val", records.ids[n_train:], records.images[n_train:],
                records.labels[n_train:])
    return LabeledDataset(train, val)


# ---------------------------------------------------------------------------
# scenario application
# ---------------------------------------------------------------------------

def transform_images(images_u8: np.ndarray, scenario: Scenario,
                     chunk: int = 1000) -> np.ndarray:
    """Apply a simulated camera to a stack of uint8 images, chunked for memory."""
    out = np.empty_like(images_u8)
    for i in range(0, len(images_u8), chunk):
        out[i:i + chunk] = scenario.apply(images_u8[i:i + chunk])
    return out


def transform_split(split: Split, scenario: Scenario) -> Split:
    return replace(split, images=transform_images(split.images, scenario))


def transform_dataset(ds: LabeledDataset, scenario: Scenario) -> LabeledDataset:
    return LabeledDataset(
        train=transform_split(ds.train, scenario),
        val=transform_split(ds.val, scenario),
        test=None if ds.test is None else transform_split(ds.test, scenario),
    )


# ---------------------------------------------------------------------------
# PNG import/export
# ---------------------------------------------------------------------------

def read_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def write_png(path, img_u8: np.ndarray):
    Image.fromarray(np.asarray(img_u8, dtype=np.uint8), mode="RGB").save(path, "PNG")
