"""End-to-end benchmark in miniature: generate data, pre-train a classifier,
break it with a simulated camera, then compare three ways of coping.

The default sizes keep this to a couple of minutes on one CPU core. Pass
--full for the desk-scale run the acceptance suite uses (several minutes).

Run: python3 demos/04_desk_benchmark.py [--full]
"""

import sys
import tempfile
import time
from dataclasses import replace
from pathlib import Path

from adapternet.bench import BenchConfig, dataset_from_pool, run_table, top1
from adapternet.colorsim import ColorRotation
from adapternet.data import load_benchmark_pools, pretrain_dataset
from adapternet.models import BackboneConfig, Pipeline
from adapternet.synthetic import write_synthetic_cifar
from adapternet.training import (ADAPTER_DEFAULTS, BACKBONE_DEFAULTS,
                                 FINETUNE_DEFAULTS, train_backbone)

full = "--full" in sys.argv
train_n, pool_n = (4000, 2000) if full else (800, 400)
epochs = 15 if full else 6

root = Path(tempfile.mkdtemp(prefix="adapternet_demo_"))
print(f"writing {train_n} pre-training + {pool_n} benchmark images "
      f"to {root} ...")
write_synthetic_cifar(root, train_n=train_n, pool_n=pool_n, seed=0)
train_pool, bench_pool = load_benchmark_pools(root)

print(f"pre-training the backbone ({epochs} epochs) ...")
t0 = time.time()
backbone, means, log = train_backbone(
    pretrain_dataset(train_pool),
    train_cfg=replace(BACKBONE_DEFAULTS, max_epochs=epochs))
print(f"  best val top-1 {log.best_val_top1:.3f} at epoch {log.best_epoch} "
      f"({time.time() - t0:.0f}s)")

bench = dataset_from_pool(bench_pool)
clean = top1(Pipeline(backbone=backbone), bench.test)
print(f"  clean benchmark-test top-1: {clean:.3f}")

print()
scenario = ColorRotation(150.0)
print(f"now the camera changes: {scenario.describe()}")
print("comparing pure inference vs fine-tuning the last 2 layers vs an")
print("input-side adapter, all trained on the same transformed split ...")
cfg = BenchConfig(adapter_cfg=replace(ADAPTER_DEFAULTS, max_epochs=epochs * 4),
                  finetune_cfg=replace(FINETUNE_DEFAULTS, max_epochs=epochs * 4))
t0 = time.time()
report = run_table(backbone, bench_pool, scenario,
                   methods=("pure_inference", "finetune_2", "adapter"),
                   cfg=cfg, verbose=True)
print(f"({time.time() - t0:.0f}s)")
print()
print(report.to_text())

rows = {r.method: r.top1 for r in report.results}
gap = report.clean_top1 - rows["pure_inference"]
recovered = rows["adapter"] - rows["pure_inference"]
print(f"the adapter recovered {recovered / gap:.0%} of what the camera "
      f"took away, without touching one backbone weight")
