"""Command-line surface tying the library into reproducible experiments.

One command per process; every training command takes --seed; outputs are
plain files (model binaries, CSV logs, text reports) written atomically where
it matters. Failures print a one-line diagnostic and exit 1; usage errors
exit 2 (argparse convention).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _scenario_from_args(args):
    from .colorsim import scenario_from_spec
    exponents = tuple(float(p) for p in args.exponents.split(","))
    if len(exponents) != 3:
        raise ValueError(f"--exponents needs 3 comma-separated values, "
                         f"got {args.exponents!r}")
    return scenario_from_spec(args.scenario, theta=args.theta,
                              exponents=exponents)


def _add_scenario_flags(p, default="color-rotation"):
    p.add_argument("--scenario", default=default,
                   choices=["clean", "color-rotation", "power"])
    p.add_argument("--theta", type=float, default=150.0,
                   help="rotation angle in degrees (color-rotation)")
    p.add_argument("--exponents", default="0.2,0.3,0.4",
                   help="per-channel powers r,g,b (power)")


def _add_train_flags(p, lr: float, epochs: int, patience: int):
    p.add_argument("--optimizer", default="adam", choices=["sgd", "adam"])
    p.add_argument("--lr", type=float, default=lr)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--max-epochs", type=int, default=epochs)
    p.add_argument("--patience", type=int, default=patience)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quiet", action="store_true")


def _train_cfg(args):
    from .training import TrainConfig
    return TrainConfig(optimizer=args.optimizer, learning_rate=args.lr,
                       batch_size=args.batch_size, max_epochs=args.max_epochs,
                       early_stop_patience=args.patience, seed=args.seed,
                       verbose=not args.quiet).validate()


def _load_pool(args):
    from .data import ingest_cifar10
    path = Path(args.data)
    test = path / "test_batch.bin"
    return ingest_cifar10(test if test.is_file() else path)


def _load_backbone(path):
    from .models import Backbone
    from .serialization import load_model
    model, _ = load_model(path)
    if not isinstance(model, Backbone):
        raise ValueError(f"{path} holds a {type(model).__name__}, "
                         "expected a backbone")
    return model


def _bench_dataset(args, scenario):
    """Benchmark splits over the held-out pool, pushed through the scenario."""
    from .bench import dataset_from_pool
    from .data import LabeledDataset, transform_split
    clean = dataset_from_pool(_load_pool(args))
    return clean, LabeledDataset(train=transform_split(clean.train, scenario),
                                 val=transform_split(clean.val, scenario))


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def _cmd_make_data(args) -> int:
    from .synthetic import write_synthetic_cifar
    root = write_synthetic_cifar(args.out, train_n=args.train_n,
                                 pool_n=args.pool_n, seed=args.seed)
    print(f"wrote synthetic dataset to {root} "
          f"({args.train_n} train + {args.pool_n} pool images)")
    return 0


def _cmd_train_backbone(args) -> int:
    from .data import ingest_cifar10_files, pretrain_dataset
    from .serialization import save_model
    from .training import train_backbone

    files = sorted(Path(args.data).glob("data_batch_*.bin"))
    if not files:
        raise FileNotFoundError(f"no data_batch_*.bin under {args.data}")
    dataset = pretrain_dataset(ingest_cifar10_files(files))
    backbone, _, log = train_backbone(dataset, train_cfg=_train_cfg(args))
    out = Path(args.out)
    save_model(out, backbone, seed=args.seed)
    _write_text(out.with_suffix(".log.csv"), log.to_csv())
    print(f"backbone saved to {out}  (best val top-1 "
          f"{log.best_val_top1:.4f} at epoch {log.best_epoch})")
    return 0


def _cmd_transform(args) -> int:
    from .data import read_cifar_batch, read_png, transform_images, write_png
    scenario = _scenario_from_args(args)
    src, dst = Path(args.src), Path(args.dst)

    if src.is_file() and src.suffix == ".bin":
        import numpy as np
        images, labels = read_cifar_batch(src)
        out = transform_images(images, scenario)
        rec = np.empty((len(labels), 3073), dtype=np.uint8)
        rec[:, 0] = labels
        rec[:, 1:] = out.transpose(0, 3, 1, 2).reshape(len(labels), 3072)
        dst.parent.mkdir(parents=True, exist_ok=True)
        dst.write_bytes(rec.tobytes())
        print(f"transformed {len(labels)} records -> {dst}")
        return 0

    if src.is_dir():
        pngs = sorted(src.glob("*.png"))
        if not pngs:
            raise FileNotFoundError(f"no .png files under {src}")
        dst.mkdir(parents=True, exist_ok=True)
        for p in pngs:
            write_png(dst / p.name, scenario.apply(read_png(p)))
        print(f"transformed {len(pngs)} images -> {dst}")
        return 0

    raise FileNotFoundError(f"--in must be a .bin file or a directory of "
                            f"PNGs: {src}")


def _cmd_train_adapter(args) -> int:
    from .models import Pipeline, build_adapter
    from .serialization import save_model
    from .training import train_adapter

    backbone = _load_backbone(args.backbone)
    backbone.freeze_all()
    scenario = _scenario_from_args(args)
    _, adapt_ds = _bench_dataset(args, scenario)
    pipe = Pipeline(backbone=backbone,
                    adapter=build_adapter(args.k, init=args.init, seed=args.seed))
    adapter, log = train_adapter(pipe, adapt_ds, train_cfg=_train_cfg(args),
                                 require_identity_init=args.init == "identity")
    out = Path(args.out)
    save_model(out, adapter, seed=args.seed)
    _write_text(out.with_suffix(".log.csv"), log.to_csv())
    print(f"adapter (k={args.k}) saved to {out}  (best val top-1 "
          f"{log.best_val_top1:.4f} at epoch {log.best_epoch})")
    return 0


def _cmd_finetune(args) -> int:
    from .serialization import save_model
    from .training import fine_tune

    backbone = _load_backbone(args.backbone)
    scenario = _scenario_from_args(args)
    _, adapt_ds = _bench_dataset(args, scenario)
    tuned, log = fine_tune(backbone, args.last, adapt_ds,
                           train_cfg=_train_cfg(args))
    out = Path(args.out)
    save_model(out, tuned, seed=args.seed)
    _write_text(out.with_suffix(".log.csv"), log.to_csv())
    print(f"fine-tuned last {args.last} layer(s) saved to {out}  "
          f"(best val top-1 {log.best_val_top1:.4f} at epoch {log.best_epoch})")
    return 0


def _cmd_evaluate(args) -> int:
    from .bench import dataset_from_pool, top1
    from .models import AdapterNet, Pipeline
    from .data import transform_split
    from .serialization import load_model

    backbone = _load_backbone(args.backbone)
    adapter = None
    if args.adapter:
        adapter, _ = load_model(args.adapter)
        if not isinstance(adapter, AdapterNet):
            raise ValueError(f"{args.adapter} holds a "
                             f"{type(adapter).__name__}, expected an adapter")
    scenario = _scenario_from_args(args)
    test = transform_split(dataset_from_pool(_load_pool(args)).test, scenario)
    score = top1(Pipeline(backbone=backbone, adapter=adapter), test)
    print(f"top-1 {score:.4f} on {scenario.describe()} test split "
          f"({len(test)} samples)")
    return 0


def _cmd_table(args) -> int:
    from .bench import BenchConfig, run_table
    from .runconfig import load_config
    from .training import ADAPTER_DEFAULTS, FINETUNE_DEFAULTS

    if args.config:
        rc = load_config(args.config)
        scenario = rc.scenario()
        data_dir = args.data or rc.dataset_path
        cfg = BenchConfig(adapter_k=rc.adapter_k, adapter_cfg=rc.train,
                          finetune_cfg=rc.train)
        out_dir = Path(args.out or rc.output_dir)
        seed = rc.train.seed
    else:
        scenario = _scenario_from_args(args)
        data_dir = args.data
        from dataclasses import replace
        seed = args.seed
        cfg = BenchConfig(
            adapter_k=args.k,
            adapter_cfg=replace(ADAPTER_DEFAULTS, seed=seed),
            finetune_cfg=replace(FINETUNE_DEFAULTS, seed=seed))
        out_dir = Path(args.out)
    if data_dir is None:
        raise ValueError("table needs --data (or a --config with a dataset path)")

    backbone = _load_backbone(args.backbone)
    args.data = data_dir
    report = run_table(backbone, _load_pool(args), scenario, cfg=cfg,
                       verbose=not args.quiet)
    _write_text(out_dir / "report.txt", report.to_text())
    _write_text(out_dir / "report.csv", report.to_csv())
    print(report.to_text())
    print(f"report written to {out_dir}/report.txt and report.csv")
    return 0


def _cmd_sweep(args) -> int:
    from .bench import angle_sweep

    backbone = _load_backbone(args.backbone)
    thetas = [float(t) for t in args.thetas.split(",")]
    result = angle_sweep(backbone, _load_pool(args), thetas=thetas,
                         subset_size=args.subset, verbose=not args.quiet)
    out = Path(args.out)
    _write_text(out, result.to_csv())
    worst_theta, worst_top1 = result.worst()
    print(f"sweep written to {out}; worst angle {worst_theta:g} deg "
          f"(top-1 {worst_top1:.4f})")
    return 0


def _cmd_export_adapted(args) -> int:
    from .data import read_cifar_batch, read_png, write_png
    from .models import AdapterNet, detach_and_export
    from .serialization import load_model

    adapter, _ = load_model(args.adapter)
    if not isinstance(adapter, AdapterNet):
        raise ValueError(f"{args.adapter} holds a {type(adapter).__name__}, "
                         "expected an adapter")
    src, dst = Path(args.src), Path(args.dst)
    dst.mkdir(parents=True, exist_ok=True)

    if src.is_file() and src.suffix == ".bin":
        images, _labels = read_cifar_batch(src)
        images = images[:args.limit] if args.limit else images
        adapted = detach_and_export(adapter, images)
        for i, img in enumerate(adapted):
            write_png(dst / f"adapted_{i:05d}.png", img)
        print(f"wrote {len(adapted)} adapted images to {dst}")
        return 0

    if src.is_dir():
        pngs = sorted(src.glob("*.png"))
        if not pngs:
            raise FileNotFoundError(f"no .png files under {src}")
        for p in pngs:
            write_png(dst / p.name, detach_and_export(adapter, read_png(p)))
        print(f"wrote {len(pngs)} adapted images to {dst}")
        return 0

    raise FileNotFoundError(f"--in must be a .bin file or a directory of "
                            f"PNGs: {src}")


def _cmd_gradcheck(args) -> int:
    from .gradcheck import TOLERANCE, run_all
    results = run_all(instances=args.instances, seed=args.seed, verbose=True)
    worst = max(results.values())
    if worst >= TOLERANCE:
        print(f"gradcheck FAILED: worst relative error {worst:.3e} "
              f">= {TOLERANCE:g}")
        return 1
    print(f"gradcheck passed: worst relative error {worst:.3e}")
    return 0


def _cmd_show_config(args) -> int:
    from .runconfig import default_config_text
    print(default_config_text(), end="")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adapternet",
        description="Input-side adapter training against a frozen classifier, "
                    "with simulated-camera benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-data", help="generate the synthetic stand-in "
                       "dataset in CIFAR-10 binary format")
    p.add_argument("--out", required=True)
    p.add_argument("--train-n", type=int, default=20000)
    p.add_argument("--pool-n", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_make_data)

    p = sub.add_parser("train-backbone", help="pre-train the classifier on "
                       "clean images (data_batch_*.bin)")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p, lr=1e-3, epochs=15, patience=3)
    p.set_defaults(fn=_cmd_train_backbone)

    p = sub.add_parser("transform", help="apply a simulated camera to PNGs "
                       "or a .bin batch")
    _add_scenario_flags(p)
    p.add_argument("--in", dest="src", required=True)
    p.add_argument("--out", dest="dst", required=True)
    p.set_defaults(fn=_cmd_transform)

    p = sub.add_parser("train-adapter", help="train an input adapter against "
                       "a frozen backbone")
    p.add_argument("--backbone", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=5, help="adapter depth")
    p.add_argument("--init", choices=("identity", "random"), default="identity",
                   help="random is a negative control; it learns poorly")
    _add_scenario_flags(p)
    _add_train_flags(p, lr=1e-2, epochs=60, patience=8)
    p.set_defaults(fn=_cmd_train_adapter)

    p = sub.add_parser("finetune", help="fine-tune the last N weight-bearing "
                       "layers on transformed data")
    p.add_argument("--backbone", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--last", type=int, required=True,
                   help="how many layers to unfreeze, counted from the output")
    _add_scenario_flags(p)
    _add_train_flags(p, lr=1e-4, epochs=60, patience=8)
    p.set_defaults(fn=_cmd_finetune)

    p = sub.add_parser("evaluate", help="top-1 of a model on the transformed "
                       "test split")
    p.add_argument("--backbone", required=True)
    p.add_argument("--adapter", default=None)
    p.add_argument("--data", required=True)
    _add_scenario_flags(p, default="clean")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("table", help="run the five-method comparison for one "
                       "scenario")
    p.add_argument("--backbone", required=True)
    p.add_argument("--data", default=None)
    p.add_argument("--out", default="out")
    p.add_argument("--config", default=None, help="INI run configuration")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quiet", action="store_true")
    _add_scenario_flags(p)
    p.set_defaults(fn=_cmd_table)

    p = sub.add_parser("sweep", help="top-1 vs rotation angle for the frozen "
                       "backbone")
    p.add_argument("--backbone", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", default="sweep.csv")
    p.add_argument("--thetas",
                   default=",".join(str(t) for t in range(0, 360, 30)))
    p.add_argument("--subset", type=int, default=2000)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("export-adapted", help="run images through a trained "
                       "adapter and write PNGs")
    p.add_argument("--adapter", required=True)
    p.add_argument("--in", dest="src", required=True)
    p.add_argument("--out", dest="dst", required=True)
    p.add_argument("--limit", type=int, default=64,
                   help="max images when reading a .bin batch (0 = all)")
    p.set_defaults(fn=_cmd_export_adapted)

    p = sub.add_parser("gradcheck", help="finite-difference checks for every "
                       "layer kernel")
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_gradcheck)

    p = sub.add_parser("show-config", help="print the default run "
                       "configuration")
    p.set_defaults(fn=_cmd_show_config)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # one-line diagnostic, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
