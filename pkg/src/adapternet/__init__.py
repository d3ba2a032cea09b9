"""Input-side domain adaptation: a small identity-initialized 1x1-conv
network trained in front of a frozen classifier, plus the simulated-camera
transforms and benchmark protocol used to evaluate it."""

import os as _os

# Honor ADAPTERNET_THREADS before numpy (and its BLAS) loads; only fills in
# thread-count variables the user has not already set.
_threads = _os.environ.get("ADAPTERNET_THREADS")
if _threads:
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .autodiff import (ShapeError, Tape, Tensor, backward, conv2d, dense,
                       maxpool2, no_grad, record, relu, reshape,
                       softmax_cross_entropy)
from .bench import (BenchConfig, ExperimentResult, SplitSpec, SweepResult,
                    TableReport, angle_sweep, dataset_from_pool, drop_pct,
                    make_splits, run_table, top1)
from .colorsim import (Clean, ColorRotation, PowerCamera, PowerParams,
                       Scenario, color_rotate_image, count_distinct_outputs,
                       lab_to_srgb, power_transform, quantize_u8, rotate_ab,
                       scenario_from_spec, srgb_to_lab, to_float01)
from .data import (CifarFormatError, LabeledDataset, LeakageError, Split,
                   ingest_cifar10, ingest_cifar10_files, load_benchmark_pools,
                   pretrain_dataset, read_cifar_batch, read_png,
                   transform_dataset, transform_images, transform_split,
                   write_png)
from .models import (AdapterNet, Backbone, BackboneConfig, Pipeline,
                     build_adapter, build_backbone, detach_and_export)
from .optim import SGD, Adam, Optimizer, make_optimizer
from .serialization import (BadMagicError, HeaderError, ModelFileError,
                            PayloadMismatchError, TruncatedFileError,
                            load_model, save_model)
from .synthetic import make_scene_images, write_synthetic_cifar
from .training import (ADAPTER_DEFAULTS, BACKBONE_DEFAULTS, FINETUNE_DEFAULTS,
                       NotFrozenError, TrainConfig, TrainLog, fine_tune,
                       train_adapter, train_backbone)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
