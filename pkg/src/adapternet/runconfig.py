"""Experiment configuration: a small INI document with fixed sections.

Every run is reproducible from one of these plus nothing else; unknown
sections or keys are rejected loudly (a typo that silently falls back to a
default would poison comparisons). `show-config` prints the full default
document, which is also the schema reference.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass

from .colorsim import Scenario, scenario_from_spec
from .training import TrainConfig


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "dataset": {
        "path": "data/",
        "format": "cifar10",        # cifar10 | synthetic
    },
    "scenario": {
        "kind": "color-rotation",   # clean | color-rotation | power
        "theta": "150.0",
        "exponents": "0.2,0.3,0.4",
    },
    "method": {
        "name": "adapter",          # pure_inference | finetune_N | adapter
        "adapter_k": "5",
    },
    "training": {
        "optimizer": "adam",
        "learning_rate": "0.01",
        "batch_size": "64",
        "max_epochs": "60",
        "early_stop_patience": "8",
        "seed": "0",
    },
    "output": {
        "dir": "out/",
    },
}

_CONVERT = {
    ("scenario", "theta"): float,
    ("method", "adapter_k"): int,
    ("training", "learning_rate"): float,
    ("training", "batch_size"): int,
    ("training", "max_epochs"): int,
    ("training", "early_stop_patience"): int,
    ("training", "seed"): int,
}


def _parse_exponents(text: str) -> tuple[float, float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"exponents needs 3 comma-separated values, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"bad exponents {text!r}: {exc}") from exc


@dataclass
class RunConfig:
    dataset_path: str
    dataset_format: str
    scenario_kind: str
    theta: float
    exponents: tuple[float, float, float]
    method: str
    adapter_k: int
    train: TrainConfig
    output_dir: str

    def scenario(self) -> Scenario:
        return scenario_from_spec(self.scenario_kind, theta=self.theta,
                                  exponents=self.exponents)


def default_config_text() -> str:
    cp = configparser.ConfigParser()
    cp.read_dict(DEFAULTS)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def _from_parser(cp: configparser.ConfigParser, source: str) -> RunConfig:
    merged = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
    for section in cp.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"{source}: unknown section [{section}] "
                              f"(expected {sorted(DEFAULTS)})")
        for key, value in cp[section].items():
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in "
                                  f"[{section}] (expected "
                                  f"{sorted(DEFAULTS[section])})")
            merged[section][key] = value

    typed: dict[tuple[str, str], object] = {}
    for (section, key), conv in _CONVERT.items():
        raw = merged[section][key]
        try:
            typed[(section, key)] = conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{source}: [{section}] {key} = {raw!r} is not "
                              f"a valid {conv.__name__}") from exc

    train = TrainConfig(
        optimizer=merged["training"]["optimizer"],
        learning_rate=typed[("training", "learning_rate")],
        batch_size=typed[("training", "batch_size")],
        max_epochs=typed[("training", "max_epochs")],
        early_stop_patience=typed[("training", "early_stop_patience")],
        seed=typed[("training", "seed")],
    )
    try:
        train.validate()
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    kind = merged["scenario"]["kind"]
    if kind not in ("clean", "none", "color-rotation", "color_rotation", "power"):
        raise ConfigError(f"{source}: unknown scenario kind {kind!r}")
    fmt = merged["dataset"]["format"]
    if fmt not in ("cifar10", "synthetic"):
        raise ConfigError(f"{source}: unknown dataset format {fmt!r}")

    return RunConfig(
        dataset_path=merged["dataset"]["path"],
        dataset_format=fmt,
        scenario_kind=kind,
        theta=typed[("scenario", "theta")],
        exponents=_parse_exponents(merged["scenario"]["exponents"]),
        method=merged["method"]["name"],
        adapter_k=typed[("method", "adapter_k")],
        train=train,
        output_dir=merged["output"]["dir"],
    )


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not read:
        raise ConfigError(f"config file not found: {path}")
    return _from_parser(cp, str(path))


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return _from_parser(cp, source)


def default_config() -> RunConfig:
    return parse_config_text(default_config_text(), "<defaults>")
