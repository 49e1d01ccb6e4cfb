"""Flat run configuration shared by every pipeline command.

One key-value document covers segmentation, window scan, graph
thresholding, model dimensions, optimizer settings, and fold layout.
Unknown keys are rejected at load; command-line overrides win over the
file. Validation checks the dimension chain end to end so a bad combo
fails before any work starts.
"""

from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass

from .errors import ConfigError
from .model import ModelConfig


@dataclass
class RunConfig:
    # segmentation of labeled samples into graph nodes
    sample_len: int = 1024
    stride: int = 512
    window: int = 32
    seg_step: int = 16
    # entropy window scan
    bins: int = 16
    scan_min: int = 10
    scan_max: int = 100
    scan_recordings: int = 20
    # similarity graph
    tau_policy: str = "quantile"  # "quantile" | "fixed"
    tau_value: float = 0.5
    band_radius: int = -1  # -1 disables the band
    # model dimensions
    classes: int = 10
    heads: int = 4
    hidden_per_head: int = 16
    out_dim: int = 64
    seq_len: int = 4
    lstm_hidden: int = 32
    lstm_input: str = "reshape"
    leaky_slope: float = 0.2
    final_heads_average: bool = True
    dropout: float = 0.0
    # optimizer and folds
    epochs: int = 60
    batch_size: int = 16
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    weight_decay: float = 0.0
    folds: int = 5
    stratified: bool = True
    # run control
    seed: int = 0
    threads: int = 1
    normal_label: int = 0
    # synthetic dataset parameters (used when --data synthetic)
    synth_classes: int = 3
    synth_per_class: int = 30
    synth_length: int = 1024
    synth_channels: int = 1
    synth_noise: float = 0.3

    def validate(self) -> "RunConfig":
        if self.window < 2:
            raise ConfigError(f"window must be >= 2, got {self.window}")
        if self.sample_len < self.window:
            raise ConfigError(f"sample_len {self.sample_len} shorter than window {self.window}")
        if self.stride < 1 or self.seg_step < 1:
            raise ConfigError("stride and seg_step must be >= 1")
        if self.bins < 2:
            raise ConfigError(f"bins must be >= 2, got {self.bins}")
        if not 2 <= self.scan_min <= self.scan_max:
            raise ConfigError(f"bad scan range [{self.scan_min}, {self.scan_max}]")
        if self.tau_policy not in ("quantile", "fixed"):
            raise ConfigError(f"unknown tau_policy {self.tau_policy!r}")
        if self.tau_policy == "quantile" and not 0.0 <= self.tau_value <= 1.0:
            raise ConfigError(f"quantile tau_value must be in [0, 1], got {self.tau_value}")
        if self.tau_policy == "fixed" and self.tau_value < 0.0:
            raise ConfigError("fixed tau_value must be nonnegative")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.synth_classes < 2 or self.synth_per_class < 1 or self.synth_length < 2:
            raise ConfigError("synthetic dataset parameters out of range")
        # dimension chain through the model
        self.model_config(feature_dim=self.window * self.synth_channels).validate()
        return self

    def model_config(self, feature_dim: int, classes: int | None = None) -> ModelConfig:
        return ModelConfig(
            feature_dim=feature_dim,
            classes=self.classes if classes is None else classes,
            heads=self.heads,
            hidden_per_head=self.hidden_per_head,
            out_dim=self.out_dim,
            leaky_slope=self.leaky_slope,
            seq_len=self.seq_len,
            lstm_hidden=self.lstm_hidden,
            lstm_input=self.lstm_input,
            final_heads_average=self.final_heads_average,
            dropout=self.dropout,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELD_TYPES = typing.get_type_hints(RunConfig)
FIELD_NAMES = tuple(f.name for f in dataclasses.fields(RunConfig))


def _coerce(name: str, raw, target_type) -> object:
    if isinstance(raw, str):
        if target_type is bool:
            low = raw.strip().lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
        if target_type in (int, float):
            try:
                return target_type(raw)
            except ValueError as exc:
                raise ConfigError(f"{name}: expected {target_type.__name__}, got {raw!r}") from exc
        return raw
    if target_type is bool:
        if isinstance(raw, bool):
            return raw
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if target_type is float and isinstance(raw, (int, float)):
        return float(raw)
    if target_type is int:
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ConfigError(f"{name}: expected an integer, got {raw!r}")
        return raw
    if not isinstance(raw, target_type):
        raise ConfigError(f"{name}: expected {target_type.__name__}, got {raw!r}")
    return raw


def config_from_dict(doc: dict) -> RunConfig:
    unknown = set(doc) - set(FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kwargs = {name: _coerce(name, value, _FIELD_TYPES[name]) for name, value in doc.items()}
    return RunConfig(**kwargs).validate()


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    """Config file (optional) with override keys applied on top."""
    doc: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                loaded = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must hold a flat JSON object")
        doc.update(loaded)
    if overrides:
        doc.update(overrides)
    return config_from_dict(doc)
