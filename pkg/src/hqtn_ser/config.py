"""Run configuration: per-dataset defaults, INI config files, flag overrides."""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field

from .audio import T_MAX
from .training import TrainConfig

# Per-dataset training hyperparameters (qubits, layers, budget, learning rates, splits).
DATASET_DEFAULTS: dict[str, dict] = {
    "ravdess": dict(
        n_qubits=4, n_layers=2, max_epochs=50, batch_size=16, lr_mps=0.1, lr_classic=1e-3,
        split=(0.70, 0.15, 0.15), split_mode="stratified_random",
    ),
    "savee": dict(
        n_qubits=3, n_layers=1, max_epochs=75, batch_size=8, lr_mps=0.05, lr_classic=1e-3,
        split=(0.60, 0.20, 0.20), split_mode="speaker_independent",
    ),
    "mder": dict(
        n_qubits=3, n_layers=1, max_epochs=40, batch_size=8, lr_mps=0.05, lr_classic=1e-3,
        split=(0.60, 0.20, 0.20), split_mode="stratified_random",
    ),
    "synthetic": dict(
        n_qubits=3, n_layers=1, max_epochs=50, batch_size=8, lr_mps=0.05, lr_classic=1e-3,
        split=(0.60, 0.20, 0.20), split_mode="stratified_random",
    ),
}
DATASETS = tuple(DATASET_DEFAULTS)


@dataclass
class RunConfig:
    dataset: str = "savee"
    data_root: str | None = None
    manifest: str | None = None
    cache: str | None = None
    out_dir: str = "runs"
    n_qubits: int = 3
    n_layers: int = 1
    k: int = 32
    t_max: int = T_MAX
    split: tuple[float, float, float] = (0.6, 0.2, 0.2)
    split_mode: str = "stratified_random"
    max_epochs: int = 75
    batch_size: int = 8
    lr_mps: float = 0.05
    lr_classic: float = 1e-3
    weight_decay: float = 0.01
    patience: int = 10
    monitor: str = "val_loss"
    seed: int = 42
    mode: str = "hybrid"
    hidden: tuple[int, ...] = (64,)
    latent: int = 16
    shots: int | None = None
    shot_seeds: int = 5

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            max_epochs=self.max_epochs,
            batch_size=self.batch_size,
            lr_mps=self.lr_mps,
            lr_classic=self.lr_classic,
            patience=self.patience,
            monitor=self.monitor,
            weight_decay=self.weight_decay,
            seed=self.seed,
        )

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["split"] = list(self.split)
        d["hidden"] = list(self.hidden)
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(name: str, value):
    """Convert a string (from a file or flag) to the field's type."""
    if not isinstance(value, str):
        if name in ("split", "hidden"):
            return tuple(value)
        return value
    v = value.strip()
    if name == "split":
        parts = [float(x) for x in v.replace("/", ",").split(",") if x.strip()]
        if sum(parts) > 1.5:  # "70/15/15" style percentages
            parts = [p / 100.0 for p in parts]
        return tuple(parts)
    if name == "hidden":
        return tuple(int(x) for x in v.split(",") if x.strip())
    if name == "shots":
        return None if v.lower() in ("", "none") else int(v)
    if name in ("data_root", "manifest", "cache"):
        return v or None
    kind = {int: int, float: float, str: str}
    default = _FIELDS[name].default
    return kind.get(type(default), str)(v)


def read_config_file(path) -> dict:
    """Flatten every section of an INI file into {field: value}; unknown keys are errors."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    out = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            name = key.replace("-", "_")
            if name not in _FIELDS:
                raise ValueError(f"unknown config key {key!r} in [{section}]")
            out[name] = _coerce(name, value)
    return out


def resolve_config(dataset: str | None = None, file_values: dict | None = None, overrides: dict | None = None) -> RunConfig:
    """Flags > config file > dataset defaults > RunConfig defaults."""
    file_values = dict(file_values or {})
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    name = overrides.get("dataset") or file_values.get("dataset") or dataset or "savee"
    if name not in DATASET_DEFAULTS:
        raise ValueError(f"unknown dataset {name!r}; choose from {DATASETS}")
    values: dict = {"dataset": name, **DATASET_DEFAULTS[name]}
    values.update(file_values)
    values.update({k: _coerce(k, v) for k, v in overrides.items()})
    return RunConfig(**values)
