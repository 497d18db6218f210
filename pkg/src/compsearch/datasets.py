"""Bundled tabular tasks and their deterministic train/validation splits."""

from __future__ import annotations

import functools
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).parent / "data"
SPLIT_SEED = 20240917
VALIDATION_FRACTION = 0.2


class DataError(RuntimeError):
    pass


class MissingData(DataError):
    pass


class ChecksumMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    filename: str
    objective: str  # "classification" | "regression"
    n_features: int
    n_classes: int | None = None
    n_rows: int | None = None

    @property
    def output_dim(self) -> int:
        return self.n_classes if self.objective == "classification" else 1


TASKS: dict[str, TaskSpec] = {
    t.task_id: t
    for t in (
        TaskSpec("iris-cls", "iris.csv", "classification", 4, 3, 150),
        TaskSpec("wine-cls", "wine.csv", "classification", 13, 3, 178),
        # the cultivar index doubles as an ordinal regression target
        TaskSpec("wine-reg", "wine.csv", "regression", 13, None, 178),
        TaskSpec("breast-cancer-cls", "breast_cancer.csv", "classification", 30, 2, 569),
        TaskSpec("diabetes-reg", "diabetes.csv", "regression", 10, None, 442),
    )
}
DEFAULT_TASKS = tuple(TASKS)


def register_task(spec: TaskSpec) -> None:
    """Add a task definition (e.g. from a config file); the CSV must be in the manifest."""
    if spec.objective not in ("classification", "regression"):
        raise ValueError(f"unknown objective {spec.objective!r}")
    TASKS[spec.task_id] = spec
    _load_split.cache_clear()


@dataclass(frozen=True, eq=False)
class FeatureStats:
    mu: np.ndarray
    sigma: np.ndarray
    lo: np.ndarray
    hi: np.ndarray


@dataclass(frozen=True, eq=False)
class SplitData:
    task: TaskSpec
    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray
    train_index: np.ndarray
    val_index: np.ndarray
    stats: FeatureStats
    target_mean: float | None = None
    target_std: float | None = None


def read_manifest(data_dir: Path = DATA_DIR) -> dict:
    path = Path(data_dir) / "manifest.json"
    if not path.exists():
        raise MissingData(f"no manifest at {path}")
    return json.loads(path.read_text())["files"]


def dataset_checksums(data_dir: Path = DATA_DIR) -> dict[str, str]:
    return {name: entry["sha256"] for name, entry in sorted(read_manifest(data_dir).items())}


def read_csv(filename: str, data_dir: Path = DATA_DIR) -> np.ndarray:
    """Read a bundled CSV after verifying its checksum and shape."""
    data_dir = Path(data_dir)
    manifest = read_manifest(data_dir)
    if filename not in manifest:
        raise MissingData(f"{filename} is not listed in the manifest")
    path = data_dir / filename
    if not path.exists():
        raise MissingData(f"missing data file {path}")
    raw = path.read_bytes()
    entry = manifest[filename]
    digest = hashlib.sha256(raw).hexdigest()
    if digest != entry["sha256"]:
        raise ChecksumMismatch(f"{filename}: sha256 {digest} != {entry['sha256']}")
    table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if table.shape != (entry["rows"], entry["columns"]):
        raise ShapeMismatch(f"{filename}: shape {table.shape} != ({entry['rows']}, {entry['columns']})")
    return table


def split_indices(n: int, validation_fraction: float, seed: int = SPLIT_SEED) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < validation_fraction < 1.0:
        raise ValueError("validation fraction must be in (0, 1)")
    order = np.random.default_rng(seed).permutation(n)
    n_val = int(round(n * validation_fraction))
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def build_split(task: TaskSpec, table: np.ndarray, validation_fraction: float = VALIDATION_FRACTION) -> SplitData:
    if table.shape[1] != task.n_features + 1:
        raise ShapeMismatch(f"{task.task_id}: expected {task.n_features} features, got {table.shape[1] - 1}")
    if task.n_rows is not None and table.shape[0] != task.n_rows:
        raise ShapeMismatch(f"{task.task_id}: expected {task.n_rows} rows, got {table.shape[0]}")
    table = np.array(table, dtype=float)
    table.setflags(write=False)
    x, y = table[:, :-1], table[:, -1]
    train, val = split_indices(len(table), validation_fraction)
    x_train, x_val = x[train], x[val]
    stats = FeatureStats(
        mu=x_train.mean(axis=0),
        sigma=x_train.std(axis=0),
        lo=x_train.min(axis=0),
        hi=x_train.max(axis=0),
    )
    if task.objective == "classification":
        labels = y.astype(int)
        if labels.min() < 0 or labels.max() >= task.n_classes:
            raise ShapeMismatch(f"{task.task_id}: labels outside 0..{task.n_classes - 1}")
        return SplitData(task, x_train, labels[train], x_val, labels[val], train, val, stats)
    mean, std = float(y[train].mean()), float(y[train].std())
    y_train, y_val = (y[train] - mean) / std, (y[val] - mean) / std
    for arr in (y_train, y_val):
        arr.setflags(write=False)
    return SplitData(task, x_train, y_train, x_val, y_val, train, val, stats, mean, std)


@functools.lru_cache(maxsize=None)
def _load_split(task_id: str, validation_fraction: float, data_dir: str) -> SplitData:
    if task_id not in TASKS:
        raise MissingData(f"unknown task {task_id!r}")
    task = TASKS[task_id]
    return build_split(task, read_csv(task.filename, Path(data_dir)), validation_fraction)


def load_task(task_id: str, validation_fraction: float = VALIDATION_FRACTION, data_dir: Path = DATA_DIR) -> SplitData:
    return _load_split(task_id, float(validation_fraction), str(data_dir))
