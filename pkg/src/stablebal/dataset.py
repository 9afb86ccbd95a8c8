"""Binary dataset containers, ingestion and CSV/JSON serialization."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BinaryDataset",
    "EnvironmentSuite",
    "StableSplit",
    "DatasetError",
    "binarize",
    "overlap_filter",
    "load_csv",
    "save_csv",
    "load_suite",
    "save_suite",
]

OUTCOME_COLUMN = "Y"


class DatasetError(ValueError):
    """Raised on malformed input data or files."""


def _as_binary_array(arr, name):
    out = np.asarray(arr)
    if out.size == 0:
        raise DatasetError(f"{name} must be non-empty")
    vals = np.unique(out)
    if not np.all(np.isin(vals, (0, 1))):
        raise DatasetError(f"{name} entries must all be 0 or 1")
    return out.astype(np.int8)


@dataclass(frozen=True)
class BinaryDataset:
    """An (X, Y) sample from one environment: n x p binary features plus binary outcome.

    Immutable after construction; safe to share across workers.
    """

    features: np.ndarray
    outcome: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        X = _as_binary_array(self.features, "features")
        if X.ndim != 2:
            raise DatasetError("features must be a 2-D matrix")
        y = _as_binary_array(self.outcome, "outcome")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DatasetError("outcome must be a vector of length n")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DatasetError("feature_names length must equal p")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "outcome", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    def __eq__(self, other):
        if not isinstance(other, BinaryDataset):
            return NotImplemented
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.outcome, other.outcome)
        )


@dataclass(frozen=True)
class StableSplit:
    """Column index partition into stable (S) and noisy (V) features."""

    stable_idx: tuple[int, ...]
    noisy_idx: tuple[int, ...]

    def __post_init__(self):
        s, v = set(self.stable_idx), set(self.noisy_idx)
        if s & v:
            raise DatasetError("stable and noisy index sets must be disjoint")
        p = len(s) + len(v)
        if (s | v) != set(range(p)):
            raise DatasetError("stable and noisy indices must partition 0..p-1")
        object.__setattr__(self, "stable_idx", tuple(sorted(s)))
        object.__setattr__(self, "noisy_idx", tuple(sorted(v)))

    @property
    def p(self) -> int:
        return len(self.stable_idx) + len(self.noisy_idx)


@dataclass(frozen=True)
class EnvironmentSuite:
    """One training environment plus labelled test environments sharing a schema."""

    train: BinaryDataset
    tests: tuple[tuple[str, BinaryDataset], ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        tests = tuple(self.tests)
        labels = [label for label, _ in tests]
        if len(set(labels)) != len(labels):
            raise DatasetError("test environment labels must be unique")
        for label, d in tests:
            if d.p != self.train.p or d.feature_names != self.train.feature_names:
                raise DatasetError(
                    f"environment {label!r} does not share the training schema"
                )
        object.__setattr__(self, "tests", tests)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.tests)


def binarize(real_matrix, feature_names=None) -> np.ndarray:
    """Dichotomize each column of a real matrix around its mean (ties go to 1)."""
    M = np.asarray(real_matrix, dtype=float)
    if M.size == 0 or M.ndim != 2:
        raise DatasetError("binarize requires a non-empty 2-D matrix")
    return (M >= M.mean(axis=0, keepdims=True)).astype(np.int8)


def overlap_filter(d: BinaryDataset, lo: float = 0.2, hi: float = 0.8) -> BinaryDataset:
    """Keep only columns whose empirical 1-frequency lies in [lo, hi]."""
    if not (0 <= lo < hi <= 1):
        raise DatasetError("require 0 <= lo < hi <= 1")
    freq = d.features.mean(axis=0)
    keep = (freq >= lo) & (freq <= hi)
    if not keep.any():
        raise DatasetError("overlap filter removed every column")
    names = tuple(name for name, k in zip(d.feature_names, keep) if k)
    return BinaryDataset(d.features[:, keep], d.outcome, names)


def save_csv(d: BinaryDataset, path) -> None:
    """Write a dataset as UTF-8 CSV with a header row and final outcome column."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.feature_names) + [OUTCOME_COLUMN])
        for row, y in zip(d.features, d.outcome):
            writer.writerow([int(v) for v in row] + [int(y)])
    os.replace(tmp, path)


def load_csv(path) -> BinaryDataset:
    """Load a dataset written by :func:`save_csv`; round-trips bit-exactly."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if not header or header[-1] != OUTCOME_COLUMN:
            raise DatasetError(
                f"{path}: last column must be named {OUTCOME_COLUMN!r}"
            )
        names = tuple(header[:-1])
        rows = []
        for i, row in enumerate(reader):
            if len(row) != len(header):
                raise DatasetError(f"{path}: row {i + 2} has {len(row)} cells")
            parsed = []
            for j, cell in enumerate(row):
                if cell not in ("0", "1"):
                    raise DatasetError(
                        f"{path}: invalid cell {cell!r} at row {i + 2}, "
                        f"column {header[j]!r}"
                    )
                parsed.append(int(cell))
            rows.append(parsed)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    data = np.array(rows, dtype=np.int8)
    return BinaryDataset(data[:, :-1], data[:, -1], names)


def save_suite(suite: EnvironmentSuite, out_dir) -> str:
    """Write suite CSVs plus a JSON manifest into ``out_dir``; returns manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    train_path = os.path.join(out_dir, "train.csv")
    save_csv(suite.train, train_path)
    tests = []
    for i, (label, d) in enumerate(suite.tests):
        path = os.path.join(out_dir, f"test_{i:03d}.csv")
        save_csv(d, path)
        tests.append({"label": label, "path": os.path.basename(path)})
    manifest = {
        "train": os.path.basename(train_path),
        "tests": tests,
        "provenance": suite.provenance,
    }
    manifest_path = os.path.join(out_dir, "suite.json")
    tmp = manifest_path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    os.replace(tmp, manifest_path)
    return manifest_path


def load_suite(manifest_path) -> EnvironmentSuite:
    """Load an environment suite from its JSON manifest."""
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(manifest_path))
    train = load_csv(os.path.join(base, manifest["train"]))
    tests = tuple(
        (entry["label"], load_csv(os.path.join(base, entry["path"])))
        for entry in manifest["tests"]
    )
    return EnvironmentSuite(train, tests, manifest.get("provenance", {}))
