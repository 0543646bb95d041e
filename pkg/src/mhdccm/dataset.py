"""Loading, class-ordering and splitting of paired two-modality datasets."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np


class DatasetError(ValueError):
    """Raised for malformed input files or invalid dataset/split requests."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class MultiModalDataset:
    """Paired feature rows for modality X and Y, stored class-contiguously.

    ``labels`` holds dense class indices into ``classes``; ``original_indices[i]``
    is the file row of stored row ``i``. Subsets produced by :func:`split` keep
    the parent's class vocabulary, so some ``class_counts`` may be zero there.
    """

    x: np.ndarray
    y: np.ndarray
    labels: np.ndarray
    class_counts: np.ndarray
    original_indices: np.ndarray
    classes: tuple = ()

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim == 1:
            y = y[:, None]
        labels = np.asarray(self.labels, dtype=np.intp)
        counts = np.asarray(self.class_counts, dtype=np.intp)
        idx = np.asarray(self.original_indices, dtype=np.intp)
        n = x.shape[0]
        if y.shape[0] != n:
            raise DatasetError(f"row-count mismatch: x has {n} rows, y has {y.shape[0]}")
        if labels.shape != (n,) or idx.shape != (n,):
            raise DatasetError("labels and original_indices must have one entry per row")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DatasetError("feature values must be finite")
        if np.any(np.diff(labels) < 0):
            raise DatasetError("dataset not class-ordered")
        if counts.sum() != n or np.any(counts < 0):
            raise DatasetError("class_counts inconsistent with row count")
        if n and (labels.min() < 0 or labels.max() >= counts.size):
            raise DatasetError("label index out of range")
        if not np.array_equal(np.bincount(labels, minlength=counts.size), counts):
            raise DatasetError("class_counts inconsistent with labels")
        classes = tuple(self.classes) or tuple(range(counts.size))
        if len(classes) != counts.size:
            raise DatasetError("classes must name every class index")
        for name, val in [("x", x), ("y", y), ("labels", labels),
                          ("class_counts", counts), ("original_indices", idx)]:
            object.__setattr__(self, name, _frozen(val))
        object.__setattr__(self, "classes", classes)

    @property
    def n_samples(self) -> int:
        return self.x.shape[0]

    @property
    def n_classes(self) -> int:
        return self.class_counts.size

    @property
    def n_present_classes(self) -> int:
        return int(np.count_nonzero(self.class_counts))

    @property
    def label_names(self) -> list:
        return [self.classes[i] for i in self.labels]

    def subset(self, rows: Sequence[int]) -> "MultiModalDataset":
        """Rows of this dataset (stored-order indices), re-ordered class-contiguously."""
        rows = np.asarray(rows, dtype=np.intp)
        order = rows[np.argsort(self.labels[rows], kind="stable")]
        labels = self.labels[order]
        return MultiModalDataset(
            x=self.x[order], y=self.y[order], labels=labels,
            class_counts=np.bincount(labels, minlength=self.n_classes),
            original_indices=self.original_indices[order], classes=self.classes,
        )


def from_arrays(x, y, labels) -> MultiModalDataset:
    """Build a dataset from in-memory arrays; ``labels`` may be any sortable values."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[0] != y.shape[0]:
        raise DatasetError(f"row-count mismatch: x has {x.shape[0]} rows, y has {y.shape[0]}")
    if x.shape[0] < 2:
        raise DatasetError("need at least 2 samples")
    classes, dense = np.unique(np.asarray(labels), return_inverse=True)
    if classes.size < 2:
        raise DatasetError(f"need at least 2 classes, found {classes.size}")
    order = np.argsort(dense, kind="stable")
    names = tuple(c.item() if isinstance(c, np.generic) else c for c in classes)
    return MultiModalDataset(
        x=x[order], y=y[order], labels=dense[order],
        class_counts=np.bincount(dense, minlength=classes.size),
        original_indices=order, classes=names,
    )


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file (header row required)")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if r]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header) or any(c.strip() == "" for c in r):
            raise DatasetError(f"{path}:{i}: missing cell")
    return header, body


def _numeric(path, header, body, skip=None) -> np.ndarray:
    cols = [j for j in range(len(header)) if j != skip]
    out = np.empty((len(body), len(cols)))
    for i, r in enumerate(body):
        for k, j in enumerate(cols):
            try:
                out[i, k] = float(r[j])
            except ValueError:
                raise DatasetError(
                    f"{path}:{i + 2}: non-numeric feature cell {r[j]!r} in column {header[j]!r}"
                ) from None
    return out


def _label_key(values: list[str]):
    # integer-looking labels sort numerically, anything else as strings
    try:
        return [int(v) for v in values]
    except ValueError:
        return [v.strip() for v in values]


def load_dataset(x_path, y_path, label_column: str) -> MultiModalDataset:
    """Read two header-ed CSV files whose rows are aligned sample-by-sample.

    The label column must appear in exactly one of the two files.
    """
    hx, bx = _read_csv(x_path)
    hy, by = _read_csv(y_path)
    if len(bx) != len(by):
        raise DatasetError(f"row-count mismatch: {x_path} has {len(bx)} rows, {y_path} has {len(by)}")
    in_x, in_y = label_column in hx, label_column in hy
    if in_x == in_y:
        where = "both files" if in_x else "neither file"
        raise DatasetError(f"missing label column {label_column!r}: found in {where}")
    if in_x:
        j = hx.index(label_column)
        raw = [r[j] for r in bx]
        x, y = _numeric(x_path, hx, bx, skip=j), _numeric(y_path, hy, by)
    else:
        j = hy.index(label_column)
        raw = [r[j] for r in by]
        x, y = _numeric(x_path, hx, bx), _numeric(y_path, hy, by, skip=j)
    if x.shape[1] == 0 or y.shape[1] == 0:
        raise DatasetError("each modality needs at least one feature column")
    keys = _label_key(raw)
    keys = np.array(keys, dtype=object if isinstance(keys[0], str) else np.int64)
    return from_arrays(x, y, keys)


@dataclass(frozen=True)
class SplitSpec:
    mode: Literal["by_index_file", "per_class_count", "fraction"]
    seed: int = 0
    train_per_class: int | None = None
    train_fraction: float | None = None
    index_file: str | Path | None = None

    def validate(self, ds: MultiModalDataset):
        if self.mode == "per_class_count":
            k = self.train_per_class
            present = ds.class_counts[ds.class_counts > 0]
            if k is None or k < 1:
                raise DatasetError("train_per_class must be a positive integer")
            if k > present.min():
                raise DatasetError(
                    f"requested {k} training samples per class but smallest class has {present.min()}"
                )
        elif self.mode == "fraction":
            f = self.train_fraction
            if f is None or not 0.0 < f < 1.0:
                raise DatasetError("train_fraction must lie in (0, 1)")
        elif self.mode == "by_index_file":
            if self.index_file is None:
                raise DatasetError("index_file required for by_index_file split")
        else:
            raise DatasetError(f"unknown split mode {self.mode!r}")


def read_index_file(path) -> np.ndarray:
    """One zero-based original-row index per line; blank lines ignored."""
    with open(path, encoding="utf-8") as fh:
        try:
            return np.array([int(line) for line in fh if line.strip()], dtype=np.intp)
        except ValueError as e:
            raise DatasetError(f"{path}: bad index line ({e})") from None


def split(ds: MultiModalDataset, spec: SplitSpec) -> tuple[MultiModalDataset, MultiModalDataset]:
    """Deterministic train/test partition of ``ds``; both parts stay class-contiguous."""
    spec.validate(ds)
    n = ds.n_samples
    is_train = np.zeros(n, dtype=bool)
    if spec.mode == "by_index_file":
        wanted = read_index_file(spec.index_file)
        pos = {int(o): i for i, o in enumerate(ds.original_indices)}
        try:
            is_train[[pos[int(o)] for o in wanted]] = True
        except KeyError as e:
            raise DatasetError(f"index {e.args[0]} not present in dataset") from None
    else:
        rng = np.random.default_rng(spec.seed)
        start = 0
        for n_d in ds.class_counts:
            if n_d == 0:
                continue
            if spec.mode == "per_class_count":
                k = spec.train_per_class
            else:
                k = int(round(spec.train_fraction * n_d))
            chosen = rng.permutation(n_d)[:k]
            is_train[start + chosen] = True
            start += n_d
    return ds.subset(np.flatnonzero(is_train)), ds.subset(np.flatnonzero(~is_train))


def bundled_iris_paths() -> tuple[Path, Path, str]:
    """Two-class Iris subset: sepal length -> X (with species label), sepal width -> Y."""
    root = Path(__file__).parent / "data"
    return root / "iris_sepal_x.csv", root / "iris_sepal_y.csv", "species"


def load_iris_two_class() -> MultiModalDataset:
    return load_dataset(*bundled_iris_paths())
