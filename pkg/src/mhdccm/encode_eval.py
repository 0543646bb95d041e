"""Applying fitted models: projection, sign hashing, fusion, k-NN evaluation and trace export."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import MultiModalDataset
from .model import ProjectionModel
from .semantics import build_semantic_context, reconstruction_error, sign

FUSION_RULES = ("concat", "sum", "x_only", "y_only")


@dataclass(frozen=True)
class HashCodes:
    codes_x: np.ndarray
    codes_y: np.ndarray


@dataclass(frozen=True, eq=False)
class EvalReport:
    accuracy: float
    confusion: np.ndarray
    fisher_ratio: np.ndarray
    hamming_reconstruction_error: float
    n_test: int
    k: int = 1
    fusion: str = "concat"
    distance: str = "euclidean"

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "n_test": self.n_test,
            "k": self.k,
            "fusion": self.fusion,
            "distance": self.distance,
            "hamming_reconstruction_error": self.hamming_reconstruction_error,
            "fisher_ratio": self.fisher_ratio.tolist(),
            "confusion": self.confusion.tolist(),
        }

    def to_text(self) -> str:
        lines = []
        for key, val in self.as_dict().items():
            if isinstance(val, list):
                val = json.dumps(val)
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{key}={val}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def project(model: ProjectionModel, x, y) -> tuple[np.ndarray, np.ndarray]:
    """Centered projection with the training means; the class-block weighting is train-only."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x = x[None] if x.ndim == 1 else x
    y = y[None] if y.ndim == 1 else y
    if x.shape[1] != model.m or y.shape[1] != model.p:
        raise ValueError(
            f"dimension mismatch: data has (m={x.shape[1]}, p={y.shape[1]}), "
            f"model expects (m={model.m}, p={model.p})"
        )
    return (x - model.x_mean) @ model.W_x, (y - model.y_mean) @ model.W_y


def hash_codes(zx, zy) -> HashCodes:
    return HashCodes(sign(zx), sign(zy))


def fuse(zx, zy, rule: str = "concat") -> np.ndarray:
    zx = np.asarray(zx, dtype=float)
    zy = np.asarray(zy, dtype=float)
    if zx.shape[0] != zy.shape[0]:
        raise ValueError(f"dimension mismatch: {zx.shape[0]} vs {zy.shape[0]} rows")
    if rule == "concat":
        return np.hstack([zx, zy])
    if rule == "sum":
        if zx.shape != zy.shape:
            raise ValueError(f"dimension mismatch for sum fusion: {zx.shape} vs {zy.shape}")
        return zx + zy
    if rule == "x_only":
        return zx.copy()
    if rule == "y_only":
        return zy.copy()
    raise ValueError(f"unknown fusion rule {rule!r}; choose from {FUSION_RULES}")


def fisher_ratio(z, labels) -> np.ndarray:
    """Between-class over within-class variance, one value per column of ``z``.

    A column with zero within-class spread gets ``inf`` (or 0 when it is constant).
    """
    z = np.asarray(z, dtype=float)
    z = z[:, None] if z.ndim == 1 else z
    labels = np.asarray(labels)
    mu = z.mean(axis=0)
    between = np.zeros(z.shape[1])
    within = np.zeros(z.shape[1])
    for c in np.unique(labels):
        zc = z[labels == c]
        mc = zc.mean(axis=0)
        between += len(zc) * (mc - mu) ** 2
        within += ((zc - mc) ** 2).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = between / within
    ratio[within == 0] = np.where(between[within == 0] > 0, np.inf, 0.0)
    return ratio


def _vote(neigh_labels: np.ndarray, n_classes: int) -> int:
    # argmax returns the first maximum, i.e. ties go to the smallest class index
    return int(np.argmax(np.bincount(neigh_labels, minlength=n_classes)))


def knn_predict(train_z, train_labels, test_z, k: int = 1, metric: str = "euclidean",
                n_classes: int | None = None, n_jobs: int = 1, exclude_self: bool = False):
    """Majority vote among the ``k`` nearest training rows.

    Equal distances are resolved by training-row order (stable sort). With
    ``exclude_self`` the i-th test row never matches the i-th training row
    (leave-one-out on a single set).
    """
    train_z = np.asarray(train_z, dtype=float)
    test_z = np.asarray(test_z, dtype=float)
    train_labels = np.asarray(train_labels, dtype=np.intp)
    n_train = len(train_z) - (1 if exclude_self else 0)
    if len(test_z) == 0:
        raise ValueError("empty test set")
    if not 1 <= k <= n_train:
        raise ValueError(f"k={k} must lie in [1, {n_train}] (training size)")
    n_classes = int(train_labels.max()) + 1 if n_classes is None else n_classes

    def run(rows: np.ndarray) -> np.ndarray:
        if metric == "hamming":
            d = (test_z[rows, None, :] != train_z[None, :, :]).sum(axis=2).astype(float)
        elif metric == "euclidean":
            d = ((test_z[rows, None, :] - train_z[None, :, :]) ** 2).sum(axis=2)
        else:
            raise ValueError(f"unknown metric {metric!r}")
        if exclude_self:
            d[np.arange(len(rows)), rows] = np.inf
        nearest = np.argsort(d, axis=1, kind="stable")[:, :k]
        return np.array([_vote(train_labels[nn], n_classes) for nn in nearest], dtype=np.intp)

    n_chunks = min(len(test_z), max(n_jobs, -(-len(test_z) // 256)))
    chunks = np.array_split(np.arange(len(test_z)), n_chunks)
    if n_jobs <= 1:
        return np.concatenate([run(c) for c in chunks])
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return np.concatenate(list(pool.map(run, chunks)))


def confusion_matrix(true, pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(true), np.asarray(pred)), 1)
    return cm


def leave_one_out_accuracy(z, labels, k: int = 1, metric: str = "euclidean") -> float:
    z = np.asarray(z, dtype=float)
    z = z[:, None] if z.ndim == 1 else z
    labels = np.asarray(labels, dtype=np.intp)
    pred = knn_predict(z, labels, z, k=k, metric=metric, exclude_self=True)
    return float(np.mean(pred == labels))


def evaluate(model: ProjectionModel, train: MultiModalDataset, test: MultiModalDataset,
             fusion: str = "concat", k: int = 1, hamming: bool = False,
             n_jobs: int = 1) -> EvalReport:
    """Classify every test sample by k-NN in the fused projected space of the training set."""
    if test.n_samples == 0:
        raise ValueError("empty test set")
    zx_tr, zy_tr = project(model, train.x, train.y)
    zx_te, zy_te = project(model, test.x, test.y)
    codes_te = hash_codes(zx_te, zy_te)
    if hamming:
        codes_tr = hash_codes(zx_tr, zy_tr)
        f_tr = fuse(codes_tr.codes_x, codes_tr.codes_y, fusion)
        f_te = fuse(codes_te.codes_x, codes_te.codes_y, fusion)
    else:
        f_tr = fuse(zx_tr, zy_tr, fusion)
        f_te = fuse(zx_te, zy_te, fusion)
    n_classes = max(train.n_classes, test.n_classes)
    pred = knn_predict(f_tr, train.labels, f_te, k=k, n_classes=n_classes,
                       metric="hamming" if hamming else "euclidean", n_jobs=n_jobs)
    cm = confusion_matrix(test.labels, pred, n_classes)
    ctx = build_semantic_context(test.labels, test.class_counts)
    err = reconstruction_error(codes_te.codes_x, codes_te.codes_y, ctx, model.L)
    return EvalReport(
        accuracy=float(np.trace(cm) / test.n_samples),
        confusion=cm,
        fisher_ratio=fisher_ratio(fuse(zx_tr, zy_tr, fusion), train.labels),
        hamming_reconstruction_error=err,
        n_test=test.n_samples, k=k, fusion=fusion,
        distance="hamming" if hamming else "euclidean",
    )


def trace_header(L: int) -> list[str]:
    return (["sample_index", "label"] + [f"zx_{i}" for i in range(1, L + 1)]
            + [f"zy_{i}" for i in range(1, L + 1)])


def export_projection_trace(model: ProjectionModel, ds: MultiModalDataset, path) -> Path:
    """CSV of per-sample projections: sample_index, label, zx_1..zx_L, zy_1..zy_L."""
    zx, zy = project(model, ds.x, ds.y)
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(model.L))
        for i in range(ds.n_samples):
            w.writerow([int(ds.original_indices[i]), ds.classes[ds.labels[i]]]
                       + [repr(float(v)) for v in zx[i]] + [repr(float(v)) for v in zy[i]])
    return path


def read_projection_trace(path) -> tuple[np.ndarray, list[str], np.ndarray, np.ndarray]:
    """Inverse of :func:`export_projection_trace`: (sample_index, labels, zx, zy)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    L = sum(h.startswith("zx_") for h in header)
    idx = np.array([int(r[0]) for r in body], dtype=np.intp)
    vals = np.array([[float(v) for v in r[2:]] for r in body]).reshape(len(body), 2 * L)
    return idx, [r[1] for r in body], vals[:, :L], vals[:, L:]
