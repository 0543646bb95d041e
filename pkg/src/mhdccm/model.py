"""Fitted projection pairs and their on-disk format.

File layout (all integers unsigned little-endian, all reals IEEE-754 float64 LE)::

    offset  size      field
    0       8         magic b"MHCORR\\x00\\x01"
    8       4   u32   format version (currently 1)
    12      8         method tag, ASCII, NUL padded ("dccm" or "dnccm")
    20      4   u32   m   (modality X dimension)
    24      4   u32   p   (modality Y dimension)
    28      4   u32   L   (code length / number of columns)
    32      4   u32   c   (number of training classes)
    36      4   u32   T   (length of the residual trace; 0 for dccm)
    40      8   f64   ridge_x
    48      8   f64   ridge_y
    56      8   f64   constraint scale
    64      8*m       x_mean
            8*p       y_mean
            8*m*L     W_x, row-major
            8*p*L     W_y, row-major
            8*L       eigenvalues (dccm) / per-iteration lambda_t (dnccm)
            8*T       residual trace
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"MHCORR\x00\x01"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sI8s5I3d")


@dataclass(frozen=True, eq=False)
class ProjectionModel:
    method: str
    W_x: np.ndarray
    W_y: np.ndarray
    x_mean: np.ndarray
    y_mean: np.ndarray
    eigenvalues: np.ndarray
    n_classes: int
    ridge_x: float
    ridge_y: float
    scale: float
    residual_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        if self.method not in ("dccm", "dnccm"):
            raise ValueError(f"unknown method {self.method!r}")
        arrays = {k: np.array(getattr(self, k), dtype=float) for k in
                  ("W_x", "W_y", "x_mean", "y_mean", "eigenvalues", "residual_trace")}
        if arrays["W_x"].ndim != 2 or arrays["W_y"].ndim != 2:
            raise ValueError("W_x and W_y must be matrices")
        L = arrays["W_x"].shape[1]
        if L < 1 or arrays["W_y"].shape[1] != L or arrays["eigenvalues"].shape != (L,):
            raise ValueError("W_x, W_y and eigenvalues must agree on L >= 1")
        if arrays["x_mean"].shape != (arrays["W_x"].shape[0],) or \
                arrays["y_mean"].shape != (arrays["W_y"].shape[0],):
            raise ValueError("means must match the projection input dimensions")
        for k, a in arrays.items():
            a.setflags(write=False)
            object.__setattr__(self, k, a)

    @property
    def L(self) -> int:
        return self.W_x.shape[1]

    @property
    def m(self) -> int:
        return self.W_x.shape[0]

    @property
    def p(self) -> int:
        return self.W_y.shape[0]

    def truncate(self, L: int) -> "ProjectionModel":
        """Keep the first ``L`` column pairs."""
        if not 1 <= L <= self.L:
            raise ValueError(f"cannot truncate {self.L} columns to {L}")
        trace = self.residual_trace[:L] if self.residual_trace.size else self.residual_trace
        return ProjectionModel(self.method, self.W_x[:, :L], self.W_y[:, :L], self.x_mean,
                               self.y_mean, self.eigenvalues[:L], self.n_classes,
                               self.ridge_x, self.ridge_y, self.scale, trace)

    def to_bytes(self) -> bytes:
        head = _HEADER.pack(MAGIC, FORMAT_VERSION, self.method.encode("ascii"),
                            self.m, self.p, self.L, self.n_classes, self.residual_trace.size,
                            self.ridge_x, self.ridge_y, self.scale)
        body = [self.x_mean, self.y_mean, self.W_x, self.W_y, self.eigenvalues, self.residual_trace]
        return head + b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in body)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "ProjectionModel":
        if len(buf) < _HEADER.size or buf[:8] != MAGIC:
            raise ValueError("not a projection model file (bad magic)")
        _, version, tag, m, p, L, c, T, rx, ry, scale = _HEADER.unpack_from(buf)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        sizes = [m, p, m * L, p * L, L, T]
        if len(buf) != _HEADER.size + 8 * sum(sizes):
            raise ValueError("truncated or oversized model file")
        flat = np.frombuffer(buf, dtype="<f8", offset=_HEADER.size).astype(float)
        parts = np.split(flat, np.cumsum(sizes)[:-1])
        return cls(method=tag.rstrip(b"\x00").decode("ascii"),
                   W_x=parts[2].reshape(m, L), W_y=parts[3].reshape(p, L),
                   x_mean=parts[0], y_mean=parts[1], eigenvalues=parts[4],
                   n_classes=c, ridge_x=rx, ridge_y=ry, scale=scale, residual_trace=parts[5])


def save_model(model: ProjectionModel, path) -> Path:
    path = Path(path)
    path.write_bytes(model.to_bytes())
    return path


def load_model(path) -> ProjectionModel:
    return ProjectionModel.from_bytes(Path(path).read_bytes())
