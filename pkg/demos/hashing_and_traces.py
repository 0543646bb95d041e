"""
Sign codes, Hamming k-NN and projection traces
==============================================

Projections can be reduced to +1/-1 codes. Here we hold out part of a
synthetic set, classify with Hamming distance on the codes and write the
per-sample projections to CSV for plotting elsewhere.
"""

import tempfile
from pathlib import Path

import numpy as np

from mhdccm import (SplitSpec, evaluate, export_projection_trace, fit_dnccm, from_arrays,
                    hash_codes, project, split)

rng = np.random.default_rng(3)
labels = np.repeat(np.arange(3), 40)
x = rng.normal(size=(3, 4))[labels] * 2 + rng.normal(size=(120, 4))
y = rng.normal(size=(3, 4))[labels] * 2 + rng.normal(size=(120, 4))
train, test = split(from_arrays(x, y, labels), SplitSpec(mode="fraction", seed=1, train_fraction=0.5))

model = fit_dnccm(train, Q=4)
codes = hash_codes(*project(model, test.x[:3], test.y[:3]))
print("first test codes (x):\n", codes.codes_x)

for hamming in (False, True):
    rep = evaluate(model, train, test, fusion="concat", k=3, hamming=hamming)
    print(f"{rep.distance:>9}: accuracy {rep.accuracy:.3f}")

path = export_projection_trace(model, test, Path(tempfile.mkdtemp()) / "trace.csv")
print(path.read_text().splitlines()[:3])
