"""Shared test helpers."""
from __future__ import annotations

import math

import numpy as np

from fiberalign.embed import PointSet


def point_set(prefix: str, vectors) -> PointSet:
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    ids = tuple(f"{prefix}-{k:04d}" for k in range(vectors.shape[0]))
    return PointSet(ids, vectors)


def brute_join_oracle(X: PointSet, Y: PointSet, eps: float) -> set[tuple[str, str]]:
    """Independent double-loop join, kept free of the library's kernels."""
    out = set()
    for i, xid in enumerate(X.ids):
        for j, yid in enumerate(Y.ids):
            if math.dist(X.vectors[i], Y.vectors[j]) <= eps:
                out.add((xid, yid))
    return out


def normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
