"""Pure-numpy join kernels: the fallback twin of the compiled extension.

Both backends must return the same candidate multiset and bit-identical
distances. Squared distances are therefore accumulated dimension by
dimension (sequential over axis k), matching the compiled per-pair loop,
and the grid uses the same cell-key mixing constants.
"""
from __future__ import annotations

from itertools import product

import numpy as np

BACKEND = "python"

KEY_MULT = 0x9E3779B97F4A7C15  # 64-bit golden-ratio multiplier, shared with the C twin

_BRUTE_BLOCK = 1 << 22  # max elements per distance block


def _empty_result():
    return (
        np.zeros(0, dtype=np.int64),
        np.zeros(0, dtype=np.int64),
        np.zeros(0, dtype=np.float64),
        0,
    )


def brute_pairs(X: np.ndarray, Y: np.ndarray, eps: float):
    """All (i, j) with ||X[i] - Y[j]|| <= eps, plus the distance-eval count."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    nx, ny = X.shape[0], Y.shape[0]
    if nx == 0 or ny == 0:
        return _empty_result()
    eps2 = eps * eps
    out_x, out_y, out_d = [], [], []
    rows = max(1, _BRUTE_BLOCK // ny)
    for start in range(0, nx, rows):
        stop = min(start + rows, nx)
        d2 = np.zeros((stop - start, ny), dtype=np.float64)
        for k in range(X.shape[1]):
            diff = X[start:stop, k, None] - Y[None, :, k]
            d2 += diff * diff
        ii, jj = np.nonzero(d2 <= eps2)
        out_x.append((ii + start).astype(np.int64))
        out_y.append(jj.astype(np.int64))
        out_d.append(np.sqrt(d2[ii, jj]))
    return (
        np.concatenate(out_x),
        np.concatenate(out_y),
        np.concatenate(out_d),
        nx * ny,
    )


def cell_multipliers(d: int) -> np.ndarray:
    """Per-axis odd multipliers for the modular cell-key hash (uint64)."""
    out = np.empty(d, dtype=np.uint64)
    m = np.uint64(1)
    mult = np.uint64(KEY_MULT)
    for k in range(d):
        m = m * mult  # wraps mod 2**64
        out[k] = m
    return out


def cell_keys(cells: np.ndarray, mults: np.ndarray) -> np.ndarray:
    """Modular-linear key of each integer cell-coordinate row."""
    return (cells.astype(np.uint64) * mults[None, :]).sum(axis=1, dtype=np.uint64)


def offset_key_deltas(d: int, mults: np.ndarray) -> np.ndarray:
    """Key deltas of all 3**d neighbor offsets, exploiting key linearity."""
    offsets = np.array(list(product((-1, 0, 1), repeat=d)), dtype=np.int64)
    return cell_keys(offsets, mults)


def grid_pairs(X: np.ndarray, Y: np.ndarray, eps: float):
    """Grid-bucketed join: cell side exactly eps, 3**d neighbor-cell scan.

    Candidates are Y points in the 27-neighborhood generalization of each X
    point's cell; only candidates incur a distance evaluation. Key collisions
    can only add candidates (filtered by the distance test), never drop them.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    nx, ny = X.shape[0], Y.shape[0]
    d = X.shape[1]
    if nx == 0 or ny == 0:
        return _empty_result()
    eps2 = eps * eps

    with np.errstate(over="ignore"):
        mults = cell_multipliers(d)
        ky = cell_keys(np.floor(Y / eps).astype(np.int64), mults)
        kx = cell_keys(np.floor(X / eps).astype(np.int64), mults)
        deltas = offset_key_deltas(d, mults)
        order = np.argsort(ky, kind="stable").astype(np.int64)
        ukeys, ustarts, ucounts = np.unique(
            ky[order], return_index=True, return_counts=True
        )

        n_evals = 0
        res_x, res_y, res_d = [], [], []
        x_index = np.arange(nx, dtype=np.int64)
        n_groups = len(ukeys)
        for delta in deltas:
            target = kx + delta
            pos = np.searchsorted(ukeys, target)
            pos_c = np.minimum(pos, n_groups - 1)
            hit = ukeys[pos_c] == target
            if not hit.any():
                continue
            xs = x_index[hit]
            grp = pos_c[hit]
            starts = ustarts[grp]
            counts = ucounts[grp]
            total = int(counts.sum())
            n_evals += total
            cum_before = np.concatenate(([0], np.cumsum(counts)[:-1]))
            gathered = np.repeat(starts - cum_before, counts) + np.arange(total)
            yi = order[gathered]
            xi = np.repeat(xs, counts)
            d2 = np.zeros(total, dtype=np.float64)
            for k in range(d):
                diff = X[xi, k] - Y[yi, k]
                d2 += diff * diff
            keep = d2 <= eps2
            res_x.append(xi[keep])
            res_y.append(yi[keep])
            res_d.append(np.sqrt(d2[keep]))

    if not res_x:
        return _empty_result()[:3] + (n_evals,)
    return (
        np.concatenate(res_x),
        np.concatenate(res_y),
        np.concatenate(res_d),
        n_evals,
    )
