"""Numpy implementations of the hot kernels.

Same signatures and results as the compiled ``_ckernels`` module; used when
the extension is not built or when ``PAM6RIN_BACKEND=python``.
"""
from __future__ import annotations

import itertools

import numpy as np

NAME = "python"
_BLOCK = 1 << 14


def _scores(y1, y2, pts, var):
    """Ranking keys ``(hits, score)``, both ``(n, m)``.

    ``score`` is the negative twice log-likelihood over positive-variance
    dimensions, up to a constant.  ``hits`` counts exact matches in
    zero-variance dimensions and is -1 where a zero-variance dimension misses.
    """
    # operation order mirrors the compiled kernel so both break ties identically
    pos = var > 0
    inv = np.where(pos, 1.0 / np.where(pos, var, 1.0), 0.0)
    logn = np.where(pos, np.log(np.where(pos, var, 1.0)), 0.0).sum(axis=1)
    score = None
    hits = np.zeros((len(y1), len(pts)), dtype=np.int64)
    miss = np.zeros((len(y1), len(pts)), dtype=bool)
    for d, y in enumerate((y1, y2)):
        diff = y[:, None] - pts[None, :, d]
        term = diff * diff * inv[None, :, d]
        zero = ~pos[:, d]
        if zero.any():
            hit = diff[:, zero] == 0
            hits[:, zero] += hit
            miss[:, zero] |= ~hit
            term[:, zero] = 0.0
        score = term if score is None else score + term
    score = score + logn[None, :]
    hits[miss] = -1
    return hits, score


def _argmin(hits, score):
    # most hits first, then lowest score, then lowest index
    top = hits.max(axis=1, keepdims=True)
    masked = np.where(hits == top, score, np.inf)
    return np.argmin(masked, axis=1)


def ml_detect_batch(y, pts, var):
    y = np.ascontiguousarray(y, dtype=float)
    pts = np.ascontiguousarray(pts, dtype=float)
    var = np.ascontiguousarray(var, dtype=float)
    out = np.empty(len(y), dtype=np.intp)
    for s in range(0, len(y), _BLOCK):
        blk = y[s:s + _BLOCK]
        out[s:s + _BLOCK] = _argmin(*_scores(blk[:, 0], blk[:, 1], pts, var))
    return out


_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def mc_count(idx, z, pts, var, codes):
    """Symbol and bit errors for transmitted indices ``idx`` and unit noise ``z``."""
    idx = np.asarray(idx, dtype=np.intp)
    pts = np.ascontiguousarray(pts, dtype=float)
    var = np.ascontiguousarray(var, dtype=float)
    y = pts[idx] + np.asarray(z, dtype=float) * np.sqrt(var[idx])
    det = ml_detect_batch(y, pts, var)
    wrong = det != idx
    codes = np.asarray(codes, dtype=np.int64)
    bits = _POPCOUNT[(codes[idx[wrong]] ^ codes[det[wrong]]) & 0xFF].sum()
    return int(wrong.sum()), int(bits)


def search_assignment(unary, pair_i, pair_j, label_hamming):
    """Exhaustive minimisation over all permutations, in lexicographic order.

    Returns ``(perm, cost, count)``; on ties the earliest permutation wins.
    """
    unary = np.asarray(unary, dtype=np.int64)
    lh = np.asarray(label_hamming, dtype=np.int64)
    n = unary.shape[0]
    pair_i = np.asarray(pair_i, dtype=np.intp)
    pair_j = np.asarray(pair_j, dtype=np.intp)
    rows = np.arange(n)
    best_cost, best_perm, count = None, None, 0
    if n == 0:
        return np.zeros(0, dtype=np.intp), 0, 1
    # one block per leading label keeps memory near n!/n rows
    for first in range(n):
        rest = [k for k in range(n) if k != first]
        tails = list(itertools.permutations(rest))
        tail = np.array(tails, dtype=np.int8).reshape(len(tails), n - 1)
        perms = np.empty((len(tail), n), dtype=np.intp)
        perms[:, 0] = first
        perms[:, 1:] = tail
        cost = unary[rows, perms].sum(axis=1)
        if len(pair_i):
            cost += lh[perms[:, pair_i], perms[:, pair_j]].sum(axis=1)
        k = int(np.argmin(cost))
        count += len(perms)
        if best_cost is None or cost[k] < best_cost:
            best_cost, best_perm = int(cost[k]), perms[k].copy()
    return best_perm, best_cost, count
