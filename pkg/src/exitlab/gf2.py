"""GF(2) linear algebra: dense uint8 routines and bit-packed elimination kernels.

Dense routines operate on numpy uint8 matrices and are meant for
once-per-code work (rank checks, dual bases, null spaces).  The packed
kernels operate on rows packed into uint64 words and carry the per-trial
load of the erasure-channel rank decoder.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64, int64


def row_reduce(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2). Returns (rref, pivot columns)."""
    a = (np.asarray(mat) & 1).astype(np.uint8).copy()
    if a.ndim != 2:
        raise ValueError("expected a 2-d bit matrix")
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hits = np.flatnonzero(a[r:, c])
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        others = np.flatnonzero(a[:, c])
        others = others[others != r]
        if others.size:
            a[others] ^= a[r]
        pivots.append(c)
        r += 1
    return a, pivots


def rank(mat: np.ndarray) -> int:
    return len(row_reduce(mat)[1])


def nullspace(mat: np.ndarray) -> np.ndarray:
    """Basis (as rows) of {v : mat @ v = 0 over GF(2)}."""
    a = np.atleast_2d(np.asarray(mat))
    n = a.shape[1]
    rref, pivots = row_reduce(a)
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for t, c in enumerate(free):
        basis[t, c] = 1
        basis[t, pivots] = rref[: len(pivots), c]
    return basis


def in_rowspace(vec: np.ndarray, mat: np.ndarray) -> bool:
    """Is vec in the row space of mat over GF(2)?"""
    base = rank(mat)
    aug = np.vstack([np.atleast_2d(mat), np.atleast_2d(vec)])
    return rank(aug) == base


def pack_rows(mat: np.ndarray) -> np.ndarray:
    """Pack the rows of a bit matrix into uint64 words, LSB-first."""
    a = (np.asarray(mat) & 1).astype(np.uint64)
    k, n = a.shape
    nwords = (n + 63) // 64
    out = np.zeros((k, nwords), dtype=np.uint64)
    for w in range(nwords):
        chunk = a[:, 64 * w : 64 * (w + 1)]
        shifts = np.arange(chunk.shape[1], dtype=np.uint64)
        out[:, w] = (chunk << shifts).sum(axis=1, dtype=np.uint64)
    return out


def unpack_bits(words: np.ndarray, n: int) -> np.ndarray:
    """Inverse of pack_rows for a single packed row; returns a bool array."""
    idx = np.arange(n)
    return ((words[idx >> 6] >> (idx & 63).astype(np.uint64)) & 1).astype(bool)


@njit(cache=True)
def forward_eliminate_rest_or(a, order, npro):  # pragma: no cover - numba
    """Forward Gaussian elimination (below pivots only) on a packed matrix.

    Processes the columns listed in order[:npro], in order.  Afterwards the
    rows below the last pivot span the quotient by the processed columns;
    their bitwise OR over all n columns is returned along with the rank.
    """
    k, nwords = a.shape
    rows_buf = np.empty(k, dtype=int64)
    npiv = 0
    for oi in range(npro):
        col = order[oi]
        w = col >> 6
        mask = uint64(1) << uint64(col & 63)
        piv = -1
        for r in range(npiv, k):
            if a[r, w] & mask:
                piv = r
                break
        if piv < 0:
            continue
        if piv != npiv:
            for t in range(nwords):
                tmp = a[piv, t]
                a[piv, t] = a[npiv, t]
                a[npiv, t] = tmp
        nr = 0
        for r in range(npiv + 1, k):
            if a[r, w] & mask:
                rows_buf[nr] = r
                nr += 1
        for ri in range(nr):
            r = rows_buf[ri]
            for t in range(w, nwords):
                a[r, t] ^= a[npiv, t]
        npiv += 1
        if npiv == k:
            break
    rest_or = np.zeros(nwords, dtype=uint64)
    for r in range(npiv, k):
        for t in range(nwords):
            rest_or[t] |= a[r, t]
    return rest_or, npiv


@njit(cache=True)
def forward_eliminate_rest_or2(a, order, npro):  # pragma: no cover - numba
    """Same contract as forward_eliminate_rest_or, eliminating column pairs.

    Rows carrying both pivot bits get a single combined XOR, which roughly
    halves the memory traffic of the elimination on dense matrices.
    """
    k, nwords = a.shape
    npiv = 0
    oi = 0
    comb = np.empty(nwords, dtype=uint64)
    while oi < npro and npiv < k:
        c1 = -1
        while oi < npro:
            col = order[oi]
            oi += 1
            w = col >> 6
            mask = uint64(1) << uint64(col & 63)
            piv = -1
            for r in range(npiv, k):
                if a[r, w] & mask:
                    piv = r
                    break
            if piv >= 0:
                c1 = col
                if piv != npiv:
                    for t in range(nwords):
                        tmp = a[piv, t]
                        a[piv, t] = a[npiv, t]
                        a[npiv, t] = tmp
                break
        if c1 < 0:
            break
        p1 = npiv
        w1 = c1 >> 6
        m1 = uint64(1) << uint64(c1 & 63)
        # second pivot column; candidate bits corrected for the pending
        # elimination by row p1
        c2 = -1
        while oi < npro:
            col = order[oi]
            oi += 1
            w = col >> 6
            mask = uint64(1) << uint64(col & 63)
            p1bit = (a[p1, w] & mask) != uint64(0)
            piv = -1
            for r in range(npiv + 1, k):
                b = (a[r, w] & mask) != uint64(0)
                if p1bit and (a[r, w1] & m1) != uint64(0):
                    b = not b
                if b:
                    piv = r
                    break
            if piv >= 0:
                c2 = col
                if piv != npiv + 1:
                    for t in range(nwords):
                        tmp = a[piv, t]
                        a[piv, t] = a[npiv + 1, t]
                        a[npiv + 1, t] = tmp
                break
        if c2 < 0:
            # lone trailing pivot column
            for r in range(p1 + 1, k):
                if a[r, w1] & m1:
                    for t in range(w1, nwords):
                        a[r, t] ^= a[p1, t]
            npiv += 1
            continue
        p2 = npiv + 1
        w2 = c2 >> 6
        m2 = uint64(1) << uint64(c2 & 63)
        if a[p2, w1] & m1:
            for t in range(nwords):
                a[p2, t] ^= a[p1, t]
        # normalize p1 at c2 so the raw-bit row classes below stay exact
        if a[p1, w2] & m2:
            for t in range(nwords):
                a[p1, t] ^= a[p2, t]
        wlo = w1 if w1 < w2 else w2
        for t in range(nwords):
            comb[t] = a[p1, t] ^ a[p2, t]
        for r in range(npiv + 2, k):
            e1 = (a[r, w1] & m1) != uint64(0)
            e2 = (a[r, w2] & m2) != uint64(0)
            if e1:
                if e2:
                    for t in range(wlo, nwords):
                        a[r, t] ^= comb[t]
                else:
                    for t in range(wlo, nwords):
                        a[r, t] ^= a[p1, t]
            elif e2:
                for t in range(wlo, nwords):
                    a[r, t] ^= a[p2, t]
        npiv += 2
    rest_or = np.zeros(nwords, dtype=uint64)
    for r in range(npiv, k):
        for t in range(nwords):
            rest_or[t] |= a[r, t]
    return rest_or, npiv
