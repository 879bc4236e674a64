"""Pure numpy/Python versions of the compiled kernels.

Same signatures and return values as ``_core``.  The thread argument is
accepted and ignored.
"""
from __future__ import annotations

import numpy as np

UNREACH = 65535


def _expanded_pairs(n, indptr, indices, vh_ptr, vh_idx, h_ptr, h_idx):
    """Explicit (row, col) adjacency including clique pairs."""
    deg = np.diff(indptr)
    rows = [np.repeat(np.arange(n, dtype=np.int64), deg)]
    cols = [np.asarray(indices, dtype=np.int64)]
    for h in range(len(h_ptr) - 1):
        mem = np.asarray(h_idx[h_ptr[h]:h_ptr[h + 1]], dtype=np.int64)
        if len(mem) < 2:
            continue
        r = np.repeat(mem, len(mem))
        c = np.tile(mem, len(mem))
        keep = r != c
        rows.append(r[keep])
        cols.append(c[keep])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    order = np.lexsort((c, r))
    r, c = r[order], c[order]
    if len(r):
        keep = np.ones(len(r), dtype=bool)
        keep[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
        r, c = r[keep], c[keep]
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, r + 1, 1)
    return np.cumsum(ptr), c


def all_pairs(n, indptr, indices, vh_ptr, vh_idx, h_ptr, h_idx, nthreads=1):
    out = np.full((n, n), UNREACH, dtype=np.uint16)
    if n == 0:
        return out
    ptr, col = _expanded_pairs(n, indptr, indices, vh_ptr, vh_idx, h_ptr, h_idx)
    for s in range(n):
        row = out[s]
        row[s] = 0
        frontier = np.array([s], dtype=np.int64)
        d = 0
        while len(frontier):
            d += 1
            nb = np.concatenate([col[ptr[u]:ptr[u + 1]] for u in frontier])
            nb = np.unique(nb)
            nb = nb[row[nb] == UNREACH]
            row[nb] = d
            frontier = nb
    return out


def next_hop(n, indptr, indices, vh_ptr, vh_idx, h_ptr, h_idx, D, targets, nthreads=1):
    ptr, col = _expanded_pairs(n, indptr, indices, vh_ptr, vh_idx, h_ptr, h_idx)
    rows = np.repeat(np.arange(n, dtype=np.int64), np.diff(ptr))
    out = np.full((len(targets), n), -1, dtype=np.int32)
    for t, y in enumerate(targets):
        dy = D[y].astype(np.int64)
        ok = dy[col] + 1 == dy[rows]
        best = np.full(n, n, dtype=np.int64)
        np.minimum.at(best, rows[ok], col[ok])
        best[best == n] = -1
        best[y] = -1
        out[t] = best
    return out


def _walk(u, w, NX):
    path = [u]
    while u != w:
        u = int(NX[w, u])
        path.append(u)
    return path


def _triangle(D, NX, x, y, z):
    pxy = _walk(x, y, NX)
    pxz = _walk(x, z, NX)
    pyz = _walk(y, z, NX)
    best, side, arg = 0, -1, -1
    for k, (s, others) in enumerate(((pxy, pxz + pyz), (pxz, pxy + pyz), (pyz, pxy + pxz))):
        m = D[np.ix_(s, others)].min(axis=1)
        i = int(np.argmax(m))
        if m[i] > best:
            best, side, arg = int(m[i]), k, s[i]
    return best, side, arg


def thin_exact(D, NX, nthreads=1):
    n = D.shape[0]
    best = (0, -1, -1, -1, -1, -1)
    for x in range(n):
        for y in range(x + 1, n):
            for z in range(y + 1, n):
                v, side, arg = _triangle(D, NX, x, y, z)
                if v > best[0]:
                    best = (v, x, y, z, side, arg)
    return best


def thin_triples(D, NX, triples, nthreads=1):
    m = len(triples)
    vals = np.zeros(m, dtype=np.int32)
    sides = np.full(m, -1, dtype=np.int32)
    vs = np.full(m, -1, dtype=np.int32)
    for t in range(m):
        x, y, z = (int(a) for a in triples[t])
        vals[t], sides[t], vs[t] = _triangle(D, NX, x, y, z)
    return vals, sides, vs


def _fp_many(D, x, y, z, w):
    s = np.stack([D[x, y].astype(np.int64) + D[z, w],
                  D[x, z].astype(np.int64) + D[y, w],
                  D[x, w].astype(np.int64) + D[y, z]])
    s.sort(axis=0)
    return s[2] - s[1]


def four_point_exact(D, nthreads=1):
    n = D.shape[0]
    best = (0, -1, -1, -1, -1)
    for x in range(n):
        for y in range(x + 1, n):
            zs, ws = np.triu_indices(n, 1)
            keep = zs > y
            zs, ws = zs[keep], ws[keep]
            if not len(zs):
                continue
            vals = _fp_many(D, x, y, zs, ws)
            i = int(np.argmax(vals))
            if vals[i] > best[0]:
                best = (int(vals[i]), x, y, int(zs[i]), int(ws[i]))
    return best


def four_point_quads(D, quads, nthreads=1):
    q = np.asarray(quads, dtype=np.int64)
    if not len(q):
        return np.zeros(0, dtype=np.int32)
    return _fp_many(D, q[:, 0], q[:, 1], q[:, 2], q[:, 3]).astype(np.int32)
