# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: BFS distance tables, canonical next-hop tables and
the exhaustive triangle / quadruple scans.

Adjacency is passed as CSR arrays.  Cliques (cone-offs) are passed in
hub form: ``vh_ptr/vh_idx`` lists the cliques containing each vertex and
``h_ptr/h_idx`` lists the members of each clique.  A clique is never
materialised as explicit edges.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange, parallel
from libc.stdlib cimport malloc, free, calloc

ctypedef cnp.uint16_t u16
ctypedef cnp.int32_t i32
ctypedef cnp.int64_t i64
ctypedef unsigned long long u64

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil

cdef u16 UNREACH = 65535
# ints; above this the per-triangle walk is used instead of a full path table
cdef size_t PATH_TABLE_LIMIT = 1 << 24
# bytes for one vertex bitset per canonical path
cdef size_t BITSET_LIMIT = 1 << 28


cdef void _bfs_row(int s, int n, const i32[::1] indptr, const i32[::1] indices,
                   const i32[::1] vh_ptr, const i32[::1] vh_idx,
                   const i32[::1] h_ptr, const i32[::1] h_idx,
                   u16[:, ::1] D, int *queue, int *hstamp) noexcept nogil:
    cdef int head = 0, tail = 0, u, w, k, kk, h
    cdef u16 du
    D[s, s] = 0
    queue[tail] = s
    tail += 1
    while head < tail:
        u = queue[head]
        head += 1
        du = D[s, u]
        for k in range(indptr[u], indptr[u + 1]):
            w = indices[k]
            if D[s, w] == UNREACH:
                D[s, w] = du + 1
                queue[tail] = w
                tail += 1
        for k in range(vh_ptr[u], vh_ptr[u + 1]):
            h = vh_idx[k]
            if hstamp[h] == s + 1:
                continue
            hstamp[h] = s + 1
            for kk in range(h_ptr[h], h_ptr[h + 1]):
                w = h_idx[kk]
                if D[s, w] == UNREACH:
                    D[s, w] = du + 1
                    queue[tail] = w
                    tail += 1


def all_pairs(int n, const i32[::1] indptr, const i32[::1] indices,
              const i32[::1] vh_ptr, const i32[::1] vh_idx,
              const i32[::1] h_ptr, const i32[::1] h_idx, int nthreads=1):
    """Dense BFS distance table; unreachable pairs hold 65535."""
    out = np.full((n, n), UNREACH, dtype=np.uint16)
    if n == 0:
        return out
    cdef u16[:, ::1] D = out
    cdef int nh = h_ptr.shape[0] - 1
    cdef int s
    cdef int *queue
    cdef int *hstamp
    if nthreads < 1:
        nthreads = 1
    with nogil, parallel(num_threads=nthreads):
        queue = <int *> malloc(n * sizeof(int))
        hstamp = <int *> calloc(nh + 1, sizeof(int))
        for s in prange(n, schedule='static'):
            _bfs_row(s, n, indptr, indices, vh_ptr, vh_idx, h_ptr, h_idx, D, queue, hstamp)
        free(queue)
        free(hstamp)
    return out


def next_hop(int n, const i32[::1] indptr, const i32[::1] indices,
             const i32[::1] vh_ptr, const i32[::1] vh_idx,
             const i32[::1] h_ptr, const i32[::1] h_idx,
             const u16[:, ::1] D, const i32[::1] targets, int nthreads=1):
    """Row t holds, for every v, the smallest neighbour of v one step closer
    to targets[t] (-1 at the target itself)."""
    cdef int m = targets.shape[0]
    out = np.full((m, n), -1, dtype=np.int32)
    cdef i32[:, ::1] NX = out
    cdef int t, y, v, k, kk, h, w, best
    cdef u16 dv
    if nthreads < 1:
        nthreads = 1
    for t in prange(m, nogil=True, num_threads=nthreads, schedule='static'):
        y = targets[t]
        for v in range(n):
            if v == y:
                continue
            dv = D[y, v]
            best = n
            for k in range(indptr[v], indptr[v + 1]):
                w = indices[k]
                if D[y, w] + 1 == dv and w < best:
                    best = w
            for k in range(vh_ptr[v], vh_ptr[v + 1]):
                h = vh_idx[k]
                for kk in range(h_ptr[h], h_ptr[h + 1]):
                    w = h_idx[kk]
                    if w < best and w != v and D[y, w] + 1 == dv:
                        best = w
                    elif w >= best:
                        break
            NX[t, v] = best if best < n else -1
    return out


cdef int _walk(int u, int w, const i32[:, ::1] NX, int *buf) noexcept nogil:
    # canonical path u -> w, NX indexed by target w; returns vertex count
    cdef int L = 0
    buf[L] = u
    L += 1
    while u != w:
        u = NX[w, u]
        buf[L] = u
        L += 1
    return L


cdef int _side_defect(const u16[:, ::1] D, int *side, int ls, int *oa, int la,
                      int *ob, int lb, int *stamp, int tag, int floor_,
                      int *arg) noexcept nogil:
    """max over v in side of d(v, A u B); only values above floor_ count."""
    cdef int i, j, v, m, best = -1
    for i in range(la):
        stamp[oa[i]] = tag
    for i in range(lb):
        stamp[ob[i]] = tag
    for i in range(ls):
        v = side[i]
        if stamp[v] == tag:
            continue
        m = 65535
        for j in range(la):
            if D[v, oa[j]] < m:
                m = D[v, oa[j]]
                if m <= floor_:
                    break
        if m > floor_:
            for j in range(lb):
                if D[v, ob[j]] < m:
                    m = D[v, ob[j]]
                    if m <= floor_:
                        break
        if m > floor_ and m > best:
            best = m
            arg[0] = v
    return best


cdef int _triangle_paths(const u16[:, ::1] D, int *pxy, int lxy, int *pxz, int lxz,
                         int *pyz, int lyz, int *stamp, int *tagc,
                         int floor_, int *wside, int *wv) noexcept nogil:
    cdef int best = floor_, val, arg = -1
    tagc[0] += 1
    val = _side_defect(D, pxy, lxy, pxz, lxz, pyz, lyz, stamp, tagc[0], best, &arg)
    if val > best:
        best = val
        wside[0] = 0
        wv[0] = arg
    tagc[0] += 1
    val = _side_defect(D, pxz, lxz, pxy, lxy, pyz, lyz, stamp, tagc[0], best, &arg)
    if val > best:
        best = val
        wside[0] = 1
        wv[0] = arg
    tagc[0] += 1
    val = _side_defect(D, pyz, lyz, pxy, lxy, pxz, lxz, stamp, tagc[0], best, &arg)
    if val > best:
        best = val
        wside[0] = 2
        wv[0] = arg
    return best


cdef int _triangle(const u16[:, ::1] D, const i32[:, ::1] NX, int x, int y, int z,
                   int *pxy, int *pxz, int *pyz, int *stamp, int *tagc,
                   int floor_, int *wside, int *wv) noexcept nogil:
    # canonical sides: path(min -> max) toward max
    cdef int lxy = _walk(x, y, NX, pxy)
    cdef int lxz = _walk(x, z, NX, pxz)
    cdef int lyz = _walk(y, z, NX, pyz)
    return _triangle_paths(D, pxy, lxy, pxz, lxz, pyz, lyz, stamp, tagc, floor_, wside, wv)


cdef int _defect_x(const u16[:, ::1] D, int *side, int ls, unsigned char *in1, unsigned char *in2,
                   int *o1, int l1, int *o2, int l2, int floor_, int *arg) noexcept nogil:
    """max over v in side, not on the other two sides (membership given by
    in1/in2), of d(v, other sides); only values above floor_ count."""
    cdef int i, j, v, m, best = -1
    for i in range(ls):
        v = side[i]
        if in1[v] or in2[v]:
            continue
        m = 65535
        for j in range(l1):
            if D[v, o1[j]] < m:
                m = D[v, o1[j]]
                if m <= floor_:
                    break
        if m > floor_:
            for j in range(l2):
                if D[v, o2[j]] < m:
                    m = D[v, o2[j]]
                    if m <= floor_:
                        break
        if m > floor_ and m > best:
            best = m
            arg[0] = v
    return best


cdef int _uncovered_defect(const u16[:, ::1] D, const i32[:, ::1] NX, int a, int b, u64 *U,
                          u64 *Q1, u64 *Q2, int W, int floor_, int *arg) noexcept nogil:
    """Walk the side a -> b; for its vertices flagged in U take the distance
    to the vertices of Q1 | Q2.  Ties keep the first vertex along the side."""
    cdef int best = -1, m, v = a, w, t, u
    cdef u64 word
    while True:
        if (U[v >> 6] >> (v & 63)) & 1:
            m = 65535
            for w in range(W):
                word = Q1[w] | Q2[w]
                while word:
                    t = __builtin_ctzll(word)
                    u = (w << 6) + t
                    if D[v, u] < m:
                        m = D[v, u]
                    word &= word - 1
                if m <= floor_:
                    break
            if m > floor_ and m > best:
                best = m
                arg[0] = v
        if v == b:
            break
        v = NX[b, v]
    return best


def _thin_bitset(const u16[:, ::1] D, const i32[:, ::1] NX, int nthreads):
    cdef int n = D.shape[0], W = (n + 63) >> 6
    vals = np.zeros(n, dtype=np.int32)
    wit = np.full((n, 5), -1, dtype=np.int32)
    cdef i32[::1] V = vals
    cdef i32[:, ::1] Wt = wit
    cdef u64 *bits = <u64 *> calloc(<size_t> n * n * W, sizeof(u64))
    if bits == NULL:
        raise MemoryError()
    cdef int i, j, u, x, y, z, k, r, val, arg, any_
    cdef u64 *row
    cdef u64 *S
    cdef u64 *A
    cdef u64 *B
    cdef u64 *U
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                row = bits + (<size_t> i * n + j) * W
                u = i
                row[u >> 6] |= (<u64> 1) << (u & 63)
                while u != j:
                    u = NX[j, u]
                    row[u >> 6] |= (<u64> 1) << (u & 63)
    if nthreads < 1:
        nthreads = 1
    with nogil, parallel(num_threads=nthreads):
        U = <u64 *> malloc(W * sizeof(u64))
        for x in prange(n, schedule='dynamic'):
            V[x] = 0
            for y in range(x + 1, n):
                S = bits + (<size_t> x * n + y) * W
                for z in range(y + 1, n):
                    A = bits + (<size_t> x * n + z) * W
                    B = bits + (<size_t> y * n + z) * W
                    r = V[x]
                    # side 0: [x, y] against [x, z] u [y, z]
                    any_ = 0
                    for k in range(W):
                        U[k] = S[k] & ~(A[k] | B[k])
                        any_ = any_ | (U[k] != 0)
                    if any_:
                        val = _uncovered_defect(D, NX, x, y, U, A, B, W, r, &arg)
                        if val > r:
                            r = val
                            Wt[x, 0] = y
                            Wt[x, 1] = z
                            Wt[x, 2] = 0
                            Wt[x, 3] = arg
                    any_ = 0
                    for k in range(W):
                        U[k] = A[k] & ~(S[k] | B[k])
                        any_ = any_ | (U[k] != 0)
                    if any_:
                        val = _uncovered_defect(D, NX, x, z, U, S, B, W, r, &arg)
                        if val > r:
                            r = val
                            Wt[x, 0] = y
                            Wt[x, 1] = z
                            Wt[x, 2] = 1
                            Wt[x, 3] = arg
                    any_ = 0
                    for k in range(W):
                        U[k] = B[k] & ~(S[k] | A[k])
                        any_ = any_ | (U[k] != 0)
                    if any_:
                        val = _uncovered_defect(D, NX, y, z, U, S, A, W, r, &arg)
                        if val > r:
                            r = val
                            Wt[x, 0] = y
                            Wt[x, 1] = z
                            Wt[x, 2] = 2
                            Wt[x, 3] = arg
                    V[x] = r
        free(U)
    free(bits)
    best = int(vals.max())
    if best == 0:
        return (0, -1, -1, -1, -1, -1)
    x0 = int(np.argmax(vals))
    return (best, x0, int(wit[x0, 0]), int(wit[x0, 1]), int(wit[x0, 2]), int(wit[x0, 3]))


def thin_exact(const u16[:, ::1] D, const i32[:, ::1] NX, int nthreads=1):
    """Exhaustive canonical-triangle scan.  Returns (delta, x, y, z, side, v);
    the witness is the first triple in lexicographic order attaining delta.

    Each canonical path is held as a vertex bitset, so a side lying inside
    the union of the other two is dismissed with a few word operations.
    Beyond the bitset memory budget: for a fixed x every side through x is
    a path out of x, so those paths and their vertex-membership rows are
    built once per x; only [y, z] is walked per triangle.
    """
    cdef int n = D.shape[0]
    if n < 3:
        return (0, -1, -1, -1, -1, -1)
    if <size_t> n * n * ((n + 63) >> 6) * 8 <= BITSET_LIMIT:
        return _thin_bitset(D, NX, nthreads)
    vals = np.zeros(n, dtype=np.int32)
    wit = np.full((n, 5), -1, dtype=np.int32)
    cdef i32[::1] V = vals
    cdef i32[:, ::1] W = wit
    cdef int x, y, z, r, val, arg, maxlen = 0, i, j, k, lyz
    for i in range(n):
        for j in range(n):
            if D[i, j] > maxlen:
                maxlen = D[i, j]
    maxlen += 2
    cdef int *table
    cdef int *tlen
    cdef unsigned char *member
    cdef unsigned char *inyz
    cdef int *pxy
    cdef int *pxz
    cdef int *own
    cdef int *cyz
    cdef int *allp = NULL
    cdef int *alll = NULL
    if nthreads < 1:
        nthreads = 1
    if <size_t> n * n * maxlen <= PATH_TABLE_LIMIT:
        # every canonical path once, shared read-only by all threads
        allp = <int *> malloc(<size_t> n * n * maxlen * sizeof(int))
        alll = <int *> malloc(<size_t> n * n * sizeof(int))
        if allp == NULL or alll == NULL:
            free(allp)
            free(alll)
            allp = NULL
            alll = NULL
        else:
            with nogil:
                for i in range(n):
                    for j in range(i + 1, n):
                        alll[<size_t> i * n + j] = _walk(i, j, NX, allp + (<size_t> i * n + j) * maxlen)
    with nogil, parallel(num_threads=nthreads):
        table = <int *> malloc(<size_t> n * maxlen * sizeof(int))
        tlen = <int *> malloc(n * sizeof(int))
        own = <int *> malloc(maxlen * sizeof(int))
        member = <unsigned char *> calloc(<size_t> n * n, 1)
        inyz = <unsigned char *> calloc(n, 1)
        for x in prange(n, schedule='dynamic'):
            V[x] = 0
            for y in range(x + 1, n):
                tlen[y] = _walk(x, y, NX, table + <size_t> y * maxlen)
                for k in range(tlen[y]):
                    member[<size_t> y * n + table[<size_t> y * maxlen + k]] = 1
            for y in range(x + 1, n):
                pxy = table + <size_t> y * maxlen
                for z in range(y + 1, n):
                    pxz = table + <size_t> z * maxlen
                    if allp != NULL:
                        cyz = allp + (<size_t> y * n + z) * maxlen
                        lyz = alll[<size_t> y * n + z]
                    else:
                        cyz = own
                        lyz = _walk(y, z, NX, cyz)
                    for k in range(lyz):
                        inyz[cyz[k]] = 1
                    r = V[x]
                    arg = -1
                    val = _defect_x(D, pxy, tlen[y], member + <size_t> z * n, inyz,
                                    pxz, tlen[z], cyz, lyz, r, &arg)
                    if val > r:
                        r = val
                        W[x, 0] = y
                        W[x, 1] = z
                        W[x, 2] = 0
                        W[x, 3] = arg
                    val = _defect_x(D, pxz, tlen[z], member + <size_t> y * n, inyz,
                                    pxy, tlen[y], cyz, lyz, r, &arg)
                    if val > r:
                        r = val
                        W[x, 0] = y
                        W[x, 1] = z
                        W[x, 2] = 1
                        W[x, 3] = arg
                    val = _defect_x(D, cyz, lyz, member + <size_t> y * n, member + <size_t> z * n,
                                    pxy, tlen[y], pxz, tlen[z], r, &arg)
                    if val > r:
                        r = val
                        W[x, 0] = y
                        W[x, 1] = z
                        W[x, 2] = 2
                        W[x, 3] = arg
                    V[x] = r
                    for k in range(lyz):
                        inyz[cyz[k]] = 0
            for y in range(x + 1, n):
                for k in range(tlen[y]):
                    member[<size_t> y * n + table[<size_t> y * maxlen + k]] = 0
        free(table)
        free(tlen)
        free(own)
        free(member)
        free(inyz)
    free(allp)
    free(alll)
    best = int(vals.max())
    if best == 0:
        return (0, -1, -1, -1, -1, -1)
    x0 = int(np.argmax(vals))
    return (best, x0, int(wit[x0, 0]), int(wit[x0, 1]), int(wit[x0, 2]), int(wit[x0, 3]))


def thin_triples(const u16[:, ::1] D, const i32[:, ::1] NX, const i32[:, ::1] triples,
                 int nthreads=1):
    """Defect of each supplied sorted triple; returns (values, side, v) arrays."""
    cdef int n = D.shape[0], m = triples.shape[0], t, i, j, maxlen = 0
    vals = np.zeros(m, dtype=np.int32)
    sides = np.full(m, -1, dtype=np.int32)
    vs = np.full(m, -1, dtype=np.int32)
    cdef i32[::1] V = vals
    cdef i32[::1] S = sides
    cdef i32[::1] VV = vs
    if m == 0:
        return vals, sides, vs
    for i in range(n):
        for j in range(n):
            if D[i, j] > maxlen:
                maxlen = D[i, j]
    maxlen += 2
    cdef int *pxy
    cdef int *pxz
    cdef int *pyz
    cdef int *stamp
    cdef int tagc, ws, wv, r
    if nthreads < 1:
        nthreads = 1
    with nogil, parallel(num_threads=nthreads):
        pxy = <int *> malloc(maxlen * sizeof(int))
        pxz = <int *> malloc(maxlen * sizeof(int))
        pyz = <int *> malloc(maxlen * sizeof(int))
        stamp = <int *> calloc(n, sizeof(int))
        tagc = 0
        for t in prange(m, schedule='static'):
            ws = -1
            wv = -1
            r = _triangle(D, NX, triples[t, 0], triples[t, 1], triples[t, 2],
                          pxy, pxz, pyz, stamp, &tagc, 0, &ws, &wv)
            V[t] = r
            S[t] = ws
            VV[t] = wv
        free(pxy)
        free(pxz)
        free(pyz)
        free(stamp)
    return vals, sides, vs


cdef inline int _fp(const u16[:, ::1] D, int x, int y, int z, int w) noexcept nogil:
    # twice the four-point defect: largest pair sum minus the second largest
    cdef int s1 = D[x, y] + D[z, w]
    cdef int s2 = D[x, z] + D[y, w]
    cdef int s3 = D[x, w] + D[y, z]
    cdef int t
    if s1 < s2:
        t = s1; s1 = s2; s2 = t
    if s2 < s3:
        t = s2; s2 = s3; s3 = t
    if s1 < s2:
        t = s1; s1 = s2; s2 = t
    return s1 - s2


def four_point_exact(const u16[:, ::1] D, int nthreads=1):
    """Exhaustive quadruple scan.  Returns (twice delta, x, y, z, w)."""
    cdef int n = D.shape[0]
    if n < 4:
        return (0, -1, -1, -1, -1)
    vals = np.zeros(n, dtype=np.int32)
    wit = np.full((n, 3), -1, dtype=np.int32)
    cdef i32[::1] V = vals
    cdef i32[:, ::1] W = wit
    cdef int x, y, z, w, r
    if nthreads < 1:
        nthreads = 1
    for x in prange(n, nogil=True, num_threads=nthreads, schedule='dynamic'):
        V[x] = 0
        for y in range(x + 1, n):
            for z in range(y + 1, n):
                for w in range(z + 1, n):
                    r = _fp(D, x, y, z, w)
                    if r > V[x]:
                        V[x] = r
                        W[x, 0] = y
                        W[x, 1] = z
                        W[x, 2] = w
    best = int(vals.max())
    if best == 0:
        return (0, -1, -1, -1, -1)
    x0 = int(np.argmax(vals))
    return (best, x0, int(wit[x0, 0]), int(wit[x0, 1]), int(wit[x0, 2]))


def four_point_quads(const u16[:, ::1] D, const i32[:, ::1] quads, int nthreads=1):
    """Twice the four-point defect of each supplied quadruple."""
    cdef int m = quads.shape[0], t
    vals = np.zeros(m, dtype=np.int32)
    cdef i32[::1] V = vals
    if nthreads < 1:
        nthreads = 1
    for t in prange(m, nogil=True, num_threads=nthreads, schedule='static'):
        V[t] = _fp(D, quads[t, 0], quads[t, 1], quads[t, 2], quads[t, 3])
    return vals
