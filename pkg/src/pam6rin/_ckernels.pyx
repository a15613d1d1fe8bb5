# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: ML detection, Monte Carlo error counting, labeling search."""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt, INFINITY

cnp.import_array()

NAME = "cython"

DEF MAXPTS = 64
DEF MAXFREE = 16


cdef inline Py_ssize_t _argmin(double y1, double y2, const double[:, ::1] pts,
                               const double[:, ::1] var, const double[::1] logn,
                               const double[:, ::1] inv, Py_ssize_t m) noexcept nogil:
    # a zero-variance dimension is a point mass: an exact hit outranks any
    # finite density, a miss excludes the candidate.  Candidates are ranked
    # by hit count, then by the score over the remaining dimensions.
    cdef Py_ssize_t k, best = 0
    cdef double s, d, bs = INFINITY
    cdef int hits, bh = -1
    for k in range(m):
        hits = 0
        d = y1 - pts[k, 0]
        if var[k, 0] > 0:
            s = d * d * inv[k, 0]
        elif d == 0:
            s = 0.0
            hits = 1
        else:
            continue
        d = y2 - pts[k, 1]
        if var[k, 1] > 0:
            s = s + d * d * inv[k, 1]
        elif d == 0:
            hits += 1
        else:
            continue
        s = s + logn[k]
        if hits > bh or (hits == bh and s < bs):
            bs = s
            bh = hits
            best = k
    return best


cdef _prepare(const double[:, ::1] var, double[::1] logn, double[:, ::1] inv):
    cdef Py_ssize_t k, d, m = var.shape[0]
    for k in range(m):
        logn[k] = 0.0
        for d in range(2):
            if var[k, d] > 0:
                inv[k, d] = 1.0 / var[k, d]
                logn[k] += log(var[k, d])
            else:
                inv[k, d] = 0.0


def ml_detect_batch(y, pts, var):
    cdef const double[:, ::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[:, ::1] pv = np.ascontiguousarray(pts, dtype=np.float64)
    cdef const double[:, ::1] vv = np.ascontiguousarray(var, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0], m = pv.shape[0], i
    logn_a = np.empty(m)
    inv_a = np.empty((m, 2))
    cdef double[::1] logn = logn_a
    cdef double[:, ::1] inv = inv_a
    _prepare(vv, logn, inv)
    out_a = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t[::1] out = out_a
    with nogil:
        for i in range(n):
            out[i] = _argmin(yv[i, 0], yv[i, 1], pv, vv, logn, inv, m)
    return out_a


cdef inline int _popcount(long long x) noexcept nogil:
    cdef int c = 0
    while x:
        x &= x - 1
        c += 1
    return c


def mc_count(idx, z, pts, var, codes):
    cdef const Py_ssize_t[::1] iv = np.ascontiguousarray(idx, dtype=np.intp)
    cdef const double[:, ::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef const double[:, ::1] pv = np.ascontiguousarray(pts, dtype=np.float64)
    cdef const double[:, ::1] vv = np.ascontiguousarray(var, dtype=np.float64)
    cdef const long long[::1] cv = np.ascontiguousarray(codes, dtype=np.int64)
    cdef Py_ssize_t n = iv.shape[0], m = pv.shape[0], i, t, k
    logn_a = np.empty(m)
    inv_a = np.empty((m, 2))
    sd_a = np.sqrt(np.asarray(vv))
    cdef double[::1] logn = logn_a
    cdef double[:, ::1] inv = inv_a
    cdef const double[:, ::1] sd = sd_a
    _prepare(vv, logn, inv)
    cdef long long sym_err = 0, bit_err = 0
    cdef double y1, y2
    with nogil:
        for i in range(n):
            t = iv[i]
            y1 = pv[t, 0] + zv[i, 0] * sd[t, 0]
            y2 = pv[t, 1] + zv[i, 1] * sd[t, 1]
            k = _argmin(y1, y2, pv, vv, logn, inv, m)
            if k != t:
                sym_err += 1
                bit_err += _popcount(cv[t] ^ cv[k])
    return int(sym_err), int(bit_err)


cdef struct SearchState:
    int n
    int npair
    long long best
    long long count
    long long unary[MAXFREE][MAXFREE]
    long long lh[MAXFREE][MAXFREE]
    int nbr_count[MAXFREE]
    int nbr[MAXFREE][MAXFREE]      # earlier free points adjacent to position k
    int perm[MAXFREE]
    int best_perm[MAXFREE]
    bint used[MAXFREE]


cdef void _dfs(SearchState* st, int pos, long long partial) noexcept nogil:
    cdef int lab, j
    cdef long long c
    if pos == st.n:
        st.count += 1
        if partial < st.best:
            st.best = partial
            for j in range(st.n):
                st.best_perm[j] = st.perm[j]
        return
    for lab in range(st.n):
        if st.used[lab]:
            continue
        c = partial + st.unary[pos][lab]
        for j in range(st.nbr_count[pos]):
            c += st.lh[lab][st.perm[st.nbr[pos][j]]]
        st.used[lab] = True
        st.perm[pos] = lab
        _dfs(st, pos + 1, c)
        st.used[lab] = False


def search_assignment(unary, pair_i, pair_j, label_hamming):
    """Depth-first scan of every permutation with incremental cost; lexicographic ties."""
    cdef const long long[:, ::1] u = np.ascontiguousarray(unary, dtype=np.int64)
    cdef const long long[:, ::1] h = np.ascontiguousarray(label_hamming, dtype=np.int64)
    pi = np.asarray(pair_i, dtype=np.intp)
    pj = np.asarray(pair_j, dtype=np.intp)
    cdef int n = u.shape[0]
    if n > MAXFREE:
        raise ValueError(f"at most {MAXFREE} free points supported")
    cdef SearchState st
    cdef int a, b, i, j
    st.n = n
    st.best = 9223372036854775807
    st.count = 0
    for i in range(n):
        st.nbr_count[i] = 0
        st.used[i] = False
        for j in range(n):
            st.unary[i][j] = u[i, j]
            st.lh[i][j] = h[i, j]
    for i in range(len(pi)):
        a = max(pi[i], pj[i])
        b = min(pi[i], pj[i])
        st.nbr[a][st.nbr_count[a]] = b
        st.nbr_count[a] += 1
    with nogil:
        _dfs(&st, 0, 0)
    perm = np.array([st.best_perm[i] for i in range(n)], dtype=np.intp)
    return perm, int(st.best), int(st.count)
