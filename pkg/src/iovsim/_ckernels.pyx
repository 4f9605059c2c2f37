# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``; same contracts."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

ctypedef cnp.int64_t i64


def forward_slot(entry_node, demand, entry_port, node_C, node_F, port_planned, port_actual):
    cdef i64[::1] nodes = np.ascontiguousarray(entry_node, dtype=np.int64)
    cdef i64[::1] dem = np.ascontiguousarray(demand, dtype=np.int64)
    cdef i64[::1] ports = np.ascontiguousarray(entry_port, dtype=np.int64)
    cdef i64[::1] rem_c = np.array(node_C, dtype=np.int64)
    cdef i64[::1] rem_f = np.array(node_F, dtype=np.int64)
    cdef i64[::1] rem_r = np.array(port_planned, dtype=np.int64)
    cdef i64[::1] rem_ra = np.array(port_actual, dtype=np.int64)
    cdef Py_ssize_t m = dem.shape[0]
    out = np.zeros((8, m), dtype=np.int64)
    cdef i64[:, ::1] o = out
    cdef Py_ssize_t e
    cdef i64 i, d, c, f, p, want, r, loss, dl
    for e in range(m):
        i = nodes[e]
        d = dem[e]
        c = d if d < rem_c[i] else rem_c[i]
        rem_c[i] -= c
        f = d if d < rem_f[i] else rem_f[i]
        rem_f[i] -= f
        p = ports[e]
        want = c if c < f else f
        if p >= 0:
            r = want if want < rem_r[p] else rem_r[p]
            rem_r[p] -= r
            dl = r if r < rem_ra[p] else rem_ra[p]
            rem_ra[p] -= dl
        else:
            r = 0
            dl = 0
        loss = d - c
        o[0, e] = c
        o[1, e] = f
        o[2, e] = r
        o[3, e] = r
        o[4, e] = loss
        o[5, e] = d - loss - r
        o[6, e] = dl
        o[7, e] = r - dl
    return tuple(out)


cdef bint _path_less(i64[::1] pred, Py_ssize_t a, Py_ssize_t b, Py_ssize_t v, i64[::1] buf_a, i64[::1] buf_b):
    """Is path(a)+[v] lexicographically smaller than path(b)+[v]?"""
    cdef Py_ssize_t na = 0, nb = 0, k
    cdef i64 x = a
    while x >= 0:
        buf_a[na] = x
        na += 1
        x = pred[x]
    x = b
    while x >= 0:
        buf_b[nb] = x
        nb += 1
        x = pred[x]
    # buffers hold reversed paths; compare from the source end
    k = 0
    while k < na and k < nb:
        if buf_a[na - 1 - k] != buf_b[nb - 1 - k]:
            return buf_a[na - 1 - k] < buf_b[nb - 1 - k]
        k += 1
    if na == nb:
        return False
    if na < nb:
        return v < buf_b[nb - 1 - k]
    return buf_a[na - 1 - k] < v


def dijkstra(weights, Py_ssize_t source):
    cdef double[:, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0]
    dist_a = np.full(n, np.inf)
    pred_a = np.full(n, -1, dtype=np.int64)
    cdef double[::1] dist = dist_a
    cdef i64[::1] pred = pred_a
    cdef cnp.uint8_t[::1] done = np.zeros(n, dtype=np.uint8)
    cdef i64[::1] buf_a = np.empty(n + 1, dtype=np.int64)
    cdef i64[::1] buf_b = np.empty(n + 1, dtype=np.int64)
    cdef Py_ssize_t it, u, v
    cdef double best, nd, wv, du
    dist[source] = 0.0
    for it in range(n):
        u = -1
        best = INFINITY
        for v in range(n):
            if not done[v] and dist[v] < best:
                best = dist[v]
                u = v
        if u < 0:
            break
        done[u] = 1
        du = dist[u]
        for v in range(n):
            wv = w[u, v]
            if done[v] or wv == INFINITY or v == u:
                continue
            nd = du + wv
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
            elif nd == dist[v] and pred[v] != u and _path_less(pred, u, pred[v], v, buf_a, buf_b):
                pred[v] = u
    return dist_a, pred_a
