"""Pure-Python kernels; the reference behaviour for ``_ckernels.pyx``."""
import numpy as np

INF = float("inf")


def forward_slot(entry_node, demand, entry_port, node_C, node_F, port_planned, port_actual):
    """Greedy multi-task switch pass over every queue entry of one slot.

    Entries are visited in the given order, which must already be the
    per-node priority order. ``demand`` is lambda + L per entry and
    ``entry_port`` indexes the port arrays (-1 = no usable port). Returns
    int64 arrays ``(alloc_C, alloc_F, alloc_R, mu, node_loss, new_L,
    delivered, link_loss)``.
    """
    nodes = list(map(int, entry_node))
    dem = list(map(int, demand))
    ports = list(map(int, entry_port))
    rem_c = list(map(int, node_C))
    rem_f = list(map(int, node_F))
    rem_r = list(map(int, port_planned))
    rem_ra = list(map(int, port_actual))
    m = len(dem)
    out = [[0] * m for _ in range(8)]
    a_c, a_f, a_r, mu_o, nl_o, l_o, dl_o, ll_o = out
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
        else:
            r = 0
        mu = r  # min(lambda+L, C_alloc, F_alloc, R_alloc)
        loss = d - c
        if p >= 0:
            dl = mu if mu < rem_ra[p] else rem_ra[p]
            rem_ra[p] -= dl
        else:
            dl = 0
        a_c[e] = c
        a_f[e] = f
        a_r[e] = r
        mu_o[e] = mu
        nl_o[e] = loss
        l_o[e] = d - loss - mu
        dl_o[e] = dl
        ll_o[e] = mu - dl
    return tuple(np.array(x, dtype=np.int64) for x in out)


def _path(pred, v):
    out = []
    while v >= 0:
        out.append(v)
        v = pred[v]
    out.reverse()
    return out


def dijkstra(weights, source):
    """Single-source shortest paths on a dense matrix (``inf`` = no edge).

    Among equal-weight paths the lexicographically smallest node sequence
    wins. Returns ``(dist, pred)`` with ``pred[source] == -1``.
    """
    w = np.asarray(weights, dtype=float).tolist()
    n = len(w)
    dist = [INF] * n
    pred = [-1] * n
    done = [False] * n
    dist[source] = 0.0
    for _ in range(n):
        u = -1
        best = INF
        for v in range(n):
            if not done[v] and dist[v] < best:
                best = dist[v]
                u = v
        if u < 0:
            break
        done[u] = True
        row = w[u]
        du = dist[u]
        for v in range(n):
            wv = row[v]
            if done[v] or wv == INF or v == u:
                continue
            nd = du + wv
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
            elif nd == dist[v] and pred[v] != u and _path(pred, u) + [v] < _path(pred, pred[v]) + [v]:
                pred[v] = u
    return np.array(dist), np.array(pred, dtype=np.int64)
