"""Pure-numpy reference implementations of the hot kernels."""

import numpy as np


def segmented_product(elements, offsets, n):
    """Left-to-right group product of consecutive runs of ``elements``.

    Run ``k`` is ``elements[offsets[k]:offsets[k+1]]``; an empty run gives the
    identity. ``elements`` has shape ``(M, 2n+1)``.
    """
    elements = np.ascontiguousarray(elements, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.int64)
    n_runs = offsets.size - 1
    counts = np.diff(offsets)
    out = np.zeros((n_runs, 2 * n + 1))
    if n_runs == 0 or elements.shape[0] == 0:
        return out
    for j in range(int(counts.max())):
        live = counts > j
        e = elements[offsets[:-1][live] + j]
        acc = out[live]
        x, y = acc[:, :n], acc[:, n:2 * n]
        ex, ey = e[:, :n], e[:, n:2 * n]
        twist = 2.0 * (np.einsum("ij,ij->i", y, ex) - np.einsum("ij,ij->i", x, ey))
        acc[:, :2 * n] += e[:, :2 * n]
        acc[:, 2 * n] += e[:, 2 * n] + twist
        out[live] = acc
    return out


def bilinear_locate(nodes_r, nodes_w, r, w):
    """Cell indices and fractional offsets of ``(r, w)`` on a tensor grid.

    Points are clamped into the grid box; ``inside`` flags the unclamped ones.
    """
    nodes_r = np.asarray(nodes_r, dtype=np.float64)
    nodes_w = np.asarray(nodes_w, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    inside = (r <= nodes_r[-1]) & (w >= nodes_w[0]) & (w <= nodes_w[-1])
    rc = np.clip(r, nodes_r[0], nodes_r[-1])
    wc = np.clip(w, nodes_w[0], nodes_w[-1])
    i = np.clip(np.searchsorted(nodes_r, rc, side="right") - 1, 0, nodes_r.size - 2)
    j = np.clip(np.searchsorted(nodes_w, wc, side="right") - 1, 0, nodes_w.size - 2)
    fr = (rc - nodes_r[i]) / (nodes_r[i + 1] - nodes_r[i])
    fw = (wc - nodes_w[j]) / (nodes_w[j + 1] - nodes_w[j])
    return i, j, fr, fw, inside, rc, wc
