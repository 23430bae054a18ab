# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot kernels; same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def segmented_product(elements, offsets, int n):
    cdef double[:, ::1] e = np.ascontiguousarray(elements, dtype=np.float64)
    cdef long long[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef Py_ssize_t n_runs = off.shape[0] - 1
    out_arr = np.zeros((n_runs, 2 * n + 1))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t k, m, i
    cdef double twist, wacc
    cdef int d = 2 * n
    with nogil:
        for k in range(n_runs):
            wacc = 0.0
            for m in range(off[k], off[k + 1]):
                twist = 0.0
                for i in range(n):
                    twist += out[k, n + i] * e[m, i] - out[k, i] * e[m, n + i]
                for i in range(d):
                    out[k, i] += e[m, i]
                wacc += e[m, d] + 2.0 * twist
            out[k, d] = wacc
    return out_arr


def bilinear_locate(nodes_r, nodes_w, r, w):
    cdef double[::1] nr = np.ascontiguousarray(nodes_r, dtype=np.float64)
    cdef double[::1] nw = np.ascontiguousarray(nodes_w, dtype=np.float64)
    r_arr = np.ascontiguousarray(r, dtype=np.float64).ravel()
    w_arr = np.ascontiguousarray(w, dtype=np.float64).ravel()
    cdef double[::1] rv = r_arr
    cdef double[::1] wv = w_arr
    cdef Py_ssize_t n_pts = rv.shape[0]
    cdef Py_ssize_t nr_n = nr.shape[0], nw_n = nw.shape[0]
    i_arr = np.empty(n_pts, dtype=np.int64)
    j_arr = np.empty(n_pts, dtype=np.int64)
    fr_arr = np.empty(n_pts)
    fw_arr = np.empty(n_pts)
    in_arr = np.empty(n_pts, dtype=np.uint8)
    rc_arr = np.empty(n_pts)
    wc_arr = np.empty(n_pts)
    cdef long long[::1] iv = i_arr
    cdef long long[::1] jv = j_arr
    cdef double[::1] frv = fr_arr
    cdef double[::1] fwv = fw_arr
    cdef unsigned char[::1] inv = in_arr
    cdef double[::1] rcv = rc_arr
    cdef double[::1] wcv = wc_arr
    cdef Py_ssize_t p, lo, hi, mid
    cdef double rr, ww
    with nogil:
        for p in range(n_pts):
            rr = rv[p]
            ww = wv[p]
            inv[p] = rr <= nr[nr_n - 1] and ww >= nw[0] and ww <= nw[nw_n - 1]
            if rr < nr[0]:
                rr = nr[0]
            elif rr > nr[nr_n - 1]:
                rr = nr[nr_n - 1]
            if ww < nw[0]:
                ww = nw[0]
            elif ww > nw[nw_n - 1]:
                ww = nw[nw_n - 1]
            lo = 0
            hi = nr_n - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if nr[mid] <= rr:
                    lo = mid
                else:
                    hi = mid
            iv[p] = lo
            frv[p] = (rr - nr[lo]) / (nr[lo + 1] - nr[lo])
            lo = 0
            hi = nw_n - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if nw[mid] <= ww:
                    lo = mid
                else:
                    hi = mid
            jv[p] = lo
            fwv[p] = (ww - nw[lo]) / (nw[lo + 1] - nw[lo])
            rcv[p] = rr
            wcv[p] = ww
    shape = np.shape(r)
    return (i_arr.reshape(shape), j_arr.reshape(shape), fr_arr.reshape(shape),
            fw_arr.reshape(shape), in_arr.astype(bool).reshape(shape),
            rc_arr.reshape(shape), wc_arr.reshape(shape))
