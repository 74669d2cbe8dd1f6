# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled convolution kernels: per-image im2col fused with BLAS dgemm.

Same contract as the numpy fallback (cross-correlation, zero padding, NCHW
float64), but with a single reusable column buffer instead of the full
patch tensor, and the matrix products done in-place by dgemm.
"""

import numpy as np
cimport numpy as cnp
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()


cdef void _im2col(const double[:, :, ::1] xp, double[:, ::1] cols,
                  int k, int stride, int ho, int wo) noexcept nogil:
    # xp: one padded image (ci, hp, wp); cols: (ci*k*k, ho*wo)
    cdef int ci = xp.shape[0]
    cdef int i, u, v, y, z, r
    for i in range(ci):
        for u in range(k):
            for v in range(k):
                r = (i * k + u) * k + v
                for y in range(ho):
                    for z in range(wo):
                        cols[r, y * wo + z] = xp[i, y * stride + u, z * stride + v]


cdef void _col2im_add(double[:, ::1] cols, double[:, :, ::1] gxp,
                      int k, int stride, int ho, int wo) noexcept nogil:
    cdef int ci = gxp.shape[0]
    cdef int i, u, v, y, z, r
    for i in range(ci):
        for u in range(k):
            for v in range(k):
                r = (i * k + u) * k + v
                for y in range(ho):
                    for z in range(wo):
                        gxp[i, y * stride + u, z * stride + v] += cols[r, y * wo + z]


def _pad_hw(x, int pad):
    x = np.asarray(x, dtype=np.float64)
    if pad == 0:
        return np.ascontiguousarray(x)
    return np.ascontiguousarray(
        np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))))


def conv2d(x, w, int stride, int pad):
    cdef double[:, :, :, ::1] xp = _pad_hw(x, pad)
    w_arr = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, :, :, ::1] wv = w_arr
    cdef int n = xp.shape[0], ci = xp.shape[1]
    cdef int hp = xp.shape[2], wp = xp.shape[3]
    cdef int co = wv.shape[0], k = wv.shape[2]
    cdef int ho = (hp - k) // stride + 1
    cdef int wo = (wp - k) // stride + 1
    cdef int cikk = ci * k * k, howo = ho * wo
    out = np.empty((n, co, ho, wo))
    cdef double[:, :, :, ::1] yv = out
    cols_arr = np.empty((cikk, howo))
    cdef double[:, ::1] cols = cols_arr
    cdef double one = 1.0, zero = 0.0
    cdef int b
    for b in range(n):
        _im2col(xp[b], cols, k, stride, ho, wo)
        # C-order Y[co,howo] = W[co,cikk] @ cols[cikk,howo]
        dgemm("N", "N", &howo, &co, &cikk, &one,
              &cols[0, 0], &howo, &wv[0, 0, 0, 0], &cikk,
              &zero, &yv[b, 0, 0, 0], &howo)
    return out


def conv2d_grad_weight(gy, x, int stride, int pad, int k):
    cdef double[:, :, :, ::1] gv = np.ascontiguousarray(gy, dtype=np.float64)
    cdef double[:, :, :, ::1] xp = _pad_hw(x, pad)
    cdef int n = gv.shape[0], co = gv.shape[1]
    cdef int ho = gv.shape[2], wo = gv.shape[3]
    cdef int ci = xp.shape[1]
    cdef int cikk = ci * k * k, howo = ho * wo
    out = np.zeros((co, ci, k, k))
    cdef double[:, :, :, ::1] gwv = out
    cols_arr = np.empty((cikk, howo))
    cdef double[:, ::1] cols = cols_arr
    cdef double one = 1.0
    cdef int b
    for b in range(n):
        _im2col(xp[b], cols, k, stride, ho, wo)
        # C-order GW[co,cikk] += GY[co,howo] @ cols.T
        dgemm("T", "N", &cikk, &co, &howo, &one,
              &cols[0, 0], &howo, &gv[b, 0, 0, 0], &howo,
              &one, &gwv[0, 0, 0, 0], &cikk)
    return out


def conv2d_grad_input(gy, w, int stride, int pad, int in_h, int in_w):
    cdef double[:, :, :, ::1] gv = np.ascontiguousarray(gy, dtype=np.float64)
    w_arr = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, :, :, ::1] wv = w_arr
    cdef int n = gv.shape[0], co = gv.shape[1]
    cdef int ho = gv.shape[2], wo = gv.shape[3]
    cdef int ci = wv.shape[1], k = wv.shape[2]
    cdef int cikk = ci * k * k, howo = ho * wo
    gxp_arr = np.zeros((n, ci, in_h + 2 * pad, in_w + 2 * pad))
    cdef double[:, :, :, ::1] gxp = gxp_arr
    cols_arr = np.empty((cikk, howo))
    cdef double[:, ::1] cols = cols_arr
    cdef double one = 1.0, zero = 0.0
    cdef int b
    for b in range(n):
        # C-order cols[cikk,howo] = W.T @ GY[co,howo]
        dgemm("N", "T", &howo, &cikk, &co, &one,
              &gv[b, 0, 0, 0], &howo, &wv[0, 0, 0, 0], &cikk,
              &zero, &cols[0, 0], &howo)
        _col2im_add(cols, gxp[b], k, stride, ho, wo)
    if pad == 0:
        return gxp_arr
    return np.ascontiguousarray(gxp_arr[:, :, pad:-pad, pad:-pad])
