"""Vectorized numpy fallback for the convolution kernels.

Same contract as the compiled extension: float64 NCHW arrays, cross-correlation
(no kernel flip), zero padding.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def _pad_hw(x, pad):
    if pad == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def _patches(x, k, stride, pad):
    # (n, c, ho, wo, k, k) view of all kxk windows at the given stride
    xp = _pad_hw(x, pad)
    win = sliding_window_view(xp, (k, k), axis=(2, 3))
    return win[:, :, ::stride, ::stride]


def conv2d(x, w, stride, pad):
    k = w.shape[2]
    p = _patches(x, k, stride, pad)
    # sum over in-channel and kernel axes
    y = np.tensordot(p, w, axes=([1, 4, 5], [1, 2, 3]))
    return np.ascontiguousarray(y.transpose(0, 3, 1, 2))


def conv2d_grad_weight(gy, x, stride, pad, k):
    p = _patches(x, k, stride, pad)
    gw = np.tensordot(gy, p, axes=([0, 2, 3], [0, 2, 3]))
    return np.ascontiguousarray(gw)


def conv2d_grad_input(gy, w, stride, pad, in_h, in_w):
    n, _, ho, wo = gy.shape
    ci, k = w.shape[1], w.shape[2]
    # per-position contribution, then scatter-add into the padded input grid
    t = np.tensordot(gy, w, axes=(1, 0))  # (n, ho, wo, ci, k, k)
    gxp = np.zeros((n, ci, in_h + 2 * pad, in_w + 2 * pad))
    for u in range(k):
        for v in range(k):
            gxp[:, :, u:u + ho * stride:stride, v:v + wo * stride:stride] += \
                t[:, :, :, :, u, v].transpose(0, 3, 1, 2)
    if pad == 0:
        return gxp
    return np.ascontiguousarray(gxp[:, :, pad:-pad, pad:-pad])
