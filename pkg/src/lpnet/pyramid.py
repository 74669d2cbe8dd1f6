"""Classical multi-scale reference operators.

Burt-Adelson style pyramid build/collapse with the binomial 5-tap kernel
[1,4,6,4,1]/16, and Keys bicubic 2x down/up-sampling (a = -0.5).  Border
handling is symmetric reflection without edge duplication everywhere.  The
bicubic sampling grid places pixel centers at (i + 0.5)/N (align-corners
false), so the half-size target used by the training objective is
reproducible bit-for-bit.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import ShapeError
from .tensor import check_tensor4

_KERNEL5 = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass
class PyramidDecomposition:
    """Ordered detail bands (finest first) plus the coarsest approximation."""
    details: list = field(default_factory=list)
    coarsest: np.ndarray = None

    @property
    def levels(self):
        return len(self.details)


def _blur(x, kernel):
    y = ndimage.correlate1d(x, kernel, axis=2, mode="mirror")
    return ndimage.correlate1d(y, kernel, axis=3, mode="mirror")


def reduce_once(x):
    """Low-pass filter then decimate by 2 on each spatial axis."""
    x = check_tensor4(x)
    if x.shape[2] % 2 or x.shape[3] % 2:
        raise ShapeError(f"reduce needs even spatial dims, got {x.shape}")
    return _blur(x, _KERNEL5)[:, :, ::2, ::2]


def expand_once(x):
    """Zero-insertion upsample by 2 then filter with the doubled kernel."""
    x = check_tensor4(x)
    n, c, h, w = x.shape
    up = np.zeros((n, c, 2 * h, 2 * w))
    up[:, :, ::2, ::2] = x
    return _blur(up, 2.0 * _KERNEL5)


def lp_build(img, levels):
    """Decompose into `levels` detail bands plus a coarsest approximation."""
    img = check_tensor4(img)
    if levels < 1:
        raise ValueError("levels must be >= 1")
    h, w = img.shape[2:]
    if h % (1 << levels) or w % (1 << levels):
        raise ShapeError(
            f"spatial dims {h}x{w} not divisible by {1 << levels}")
    details = []
    cur = img
    for _ in range(levels):
        low = reduce_once(cur)
        details.append(cur - expand_once(low))
        cur = low
    return PyramidDecomposition(details=details, coarsest=cur)


def lp_collapse(p):
    """Exact inverse of lp_build: iterated expand-and-add from the coarsest."""
    cur = check_tensor4(p.coarsest)
    for d in reversed(p.details):
        up = expand_once(cur)
        if up.shape != d.shape:
            raise ShapeError(
                f"detail shape {d.shape} does not chain with expanded {up.shape}")
        cur = d + up
    return cur


def _keys_cubic(t):
    # Keys kernel, a = -0.5; reproduces polynomials up to degree 1
    t = np.abs(t)
    out = np.zeros_like(t)
    m1 = t <= 1.0
    m2 = (t > 1.0) & (t < 2.0)
    out[m1] = (1.5 * t[m1] - 2.5) * t[m1] * t[m1] + 1.0
    out[m2] = ((-0.5 * t[m2] + 2.5) * t[m2] - 4.0) * t[m2] + 2.0
    return out


def _reflect_index(idx, n):
    # symmetric reflection without repeating the edge sample
    if n == 1:
        return np.zeros_like(idx)
    period = 2 * n - 2
    idx = np.abs(idx) % period
    return np.where(idx >= n, period - idx, idx)


def _resample_matrix(in_n, out_n):
    """(out_n, in_n) dense matrix of Keys cubic weights, align-corners false."""
    i = np.arange(out_n)
    t = (i + 0.5) * (in_n / out_n) - 0.5
    base = np.floor(t).astype(int)
    mat = np.zeros((out_n, in_n))
    for j in range(4):
        src = base - 1 + j
        wgt = _keys_cubic(t - src)
        src = _reflect_index(src, in_n)
        np.add.at(mat, (i, src), wgt)
    return mat


def _resample(x, out_h, out_w):
    mh = _resample_matrix(x.shape[2], out_h)
    mw = _resample_matrix(x.shape[3], out_w)
    y = np.einsum("ab,ncbw->ncaw", mh, x)
    return np.einsum("dw,nchw->nchd", mw, y)


def bicubic_down2(x):
    """Halve both spatial dims with the Keys cubic kernel."""
    x = check_tensor4(x)
    n, c, h, w = x.shape
    if h == 0 or w == 0:
        raise ShapeError("empty input")
    if h % 2 or w % 2:
        raise ShapeError(f"down2 needs even spatial dims, got {h}x{w}")
    return _resample(x, h // 2, w // 2)


def bicubic_up2(x):
    """Double both spatial dims with the Keys cubic kernel."""
    x = check_tensor4(x)
    n, c, h, w = x.shape
    if h == 0 or w == 0:
        raise ShapeError("empty input")
    return _resample(x, 2 * h, 2 * w)
