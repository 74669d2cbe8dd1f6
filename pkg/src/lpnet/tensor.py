"""Rank-4 tensor helpers, deterministic RNG and fan-based initialization.

All image-like values in this package are numpy float arrays with layout
(batch, channel, height, width), row-major.  Double precision is the
reference precision for every correctness test.
"""

import numpy as np

from .errors import ShapeError

__all__ = [
    "make_rng", "check_tensor4", "ew_add", "ew_sub", "ew_mul", "ew_scale",
    "reduce_mean", "reduce_sum", "reduce_sum_sq", "reduce_sum_abs",
    "xavier_init",
]


def make_rng(seed):
    """Deterministic generator: numpy PCG64, identical stream on all platforms."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def check_tensor4(a, name="tensor"):
    a = np.asarray(a)
    if a.ndim != 4:
        raise ShapeError(f"{name} must be rank 4 (n,c,h,w), got shape {a.shape}")
    return a


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def ew_add(a, b):
    a, b = check_tensor4(a), check_tensor4(b)
    _check_same_shape(a, b)
    return a + b


def ew_sub(a, b):
    a, b = check_tensor4(a), check_tensor4(b)
    _check_same_shape(a, b)
    return a - b


def ew_mul(a, b):
    a, b = check_tensor4(a), check_tensor4(b)
    _check_same_shape(a, b)
    return a * b


def ew_scale(a, s):
    a = check_tensor4(a)
    return a * float(s)


def _check_nonempty(a):
    a = check_tensor4(a)
    if a.size == 0:
        raise ShapeError("reduction of an empty tensor")
    return a


def reduce_mean(a):
    return float(np.mean(_check_nonempty(a)))


def reduce_sum(a):
    return float(np.sum(_check_nonempty(a)))


def reduce_sum_sq(a):
    a = _check_nonempty(a)
    return float(np.sum(a * a))


def reduce_sum_abs(a):
    return float(np.sum(np.abs(_check_nonempty(a))))


def xavier_init(rng, fan_in, fan_out, shape):
    """Uniform samples on +-sqrt(6 / (fan_in + fan_out))."""
    if fan_in < 1 or fan_out < 1:
        raise ValueError("fans must be >= 1")
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape)
