"""Kernel backend selection.

The hot convolution kernels exist twice: a Cython extension (``_ckernels``)
and a vectorized numpy fallback (``_pykernels``).  The choice is made once at
import time; set ``LPNET_KERNELS=python`` or ``LPNET_KERNELS=c`` to force one,
default is the extension when it built.  ``benchmarks/bench_kernels.py``
compares the two.
"""

import os


def _select():
    choice = os.environ.get("LPNET_KERNELS", "auto")
    if choice not in ("auto", "c", "python"):
        raise ValueError(f"LPNET_KERNELS must be auto, c or python, got {choice!r}")
    if choice in ("auto", "c"):
        try:
            from . import _ckernels
            return _ckernels, "c"
        except ImportError:
            if choice == "c":
                raise
    from . import _pykernels
    return _pykernels, "python"


_impl, BACKEND = _select()

conv2d = _impl.conv2d
conv2d_grad_input = _impl.conv2d_grad_input
conv2d_grad_weight = _impl.conv2d_grad_weight
