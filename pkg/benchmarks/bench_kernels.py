"""Compare the compiled and numpy convolution backends.

Usage: python benchmarks/bench_kernels.py [repeats]
"""

import sys
import time

import numpy as np

from lpnet.backends import _ckernels, _pykernels

SHAPES = [
    # (batch, in_ch, h, out_ch, k, stride)  -- training-relevant sizes
    (4, 3, 64, 16, 3, 2),
    (4, 16, 64, 16, 3, 1),
    (4, 6, 64, 16, 3, 1),
    (4, 16, 32, 16, 3, 1),
    (4, 32, 32, 32, 3, 1),
    (1, 3, 256, 16, 3, 1),
]


def bench(fn, *args, repeats=5):
    fn(*args)  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main():
    repeats = int(sys.argv[1]) if len(sys.argv) > 1 else 5
    rng = np.random.default_rng(0)
    print(f"{'shape':<28} {'op':<12} {'c (ms)':>9} {'py (ms)':>9} {'ratio':>7}")
    for n, ci, h, co, k, s in SHAPES:
        x = rng.normal(size=(n, ci, h, h))
        w = rng.normal(size=(co, ci, k, k))
        y = _ckernels.conv2d(x, w, s, 1)
        gy = rng.normal(size=y.shape)
        label = f"{n}x{ci}x{h}x{h} -> {co} s{s}"
        cases = [
            ("forward", lambda m: m.conv2d(x, w, s, 1)),
            ("grad_weight", lambda m: m.conv2d_grad_weight(gy, x, s, 1, k)),
            ("grad_input", lambda m: m.conv2d_grad_input(gy, w, s, 1, h, h)),
        ]
        for op, run in cases:
            tc = bench(run, _ckernels, repeats=repeats)
            tp = bench(run, _pykernels, repeats=repeats)
            print(f"{label:<28} {op:<12} {tc * 1e3:>9.3f} {tp * 1e3:>9.3f} "
                  f"{tp / tc:>6.2f}x")


if __name__ == "__main__":
    main()
