"""Timing comparison of the numpy and numba stencil kernels.

Run directly:  python benchmarks/bench_kernels.py
The numba path can be silenced with HKTSOLVE_DISABLE_NUMBA=1 (the script
then times the numpy path twice and says so).
"""

import time

import numpy as np

from hktsolve.kernels import (
    HAS_NUMBA,
    USE_NUMBA,
    _gradient_np,
    _laplacian_np,
    gradient_nd,
    laplacian_nd,
)


def _time(fn, *args, repeats=20):
    fn(*args)  # warm up (and trigger compilation on the numba path)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(7)
    cases = [
        ("128x128", rng.standard_normal((128, 128)), (0.049, 0.049)),
        ("16^4", rng.standard_normal((16, 16, 16, 16)), (0.39, 0.39, 0.39, 0.39)),
    ]
    print("numba available: %s, in use: %s" % (HAS_NUMBA, USE_NUMBA))
    header = "%-10s %-12s %12s %12s %8s"
    print(header % ("grid", "kernel", "numpy [us]", "fast [us]", "speedup"))
    for name, f, spacings in cases:
        for label, slow, fast in [
            ("laplacian", _laplacian_np, laplacian_nd),
            ("gradient", _gradient_np, gradient_nd),
        ]:
            t_np = _time(slow, f, spacings)
            t_fast = _time(fast, f, spacings)
            print(header % (name, label, "%.1f" % (t_np * 1e6),
                            "%.1f" % (t_fast * 1e6),
                            "%.1fx" % (t_np / t_fast)))
            ref = np.asarray(slow(f, spacings))
            err = float(np.max(np.abs(ref - np.asarray(fast(f, spacings)))))
            scale = float(np.max(np.abs(ref)))
            assert err < 1e-12 * max(1.0, scale), \
                "kernel mismatch %g on %s %s" % (err, name, label)
    print("both kernel paths agree to machine precision")


if __name__ == "__main__":
    main()
