"""Time the numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 200]

Also times one end-to-end identity sweep under each backend (each in a fresh
interpreter, since the backend is fixed at import time).
"""

import argparse
import os
import subprocess
import sys
from timeit import timeit

import numpy as np

from predualpoisson import _kernels as K


def skew(rng, n):
    C = rng.standard_normal((n, n, n))
    return C - C.transpose(1, 0, 2)


def kernel_table(repeat):
    if not K.NUMBA_KERNELS:
        print("numba unavailable; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'n':>6}{'numpy us':>12}{'numba us':>12}{'speedup':>10}")
    for n in (3, 16, 64):
        C = skew(rng, n)
        x, y, ph = (rng.standard_normal(n) for _ in range(3))
        M = K.NUMPY_KERNELS["phi_matrix"](C, ph)
        cases = {
            "skew_bilinear": (C, x, y),
            "ad_star": (C, x, ph),
            "phi_matrix": (C, ph),
            "skew_pairing": (M, x, y),
        }
        for name, args in cases.items():
            K.NUMBA_KERNELS[name](*args)  # compile outside the timing
            t_np = timeit(lambda: K.NUMPY_KERNELS[name](*args), number=repeat) / repeat * 1e6
            t_nb = timeit(lambda: K.NUMBA_KERNELS[name](*args), number=repeat) / repeat * 1e6
            print(f"{name:<14}{n:>6}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>10.1f}")
    big = rng.standard_normal(1 << 16)
    dims = np.array([8 << k for k in range(14)])
    for tag in ("p1", "p2", "pinf"):
        K.NUMBA_KERNELS["prefix_norms"](big, dims, tag)
        t_np = timeit(lambda: K.NUMPY_KERNELS["prefix_norms"](big, dims, tag), number=repeat) / repeat * 1e6
        t_nb = timeit(lambda: K.NUMBA_KERNELS["prefix_norms"](big, dims, tag), number=repeat) / repeat * 1e6
        print(f"{'prefix ' + tag:<14}{big.size:>6}{t_np:>12.2f}{t_nb:>12.2f}{t_np / t_nb:>10.1f}")


SWEEP = (
    "import time; from predualpoisson.models import so3; from predualpoisson.suites import run_identity_suite;"
    "run_identity_suite(so3(), draws=5); t = time.perf_counter();"
    "run_identity_suite(so3(), draws=200); print(f'{time.perf_counter() - t:.2f}')"
)


def sweep_table():
    print("\nidentity sweep, so3, 200 draws")
    for flag, label in (("1", "numba"), ("0", "numpy")):
        env = dict(os.environ, PREDUALPOISSON_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", SWEEP], env=env, capture_output=True, text=True, check=True)
        print(f"  {label:<6}{out.stdout.strip()} s")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    kernel_table(args.repeat)
    sweep_table()
