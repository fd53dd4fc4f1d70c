"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat R] [--channels n] [--points N] [--end-to-end]

Sizes default to a 16-channel step on 256 grid points with the fourfold
refined Crank-Nicolson sweep used by the preconditioner.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from catm import _kernels_py

try:
    from catm import _kernels
except ImportError:
    _kernels = None


def cases(n, N, refine, rng):
    Q = N * refine
    M = rng.normal(size=(Q, n, n)) + 1j * rng.normal(size=(Q, n, n))
    M /= np.linalg.norm(M, axis=(1, 2), keepdims=True)
    R = rng.normal(size=(Q, n)) + 1j * rng.normal(size=(Q, n))
    x0 = rng.normal(size=n) + 1j * rng.normal(size=n)
    H = rng.normal(size=(N, n, n)) + 1j * rng.normal(size=(N, n, n))
    X = rng.normal(size=(n, N)) + 1j * rng.normal(size=(n, N))
    store = np.empty((Q, n), complex)
    return {
        "transfer_product": (lambda k: k.transfer_product(M)),
        "cn_sweep": (lambda k: k.cn_sweep(M, R, x0, store)),
        "block_apply": (lambda k: k.block_apply(H, X)),
    }


def best_of(fn, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


_PROPAGATE = """
import time, numpy as np
from catm import BACKEND, PulseSpec, StepPlan, catm_multi_step, make_ladder, window_absorber
pulse = PulseSpec.from_intensity(750.0, 0.335, 1e13)
psi = np.zeros(16, complex); psi[2] = 1.0
t0 = time.perf_counter()
catm_multi_step(make_ladder(16, 0.1, 1.0, 14), pulse, psi, StepPlan.from_nodes(pulse, 4, 256), window_absorber())
print(BACKEND, time.perf_counter() - t0)
"""


def end_to_end():
    """Canonical 4-step ladder propagation under each backend, in fresh processes."""
    for pure in ("0", "1"):
        env = dict(os.environ, CATM_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", _PROPAGATE], env=env, capture_output=True, text=True,
                             check=True).stdout.split()
        print(f"propagation ({out[0]}): {float(out[1]):.2f} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--channels", type=int, default=16)
    ap.add_argument("--points", type=int, default=256)
    ap.add_argument("--refine", type=int, default=4)
    ap.add_argument("--end-to-end", action="store_true", help="also time a full propagation per backend")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    table = cases(args.channels, args.points, args.refine, rng)
    print(f"n = {args.channels}, N = {args.points}, refine = {args.refine}")
    print(f"{'kernel':<18}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}{'max diff':>11}")
    for name, call in table.items():
        t_py = best_of(lambda: call(_kernels_py), args.repeat)
        if _kernels is None:
            print(f"{name:<18}{t_py * 1e3:12.3f}{'n/a':>13}")
            continue
        t_cy = best_of(lambda: call(_kernels), args.repeat)
        diff = float(np.max(np.abs(np.asarray(call(_kernels)) - np.asarray(call(_kernels_py)))))
        print(f"{name:<18}{t_py * 1e3:12.3f}{t_cy * 1e3:13.3f}{t_py / t_cy:9.1f}{diff:11.1e}")
    if args.end_to_end:
        end_to_end()


if __name__ == "__main__":
    main()
