"""Compare the numba and numpy elimination kernels.

    python3 benchmarks/bench_kernels.py [--sizes 50 100 200] [--repeat 3]

The backend is chosen per call from CHARP_DISABLE_NUMBA, so both run in
one process. A compare run on a generated fixture is timed end to end too.
"""

import argparse
import os
import random
import time

import numpy as np

from charp._kernels import echelon, numba_enabled
from charp.cohom import compare_dr_higgs
from charp.fixtures import random_lift, random_nilpotent_connection


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def with_backend(numba_on, fn, repeat):
    old = os.environ.get("CHARP_DISABLE_NUMBA")
    os.environ["CHARP_DISABLE_NUMBA"] = "0" if numba_on else "1"
    try:
        fn()  # warm up (jit compile on first call)
        return best_of(fn, repeat)
    finally:
        if old is None:
            del os.environ["CHARP_DISABLE_NUMBA"]
        else:
            os.environ["CHARP_DISABLE_NUMBA"] = old


def compare_workload():
    rng = random.Random(3)
    lift = random_lift(rng, 7, 2)
    module = random_nilpotent_connection(rng, 7, 2, 3, lift)
    return lambda: compare_dr_higgs(module, lift, 3)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--prime", type=int, default=7)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    os.environ.pop("CHARP_DISABLE_NUMBA", None)
    if not numba_enabled():
        print("numba is not importable; only the numpy backend is available")
    rows = []
    rng = np.random.default_rng(0)
    for size in args.sizes:
        mat = rng.integers(0, args.prime, size=(size, size + size // 2))
        work = lambda mat=mat: echelon(mat, args.prime, full=True)
        rows.append((f"rref {size}x{size + size // 2}", work))
    rows.append(("compare p=7 n=2 r=3 t=3", compare_workload()))

    print(f"{'workload':<28}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")
    for name, work in rows:
        fast = with_backend(True, work, args.repeat) if numba_enabled() else float("nan")
        slow = with_backend(False, work, args.repeat)
        print(f"{name:<28}{fast:>10.4f}{slow:>10.4f}{slow / fast:>8.1f}x")


if __name__ == "__main__":
    main()
