"""Modular rank and determinant: numba kernels against the numpy fallback.

Run: python3 benchmarks/bench_kernels.py [--sizes 64,128,256] [--repeat 3]
"""

import argparse
import time

import numpy as np

from projann.algebra._kernels import NUMBA_AVAILABLE, det_mod_p, rank_profile_mod_p

P = 2147483629


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="64,128,256")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    if NUMBA_AVAILABLE:
        # compile outside the timed region
        warm = rng.integers(0, P, size=(4, 4))
        rank_profile_mod_p(warm, P, use_numba=True)
        det_mod_p(warm, P, use_numba=True)
    print(f"{'op':<6}{'N':>6}{'numpy s':>12}{'numba s':>12}{'speedup':>10}")
    for N in (int(s) for s in args.sizes.split(",")):
        A = rng.integers(0, P, size=(N, N))
        A[:, -1] = (A[:, 0] + A[:, 1]) % P          # rank N - 1, so the rank scan runs to the end
        for name, fn in (("rank", lambda u: rank_profile_mod_p(A, P, use_numba=u)[0]),
                         ("det", lambda u: det_mod_p(A, P, use_numba=u))):
            t_np, v_np = best_of(lambda: fn(False), args.repeat)
            if NUMBA_AVAILABLE:
                t_nb, v_nb = best_of(lambda: fn(True), args.repeat)
                assert v_np == v_nb, (name, N)
                print(f"{name:<6}{N:>6}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}")
            else:
                print(f"{name:<6}{N:>6}{t_np:>12.4f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
