"""Time the numba kernels against their pure-numpy fallbacks.

Each kernel runs once untimed so JIT compilation is excluded, then both
paths are timed over the same inputs and checked for identical output.

    python3 benchmarks/bench_kernels.py --repeat 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from artifact import kernels
from artifact.he.ckks import ntt


def best_of(fn, repeat: int) -> float:
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def ntt_cases(ring: int, n_moduli: int, rng):
    primes = np.array(ntt.find_primes(ring, 31, n_moduli), dtype=np.int64)
    tables = ntt.NTTTables.build(primes, ring)
    q = primes[:, None]
    a = rng.integers(0, q, (n_moduli, ring))
    f = ntt.forward_numpy(a, tables)
    lifted = rng.integers(0, q, (3, n_moduli, ring))
    key = rng.integers(0, q, (3, 2, n_moduli, ring))
    x, y = rng.integers(0, q, (2, 4, n_moduli, ring))
    c = rng.integers(1, primes)
    return {
        f"ntt forward N={ring}": (lambda: ntt.forward_numba(a, tables), lambda: ntt.forward_numpy(a, tables)),
        f"ntt inverse N={ring}": (lambda: ntt.inverse_numba(f, tables), lambda: ntt.inverse_numpy(f, tables)),
        "key-switch digit dot": (lambda: ntt._dot_digits_numba(lifted, key, primes),
                                 lambda: ntt._dot_digits_numpy(lifted, key, primes)),
        "rescale sub_mul": (lambda: ntt._sub_mul_numba(x, y, c, primes),
                            lambda: ntt._sub_mul_numpy(x, y, c, primes)),
    }


def code_cases(n_codes: int, n_s: int, n_c: int, n_centers: int, rng):
    codes = rng.integers(0, n_c, (n_codes, n_s))
    centers = rng.integers(0, n_c, (n_centers, n_s))
    tables = rng.normal(size=(n_s, n_c, n_c))
    table = tables[:, 0, :]
    labels = rng.integers(0, n_centers, n_codes)

    def both(fn, *args):
        return lambda: fn(*args, numba=True), lambda: fn(*args, numba=False)

    return {
        f"adc_scores {n_codes}x{n_s}": both(kernels.adc_scores, codes, table),
        "code_distances": both(kernels.code_distances, codes, centers, tables),
        "nearest_centers": both(kernels.nearest_centers, codes, centers, tables),
        "vote": both(kernels.vote, codes, labels, n_centers, tables),
    }


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--ring", type=int, default=4096)
    p.add_argument("--moduli", type=int, default=4)
    p.add_argument("--codes", type=int, default=20000)
    p.add_argument("--n-s", type=int, default=16)
    p.add_argument("--n-c", type=int, default=16)
    p.add_argument("--centers", type=int, default=64)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    cases = ntt_cases(args.ring, args.moduli, rng)
    cases.update(code_cases(args.codes, args.n_s, args.n_c, args.centers, rng))

    print(f"{'kernel':<28} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}  output")
    mismatches = 0
    for name, (fast, slow) in cases.items():
        ok = same(fast(), slow())
        mismatches += not ok
        t_fast = best_of(fast, args.repeat)
        t_slow = best_of(slow, args.repeat)
        print(f"{name:<28} {t_fast * 1e3:>10.3f} {t_slow * 1e3:>10.3f} {t_slow / t_fast:>7.1f}x  "
              f"{'identical' if ok else 'DIFFERS'}")
    return 1 if mismatches else 0


if __name__ == "__main__":
    raise SystemExit(main())
