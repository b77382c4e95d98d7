"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from matk import _pykernels, kernels


def inpaint_case(size, seed=0):
    g = np.random.default_rng(seed)
    values = g.integers(0, 256, size=(size, size, 3)).astype(np.float64)
    mask = np.zeros((size, size), bool)
    mask[size // 4 : 3 * size // 4, size // 8 : 7 * size // 8] = True
    return values, mask


def run_inpaint(impl, values, mask):
    v = values.copy()
    known = np.ascontiguousarray(~mask, dtype=np.uint8)
    impl.diffuse_fill(v, known)
    impl.smooth_masked(v, np.ascontiguousarray(mask, dtype=np.uint8), 3)
    return v


def rank_case(n, seed=0):
    g = np.random.default_rng(seed)
    scores = np.sort(np.round(g.random(n), 3))
    labels = g.integers(0, 2, n).astype(np.int64)
    return scores, labels


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not kernels.COMPILED:
        print("compiled kernels unavailable; only the fallback can be timed")
    impls = [("numpy", _pykernels)] + ([("compiled", kernels)] if kernels.COMPILED else [])

    print(f"{'kernel':<28}{'impl':<10}{'best (ms)':>12}")
    for size in (64, 256):
        values, mask = inpaint_case(size)
        results = {}
        for name, impl in impls:
            t = min(timeit.repeat(lambda: run_inpaint(impl, values, mask), number=1, repeat=args.repeat))
            results[name] = run_inpaint(impl, values, mask)
            print(f"{f'inpaint {size}x{size}':<28}{name:<10}{t * 1e3:>12.2f}")
        if len(results) == 2:
            assert results["numpy"].tobytes() == results["compiled"].tobytes()
    for n in (1_000, 100_000):
        scores, labels = rank_case(n)
        sums = {}
        for name, impl in impls:
            t = min(timeit.repeat(lambda: impl.positive_rank_sum(scores, labels), number=1, repeat=args.repeat))
            sums[name] = impl.positive_rank_sum(scores, labels)
            print(f"{f'rank sum n={n}':<28}{name:<10}{t * 1e3:>12.2f}")
        if len(sums) == 2:
            assert sums["numpy"] == sums["compiled"]


if __name__ == "__main__":
    main()
