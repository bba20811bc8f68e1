"""Time the compiled and numpy pair sums on the same inputs.

Usage: python3 benchmarks/bench_kernels.py [--n 16 32 64] [--repeat 3]
"""
from __future__ import annotations

import argparse
import timeit

from fracgauge._ext import pairsum_py

try:
    from fracgauge._ext import _pairsum
except ImportError:
    _pairsum = None

from fracgauge.domain import Grid
from fracgauge.harness.generators import SampleSpec, gen_unit_field


def case(n: int, mode: int):
    g = Grid("disk", 1.0, n)
    u = gen_unit_field(SampleSpec(seed=1), g)
    I, J = g.ij
    values = u.values if mode == 1 else u.values[:, 0]
    s = 0.75
    p = 2.0 / s
    return (values, I, J, n, p, 2.0 + s * p, mode)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _pairsum is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'n':>5} {'mode':>6} {'python s':>10} {'cython s':>10} {'speedup':>8} {'rel diff':>9}")
    for n in args.n:
        for mode, name in ((0, "diff"), (1, "wedge")):
            a = case(n, mode)
            tp = min(timeit.repeat(lambda: pairsum_py.pair_sum(*a), number=1, repeat=args.repeat))
            ref = pairsum_py.pair_sum(*a)
            if _pairsum is None:
                print(f"{n:>5} {name:>6} {tp:>10.4f} {'-':>10} {'-':>8} {'-':>9}")
                continue
            tc = min(timeit.repeat(lambda: _pairsum.pair_sum(*a), number=1, repeat=args.repeat))
            got = _pairsum.pair_sum(*a)
            diff = abs(got - ref) / abs(ref) if ref else abs(got)
            print(f"{n:>5} {name:>6} {tp:>10.4f} {tc:>10.4f} {tp / tc:>8.1f} {diff:>9.1e}")


if __name__ == "__main__":
    main()
