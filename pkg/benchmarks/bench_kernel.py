"""Compare the compiled and pure-Python growth kernels.

    python3 benchmarks/bench_kernel.py [--repeat 3] [--sizes 200,1000,2000]

Each row times one discrete run (``record=True``) of the scaled canonical
plan on a random instance, plus the composed lower-bound instance.  Both
backends must return identical results; a mismatch aborts the run.
"""

from __future__ import annotations

import argparse
import random
import sys
import time
from fractions import Fraction

from moatlab import gadgets, kernel
from moatlab.instance import random_instance
from moatlab.mergeplan import canonical_plan, scale


def merge_list(inst, plan):
    pos = {t: i for i, t in enumerate(inst.terminals)}
    return [(t, pos[a], pos[b]) for t, a, b in plan.merges()]


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def comparable(out: dict) -> dict:
    return {k: (v.tolist() if hasattr(v, "tolist") else v) for k, v in out.items()
            if k != "backend" and not k.endswith("log")}


def bench(label: str, inst, repeat: int) -> tuple:
    merges = merge_list(inst, scale(canonical_plan(inst), Fraction(7, 6)))
    run = lambda b: kernel.grow(inst, merges, record=True, backend=b)  # noqa: E731
    a, b = run("cython"), run("python")
    if a["backend"] != "cython":
        sys.exit("compiled kernel is not available; build it with: python3 setup.py build_ext --inplace")
    if comparable(a) != comparable(b):
        sys.exit(f"{label}: backends disagree")
    tc = best_of(lambda: run("cython"), repeat)
    tp = best_of(lambda: run("python"), repeat)
    return label, inst.n, inst.m, tc, tp


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sizes", default="200,1000,2000")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    rng = random.Random(args.seed)
    rows = []
    for n in (int(x) for x in args.sizes.split(",")):
        inst = random_instance(rng, n, 8, extra=0.5, denominator=6)
        rows.append(bench(f"random n={n}", inst, args.repeat))
    comp = gadgets.lower_bound_instance([f"r{i}" for i in range(5)], "1/6")
    rows.append(bench("composed |R|=5", comp, args.repeat))
    print(f"{'instance':<18}{'|V|':>8}{'|E|':>8}{'cython s':>11}{'python s':>11}{'speedup':>9}")
    for label, n, m, tc, tp in rows:
        print(f"{label:<18}{n:>8}{m:>8}{tc:>11.4f}{tp:>11.4f}{tp / tc:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
