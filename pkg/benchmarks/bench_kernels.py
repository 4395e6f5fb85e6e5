"""Time the compiled kernels against the numpy fallback on identical inputs.

    python benchmarks/bench_kernels.py [--repeat 3]

Both backends must return identical results; the script exits non-zero if
they disagree.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from halving_lab import kernels


def cases():
    pos = np.arange(10_000, dtype=np.int64)
    sig = kernels.seeded_bits(5, 0, 1 << 18).astype(np.uint32) | (kernels.seeded_bits(6, 0, 1 << 18).astype(np.uint32) << 1)
    return {
        "seeded_bits 1M": lambda k: k.seeded_bits(1, 0, 1 << 20),
        "recurrence 10k x 200": lambda k: k.recurrence_trials(1, pos, 200),
        "lln 10k x 200": lambda k: k.lln_trials(3, pos, 200, 1, 20),
        "fail 400 x 2000": lambda k: k.fail_trials(5, 400, 243, 3, 2000),
        "d5 scan 256k": lambda k: k.d5_first_violation(sig, 3, 1, 2, 1, 4, 64, 1 << 18),
    }


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    impls = kernels.backends()
    if "compiled" not in impls:
        print("compiled extension not built; timing the fallback only")
    names = sorted(impls)
    print(f"{'kernel':<24}" + "".join(f"{n:>12}" for n in names) + ("     speedup" if len(names) == 2 else ""))
    mismatch = False
    for label, fn in cases().items():
        results = {n: fn(impls[n]) for n in names}
        ref = results[names[0]]
        for n in names[1:]:
            if not np.array_equal(np.asarray(results[n]), np.asarray(ref)):
                mismatch = True
                print(f"MISMATCH in {label}: {n}")
        times = {n: best_of(lambda n=n: fn(impls[n]), args.repeat) for n in names}
        line = f"{label:<24}" + "".join(f"{times[n] * 1e3:>10.2f}ms" for n in names)
        if len(names) == 2:
            line += f"{times['pure'] / times['compiled']:>11.1f}x"
        print(line)
    return 1 if mismatch else 0


if __name__ == "__main__":
    sys.exit(main())
