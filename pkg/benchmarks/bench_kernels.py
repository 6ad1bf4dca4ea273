"""Time the exhaustive welfare scan with the numba kernel and the numpy fallback.

Both backends must return identical exact results; the script exits nonzero
if they disagree.

    python3 benchmarks/bench_kernels.py --n 2 --B 12 --delta 1/2
"""
import argparse
import sys
import time
from fractions import Fraction

from knightian import welfare


def run(mech, tie, n, B, delta, backend, repeat):
    best = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        rep = welfare.verify_positive_theorem(mech, n, B, delta, tie=tie, backend=backend)
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return rep, best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--B", type=int, default=12)
    ap.add_argument("--delta", type=Fraction, default=Fraction(1, 2))
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cases = [("opt", "lex"), ("2p", "lex"), ("2p", "random")]
    print(f"{'case':<14}{'checked':>14}{'numba s':>10}{'numpy s':>10}{'speedup':>9}")
    ok = True
    for mech, tie in cases:
        run(mech, tie, 2, 4, args.delta, "numba", 1)  # compile outside the timing
        a, ta = run(mech, tie, args.n, args.B, args.delta, "numba", args.repeat)
        b, tb = run(mech, tie, args.n, args.B, args.delta, "numpy", args.repeat)
        same = (a.passed, a.checked, a.worst.ratio, a.worst.witness_profile) == \
               (b.passed, b.checked, b.worst.ratio, b.worst.witness_profile)
        ok &= same
        label = f"{mech}/{tie}"
        print(f"{label:<14}{a.checked:>14}{ta:>10.3f}{tb:>10.3f}{tb / ta:>8.1f}x"
              + ("" if same else "  MISMATCH"))
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
