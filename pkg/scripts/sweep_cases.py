#!/usr/bin/env python3
"""Sweep the full verification table: every congruence, integrality and
valuation case plus the structural property battery, one line per case.

    python scripts/sweep_cases.py             # quick sweep (few samples)
    python scripts/sweep_cases.py --full      # full sample counts
"""

import argparse
import sys
import time

sys.path.insert(0, "src")

from starklab import properties
from starklab.fields import FieldSpec, PlaceSet
from starklab.starkmap import cc_check, ic_check, pndivg_check

CC_CASES = ((9, 3, 1), (9, 3, 0), (5, 5, 0), (63, 3, 1), (25, 5, 1))
IC_CASES = ((9, 3), (5, 5), (63, 3), (25, 5), (7, 5), (9, 5))
PNDIVG_CASES = ((7, 5), (9, 7))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--full", action="store_true",
                    help="use the full sample counts (20 cc / 50 ic / 50 pndivg)")
    args = ap.parse_args()
    n_cc, n_ic, n_pn = (20, 50, 50) if args.full else (3, 5, 5)

    failures = 0

    def show(label, verdict, wall):
        nonlocal failures
        failures += verdict != "pass"
        print(f"{label:42s} {verdict:4s} {wall:7.2f}s")

    for f, p, n in CC_CASES:
        t0 = time.time()
        rep = cc_check(FieldSpec.make(f), p, n, samples=n_cc)
        show(f"cc   f={f} p={p} n={n}", rep.verdict, time.time() - t0)

    for f, p in IC_CASES:
        t0 = time.time()
        rep = ic_check(FieldSpec.make(f), p, samples=n_ic)
        show(f"ic   f={f} p={p}", rep.verdict, time.time() - t0)

    for f, p in PNDIVG_CASES:
        t0 = time.time()
        rep = pndivg_check(FieldSpec.make(f), p, samples=n_pn)
        show(f"pndivg f={f} p={p}", rep.verdict, time.time() - t0)

    # the real quadratic base case
    spec = FieldSpec.make(45, hp_gens=(11, 19))
    S = PlaceSet.above_rational_primes(spec, (3, 5))
    t0 = time.time()
    rep = cc_check(spec, 3, 1, S, samples=(10 if args.full else 2))
    show("cc   f=45 over Q(sqrt5) p=3 n=1", rep.verdict, time.time() - t0)

    t0 = time.time()
    results = properties.run_all()
    verdict = "pass" if all(r["equal"] for r in results) else "fail"
    show(f"properties ({len(results)} identities)", verdict, time.time() - t0)

    print("sweep:", "all pass" if failures == 0 else f"{failures} FAILURES")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
