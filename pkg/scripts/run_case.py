#!/usr/bin/env python3
"""Run one verification case and print a human-readable summary.

Examples:
    python scripts/run_case.py cc --f 9 --p 3 --n 1 --samples 5
    python scripts/run_case.py ic --f 7 --p 5
    python scripts/run_case.py pndivg --f 9 --p 7 --samples 10
    python scripts/run_case.py cc --f 45 --hp-gens 11,19 --p 3 --n 1 --s-primes 3,5
"""

import argparse
import sys
import time

sys.path.insert(0, "src")

from starklab.fields import FieldSpec, PlaceSet
from starklab.starkmap import cc_check, ic_check, pndivg_check


def int_list(text):
    return tuple(int(x) for x in text.split(",")) if text else ()


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("suite", choices=("cc", "ic", "pndivg"))
    ap.add_argument("--f", type=int, required=True)
    ap.add_argument("--p", type=int, required=True)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--h-gens", type=int_list, default=())
    ap.add_argument("--hp-gens", type=int_list, default=None)
    ap.add_argument("--s-primes", type=int_list, default=None)
    ap.add_argument("--samples", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--guard", type=int, default=8)
    args = ap.parse_args()

    spec = FieldSpec.make(args.f, args.h_gens, args.hp_gens)
    S = (None if args.s_primes is None
         else PlaceSet.above_rational_primes(spec, args.s_primes))

    t0 = time.time()
    if args.suite == "cc":
        rep = cc_check(spec, args.p, args.n, S, args.samples, args.guard, args.seed)
    elif args.suite == "ic":
        rep = ic_check(spec, args.p, S, args.samples, args.guard, args.seed)
    else:
        rep = pndivg_check(spec, args.p, S, args.samples, args.guard, args.seed)
    wall = time.time() - t0

    print(f"suite={rep.suite}  case={rep.case}")
    print(f"verdict={rep.verdict}  precision={rep.precision}  wall={wall:.2f}s")
    for key, val in rep.details.items():
        print(f"  {key}: {val}")
    width = max(len(str(tr.lhs)) for tr in rep.trials)
    for tr in rep.trials:
        mark = "ok " if tr.equal else "FAIL"
        print(f"  seed={tr.seed:<4d} {mark} lhs={str(tr.lhs):<{width}s} rhs={tr.rhs}")
    return 0 if rep.ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
