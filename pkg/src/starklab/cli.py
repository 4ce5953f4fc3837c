"""Batch driver: parse case specifications, run verification suites, emit
deterministic machine-readable reports.

Exit codes: 0 all checks pass; 1 a check failed; 2 the case was rejected by
a standing hypothesis; 3 a computation could not certify its answer at the
given precision even after the automatic retry; 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass

from .errors import HypothesisRejection, StarklabError
from .fields import FieldSpec, PlaceSet, conductor, s1_places
from .groupring import characters
from .starkmap import (
    VerificationReport,
    cc_check,
    gamma_transversal,
    ic_check,
    minus_lattice_data,
    pndivg_check,
)
from . import properties

SCHEMA = "starklab-report/1"
DEFAULT_GUARD = 8
RETRY_GUARD = 16

_SUITE_SAMPLES = {"ic": 50, "cc": 20, "pndivg": 50}


@dataclass
class CaseSpec:
    """A fully resolved verification case."""

    f: int
    p: int
    h_gens: tuple = ()
    hp_gens: tuple | None = None
    n: int | None = None
    s_primes: tuple | None = None
    samples: int | None = None
    seed: int = 0
    guard: int | None = None

    def field_spec(self) -> FieldSpec:
        return FieldSpec.make(self.f, tuple(self.h_gens),
                              None if self.hp_gens is None else tuple(self.hp_gens))

    def place_set(self, spec: FieldSpec) -> PlaceSet | None:
        if self.s_primes is None:
            return None
        return PlaceSet.above_rational_primes(spec, tuple(self.s_primes))


def _default_guard() -> int:
    env = os.environ.get("STARKLAB_GUARD_DIGITS")
    return int(env) if env else DEFAULT_GUARD


def _parse_int_list(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(x) for x in text.split(","))


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors must exit 64, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(64)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="starklab",
                     description="verification suites for p-adic Stark-type maps")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_case_flags(p, with_n):
        p.add_argument("--case", help="JSON case file; flags override its fields")
        p.add_argument("--f", type=int, help="cyclotomic level of the ambient field")
        p.add_argument("--h-gens", type=_parse_int_list, default=None,
                       help="comma-separated generators of the fixing subgroup")
        p.add_argument("--hp-gens", type=_parse_int_list, default=None,
                       help="comma-separated generators over the base field")
        p.add_argument("--p", type=int, help="the odd prime p")
        if with_n:
            p.add_argument("--n", type=int, help="congruence level exponent")
        p.add_argument("--s-primes", type=_parse_int_list, default=None,
                       help="rational primes under the place set (default: minimal)")
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--guard", type=int, default=None,
                       help="guard digits (default 8 or STARKLAB_GUARD_DIGITS)")
        p.add_argument("--out", help="write the JSON report here instead of stdout")

    for name, with_n in (("verify-ic", False), ("verify-cc", True),
                         ("verify-pndivg", False)):
        add_case_flags(sub.add_parser(name), with_n)

    prop = sub.add_parser("property-suite",
                          help="run the built-in structural property battery")
    prop.add_argument("--out")
    prop.add_argument("--guard", type=int, default=None)

    show = sub.add_parser("show-case", help="print structural data for a case")
    add_case_flags(show, with_n=True)
    return parser


def _resolve_case(args, need_n: bool) -> CaseSpec:
    raw: dict = {}
    if getattr(args, "case", None):
        with open(args.case) as fh:
            raw = json.load(fh)
    fields = dict(
        f=args.f if args.f is not None else raw.get("f"),
        p=args.p if args.p is not None else raw.get("p"),
        h_gens=tuple(args.h_gens if args.h_gens is not None
                     else raw.get("h_gens", ())),
        hp_gens=(tuple(args.hp_gens) if args.hp_gens is not None
                 else (tuple(raw["hp_gens"]) if raw.get("hp_gens") else None)),
        n=(getattr(args, "n", None) if getattr(args, "n", None) is not None
           else raw.get("n")),
        s_primes=(tuple(args.s_primes) if args.s_primes is not None
                  else (tuple(raw["s_primes"]) if raw.get("s_primes") else None)),
        samples=args.samples if args.samples is not None else raw.get("samples"),
        seed=args.seed if args.seed is not None else raw.get("seed", 0),
        guard=args.guard if args.guard is not None else raw.get("guard"),
    )
    missing = [k for k in ("f", "p") if fields[k] is None]
    if need_n and fields["n"] is None:
        missing.append("n")
    if missing:
        print(f"starklab: error: missing required field(s): {', '.join(missing)}",
              file=sys.stderr)
        raise SystemExit(64)
    return CaseSpec(**fields)


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _report_payload(rep: VerificationReport, wall: float) -> dict:
    return {
        "schema": SCHEMA,
        "case": rep.case,
        "suite": rep.suite,
        "trials": [asdict(tr) for tr in rep.trials],
        "verdict": rep.verdict,
        "precision": rep.precision,
        "details": rep.details,
        "wall_time": round(wall, 3),
    }


def _rejection_payload(suite: str, case: CaseSpec, exc: Exception) -> dict:
    return {
        "schema": SCHEMA,
        "case": {k: (list(v) if isinstance(v, tuple) else v)
                 for k, v in asdict(case).items()},
        "suite": suite,
        "trials": [],
        "verdict": "rejected",
        "precision": 0,
        "details": {"error": type(exc).__name__, "reason": str(exc)},
    }


def _run_suite(suite: str, case: CaseSpec, out: str | None) -> int:
    spec = case.field_spec()
    S = case.place_set(spec)
    samples = case.samples if case.samples is not None else _SUITE_SAMPLES[suite]
    guard = case.guard if case.guard is not None else _default_guard()

    def attempt(g):
        t0 = time.time()
        if suite == "cc":
            rep = cc_check(spec, case.p, case.n, S, samples, g, case.seed)
        elif suite == "ic":
            rep = ic_check(spec, case.p, S, samples, g, case.seed)
        else:
            rep = pndivg_check(spec, case.p, S, samples, g, case.seed)
        return rep, time.time() - t0

    try:
        try:
            rep, wall = attempt(guard)
        except HypothesisRejection:
            raise
        except StarklabError:
            if guard >= RETRY_GUARD:
                raise
            rep, wall = attempt(RETRY_GUARD)
    except HypothesisRejection as exc:
        _emit(_rejection_payload(suite, case, exc), out)
        return 2
    except StarklabError as exc:
        _emit(_rejection_payload(suite, case, exc) | {"verdict": "fail"}, out)
        return 3
    _emit(_report_payload(rep, wall), out)
    return 0 if rep.verdict == "pass" else 1


def _show_case(case: CaseSpec, out: str | None) -> int:
    from .padic import semilocal_structure

    spec = case.field_spec()
    try:
        S = case.place_set(spec) or s1_places(spec, case.p)
        gammas = gamma_transversal(spec)
        _, shift = minus_lattice_data(spec, S, case.p)
        st = semilocal_structure(spec.f, case.p, max(2, shift + 2))
        payload = {
            "schema": SCHEMA,
            "f": spec.f,
            "conductor": conductor(spec),
            "degree_over_Q": spec.gamma_group.order,
            "degree_of_base": spec.degree_k,
            "relative_degree": spec.G.order,
            "is_cm": spec.is_cm,
            "group_elements": list(spec.G.elements),
            "gammas": list(gammas),
            "s_primes": sorted(S.rational_primes()),
            "shift": shift,
            "local_model": {
                "fprime": st.fprime,
                "m": st.m,
                "residue_degree": st.local.r,
                "ramification": st.local.e,
                "dimension": st.local.dim,
                "primes_above_p": len(st.reps),
            },
            "odd_characters": sum(chi.is_odd()
                                  for chi in characters(spec.gamma_group)),
        }
    except HypothesisRejection as exc:
        _emit(_rejection_payload("show-case", case, exc), out)
        return 2
    _emit(payload, out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "property-suite":
        guard = args.guard if args.guard is not None else _default_guard()
        t0 = time.time()
        results = properties.run_all(guard)
        verdict = "pass" if all(r["equal"] for r in results) else "fail"
        _emit({
            "schema": SCHEMA,
            "case": {"suite": "properties", "guard": guard},
            "suite": "properties",
            "trials": results,
            "verdict": verdict,
            "precision": guard,
            "details": {},
            "wall_time": round(time.time() - t0, 3),
        }, args.out)
        return 0 if verdict == "pass" else 1
    if args.command == "show-case":
        return _show_case(_resolve_case(args, need_n=False), args.out)
    suite = {"verify-ic": "ic", "verify-cc": "cc", "verify-pndivg": "pndivg"}[args.command]
    case = _resolve_case(args, need_n=(suite == "cc"))
    return _run_suite(suite, case, args.out)


if __name__ == "__main__":
    raise SystemExit(main())
