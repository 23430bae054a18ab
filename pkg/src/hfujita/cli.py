"""``hfujita`` command line.

Exit codes: 0 when the verdict is the expected one, 2 when it contradicts the
expectation, 1 on any runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import HFujitaError
from .experiments import (FujitaConfig, Mode, exponent_gap, fujita_exponent, lemma_bounds, run_dichotomy,
                          run_solve)
from .group import GroupParams

EXIT_OK, EXIT_ERROR, EXIT_UNEXPECTED = 0, 1, 2
DEFAULT_P = {"sub": 1.2, "super": 2.0}


def _floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _emit(payload: dict, out: str | None):
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text)
    print(text)


def cmd_exponent(args) -> int:
    gp = GroupParams(args.N)
    pF = fujita_exponent(gp, args.s)
    payload = {"N": args.N, "Q": gp.Q, "s": args.s, "p_F": pF}
    if args.p is not None:
        gap = exponent_gap(args.p, gp, args.s)
        payload.update(p=args.p, exponent_gap=gap,
                       regime="subcritical" if gap < 0 else "critical" if gap == 0 else "supercritical")
    _emit(payload, args.out)
    return EXIT_OK


def cmd_lemmas(args) -> int:
    cfg = FujitaConfig(N=args.N, s=args.s, delta_decay=args.delta)
    report = lemma_bounds(cfg, _floats(args.radii))
    _emit(report.to_dict(), args.out)
    return EXIT_OK if report.as_expected else EXIT_UNEXPECTED


def cmd_kernel(args) -> int:
    from .semigroup import kernel_envelope_check

    radii = _floats(args.radii) if args.radii else np.geomspace(0.25, 8.0, 8)
    rep = kernel_envelope_check(args.t, radii, args.s, GroupParams(args.N), args.paths, args.seed)
    _emit(json.loads(rep.to_json()), args.out)
    return EXIT_UNEXPECTED if rep.undersampled else EXIT_OK


def cmd_checks(args) -> int:
    from .checks import group_checks, operator_checks

    g = group_checks(seed=args.seed)
    o = operator_checks()
    _emit({"passed": g.passed and o.passed, "group": g.to_dict(), "operator": o.to_dict()}, args.out)
    return EXIT_OK if g.passed and o.passed else EXIT_UNEXPECTED


def cmd_dichotomy(args) -> int:
    gp = GroupParams(args.N)
    p = args.p if args.p is not None else DEFAULT_P.get(args.mode, fujita_exponent(gp, args.s))
    kw = {"N": args.N, "s": args.s, "p": p, "seed": args.seed}
    for key in ("eps", "alpha", "M", "horizon"):
        val = getattr(args, key)
        if val is not None:
            kw["epsilon" if key == "eps" else key] = val
    report = run_dichotomy(FujitaConfig(**kw), Mode(args.mode), progress=_progress if args.verbose else None)
    report.to_json(args.out)
    if args.csv:
        report.write_csv(args.csv)
    print(json.dumps({"verdict": report.verdict, "expected": report.expected,
                      "detail": report.verdict_detail}, indent=2))
    return EXIT_OK if report.as_expected else EXIT_UNEXPECTED


def cmd_solve(args) -> int:
    cfg = FujitaConfig.from_file(args.config)
    report = run_solve(cfg, args.out, args.resume, progress=_progress if args.verbose else None)
    print(json.dumps({"verdict": report.verdict, "expected": report.expected,
                      "detail": report.verdict_detail}, indent=2))
    return EXIT_OK if report.as_expected else EXIT_UNEXPECTED


def _progress(traj):
    print(f"t={traj.final_time:.4g} sup={traj.sup_norms[-1]:.4g}", file=sys.stderr, flush=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hfujita", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    e = sub.add_parser("exponent", help="Fujita exponent and exponent gap")
    e.add_argument("--N", type=int, default=1)
    e.add_argument("--s", type=float, default=0.5)
    e.add_argument("--p", type=float)
    e.add_argument("--out")
    e.set_defaults(func=cmd_exponent)

    m = sub.add_parser("lemmas", help="lemma integrals at sample radii")
    m.add_argument("--N", type=int, default=1)
    m.add_argument("--s", type=float, default=0.5)
    m.add_argument("--delta", type=float, default=1.0)
    m.add_argument("--radii", default="0,1,10,100")
    m.add_argument("--out")
    m.set_defaults(func=cmd_lemmas)

    k = sub.add_parser("kernel", help="heat kernel envelope from Monte-Carlo endpoints")
    k.add_argument("--N", type=int, default=1)
    k.add_argument("--s", type=float, default=0.5)
    k.add_argument("--t", type=float, default=1.0)
    k.add_argument("--paths", type=int, default=1_000_000)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--radii")
    k.add_argument("--out")
    k.set_defaults(func=cmd_kernel)

    c = sub.add_parser("checks", help="group and operator property suite")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.set_defaults(func=cmd_checks)

    d = sub.add_parser("dichotomy", help="one side of the Fujita dichotomy")
    d.add_argument("--mode", choices=[m.value for m in Mode], required=True)
    d.add_argument("--N", type=int, default=1)
    d.add_argument("--s", type=float, default=0.5)
    d.add_argument("--p", type=float)
    d.add_argument("--eps", type=float)
    d.add_argument("--alpha", type=float)
    d.add_argument("--M", type=float)
    d.add_argument("--horizon", type=float)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default="report.json")
    d.add_argument("--csv")
    d.add_argument("--verbose", action="store_true")
    d.set_defaults(func=cmd_dichotomy)

    s = sub.add_parser("solve", help="single solver run from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--resume")
    s.add_argument("--verbose", action="store_true")
    s.set_defaults(func=cmd_solve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (HFujitaError, OSError, ValueError) as exc:
        print(f"hfujita: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
