"""Command-line interface: ``qcorr compute|check|reproduce|table``.

Exit codes: 0 expectations met, 1 unexpected verdict or failed
reproduction, 2 invalid input, 3 optimizer budget exhausted.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

from . import presets
from .criteria import SUITES, run_suite, unexpected
from .measurement import Strategy, computational_measurement
from .measures import NAMED, MeasureSpec, named, profile
from .optimizer import OptimizerBudgetError, SearchConfig
from .qlinalg import DensityMatrix, StateValidationError, load_state

EXIT_OK, EXIT_UNEXPECTED, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3
DIGITS = 9


class InputError(Exception):
    pass


def round_floats(obj, digits: int = DIGITS):
    """Recursively round floats to ``digits`` significant digits."""
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return obj
        return float(f"{obj:.{digits}g}")
    if isinstance(obj, dict):
        return {k: round_floats(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v, digits) for v in obj]
    return obj


def dump_json(obj) -> str:
    return json.dumps(round_floats(obj), indent=2, sort_keys=False)


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def resolve_state(text: str) -> DensityMatrix:
    if os.path.exists(text):
        try:
            return load_state(text)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read state file {text}: {exc}") from None
    if presets.is_preset(text):
        try:
            return presets.preset(text)
        except ValueError as exc:
            raise InputError(str(exc)) from None
    raise InputError(f"{text!r} is neither a state file nor a preset ({', '.join(presets.PRESETS)})")


def resolve_spec(measure: str, side: str | None, strategy: str | None = None, dims=(2, 2)) -> MeasureSpec:
    try:
        spec = named(measure, side)
        if strategy is None:
            return spec
        kind, _, rule = strategy.partition(":")
        if kind == "S1":
            st = Strategy("S1", computational_measurement(spec.side, dims))
        else:
            st = Strategy(kind, degeneracy_rule=rule or "canonical")
        return spec.with_strategy(st)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def search_config(args) -> SearchConfig:
    if args.max_evals < 1:
        raise InputError("--max-evals must be at least 1")
    return SearchConfig(seed=args.seed, max_evals=args.max_evals)


def cmd_compute(args) -> int:
    rho = resolve_state(args.state)
    spec = resolve_spec(args.measure, args.side, args.strategy, rho.dims)
    p = profile(spec, rho, search_config(args))
    emit(dump_json(p.to_dict()), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    spec = resolve_spec(args.measure, args.side)
    verdicts = run_suite(args.suite, spec, trials=args.trials, seed=args.seed, search=search_config(args))
    bad = unexpected(spec, verdicts)
    emit(dump_json([v.to_dict() for v in verdicts]), args.out)
    bad_ids = {id(v) for v in bad}
    for v in verdicts:
        flag = "UNEXPECTED" if id(v) in bad_ids else "ok"
        print(f"{v.measure} {v.key} {v.verdict} max_residual={v.max_residual:.9g} [{flag}]", file=sys.stderr)
    return EXIT_UNEXPECTED if bad else EXIT_OK


def cmd_reproduce(args) -> int:
    from .reproduce import format_report, reproduce

    rep = reproduce(args.case, seed=args.seed, trials=args.trials)
    print(format_report(rep), file=sys.stderr if args.out is None and args.json else sys.stdout)
    if args.out or args.json:
        emit(dump_json(rep.to_dict()), args.out)
    return EXIT_OK if rep.passed else EXIT_UNEXPECTED


def cmd_table(args) -> int:
    from .tables import regenerate

    t = regenerate(args.number, trials=args.trials, seed=args.seed)
    emit(t.to_csv(), args.out)
    for d in t.diff():
        print(f"differs from reference grid: {d['row']} / {d['column']}: computed {d['computed']}, "
              f"reference {d['reference']}", file=sys.stderr)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(dump_json(t.to_dict()) + "\n")
    return EXIT_UNEXPECTED if t.diff() else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    from .reproduce import CASES

    ap = argparse.ArgumentParser(prog="qcorr", description="Quantum, classical and total correlation measures.")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="profile (T, Q, C, L) of one state")
    c.add_argument("--measure", required=True, help=f"one of {', '.join(NAMED)} (case-insensitive)")
    c.add_argument("--state", required=True, help="state JSON file or preset such as werner:0.3")
    c.add_argument("--side", choices=("A", "B", "AB"), default=None)
    c.add_argument("--strategy", default=None, help="override: S1, S2q, S2c, S3 or S3:maximizeQ")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--max-evals", type=int, default=SearchConfig().max_evals)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_compute)

    k = sub.add_parser("check", help="run a criteria suite")
    k.add_argument("--suite", choices=SUITES + ("all",), required=True)
    k.add_argument("--measure", required=True)
    k.add_argument("--side", choices=("A", "B", "AB"), default=None)
    k.add_argument("--trials", type=int, default=200)
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--max-evals", type=int, default=SearchConfig().max_evals)
    k.add_argument("--out", default=None)
    k.set_defaults(func=cmd_check)

    r = sub.add_parser("reproduce", help="rerun a worked example")
    r.add_argument("case", choices=CASES)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--trials", type=int, default=None, help="trials for the table cases")
    r.add_argument("--json", action="store_true", help="also print the JSON report")
    r.add_argument("--out", default=None, help="write the JSON report here")
    r.set_defaults(func=cmd_reproduce)

    t = sub.add_parser("table", help="regenerate a criteria table as CSV")
    t.add_argument("number", type=int, choices=(1, 2, 3))
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--trials", type=int, default=None)
    t.add_argument("--out", default=None, help="CSV path")
    t.add_argument("--report", default=None, help="JSON report with every verdict")
    t.set_defaults(func=cmd_table)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if getattr(args, "trials", None) is not None and args.trials < 1:
        print("error: --trials must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except OptimizerBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (InputError, StateValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
