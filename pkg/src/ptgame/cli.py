"""Command-line front end: ``ptg solve|controller|verify|simulate``.

Exit codes: 0 success, 1 negative result (verification mismatch, failed
simulation), 2 bad input, 3 iteration budget exhausted or inconclusive.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .compose import INCONCLUSIVE, MATCH, verify
from .controller import export_controller, parse_controller, strategy_digest, synthesize_controller
from .model import ModelError
from .semantics import initial_state, parse_params
from .simulate import run_closed_loop, run_strategy
from .solver import DEFAULT_BUDGET, EXPLORE_FIRST, UPDATE_FIRST, solve
from .strategy import model_digest, parse_strategy, serialize_strategy, strategy_model_hash
from .syntax import format_params, parse_model, parse_union
from .zones import Space

OK, NEGATIVE, BAD_INPUT, EXHAUSTED = 0, 1, 2, 3

log = logging.getLogger("ptgame")


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None


def _model(path: str):
    text = _read(path)
    try:
        return text, parse_model(text)
    except ModelError as e:
        raise InputError(f"{path}:{e}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args) -> int:
    text, g = _model(args.model)
    report = solve(g, budget=args.max_iterations, policy=args.order)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.model).stem
    params_path, strategy_path = out_dir / f"{stem}.params", out_dir / f"{stem}.strategy"
    params_path.write_text(format_params(report.winning_param) + "\n")
    strategy_path.write_text(serialize_strategy(report.strategy, g, model_digest(text)))
    summary = {
        "winning_param": format_params(report.winning_param),
        "instructions": len(report.strategy),
        "iterations": report.iterations,
        "explored": report.explored,
        "exhausted": report.exhausted,
        "params_file": str(params_path),
        "strategy_file": str(strategy_path),
    }
    _print(summary, args.json)
    return EXHAUSTED if report.exhausted else OK


def cmd_controller(args) -> int:
    text, g = _model(args.model)
    spec_text = _read(args.strategy)
    recorded = strategy_model_hash(spec_text)
    if recorded is not None and recorded != model_digest(text):
        raise InputError(f"{args.strategy} was computed for a different model (hash mismatch)")
    try:
        spec = parse_strategy(spec_text, g)
        c = synthesize_controller(g, spec, args.epsilon_name)
    except (ModelError, ValueError) as e:
        raise InputError(f"{args.strategy}: {e}") from None
    _emit(export_controller(c, model_digest(text), strategy_digest(spec_text), args.encode_urgency), args.out)
    return OK


def cmd_verify(args) -> int:
    _, g = _model(args.model)
    ctext = _read(args.controller)
    ptext = _read(args.params)
    try:
        c = parse_controller(ctext)
        expected = parse_union(ptext.strip() or "false", Space((), g.params))
    except ModelError as e:
        raise InputError(str(e)) from None
    eps = args.epsilon_name if args.epsilon_name != "eps" else c.epsilon
    try:
        report = verify(c.ptg, g, expected, eps=eps, budget=args.max_iterations, policy=args.order)
    except ModelError as e:
        raise InputError(str(e)) from None
    if args.json:
        print(report.to_json())
    else:
        sys.stdout.write(report.format())
    if report.verdict == INCONCLUSIVE:
        return EXHAUSTED
    return OK if report.verdict == MATCH else NEGATIVE


def cmd_simulate(args) -> int:
    _, g = _model(args.model)
    try:
        params = parse_params(",".join(args.param))
    except ValueError as e:
        raise InputError(str(e)) from None
    if args.controller:
        c = parse_controller(_read(args.controller))
        missing = [p for p in c.ptg.params if p not in params]
        if missing:
            raise InputError(f"missing parameter bindings: {', '.join(missing)}")
        report = run_closed_loop(c, g, params, args.count, args.seed)
    else:
        if not args.strategy:
            raise InputError("simulate needs --strategy or --controller")
        try:
            spec = parse_strategy(_read(args.strategy), g)
        except ModelError as e:
            raise InputError(f"{args.strategy}: {e}") from None
        missing = [p for p in g.params if p not in params]
        if missing:
            raise InputError(f"missing parameter bindings: {', '.join(missing)}")
        if not spec.matching(g.initial, initial_state(g, params).valuation):
            log.warning("the initial state matches no instruction; the bindings may lie outside the winning set")
        report = run_strategy(g, spec, params, args.count, args.seed)
    if args.json:
        print(report.to_json())
    else:
        sys.stdout.write(report.format())
    clean = report.reached == report.count and report.violations() == 0
    return OK if clean else NEGATIVE


def _print(summary: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(summary, indent=2))
    else:
        for k, v in summary.items():
            print(f"{k}: {v}")


def _budget(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("budget must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptg", description="Parametric timed game solver and controller synthesis.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--order", choices=(UPDATE_FIRST, EXPLORE_FIRST), default=UPDATE_FIRST)
        p.add_argument("--max-iterations", type=_budget, default=DEFAULT_BUDGET)

    p = sub.add_parser("solve", help="compute winning parameters and a strategy")
    p.add_argument("model")
    p.add_argument("-o", "--out", help="output directory (default: current directory)")
    p.add_argument("--json", action="store_true")
    solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("controller", help="synthesize a controller from a strategy")
    p.add_argument("model")
    p.add_argument("strategy")
    p.add_argument("-o", "--out", help="output file (default: stdout)")
    p.add_argument("--epsilon-name", default="eps")
    p.add_argument("--encode-urgency", action="store_true", help="express urgency with an extra clock")
    p.set_defaults(func=cmd_controller)

    p = sub.add_parser("verify", help="re-solve controller || game with every action uncontrollable")
    p.add_argument("model")
    p.add_argument("controller")
    p.add_argument("params", help="file with the expected winning parameters")
    p.add_argument("--epsilon-name", default="eps")
    p.add_argument("--json", action="store_true")
    solver_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="random-adversary simulation")
    p.add_argument("model")
    p.add_argument("--strategy")
    p.add_argument("--controller")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", default=[], metavar="NAME=RATIONAL")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ModelError) as e:
        print(f"error: {e}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
