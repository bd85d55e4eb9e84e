"""Command-line entry: parse -> validate -> extract -> check -> report.

Exit codes: 0 all properties hold (bounded), 1 violation found,
2 unknown/timeout, 3 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .checker import Checker, CheckOutcome
from .frontend import parse, validate_constructor, validate_subset
from .interp import Interpreter, fuzz_trace
from .model import ModelConfig, build_addr_domain
from .smt.driver import SolverConfig, SolverProcessError, default_command
from .speclang import (
    LoweredInvariant, SpecError, eval_state_pred, lower_property, parse_spec,
)
from .symexec import (
    MultiEmitError, UnsupportedConstruct, build_model, dump_model,
)
from .trace import CounterExample

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 3


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="solbmc",
        description="Bounded symbolic model checker for the Sol subset of Solidity",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def add_model_flags(p):
        p.add_argument("--k", type=int, default=None,
                       help="maximum trace length in states, incl. the initial one (default 12)")
        p.add_argument("--min-k", type=int, default=None, help="minimum trace length")
        p.add_argument("--addrs", type=int, default=None,
                       help="number of user addresses (default 3)")
        p.add_argument("--int-width", type=int, default=None,
                       help="model integer width in bits (default 16)")
        p.add_argument("--config", type=Path, default=None,
                       help="JSON config file (same keys as the flags)")

    def add_solver_flags(p):
        p.add_argument("--solver", default=None,
                       help="external SMT-LIB2 solver command (default: bundled solver)")
        p.add_argument("--solver-arg", action="append", default=[],
                       help="extra argument passed to the solver (repeatable)")
        p.add_argument("--timeout", type=float, default=None,
                       help="per-query solver timeout in seconds (default 600)")
        p.add_argument("--dump-smt", type=Path, default=None,
                       help="write each solver query script into this directory")
        p.add_argument("--incremental", action="store_true",
                       help="keep one solver process alive with push/pop")

    pc = sub.add_parser("check", help="check a specification against a contract")
    pc.add_argument("contract", type=Path)
    pc.add_argument("spec", type=Path)
    add_model_flags(pc)
    add_solver_flags(pc)
    pc.add_argument("--json", action="store_true", help="machine-readable output")
    pc.add_argument("--dump-model", action="store_true",
                    help="print the extracted transition system and exit")
    pc.add_argument("--ce-out", type=Path, default=None,
                    help="write counter-examples as JSON next to this prefix")

    pv = sub.add_parser("validate", help="check that a contract is inside Sol")
    pv.add_argument("contract", type=Path)
    pv.add_argument("--json", action="store_true")

    pr = sub.add_parser("replay", help="replay a counter-example JSON file")
    pr.add_argument("contract", type=Path)
    pr.add_argument("ce", type=Path)
    add_model_flags(pr)

    pf = sub.add_parser("fuzz", help="random concrete runs asserting invariants")
    pf.add_argument("contract", type=Path)
    pf.add_argument("--spec", type=Path, default=None)
    add_model_flags(pf)
    pf.add_argument("--runs", type=int, default=20)
    pf.add_argument("--steps", type=int, default=30)
    pf.add_argument("--seed", type=int, default=None)
    return ap


def load_config(args) -> ModelConfig:
    file_values = {}
    if getattr(args, "config", None):
        file_values = json.loads(args.config.read_text())

    def pick(flag, key, default):
        v = getattr(args, flag, None)
        if v is not None:
            return v
        return file_values.get(key, default)

    cfg = ModelConfig(
        int_width=pick("int_width", "int_width", 16),
        addr_count=pick("addrs", "addrs", 3),
        max_trace=pick("k", "k", 12),
        min_trace=pick("min_k", "min_k", 0),
        timeout=pick("timeout", "timeout", 600.0),
    )
    cfg.validate()
    return cfg


def solver_config(args, cfg: ModelConfig) -> SolverConfig:
    command = default_command()
    chosen = getattr(args, "solver", None) or os.environ.get("SOLBMC_SOLVER")
    if chosen:
        command = chosen.split()
    return SolverConfig(
        command=command,
        extra_args=list(getattr(args, "solver_arg", [])),
        timeout=cfg.timeout,
        dump_dir=getattr(args, "dump_smt", None),
    )


def load_contract(path: Path):
    try:
        source = path.read_text()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None
    result = parse(source)
    if result.contract is None or result.diagnostics:
        for d in result.diagnostics:
            print(f"{path}:{d}", file=sys.stderr)
        return None
    return result.contract


def cmd_validate(args) -> int:
    try:
        source = args.contract.read_text()
    except OSError as exc:
        print(f"error: cannot read {args.contract}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    result = parse(source)
    if result.contract is None:
        if args.json:
            print(json.dumps({
                "ok": False,
                "diagnostics": [
                    {"kind": d.kind, "message": d.message,
                     "line": d.span.line, "col": d.span.col}
                    for d in result.diagnostics
                ],
            }))
        else:
            for d in result.diagnostics:
                print(f"{args.contract}:{d}", file=sys.stderr)
        return EXIT_USAGE
    violations = validate_subset(result.contract) + validate_constructor(result.contract)
    if args.json:
        print(json.dumps({
            "ok": not violations,
            "violations": [v.to_json() for v in violations],
        }))
    else:
        for v in violations:
            print(f"{args.contract}:{v}", file=sys.stderr)
        if not violations:
            print(f"{args.contract}: OK ({result.contract.name} is in Sol)")
    return EXIT_OK if not violations else EXIT_VIOLATION


def cmd_check(args) -> int:
    ast = load_contract(args.contract)
    if ast is None:
        return EXIT_USAGE
    violations = validate_subset(ast) + validate_constructor(ast)
    if violations:
        for v in violations:
            print(f"{args.contract}:{v}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args)
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    addrs = build_addr_domain(cfg)
    try:
        model = build_model(ast, cfg, addrs)
    except (UnsupportedConstruct, MultiEmitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.dump_model:
        print(dump_model(model), end="")
        return EXIT_OK

    try:
        spec_text = args.spec.read_text()
    except OSError as exc:
        print(f"error: cannot read {args.spec}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        props = parse_spec(spec_text, ast)
        lowered = [lower_property(p, model) for p in props]
    except SpecError as exc:
        print(f"{args.spec}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not lowered:
        print(f"{args.spec}: no properties found", file=sys.stderr)
        return EXIT_USAGE

    checker = Checker(model, solver_config(args, cfg), incremental=args.incremental)
    interp = Interpreter(ast, cfg, addrs)
    outcomes: list[tuple[CheckOutcome, dict]] = []
    for lp in lowered:
        try:
            outcome = checker.check(lp)
        except SolverProcessError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        extra: dict = {}
        if outcome.counter_example is not None:
            report = interp.replay(outcome.counter_example)
            extra["replay"] = "Confirmed" if report.confirmed else "Mismatch"
            extra["replay_report"] = report
            if args.ce_out is not None:
                path = Path(f"{args.ce_out}.{lp.name}.json")
                path.write_text(json.dumps(
                    outcome.counter_example.to_json(addrs, model.slots), indent=2,
                ))
                extra["ce_path"] = str(path)
        outcomes.append((outcome, extra))

    if args.json:
        print(json.dumps({
            "contract": ast.name,
            "config": {"k": cfg.max_trace, "addrs": cfg.addr_count,
                       "int_width": cfg.int_width},
            "properties": [_outcome_json(o, e, model) for o, e in outcomes],
        }, indent=2))
    else:
        for outcome, extra in outcomes:
            _print_outcome(outcome, extra, model)

    if any(o.verdict == "violated" for o, _ in outcomes):
        return EXIT_VIOLATION
    if any(o.verdict == "unknown" for o, _ in outcomes):
        return EXIT_UNKNOWN
    return EXIT_OK


def _outcome_json(outcome: CheckOutcome, extra: dict, model) -> dict:
    data = {
        "name": outcome.property_name,
        "verdict": outcome.verdict,
        "bound": outcome.bound,
        "note": outcome.note,
        "stats": [
            {"k": s.k, "result": s.result, "seconds": round(s.seconds, 3)}
            for s in outcome.stats
        ],
    }
    if outcome.counter_example is not None:
        data["counterexample"] = outcome.counter_example.to_json(model.addrs, model.slots)
        data["replay"] = extra.get("replay")
    return data


def _print_outcome(outcome: CheckOutcome, extra: dict, model) -> None:
    head = {
        "holds": "HOLDS",
        "violated": "VIOLATED",
        "unknown": "UNKNOWN",
    }[outcome.verdict]
    line = f"{outcome.property_name}: {head}"
    if outcome.note:
        line += f" ({outcome.note})"
    print(line)
    total = sum(s.seconds for s in outcome.stats)
    iters = ", ".join(f"k={s.k}:{s.result[:1]}{s.seconds:.1f}s" for s in outcome.stats)
    print(f"  solver: {total:.1f}s total [{iters}]")
    ce = outcome.counter_example
    if ce is not None:
        print("  counter-example:")
        for tline in ce.transcript(model.addrs).splitlines():
            print(f"    {tline}")
        if extra.get("replay"):
            print(f"  replay: {extra['replay']}")
        if extra.get("ce_path"):
            print(f"  written to {extra['ce_path']}")
    print()


def cmd_replay(args) -> int:
    ast = load_contract(args.contract)
    if ast is None:
        return EXIT_USAGE
    try:
        cfg = load_config(args)
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    addrs = build_addr_domain(cfg)
    interp = Interpreter(ast, cfg, addrs)
    try:
        data = json.loads(args.ce.read_text())
        ce = CounterExample.from_json(data, addrs, interp.slots)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: cannot load counter-example: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = interp.replay(ce)
    print(report)
    return EXIT_OK if report.confirmed else EXIT_VIOLATION


def cmd_fuzz(args) -> int:
    ast = load_contract(args.contract)
    if ast is None:
        return EXIT_USAGE
    try:
        cfg = load_config(args)
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    addrs = build_addr_domain(cfg)
    try:
        model = build_model(ast, cfg, addrs)
    except (UnsupportedConstruct, MultiEmitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    invariants = []
    if args.spec is not None:
        try:
            props = parse_spec(args.spec.read_text(), ast)
        except (OSError, SpecError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        for p in props:
            lp = lower_property(p, model)
            if isinstance(lp.body, LoweredInvariant):
                invariants.append((lp.name, lp.body.pred))
    seed = args.seed if args.seed is not None else int.from_bytes(os.urandom(4), "big")
    print(f"fuzz: seed={seed} runs={args.runs} steps={args.steps}")
    failures = 0
    for run in range(args.runs):
        trace = fuzz_trace(ast, cfg, args.steps, seed + run, addrs)
        committed = 0
        for tx, outcome in trace:
            if not outcome.committed:
                continue
            committed += 1
            for name, pred in invariants:
                if not eval_state_pred(model, pred, outcome.state):
                    print(f"run {run}: invariant {name} violated after "
                          f"{tx.fname}({', '.join(map(str, tx.args))}) "
                          f"from {addrs.name(tx.sender)} value={tx.value}")
                    failures += 1
    print(f"fuzz: {'no invariant violations' if not failures else f'{failures} violations'} "
          f"(seed {seed})")
    return EXIT_OK if failures == 0 else EXIT_VIOLATION


def main(argv=None) -> int:
    ap = build_arg_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    handlers = {
        "check": cmd_check,
        "validate": cmd_validate,
        "replay": cmd_replay,
        "fuzz": cmd_fuzz,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
