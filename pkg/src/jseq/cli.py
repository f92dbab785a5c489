"""Command-line interface: ``jseq prove | check-proof | check-model | parse | corpus``.

Exit codes: 0 success (derivable, valid proof, confirmed countermodel),
1 negative answer, 2 unknown, 64 usage, parse or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
import time
from dataclasses import dataclass
from typing import Optional

from .calculus import (
    CheckError,
    Derivation,
    check_derivation,
    derivation_from_json,
    derivation_to_json,
    derivation_to_latex,
    simplify_derivation,
)
from .logic_config import (
    AXIOM_MODE,
    EMPTY_CS,
    ConfigError,
    ConstantSpec,
    LogicConfig,
    load_cs,
    preset,
    validate_config,
    validate_cs,
)
from .models import (
    ModelError,
    check_conditions,
    default_universe,
    model_from_json,
    model_to_json,
    validates_sequent,
)
from .search import Derivable, NotDerivable, compute_budgets, search
from .syntax import SyntaxErrorAt, format_formula, format_sequent, format_term, parse_formula, parse_goal, parse_term

EXIT_OK, EXIT_NO, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 64
DEEP_RECURSION = 200_000
DEEP_STACK_BYTES = 512 * 1024 * 1024


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    logic: LogicConfig
    cs: ConstantSpec = EMPTY_CS
    fuel: Optional[int] = None
    serial_once: bool = False
    output: str = "text"
    budget_report: bool = False
    raw: bool = False


def _split(text: Optional[str]) -> tuple:
    if not text:
        return ()
    return tuple(a.strip() for a in text.split(",") if a.strip())


def build_logic(args: argparse.Namespace) -> LogicConfig:
    if args.axioms is not None or args.modal is not None:
        if args.logic:
            raise UsageError("use either --logic or --axioms/--modal")
        cfg = LogicConfig(
            justification_axioms=frozenset(_split(args.axioms)),
            modal_axioms=frozenset(_split(args.modal)) if args.modal is not None else None,
            modal_enabled=args.modal is not None,
            connection_axiom=args.connection,
        )
    else:
        cfg = preset(args.logic or "J")
    if args.fk:
        cfg = cfg.with_seriality(AXIOM_MODE)
    validate_config(cfg)
    return cfg


def build_run(args: argparse.Namespace) -> RunConfig:
    cfg = build_logic(args)
    cs = EMPTY_CS
    if getattr(args, "cs", None):
        try:
            cs = load_cs(args.cs)
        except OSError as exc:
            raise UsageError(f"cannot read constant specification: {exc}") from None
        report = validate_cs(cfg, cs)
        if not report.ok:
            raise UsageError("invalid constant specification:\n  " + "\n  ".join(report.violations))
    return RunConfig(cfg, cs, args.fuel, args.serial_once, args.output, args.budget_report,
                     getattr(args, "raw", False))


# --------------------------------------------------------------------------
# text rendering

def derivation_text(d: Derivation) -> str:
    lines = []
    stack = [(d, 0)]
    while stack:
        n, depth = stack.pop()
        tag = n.rule.value if n.rule else "open"
        if n.eigenlabel:
            tag += f" [{n.eigenlabel}]"
        lines.append(f"{'  ' * depth}{format_sequent(n.sequent)}   ({tag})")
        for p in reversed(n.premises):
            stack.append((p, depth + 1))
    return "\n".join(lines)


def model_text(m) -> str:
    obj = model_to_json(m)
    lines = [f"worlds: {', '.join(obj['worlds'])}",
             "R: " + (", ".join(f"{a} R {b}" for a, b in obj["rel"]) or "(empty)")]
    if obj["evidence"]:
        lines.append("base evidence:")
        for e in obj["evidence"]:
            lines.append(f"  ({e['term']}, {e['formula']}) -> {{{', '.join(e['worlds'])}}}")
    else:
        lines.append("base evidence: (empty)")
    val = ", ".join(f"{p}: {{{', '.join(ws)}}}" for p, ws in obj["valuation"].items())
    lines.append("valuation: " + (val or "(empty)"))
    return "\n".join(lines)


# --------------------------------------------------------------------------
# commands

def prove_report(goal: str, run: RunConfig) -> tuple[int, dict, object]:
    root = parse_goal(goal)
    budget = compute_budgets(run.logic, run.cs, root, fuel=run.fuel, serial_once=run.serial_once)
    start = time.perf_counter()
    res = search(run.logic, run.cs, root, budget)
    elapsed = time.perf_counter() - start
    report: dict = {"goal": format_sequent(root), "logic": run.logic.name, "status": res.status}
    payload: object = None
    if isinstance(res, Derivable):
        d = res.derivation if run.raw else simplify_derivation(run.logic, run.cs, res.derivation)
        report["derivation"] = derivation_to_json(d)
        report["height"] = d.height()
        payload, code = d, EXIT_OK
    elif isinstance(res, NotDerivable):
        report["model"] = model_to_json(res.model)
        payload, code = res.model, EXIT_NO
    else:
        report["reason"] = res.reason
        if res.detail:
            report["detail"] = res.detail
        code = EXIT_UNKNOWN
    report["budget"] = budget.report()
    report["stats"] = res.stats.report()
    report["seconds"] = round(elapsed, 6)
    return code, report, payload


def cmd_prove(args: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    run = build_run(args)
    code, report, payload = prove_report(args.goal, run)
    if run.output == "json":
        if not run.budget_report:
            report.pop("seconds", None)
        out.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
        return code
    if run.output == "latex" and code == EXIT_OK:
        out.write(derivation_to_latex(payload))
        return code
    if run.output == "latex" and code == EXIT_NO:
        out.write(json.dumps(report["model"], indent=2, sort_keys=True) + "\n")
        return code
    out.write(f"{report['status']}: {report['goal']} in {report['logic']}\n")
    if code == EXIT_OK:
        out.write(derivation_text(payload) + "\n")
    elif code == EXIT_NO:
        out.write(model_text(payload) + "\n")
    else:
        out.write(f"reason: {report['reason']}\n")
    if run.budget_report:
        out.write(json.dumps({"budget": report["budget"], "stats": report["stats"]}, indent=2, sort_keys=True) + "\n")
    return code


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def cmd_check_proof(args: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    obj = _load_json(args.path)
    if "derivation" in obj and "sequent" not in obj:
        if args.logic is None and args.axioms is None and args.modal is None and obj.get("logic"):
            args.logic = obj["logic"]
        obj = obj["derivation"]
    run = build_run(args)
    try:
        d = derivation_from_json(obj)
    except (SyntaxErrorAt, ValueError) as exc:
        raise UsageError(str(exc)) from None
    res = check_derivation(run.logic, run.cs, d)
    if res.ok:
        out.write(f"ok: derivation of {format_sequent(d.sequent)} checked in {run.logic.name}\n")
        return EXIT_OK
    sys.stderr.write(f"invalid derivation: {res.describe()}\n")
    return EXIT_NO


def cmd_check_model(args: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    obj = _load_json(args.model)
    if "model" in obj and "worlds" not in obj:
        obj = obj["model"]
    if args.logic is None and args.axioms is None and args.modal is None:
        args.logic = obj.get("logic", "J")
    run = build_run(args)
    root = parse_goal(args.goal)
    try:
        m = model_from_json(obj, run.logic, run.cs)
    except (SyntaxErrorAt, ValueError) as exc:
        raise UsageError(str(exc)) from None
    missing = root.labels() - m.worlds
    if missing:
        raise UsageError(f"goal labels {sorted(missing)} are not worlds of the model")
    rep = check_conditions(m, default_universe(m, root))
    valid = validates_sequent(m, None, root)
    out.write(rep.describe() + "\n")
    out.write(f"goal {'valid' if valid else 'refuted'} under the identity interpretation\n")
    return EXIT_OK if rep.ok and not valid else EXIT_NO


def cmd_parse(args: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    if args.kind == "term":
        out.write(format_term(parse_term(args.text)) + "\n")
    elif args.kind == "formula":
        out.write(format_formula(parse_formula(args.text)) + "\n")
    else:
        out.write(format_sequent(parse_goal(args.text)) + "\n")
    return EXIT_OK


def cmd_corpus(args: argparse.Namespace, out=None) -> int:
    out = out or sys.stdout
    run = build_run(args)
    try:
        with open(args.path, encoding="utf-8") as fh:
            goals = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise UsageError(f"cannot read {args.path}: {exc}") from None
    tally = {"derivable": 0, "not-derivable": 0, "unknown": 0}
    for g in goals:
        code, report, _ = prove_report(g, run)
        tally[report["status"]] += 1
        out.write(f"{report['status']:14} {report['seconds']:.3f}s  {report['goal']}\n")
    out.write(", ".join(f"{k}: {v}" for k, v in tally.items()) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing

def _common(p: argparse.ArgumentParser, cs: bool = True) -> None:
    p.add_argument("--logic", help="preset name such as J, JT, LP, S4, S4LP")
    p.add_argument("--axioms", help="comma separated justification axioms, e.g. jT,j4")
    p.add_argument("--modal", help="comma separated modal axioms; enables the box rules")
    p.add_argument("--connection", action="store_true", help="add the connection axiom t:A -> []A")
    if cs:
        p.add_argument("--cs", help="constant specification file, one entry per line")
    p.add_argument("--fuel", type=int, help="stage passes per branch (default: $JSEQ_FUEL or 10000)")
    p.add_argument("--serial-once", action="store_true", help="apply Ser only to labels without successors")
    p.add_argument("--fk", action="store_true", help="treat jD as consistent evidence (AxEBot) instead of Ser")
    p.add_argument("--output", choices=("text", "json", "latex"), default="text")
    p.add_argument("--budget-report", action="store_true", help="include budgets and search statistics")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jseq", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prove", help="search for a derivation or a countermodel")
    p.add_argument("goal", help="a formula (proved at label w) or a sequent 'items => items'")
    p.add_argument("--raw", action="store_true", help="emit the derivation exactly as found")
    _common(p)
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("check-proof", help="check a derivation in JSON")
    p.add_argument("path")
    _common(p)
    p.set_defaults(func=cmd_check_proof)

    p = sub.add_parser("check-model", help="audit a model and confirm it refutes a goal")
    p.add_argument("model")
    p.add_argument("goal")
    _common(p)
    p.set_defaults(func=cmd_check_model)

    p = sub.add_parser("parse", help="parse and print in canonical form")
    p.add_argument("text")
    p.add_argument("--kind", choices=("term", "formula", "sequent"), default="sequent")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("corpus", help="run prove on every goal of a file")
    p.add_argument("path")
    _common(p)
    p.set_defaults(func=cmd_corpus)
    return ap


def main(argv: Optional[list] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return _with_deep_stack(lambda: args.func(args))
    except (UsageError, ConfigError, SyntaxErrorAt, ModelError, CheckError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE


def _with_deep_stack(fn):
    """Run ``fn`` on a thread with a large stack; nested derivation JSON can be very deep."""
    box: dict = {}

    def target() -> None:
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, DEEP_RECURSION))
        try:
            box["value"] = fn()
        except BaseException as exc:  # re-raised on the calling thread
            box["error"] = exc
        finally:
            sys.setrecursionlimit(old)

    old_size = threading.stack_size()
    threading.stack_size(DEEP_STACK_BYTES)
    try:
        t = threading.Thread(target=target)
        t.start()
    finally:
        threading.stack_size(old_size)
    t.join()
    if "error" in box:
        raise box["error"]
    return box["value"]


if __name__ == "__main__":
    sys.exit(main())
