"""Command line: ``check``, ``solve`` and ``normalize``."""
from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path
from typing import Optional, Sequence

from .parser import ParseError, load_system, parse_constraints, parse_term
from .rewrite import FuelExhausted, TermGenerator, loop_search, normalize
from .sizes import format_size
from .solver import Unsat, mgs
from .syntax import Fun, app, split_type
from .termination import INVALID, MAYBE, UNSUPPORTED, YES, SystemReport, check_system

log = logging.getLogger("sizeterm")

EXIT = {YES: 0, MAYBE: 1, UNSUPPORTED: 1, INVALID: 2}


def _flag(b: bool) -> str:
    return "ok" if b else "FAIL"


def render_report(rep: SystemReport) -> str:
    lines = [f"system {rep.system}: {rep.verdict}"]
    for d in rep.diagnostics:
        lines.append(f"  {d}")
    for fn, perm in sorted(rep.permutations.items()):
        lines.append(f"  lexicographic order for {fn}: {tuple(i + 1 for i in perm)}")
    for r in rep.rules:
        lines.append(f"  [{r.name}] {r.rule}  => {r.verdict}")
        lines.append(
            f"      monotony {_flag(r.monotony)}, accessibility {_flag(r.accessibility)}, "
            f"minimality {_flag(r.minimality)}, subject-reduction/decrease {_flag(r.subject_reduction_decrease)}"
        )
        for d in r.diagnostics:
            lines.append(f"      {d}")
    return "\n".join(lines)


def plot_report(rep: SystemReport, path: str) -> None:
    """Bar chart of the time spent on each rule."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [r.name for r in rep.rules]
    times = [r.seconds * 1000 for r in rep.rules]
    colors = ["tab:green" if r.verdict == YES else "tab:red" for r in rep.rules]
    fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(names) + 2), 3))
    ax.bar(names, times, color=colors)
    ax.set_ylabel("ms")
    ax.set_title(f"{rep.system}: {rep.verdict}")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _oracle(system, depth: int, samples: int = 20, seed: int = 0) -> list[str]:
    """Look for reduction cycles from random calls to each function."""
    gen = TermGenerator(system, random.Random(seed))
    notes = []
    per_fun = max(1, samples // max(1, len(system.functions)))
    for f, sig in system.functions.items():
        doms, _ = split_type(sig.plain_type)
        for _ in range(per_fun):
            try:
                t = app(Fun(f), *(gen.term(d, depth=3) for d in doms))
            except ValueError:
                break
            w = loop_search(system, t, depth, limit=5000)
            if w is not None:
                notes.append(f"loop from {t}: " + " -> ".join(str(u) for u in w.cycle))
                break
    return notes


def cmd_check(args) -> int:
    try:
        system = load_system(args.file)
    except (ParseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    rep = check_system(system, lex_search=args.lex_search)
    oracle = _oracle(system, args.oracle_depth) if args.oracle_depth else []
    if args.json:
        out = rep.to_json()
        if args.oracle_depth:
            out["oracle"] = oracle
        print(json.dumps(out, indent=2))
    else:
        print(render_report(rep))
        for n in oracle:
            print(f"  oracle: {n}")
    if args.plot:
        try:
            plot_report(rep, args.plot)
        except ImportError:
            print("warning: matplotlib is not installed; no plot written", file=sys.stderr)
    return EXIT[rep.verdict]


def cmd_solve(args) -> int:
    try:
        problem = parse_constraints(Path(args.file).read_text(encoding="utf-8"), args.file)
    except (ParseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        sol = mgs(problem)
    except Unsat as e:
        if args.json:
            print(json.dumps({"result": "UNSAT", "reason": str(e)}))
        else:
            print("UNSAT")
        return 1
    items = sorted(sol.items(), key=lambda kv: kv[0].name)
    if args.json:
        print(json.dumps({"result": "SAT", "mgs": {v.name: format_size(a) for v, a in items}}))
    else:
        print("SAT")
        for v, a in items:
            print(f"{v} := {format_size(a)}")
    return 0


def cmd_normalize(args) -> int:
    try:
        system = load_system(args.file)
        t = parse_term(args.term, system)
    except (ParseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        print(normalize(system, t, args.fuel))
    except FuelExhausted as e:
        print(f"no normal form within {args.fuel} steps; reached {e.term}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sizeterm", description="Termination checking with sized types.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("check", help="check termination of a rewrite system")
    c.add_argument("file")
    c.add_argument("--json", action="store_true")
    c.add_argument("--lex-search", action="store_true", help="search a lexicographic argument order per function class")
    c.add_argument("--oracle-depth", type=int, default=0, metavar="N", help="also search reduction loops up to depth N")
    c.add_argument("--plot", metavar="PATH", help="write a per-rule timing chart (needs matplotlib)")
    c.set_defaults(func=cmd_check)
    s = sub.add_parser("solve", help="solve a size constraint file")
    s.add_argument("file")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_solve)
    n = sub.add_parser("normalize", help="normalize a term")
    n.add_argument("file")
    n.add_argument("term")
    n.add_argument("--fuel", type=int, default=10_000)
    n.set_defaults(func=cmd_normalize)
    return p


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) if e.code in (0, None) else 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


def main() -> None:
    sys.exit(run())
