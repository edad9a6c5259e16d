"""Command-line interface.

Exit codes: 0 success, 1 a check failed, 2 usage or input error,
3 a level is larger than the cap.  With ``--format json`` every path,
errors included, prints one JSON document.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any

from . import __version__
from .core import DEFAULT_CAP, Universe, count_levels
from .errors import BiworldError, CapExceeded
from .kripke import (
    canonical_worlds, entails, kripke_eval, only_knows_world, pi_only_knows_world, truth_set,
)
from .serialize import from_json, to_json
from .symbolic import (
    cg_survivors, example3_world, example_system, family_to_json, load_system,
)
from .suite import run_suite
from .syntax import And, K, O, finite_depth, modal_depth, parse, render
from .valuation import EvalContext, eval3

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
CAP_ENV = "BIWORLDS_CAP"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _split(values: list[str] | None) -> list[str]:
    out: list[str] = []
    for v in values or []:
        out.extend(x for x in v.replace(",", " ").split() if x)
    return out


def _default_cap() -> int:
    raw = os.environ.get(CAP_ENV)
    if raw is None:
        return DEFAULT_CAP
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{CAP_ENV} must be an integer, got {raw!r}") from None


def _read_arg(value: str) -> str:
    if value.startswith("@"):
        with open(value[1:], encoding="utf-8") as fh:
            return fh.read()
    return value


def _json_level(data: Any) -> int:
    if isinstance(data, dict) and "agents" in data:
        for sides in data["agents"].values():
            for side in ("poss", "imp"):
                for member in sides.get(side, []):
                    return _json_level(member) + 1
    return 0


def _universe(args, level: int) -> Universe:
    return Universe(args.atoms, args.agents, level, cap=args.cap)


def _load_world(args, text: str):
    try:
        data = json.loads(_read_arg(text))
    except json.JSONDecodeError as exc:
        raise UsageError(f"world is not valid JSON: {exc}") from None
    level = _json_level(data)
    u = _universe(args, max(level - 1, 0))
    return u, from_json(data, u)


def _formula(args, text: str):
    return parse(_read_arg(text), atoms=args.atoms, agents=args.agents)


# -- subcommands -----------------------------------------------------------------


def cmd_parse(args) -> tuple[int, Any]:
    atoms = args.atoms or None
    agents = args.agents or None
    phi = parse(_read_arg(args.formula), atoms=atoms, agents=agents)
    return EXIT_OK, {"formula": render(phi), "modal_depth": str(modal_depth(phi))}


def cmd_count(args) -> tuple[int, Any]:
    rows = count_levels(len(args.atoms), len(args.agents), args.level)
    return EXIT_OK, {"levels": [
        {"level": k, "total": r.total, "completed": r.completed, "incompleted": r.incompleted}
        for k, r in enumerate(rows)
    ]}


def cmd_enumerate(args) -> tuple[int, Any]:
    u = _universe(args, args.level)
    ws = u.level(args.level)
    shown = ws if args.limit is None else ws[: args.limit]
    return EXIT_OK, {
        "level": args.level,
        "total": len(ws),
        "biworlds": [{"id": i, "completed": u.is_completed(w), "biworld": to_json(w, u),
                      "text": u.describe(w)} for i, w in enumerate(shown)],
    }


def cmd_eval(args) -> tuple[int, Any]:
    u, w = _load_world(args, args.world)
    phi = _formula(args, args.formula)
    value = eval3(phi, w, EvalContext(u))
    return EXIT_OK, {"formula": render(phi), "level": w.level, "value": str(value)}


def _structure(args):
    u = _universe(args, args.k)
    return canonical_worlds(u, args.k, cap=args.cap, sample=args.sample, seed=args.seed)


def cmd_kripke(args) -> tuple[int, Any]:
    s = _structure(args)
    u = s.universe
    phi = _formula(args, args.formula)
    out: dict[str, Any] = {"k": args.k, "worlds": len(s), "exhaustive": s.exhaustive,
                           "formula": render(phi), "analog": "finite-level structure"}
    if args.world:
        _, w = _load_world(args, args.world)
        out["holds"] = kripke_eval(phi, w, s)
        return EXIT_OK, out
    gamma = [_formula(args, g) for g in args.given or []]
    res = entails(gamma, phi, s)
    out.update(given=[render(g) for g in gamma], entails=res.holds,
               advisory=not res.exhaustive,
               countermodel=None if res.countermodel is None else to_json(res.countermodel, u))
    return EXIT_OK, out


def cmd_models(args) -> tuple[int, Any]:
    phi = _formula(args, args.formula)
    if args.oknow:
        depth = finite_depth(phi) + (1 if args.pi else 0)
        u = _universe(args, depth)
        build = pi_only_knows_world if args.pi else only_knows_world
        w = build(phi, args.oknow, _split(args.obj), u)
        ctx = EvalContext(u)
        known = And(phi, K(args.oknow, phi)) if args.pi else phi
        return EXIT_OK, {
            "formula": render(phi), "agent": args.oknow, "level": w.level,
            "completed": u.is_completed(w), "only_knows_formula": render(O(args.oknow, known)),
            "only_knows": str(eval3(O(args.oknow, known), w, ctx)),
            "biworld": to_json(w, u), "text": u.describe(w),
        }
    s = _structure(args)
    hits = truth_set(phi, s).nonzero()[0]
    shown = hits if args.limit is None else hits[: args.limit]
    return EXIT_OK, {
        "formula": render(phi), "k": args.k, "worlds": len(s), "models": int(len(hits)),
        "exhaustive": s.exhaustive,
        "listed": [s.universe.describe(s.world(int(i))) for i in shown],
    }


def cmd_symbolic(args) -> tuple[int, Any]:
    u = _universe(args, 1)
    system = load_system(_read_arg(args.family), u) if args.family else example_system(u)
    if args.without:
        system = system.without(*_split(args.without))
    if args.action == "example3":
        obj = None if args.obj is None else _split(args.obj)
        return EXIT_OK, example3_world(system, obj)
    if args.action == "families":
        return EXIT_OK, {"families": [family_to_json(f) for f in system.families.values()]}
    name = args.name or "v"
    if args.action == "materialize":
        w = system.materialize(name, args.level)
        return EXIT_OK, {"family": name, "level": args.level, "biworld": to_json(w, u),
                         "text": u.describe(w) if w.level <= u.built + 1 else None}
    phi = _formula(args, args.formula or u.atoms[0])
    if args.action == "eval":
        return EXIT_OK, {"family": name, "formula": render(phi),
                         "value": str(system.eval_omega(phi, name, args.k_max))}
    group = _split(args.group) or list(u.agents)
    if args.action == "cg":
        return EXIT_OK, {"family": name, "group": group, "formula": render(phi),
                         "closure": system.closure(name, group),
                         "value": str(system.eval_cg_closure(phi, group, name, args.k_max))}
    # survivors
    survivors = cg_survivors(phi, group, args.level, u)
    return EXIT_OK, {"formula": render(phi), "group": group, "level": args.level,
                     "survivors": len(survivors),
                     "listed": [u.describe(w) for w in survivors[: args.limit or 50]]
                     if args.level <= 1 else None}


def cmd_suite(args) -> tuple[int, Any]:
    results = run_suite(seed=args.seed, full=args.profile == "full",
                        only=set(_split(args.only)) or None)
    ok = all(r.passed for r in results)
    return (EXIT_OK if ok else EXIT_CHECK), {
        "profile": args.profile, "seed": args.seed, "passed": ok,
        "checks": [{"name": r.name, "passed": r.passed, "seconds": round(r.seconds, 3),
                    "detail": r.detail, "failures": r.failures} for r in results],
    }


# -- text rendering ----------------------------------------------------------------


def _text(cmd: str, out: Any) -> str:
    if cmd == "parse":
        return f"{out['formula']}\nmodal depth: {out['modal_depth']}"
    if cmd == "count":
        lines = [f"{'level':>5} {'total':>14} {'completed':>14} {'incompleted':>14}"]
        lines += [f"{r['level']:>5} {r['total']:>14} {r['completed']:>14} {r['incompleted']:>14}"
                  for r in out["levels"]]
        return "\n".join(lines)
    if cmd == "enumerate":
        lines = [f"level {out['level']}: {out['total']} biworlds"]
        lines += [f"{b['id']:>6} {'C' if b['completed'] else 'I'} {b['text']}" for b in out["biworlds"]]
        return "\n".join(lines)
    if cmd == "eval":
        return out["value"]
    if cmd == "models" and "agent" in out:
        return (f"{out['text']}\nlevel {out['level']}, completed={out['completed']}, "
                f"{out['only_knows_formula']} = {out['only_knows']}")
    if cmd == "models":
        lines = [f"{out['models']} of {out['worlds']} worlds satisfy {out['formula']}"]
        return "\n".join(lines + out["listed"])
    if cmd == "suite":
        lines = [f"{'PASS' if c['passed'] else 'FAIL'} {c['name']} ({c['seconds']:.2f}s)"
                 for c in out["checks"]]
        for c in out["checks"]:
            lines += [f"  {c['name']}: {f}" for f in c["failures"]]
        lines.append(f"seed={out['seed']} profile={out['profile']} "
                     f"{'all passed' if out['passed'] else 'FAILED'}")
        return "\n".join(lines)
    return json.dumps(out, indent=2, ensure_ascii=False)


# -- argument parsing ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--atoms", action="append", help="atoms (comma or space separated)")
    common.add_argument("--agents", action="append", help="agents (comma or space separated)")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--cap", type=int, default=None,
                        help=f"largest level to materialize (default ${CAP_ENV} or {DEFAULT_CAP})")

    p = _Parser(prog="biworlds", description="Biworld semantics for multi-agent only knowing.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    s = sub.add_parser("parse", parents=[common], help="echo canonical form and modal depth")
    s.add_argument("-f", "--formula", required=True)

    s = sub.add_parser("count", parents=[common], help="exact level sizes")
    s.add_argument("--level", type=int, default=2)

    s = sub.add_parser("enumerate", parents=[common], help="list a level's biworlds")
    s.add_argument("--level", type=int, default=1)
    s.add_argument("--limit", type=int)

    s = sub.add_parser("eval", parents=[common], help="three-valued value at a biworld")
    s.add_argument("-f", "--formula", required=True)
    s.add_argument("--world", required=True, help="canonical JSON or @file")

    for name, help_ in (("kripke", "two-valued evaluation and entailment"),
                        ("models", "worlds satisfying a formula, or only-knowing worlds")):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("-f", "--formula", required=True)
        s.add_argument("--k", type=int, default=0, help="worlds are completed level-(k+1) biworlds")
        s.add_argument("--sample", type=int, help="sample this many worlds instead of all")
        s.add_argument("--seed", type=int, default=0)
        if name == "kripke":
            s.add_argument("--world", help="evaluate at this world instead of checking entailment")
            s.add_argument("--given", action="append", help="premise formula (repeatable)")
        else:
            s.add_argument("--limit", type=int, default=20)
            s.add_argument("--oknow", metavar="AGENT", help="build the world where AGENT only knows the formula")
            s.add_argument("--obj", action="append", help="objective atoms for --oknow")
            s.add_argument("--pi", action="store_true", help="introspective variant of --oknow")

    s = sub.add_parser("symbolic", parents=[common], help="omega-biworld families")
    s.add_argument("action", choices=("example3", "families", "materialize", "eval", "cg", "survivors"))
    s.add_argument("--family", help="family JSON (inline or @file); default: v and u")
    s.add_argument("--without", action="append", help="drop families by name")
    s.add_argument("--name")
    s.add_argument("--level", type=int, default=1)
    s.add_argument("--k-max", type=int, default=3)
    s.add_argument("-f", "--formula")
    s.add_argument("--group", action="append")
    s.add_argument("--obj", action="append")
    s.add_argument("--limit", type=int)

    s = sub.add_parser("suite", parents=[common], help="run the property checks")
    s.add_argument("--profile", choices=("fast", "full"), default="fast")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--only", action="append", help="restrict to named checks")
    return p


_COMMANDS = {
    "parse": cmd_parse, "count": cmd_count, "enumerate": cmd_enumerate, "eval": cmd_eval,
    "kripke": cmd_kripke, "models": cmd_models, "symbolic": cmd_symbolic, "suite": cmd_suite,
}

_DEFAULTS = {"atoms": ["p"], "agents": ["a"]}


def _emit(fmt: str, payload: Any, stream) -> None:
    if fmt == "json":
        stream.write(json.dumps(payload, ensure_ascii=False, default=str) + "\n")
    else:
        stream.write(payload + "\n")


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    fmt = "json" if _wants_json(argv) else "text"
    try:
        args = build_parser().parse_args(argv)
        fmt = args.format
        if args.cmd != "parse":
            args.atoms = _split(args.atoms) if args.atoms is not None else list(_DEFAULTS["atoms"])
            args.agents = _split(args.agents) if args.agents is not None else list(_DEFAULTS["agents"])
        else:
            args.atoms = _split(args.atoms)
            args.agents = _split(args.agents)
        if args.cap is None:
            args.cap = _default_cap()
        code, out = _COMMANDS[args.cmd](args)
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    except UsageError as exc:
        return _fail(fmt, EXIT_USAGE, "usage", str(exc))
    except CapExceeded as exc:
        return _fail(fmt, EXIT_CAP, "cap_exceeded", str(exc),
                     level=exc.level, count=exc.count, cap=exc.cap)
    except (BiworldError, ValueError, OSError) as exc:
        return _fail(fmt, EXIT_USAGE, type(exc).__name__, str(exc))
    _emit(fmt, out if fmt == "json" else _text(args.cmd, out), sys.stdout)
    return code


def _wants_json(argv: list[str]) -> bool:
    for i, a in enumerate(argv):
        if a == "--format=json" or (a == "--format" and i + 1 < len(argv) and argv[i + 1] == "json"):
            return True
    return False


def _fail(fmt: str, code: int, kind: str, message: str, **extra) -> int:
    if fmt == "json":
        _emit(fmt, {"error": kind, "message": message, "exit_code": code, **extra}, sys.stdout)
    else:
        sys.stderr.write(f"error: {message}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
