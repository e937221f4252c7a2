"""``bigsos`` command line.

Exit codes: 0 success or ConsistentPrefix, 1 NoExtension or a halting run,
2 Ambiguous, 3 Unknown, 64 usage error, 65 unreadable input data, 66 missing
input file, 70 internal disagreement in ``demo halting``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from .behavior import StreamPrefix, TreePrefix, render_tree, tree_to_dot
from .engine import (
    DEFAULT_FUEL,
    BaseStreamEnv,
    ConsistentPrefix,
    EngineError,
    NoExtension,
    Verdict,
    check_axioms,
    check_extension,
    generic_terms,
    unfold_lts,
    unfold_stream,
)
from .qm import MachineError, classical_to_qm, load_classical, load_machine, qm_run
from .reduction import qm_to_lts_spec, qm_to_stream_spec
from .rules import SpecError, check_functionality, classify_spec, parse_spec, render_spec
from .terms import TermError, closed_terms, parse_term

EX_OK, EX_NOEXT, EX_AMBIGUOUS, EX_UNKNOWN = 0, 1, 2, 3
EX_USAGE, EX_DATAERR, EX_NOINPUT, EX_SOFTWARE = 64, 65, 66, 70

VERDICT_CODES = {"ConsistentPrefix": EX_OK, "NoExtension": EX_NOEXT, "Ambiguous": EX_AMBIGUOUS, "Unknown": EX_UNKNOWN}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EX_USAGE)


# --------------------------------------------------------------------------
# inputs


def resolve(path: str) -> Path:
    """Find ``path`` as given or below ``$BIGSOS_CORPUS``."""
    p = Path(path)
    if p.exists():
        return p
    corpus = os.environ.get("BIGSOS_CORPUS")
    if corpus and not p.is_absolute():
        q = Path(corpus) / p
        if q.exists():
            return q
    raise FileNotFoundError(path)


def _read_spec(path: str):
    return parse_spec(resolve(path).read_text(encoding="utf-8"))


def _env(spec, bindings: list[str] | None) -> BaseStreamEnv:
    if bindings:
        return BaseStreamEnv.parse(bindings, spec.alphabet)
    return BaseStreamEnv.default(spec.alphabet)


def _seeds(spec, texts: list[str] | None, size: int):
    if texts:
        return [parse_term(t, spec.signature) for t in texts]
    seeds = closed_terms(spec.signature, size)
    if not seeds:
        raise UsageError("the spec has no closed terms; pass --seed")
    return seeds


# --------------------------------------------------------------------------
# output


def _emit(text: str) -> None:
    sys.stdout.write(text if text.endswith("\n") else text + "\n")


def render_verdict(v: Verdict, show_prefixes: bool = True) -> str:
    if isinstance(v, ConsistentPrefix):
        lines = [f"ConsistentPrefix (depth {v.depth}, {len(v.prefixes)} seed(s))"]
        if show_prefixes:
            for t, p in v.prefixes.items():
                if isinstance(p, StreamPrefix):
                    lines.append(f"  {p}")
                else:
                    lines.append(render_tree(p, indent=1))
        if v.axioms:
            diagram = v.axioms.get("diagram")
            if diagram:
                lines.append(f"  extension diagram: {diagram['checked']} checked, {len(diagram['mismatches'])} mismatch(es)")
            for name, rep in v.axioms.items():
                if name != "diagram":
                    lines.append(f"  axiom {name}: {rep['checked']} checked, {len(rep['failures'])} failure(s)")
        return "\n".join(lines)
    if isinstance(v, NoExtension):
        w = v.witness
        lines = [f"NoExtension: {w}"]
        for s in w.trace:
            lines.append(f"  rule {s.rule}: {s.term} -{s.label}-> {s.successor}")
        if w.step is not None:
            lines.append(f"  forcing rule {w.step.rule}: {w.step.term} -{w.step.label}-> {w.step.successor}")
        return "\n".join(lines)
    if v.name == "Ambiguous":
        where = f" at position {v.position}" if v.position is not None else ""
        return f"Ambiguous{where}: {v.term} ({v.reason})"
    return f"Unknown after {v.spent} step(s): {v.reason}"


def _report(v: Verdict, as_json: bool, show_prefixes: bool = True) -> int:
    _emit(json.dumps(v.to_json(), indent=2, ensure_ascii=False) if as_json else render_verdict(v, show_prefixes))
    return VERDICT_CODES[v.name]


# --------------------------------------------------------------------------
# subcommands


def cmd_fmt(args) -> int:
    spec = _read_spec(args.file)
    report = classify_spec(spec)
    report.diagnostics.extend(check_functionality(spec))
    if args.json:
        _emit(report.dumps())
        return EX_OK
    _emit(f"verdict: {report.verdict}")
    for text, fmts in zip(report.rules, report.per_rule):
        _emit(f"  {{{', '.join(sorted(fmts))}}}  {text}")
    for op, cls in report.per_op.items():
        _emit(f"  op {op}: {cls or '-'}")
    for d in report.diagnostics:
        _emit(f"  {d}")
    return EX_OK


def cmd_qm_run(args) -> int:
    m = load_machine(resolve(args.file))
    res = qm_run(m, fuel=args.fuel)
    if args.json:
        _emit(json.dumps({"outcome": res.outcome, "trace": [str(c) for c in res.trace]}, indent=2, ensure_ascii=False))
    else:
        for c in res.trace:
            _emit(str(c))
        _emit(res.outcome)
    return EX_NOEXT if res.halted else EX_OK


def cmd_qm_compile(args) -> int:
    m = load_machine(resolve(args.file))
    out = (qm_to_stream_spec if args.target == "stream" else qm_to_lts_spec)(m)
    text = render_spec(out.spec)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        _emit(text)
    return EX_OK


def cmd_qm_from_classical(args) -> int:
    m = classical_to_qm(load_classical(resolve(args.file)))
    text = json.dumps(m.to_json(), indent=2, ensure_ascii=False)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    else:
        _emit(text)
    return EX_OK


def cmd_unfold(args) -> int:
    spec = _read_spec(args.file)
    if spec.behavior == "stream" and args.dot:
        raise UsageError("--dot applies to LTS specs only; stream prefixes render as a line")
    seeds = _seeds(spec, args.seed, args.seed_size)
    if spec.behavior == "stream":
        v = unfold_stream(spec, seeds, args.depth, args.fuel, _env(spec, args.base))
    else:
        v = unfold_lts(spec, seeds, args.depth, args.fuel)
        if args.dot and isinstance(v, ConsistentPrefix):
            dots = [tree_to_dot(p, name=f"t{i}") for i, p in enumerate(v.prefixes.values()) if isinstance(p, TreePrefix)]
            Path(args.dot).write_text("\n".join(dots), encoding="utf-8")
    return _report(v, args.json)


def cmd_check_extension(args) -> int:
    spec = _read_spec(args.file)
    env = _env(spec, args.base) if spec.behavior == "stream" else None
    v = check_extension(spec, args.seed_size, args.depth, args.fuel, jobs=args.jobs, env=env)
    return _report(v, args.json, show_prefixes=args.show_prefixes)


def cmd_axioms(args) -> int:
    spec = _read_spec(args.file)
    if spec.behavior != "stream":
        raise UsageError("axiom checks are defined for stream specs")
    env = _env(spec, args.base)
    if args.term:
        terms = [parse_term(t, spec.signature) for t in args.term]
    else:
        leaves = [BaseStreamEnv.color(name) for name in env.streams]
        terms = generic_terms(spec, leaves, 2, 24)
    rep = check_axioms(spec, env, terms, args.depth, args.fuel)
    _emit(json.dumps(rep.to_json(), indent=2) if args.json else str(rep))
    return EX_OK if rep.passed else EX_NOEXT


def demo_halting(path: str | Path, fuel: int, target: str = "stream", seed_size: int = 1) -> dict:
    """Run the machine for ``fuel`` steps and check its compiled spec to
    depth ``fuel + 2``, the depth at which a halt within ``fuel`` steps
    shows up as a witness."""
    m = load_machine(resolve(str(path)))
    run = qm_run(m, fuel=fuel)
    compile_ = qm_to_stream_spec if target == "stream" else qm_to_lts_spec
    n = fuel + 2
    v = check_extension(compile_(m).spec, seed_size, n, fuel=max(DEFAULT_FUEL, 50 * n))
    expected = "NoExtension" if run.halted else "ConsistentPrefix"
    return {"target": target, "machine": run.outcome, "spec": v.name, "agree": v.name == expected, "verdict": v}


def cmd_demo_halting(args) -> int:
    targets = ["stream", "lts"] if args.target == "both" else [args.target]
    size = 1 if args.seed_size is None else args.seed_size
    results = [demo_halting(args.file, args.fuel, t, size) for t in targets]
    for r in results:
        if args.json:
            _emit(json.dumps({k: v for k, v in r.items() if k != "verdict"} | {"witness": r["verdict"].to_json()["witness"]}, ensure_ascii=False))
        else:
            tail = "verdicts agree" if r["agree"] else "verdicts DISAGREE"
            prefix = f"[{r['target']}] " if len(results) > 1 else ""
            _emit(f"{prefix}machine: {r['machine']}; spec: {r['spec']} — {tail}")
    if not all(r["agree"] for r in results):
        return EX_SOFTWARE
    return EX_NOEXT if results[0]["machine"].startswith("HaltedAt") else EX_OK


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fuel", type=int, default=DEFAULT_FUEL, help="work budget (default %(default)s)")
    common.add_argument("--depth", type=int, default=8, help="prefix length or tree depth (default %(default)s)")
    common.add_argument("--seed-size", type=int, help="largest closed seed term (default 3; 1 for demo halting)")
    common.add_argument("--json", action="store_true", help="structured output")
    common.add_argument("--jobs", type=int, default=1, help="parallel seed sessions")
    common.add_argument("--base", action="append", metavar="NAME=PREFIX:LOOP", help="base stream binding")

    p = _Parser(prog="bigsos", description="Rule formats, queue machines and distributive-law prefixes.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    s = sub.add_parser("fmt", parents=[common], help="classify a rule specification")
    s.add_argument("file")
    s.set_defaults(fn=cmd_fmt)

    qm = sub.add_parser("qm", help="queue machines")
    qsub = qm.add_subparsers(dest="qm_command", parser_class=_Parser, required=True)
    s = qsub.add_parser("run", parents=[common], help="simulate a machine")
    s.add_argument("file")
    s.set_defaults(fn=cmd_qm_run)
    s = qsub.add_parser("compile", parents=[common], help="compile a machine into a rule specification")
    s.add_argument("file")
    s.add_argument("--target", choices=["stream", "lts"], default="stream")
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_qm_compile)
    s = qsub.add_parser("from-classical", parents=[common], help="compile a classical queue machine")
    s.add_argument("file")
    s.add_argument("-o", "--output")
    s.set_defaults(fn=cmd_qm_from_classical)

    s = sub.add_parser("unfold", parents=[common], help="unfold seed terms")
    s.add_argument("file")
    s.add_argument("--seed", action="append", metavar="TERM")
    s.add_argument("--dot", metavar="PATH", help="write LTS trees as DOT")
    s.set_defaults(fn=cmd_unfold)

    s = sub.add_parser("check-extension", parents=[common], help="search for a distributive-law prefix")
    s.add_argument("file")
    s.add_argument("--show-prefixes", action="store_true")
    s.set_defaults(fn=cmd_check_extension)

    s = sub.add_parser("axioms", parents=[common], help="check the distributive-law axioms on prefixes")
    s.add_argument("file")
    s.add_argument("--term", action="append", metavar="TERM")
    s.set_defaults(fn=cmd_axioms)

    demo = sub.add_parser("demo", help="end-to-end demonstrations")
    dsub = demo.add_subparsers(dest="demo_command", parser_class=_Parser, required=True)
    s = dsub.add_parser("halting", parents=[common], help="compare a machine run with its compiled spec")
    s.add_argument("file")
    s.add_argument("--target", choices=["stream", "lts", "both"], default="stream")
    s.set_defaults(fn=cmd_demo_halting)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "seed_size", 0) is None:
        args.seed_size = 3
    for flag in ("fuel", "depth", "jobs"):
        if getattr(args, flag, 1) < (0 if flag == "depth" else 1):
            parser.error(f"--{flag.replace('_', '-')} is out of range")
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"bigsos: {e}", file=sys.stderr)
        return EX_USAGE
    except FileNotFoundError as e:
        print(f"bigsos: no such file: {e.args[0] if e.args else e}", file=sys.stderr)
        return EX_NOINPUT
    except (SpecError, TermError, MachineError, EngineError, json.JSONDecodeError, KeyError, ValueError) as e:
        print(f"bigsos: {e}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())
