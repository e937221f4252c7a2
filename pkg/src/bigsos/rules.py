"""Rule AST, the ``.sos`` specification language and rule-format analysis.

A specification file looks like::

    behavior stream
    alphabet $, €
    op C/0
    op q/1
    rule C => $ -> q(C)
    rule q(x): x -a-> y, y -b-> z => b -> q(z)

Label positions hold either a letter of the alphabet or a lowercase
metavariable ranging over the alphabet.  A metavariable must be bound by a
positive premise unless the rule lists it after ``for`` at the end, in
which case it is universally quantified.
"""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from .terms import App, Signature, Term, TermError, Var, depth, parse_term, variables

GSOS = "GSOS"
COGSOS = "coGSOS"


class SpecError(ValueError):
    """A semantic problem with a specification or rule."""


class SpecSyntaxError(SpecError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Lit:
    letter: str

    def __str__(self) -> str:
        return self.letter


@dataclass(frozen=True)
class LVar:
    name: str

    def __str__(self) -> str:
        return self.name


LabelExpr = Union[Lit, LVar]


@dataclass(frozen=True)
class Pos:
    source: str
    label: LabelExpr
    target: str

    def __str__(self) -> str:
        return f"{self.source} -{self.label}-> {self.target}"


@dataclass(frozen=True)
class NegLabel:
    source: str
    label: LabelExpr

    def __str__(self) -> str:
        return f"{self.source} -{self.label}|"


@dataclass(frozen=True)
class NegAll:
    source: str

    def __str__(self) -> str:
        return f"{self.source} -|"


Premise = Union[Pos, NegLabel, NegAll]


@dataclass(frozen=True)
class Rule:
    head_op: str
    arg_vars: tuple[str, ...]
    premises: tuple[Premise, ...]
    concl_label: LabelExpr
    concl_target: Term
    forall: tuple[str, ...] = ()
    tag: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "arg_vars", tuple(self.arg_vars))
        object.__setattr__(self, "premises", tuple(self.premises))
        object.__setattr__(self, "forall", tuple(self.forall))

    @property
    def head(self) -> App:
        return App(self.head_op, tuple(Var(v) for v in self.arg_vars))

    @property
    def positives(self) -> tuple[Pos, ...]:
        return tuple(p for p in self.premises if isinstance(p, Pos))

    @property
    def negatives(self) -> tuple[Premise, ...]:
        return tuple(p for p in self.premises if not isinstance(p, Pos))

    def label_vars(self) -> tuple[str, ...]:
        seen: list[str] = []
        exprs = [p.label for p in self.premises if not isinstance(p, NegAll)]
        exprs.append(self.concl_label)
        for e in exprs:
            if isinstance(e, LVar) and e.name not in seen:
                seen.append(e.name)
        for v in self.forall:
            if v not in seen:
                seen.append(v)
        return tuple(seen)

    def lookahead(self) -> dict[str, int]:
        """Length of the longest positive premise chain from each argument."""
        root: dict[str, str] = {v: v for v in self.arg_vars}
        level: dict[str, int] = {v: 0 for v in self.arg_vars}
        for p in self.positives:
            root[p.target] = root[p.source]
            level[p.target] = level[p.source] + 1
        out = {v: 0 for v in self.arg_vars}
        for v, k in level.items():
            out[root[v]] = max(out[root[v]], k)
        return out

    def __str__(self) -> str:
        head = str(self.head)
        body = ", ".join(str(p) for p in self.premises)
        text = f"{head}: {body} => " if body else f"{head} => "
        text += f"{self.concl_label} -> {self.concl_target}"
        if self.forall:
            text += " for " + ", ".join(self.forall)
        return text


@dataclass(frozen=True)
class Spec:
    behavior: str
    alphabet: tuple[str, ...]
    signature: Signature
    rules: tuple[Rule, ...]
    start_letter: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "rules", tuple(self.rules))

    def rules_for(self, op: str) -> tuple[Rule, ...]:
        return tuple(r for r in self.rules if r.head_op == op)

    def rule_index(self, rule: Rule) -> int:
        for i, r in enumerate(self.rules):
            if r is rule:
                return i
        return self.rules.index(rule)


# --------------------------------------------------------------------------
# validation


def validate_rule(spec: Spec, rule: Rule) -> Rule:
    """Check a rule against ``spec`` and return it with premises in
    root-to-leaf order.  Raises :class:`SpecError`."""
    sig = spec.signature
    if rule.head_op not in sig:
        raise SpecError(f"unknown operation {rule.head_op!r}")
    if sig.arity(rule.head_op) != len(rule.arg_vars):
        raise SpecError(f"{rule.head_op} has arity {sig.arity(rule.head_op)}, rule binds {len(rule.arg_vars)} arguments")
    if len(set(rule.arg_vars)) != len(rule.arg_vars):
        raise SpecError(f"argument variables of {rule.head_op} are not distinct")

    targets: set[str] = set()
    for p in rule.positives:
        if p.target in rule.arg_vars or p.target in targets:
            raise SpecError(f"premise target {p.target!r} is not fresh")
        targets.add(p.target)
    scope = set(rule.arg_vars) | targets
    for p in rule.premises:
        if p.source not in scope:
            raise SpecError(f"premise source {p.source!r} is not bound")
    if spec.behavior == "stream":
        if rule.negatives:
            raise SpecError("negative premise in a stream specification")
        sources = [p.source for p in rule.positives]
        if len(set(sources)) != len(sources):
            raise SpecError("more than one positive premise on the same variable in a stream rule")

    ordered = _order_premises(rule)

    letters = set(spec.alphabet)
    bound = {p.label.name for p in rule.positives if isinstance(p.label, LVar)}
    for v in rule.forall:
        if v in letters:
            raise SpecError(f"quantified label variable {v!r} is also a letter")
    for p in rule.premises:
        if isinstance(p, NegAll):
            continue
        _check_label(p.label, letters)
    _check_label(rule.concl_label, letters)
    free = set()
    for p in rule.negatives:
        if isinstance(p, NegLabel) and isinstance(p.label, LVar) and p.label.name not in bound:
            free.add(p.label.name)
    if isinstance(rule.concl_label, LVar) and rule.concl_label.name not in bound:
        free.add(rule.concl_label.name)
    missing = free - set(rule.forall)
    if missing:
        raise SpecError(f"label variable(s) {sorted(missing)} are not bound by a positive premise")

    for name in variables(rule.concl_target):
        if name not in scope:
            raise SpecError(f"conclusion variable {name!r} is not bound")
    try:
        sig.check(rule.concl_target)
    except TermError as e:
        raise SpecError(str(e)) from None
    return Rule(rule.head_op, rule.arg_vars, ordered, rule.concl_label, rule.concl_target, rule.forall, rule.tag)


def _check_label(e: LabelExpr, letters: set[str]) -> None:
    if isinstance(e, Lit) and e.letter not in letters:
        raise SpecError(f"letter {e.letter!r} is not in the alphabet")
    if isinstance(e, LVar) and e.name in letters:
        raise SpecError(f"label variable {e.name!r} is also a letter")


def _order_premises(rule: Rule) -> tuple[Premise, ...]:
    """Topologically order premises so every source is bound before use."""
    bound = set(rule.arg_vars)
    pending = list(rule.premises)
    out: list[Premise] = []
    while pending:
        progress = False
        rest = []
        for p in pending:
            if p.source in bound:
                out.append(p)
                if isinstance(p, Pos):
                    bound.add(p.target)
                progress = True
            else:
                rest.append(p)
        if not progress:
            raise SpecError("premises form a cycle")
        pending = rest
    return tuple(out)


def validate_spec(spec: Spec) -> Spec:
    if spec.behavior not in ("stream", "lts"):
        raise SpecError(f"unknown behavior {spec.behavior!r}")
    if not spec.alphabet:
        raise SpecError("empty alphabet")
    if len(set(spec.alphabet)) != len(spec.alphabet):
        raise SpecError("repeated letters in the alphabet")
    for a in spec.alphabet:
        if not _LETTER.fullmatch(a):
            raise SpecError(f"invalid letter {a!r}")
    if spec.start_letter is not None and spec.start_letter not in spec.alphabet:
        raise SpecError(f"start letter {spec.start_letter!r} is not in the alphabet")
    rules = tuple(validate_rule(spec, r) for r in spec.rules)
    return Spec(spec.behavior, spec.alphabet, spec.signature, rules, spec.start_letter)


# --------------------------------------------------------------------------
# parsing and rendering

_LETTER = re.compile(r"[^\s,()|:?#-][^\s,()|:#]*")
_IDENT = re.compile(r"[A-Za-z_][\w']*")
_LVAR = re.compile(r"[a-z][\w']*")
_POS = re.compile(r"^(?P<src>[A-Za-z_][\w']*)\s*-\s*(?P<lab>[^\s|]+?)\s*->\s*(?P<tgt>[A-Za-z_][\w']*)$")
_NEG = re.compile(r"^(?P<src>[A-Za-z_][\w']*)\s*-\s*(?P<lab>[^\s|]+?)\s*\|$")
_NEGALL = re.compile(r"^(?P<src>[A-Za-z_][\w']*)\s*-\s*\|$")
_OP = re.compile(r"^(?P<name>[A-Za-z_][\w']*)\s*/\s*(?P<arity>\d+)$")
_HEAD = re.compile(r"^(?P<op>[A-Za-z_][\w']*)\s*(?:\((?P<args>[^)]*)\))?$")


def parse_spec(text: str) -> Spec:
    behavior = None
    alphabet: list[str] = []
    ops: list[tuple[str, int]] = []
    start = None
    raw_rules: list[tuple[int, str]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        keyword, _, rest = line.partition(" ")
        rest = rest.strip()
        if keyword == "behavior":
            if rest not in ("stream", "lts"):
                raise SpecSyntaxError(f"behavior must be 'stream' or 'lts', got {rest!r}", lineno, len(keyword) + 2)
            behavior = rest
        elif keyword == "alphabet":
            for letter in (s.strip() for s in rest.split(",")):
                if not _LETTER.fullmatch(letter):
                    raise SpecSyntaxError(f"invalid letter {letter!r}", lineno, raw.find(letter) + 1)
                alphabet.append(letter)
        elif keyword == "start-letter":
            start = rest
        elif keyword == "op":
            m = _OP.match(rest)
            if not m:
                raise SpecSyntaxError(f"expected NAME/ARITY, got {rest!r}", lineno, len(keyword) + 2)
            ops.append((m["name"], int(m["arity"])))
        elif keyword == "rule":
            raw_rules.append((lineno, rest))
        else:
            raise SpecSyntaxError(f"unknown directive {keyword!r}", lineno, 1)

    if behavior is None:
        raise SpecSyntaxError("missing 'behavior' line", 1)
    if not alphabet:
        raise SpecSyntaxError("missing 'alphabet' line", 1)
    try:
        sig = Signature.of(ops)
    except TermError as e:
        raise SpecError(str(e)) from None
    spec = Spec(behavior, tuple(alphabet), sig, (), start)
    rules = []
    for lineno, body in raw_rules:
        try:
            rule = parse_rule(body, spec)
            rules.append(validate_rule(spec, rule))
        except SpecSyntaxError as e:
            raise SpecSyntaxError(str(e).split(": ", 1)[-1], lineno, e.column) from None
        except SpecError as e:
            raise SpecError(f"line {lineno}: {e}") from None
    return validate_spec(Spec(behavior, tuple(alphabet), sig, tuple(rules), start))


def parse_rule(text: str, spec: Spec) -> Rule:
    """Parse ``HEAD(args): premises => LABEL -> TERM [for v, ...]``."""
    if "=>" not in text:
        raise SpecSyntaxError("rule lacks '=>'", 0, 1)
    lhs, rhs = text.split("=>", 1)
    lhs = lhs.strip()
    if ":" in lhs:
        head_text, premises_text = lhs.split(":", 1)
    else:
        head_text, premises_text = lhs, ""
    m = _HEAD.match(head_text.strip())
    if not m:
        raise SpecSyntaxError(f"malformed rule head {head_text.strip()!r}", 0, 1)
    op = m["op"]
    args = tuple(a.strip() for a in m["args"].split(",")) if m["args"] and m["args"].strip() else ()
    for a in args:
        if not _IDENT.fullmatch(a):
            raise SpecSyntaxError(f"bad argument variable {a!r}", 0, text.find(a) + 1)

    letters = set(spec.alphabet)
    premises: list[Premise] = []
    for piece in premises_text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        col = text.find(piece) + 1
        if mm := _POS.match(piece):
            premises.append(Pos(mm["src"], _label(mm["lab"], letters, col), mm["tgt"]))
        elif mm := _NEGALL.match(piece):
            premises.append(NegAll(mm["src"]))
        elif mm := _NEG.match(piece):
            premises.append(NegLabel(mm["src"], _label(mm["lab"], letters, col)))
        else:
            raise SpecSyntaxError(f"malformed premise {piece!r}", 0, col)

    rhs = rhs.strip()
    forall: tuple[str, ...] = ()
    fm = re.search(r"\s+for\s+(.+)$", rhs)
    if fm:
        forall = tuple(v.strip() for v in fm.group(1).split(","))
        rhs = rhs[: fm.start()].strip()
    if "->" not in rhs:
        raise SpecSyntaxError("conclusion must read 'LABEL -> TERM'", 0, text.find("=>") + 3)
    lab_text, term_text = rhs.split("->", 1)
    label = _label(lab_text.strip(), letters, text.find(lab_text.strip()) + 1)
    try:
        target = parse_term(term_text.strip(), spec.signature)
    except TermError as e:
        raise SpecError(str(e)) from None
    return Rule(op, args, tuple(premises), label, target, forall)


def _label(token: str, letters: set[str], col: int) -> LabelExpr:
    if token in letters:
        return Lit(token)
    if _LVAR.fullmatch(token):
        return LVar(token)
    raise SpecSyntaxError(f"{token!r} is neither a letter of the alphabet nor a label variable", 0, col)


def render_spec(spec: Spec) -> str:
    lines = [f"behavior {spec.behavior}", "alphabet " + ", ".join(spec.alphabet)]
    if spec.start_letter is not None:
        lines.append(f"start-letter {spec.start_letter}")
    for name, k in spec.signature.operations:
        lines.append(f"op {name}/{k}")
    for r in spec.rules:
        line = f"rule {r}"
        if r.tag:
            line += f"  # {r.tag}"
        lines.append(line)
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# grounding


def ground_rule(spec: Spec, rule: Rule) -> list[Rule]:
    """All instantiations of the rule's label variables over the alphabet."""
    lvars = rule.label_vars()
    if not lvars:
        return [rule]
    out = []
    for letters in itertools.product(spec.alphabet, repeat=len(lvars)):
        env = dict(zip(lvars, letters))

        def inst(e: LabelExpr) -> LabelExpr:
            return Lit(env[e.name]) if isinstance(e, LVar) else e

        premises: list[Premise] = []
        for p in rule.premises:
            if isinstance(p, Pos):
                premises.append(Pos(p.source, inst(p.label), p.target))
            elif isinstance(p, NegLabel):
                premises.append(NegLabel(p.source, inst(p.label)))
            else:
                premises.append(p)
        tag = rule.tag or ""
        out.append(Rule(rule.head_op, rule.arg_vars, tuple(premises), inst(rule.concl_label), rule.concl_target, (), tag))
    return out


def ground_rules(spec: Spec, op: str) -> list[Rule]:
    return [g for r in spec.rules_for(op) for g in ground_rule(spec, r)]


# --------------------------------------------------------------------------
# format classification


def _is_flat(t: Term) -> bool:
    return isinstance(t, Var) or all(isinstance(a, Var) for a in t.args)


def classify_rule(spec: Spec, rule: Rule) -> frozenset[str]:
    formats = set()
    args = set(rule.arg_vars)
    if all(p.source in args for p in rule.premises):
        if spec.behavior == "stream":
            srcs = [p.source for p in rule.positives]
            if len(srcs) == len(set(srcs)):
                formats.add(GSOS)
        else:
            formats.add(GSOS)
    if _is_chained(rule) and _is_flat(rule.concl_target):
        formats.add(COGSOS)
    return frozenset(formats)


def _is_chained(rule: Rule) -> bool:
    scope = set(rule.arg_vars)
    for p in rule.premises:
        if p.source not in scope:
            return False
        if isinstance(p, Pos):
            scope.add(p.target)
    return True


@dataclass
class Diagnostic:
    level: str
    code: str
    message: str
    op: str | None = None

    def to_json(self) -> dict:
        return {"level": self.level, "code": self.code, "message": self.message, "op": self.op}

    def __str__(self) -> str:
        where = f" [{self.op}]" if self.op else ""
        return f"{self.level}: {self.code}{where}: {self.message}"


@dataclass
class FormatReport:
    verdict: str
    per_rule: list[frozenset[str]]
    per_op: dict[str, str | None]
    diagnostics: list[Diagnostic] = field(default_factory=list)
    rules: list[str] = field(default_factory=list)

    @property
    def mixed_gsos(self) -> bool:
        """True for every spec in the mixed-GSOS class, pure ones included."""
        return self.verdict in (GSOS, COGSOS, "mixed-GSOS")

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "per_rule": [
                {"rule": text, "formats": sorted(fmts)} for text, fmts in zip(self.rules, self.per_rule)
            ],
            "per_op": self.per_op,
            "diagnostics": [d.to_json() for d in self.diagnostics],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False)


def classify_spec(spec: Spec) -> FormatReport:
    """Place the spec in GSOS / coGSOS / mixed-GSOS / biGSOS-only.

    Each operation is assigned ``coGSOS`` when all its rules allow it and
    ``GSOS`` otherwise; the verdict is the common class if there is one and
    ``mixed-GSOS`` if not.  A spec whose rules all fit both formats is
    reported as ``GSOS``.
    """
    try:
        spec = validate_spec(spec)
    except SpecError as e:
        return FormatReport("ill-formed", [], {}, [Diagnostic("error", "invalid", str(e))])

    per_rule = [classify_rule(spec, r) for r in spec.rules]
    rules_text = [str(r) for r in spec.rules]
    diags: list[Diagnostic] = []
    for r, f in zip(spec.rules, per_rule):
        if not f:
            diags.append(Diagnostic("info", "biGSOS-rule", f"rule {r} combines lookahead with a non-flat target", r.head_op))

    ops = [name for name in spec.signature.names if spec.rules_for(name)]
    allowed: dict[str, set[str]] = {}
    for op in ops:
        sets = [f for r, f in zip(spec.rules, per_rule) if r.head_op == op]
        allowed[op] = set.intersection(*(set(s) for s in sets))

    if all(f == {GSOS, COGSOS} for f in per_rule):
        verdict = GSOS
        per_op = {op: GSOS for op in ops}
    elif all(allowed[op] for op in ops):
        per_op = {op: (COGSOS if COGSOS in allowed[op] else GSOS) for op in ops}
        classes = set(per_op.values())
        verdict = classes.pop() if len(classes) == 1 else "mixed-GSOS"
    else:
        verdict = "biGSOS-only"
        per_op = {op: (COGSOS if COGSOS in allowed[op] else GSOS if allowed[op] else None) for op in ops}
        for op in ops:
            if not allowed[op]:
                diags.append(Diagnostic("info", "no-uniform-class", "rules of this operation share no format", op))
    for name in spec.signature.names:
        per_op.setdefault(name, None)
    return FormatReport(verdict, per_rule, per_op, diags, rules_text)


# --------------------------------------------------------------------------
# functionality


def op_lookahead(spec: Spec, op: str) -> list[int]:
    """Per-argument maximal lookahead depth over the rules of ``op``."""
    k = spec.signature.arity(op)
    out = [0] * k
    for r in spec.rules_for(op):
        la = r.lookahead()
        for i, v in enumerate(r.arg_vars):
            out[i] = max(out[i], la[v])
    return out


def _chain_labels(rule: Rule) -> dict[str, list[str]]:
    """For a ground stream rule, the label word each argument must begin with."""
    word: dict[str, list[str]] = {v: [] for v in rule.arg_vars}
    root = {v: v for v in rule.arg_vars}
    for p in rule.positives:
        assert isinstance(p.label, Lit)
        root[p.target] = root[p.source]
        word[root[p.source]].append(p.label.letter)
    return word


def check_functionality(spec: Spec) -> list[Diagnostic]:
    spec = validate_spec(spec)
    diags: list[Diagnostic] = []
    for op in spec.signature.names:
        rules = ground_rules(spec, op)
        if spec.behavior == "lts":
            diags.extend(_lts_overlap(spec, op, rules))
            continue
        depths = op_lookahead(spec, op)
        mixed = {tuple(r.lookahead()[v] for v in r.arg_vars) for r in spec.rules_for(op)}
        if len(mixed) > 1:
            diags.append(Diagnostic("info", "mixed-lookahead", f"rules use lookahead depths {sorted(mixed)}; checked at {depths}", op))
        words = [_chain_labels(r) for r in rules]
        missing = []
        overlap = []
        pools = [list(itertools.product(spec.alphabet, repeat=d)) for d in depths]
        for pattern in itertools.product(*pools):
            hits = []
            for r, w in zip(rules, words):
                if all(tuple(w[v]) == pattern[i][: len(w[v])] for i, v in enumerate(r.arg_vars)):
                    hits.append(r)
            shown = " ".join("".join(p) or "-" for p in pattern) if pattern else "()"
            if not hits:
                missing.append(shown)
            elif len({(str(r.concl_label), r.concl_target) for r in hits}) > 1:
                overlap.append(shown)
        for m in missing:
            diags.append(Diagnostic("error", "missing-pattern", f"no rule for argument labels {m}", op))
        for o in overlap:
            diags.append(Diagnostic("error", "overlap", f"several rules with different conclusions for argument labels {o}", op))
    return diags


def _lts_overlap(spec: Spec, op: str, rules: list[Rule]) -> Iterator[Diagnostic]:
    heads = {}
    for r in rules:
        key = tuple((str(p)) for p in r.premises)
        heads.setdefault(key, set()).add((str(r.concl_label), r.concl_target))
    n = sum(1 for v in heads.values() if len(v) > 1)
    if n:
        yield Diagnostic("info", "nondeterminism", f"{n} premise pattern(s) with several conclusions", op)


def spec_max_target_depth(spec: Spec) -> int:
    return max((depth(r.concl_target) for r in spec.rules), default=0)
