"""Bounded construction of distributive-law prefixes from rule specifications.

For a stream specification every term ``t`` has an *entry*: the first
transition ``t -a-> t'`` of the stream it denotes.  Entries of compound terms
are obtained by applying the rules to the streams of the arguments, and the
stream of a term is read off by chasing entries.  Entries are computed on
demand.  When the computation of an entry needs that same entry (a rule
looks ahead through the term itself) the engine hands out a placeholder made
of a label metavariable and a term metavariable, and unifies the placeholder
with the derived entry once it is known.  An occurs-check failure there is an
equation ``t' = Context[t']`` without finite solution; placeholders left
unbound mean the rules do not force the entry.

LTS specifications use successor *sets*.  A term whose successor set depends
on itself is settled by trying the empty set and a generic nonempty set (see
``_LtsSession._cycle``).
"""
from __future__ import annotations

import functools
import itertools
import json
import sys
import threading
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, Mapping, Union

from .behavior import StreamPrefix, TreePrefix, tree_canon
from .rules import Lit, LVar, NegAll, NegLabel, Pos, Rule, Spec, SpecError, ground_rule, op_lookahead, validate_spec
from .terms import App, Term, Var, closed_terms, subst

DEFAULT_FUEL = 10_000

Entry = tuple  # (label, successor) for streams, frozenset of those for LTSs


class EngineError(ValueError):
    pass


class InsufficientLookahead(EngineError):
    pass


# --------------------------------------------------------------------------
# base streams


@dataclass(frozen=True)
class BaseStreamEnv:
    """Named eventually periodic label streams.

    The node at position ``k`` of stream ``x`` is the variable ``x.k`` (the
    ``k``-th tail of ``x``), so terms over ``x.0, y.0, ...`` stand for
    operations applied to these streams.
    """

    streams: Mapping[str, tuple[tuple[str, ...], tuple[str, ...]]]

    def __post_init__(self) -> None:
        fixed = {}
        for name, (pre, loop) in dict(self.streams).items():
            if not loop:
                raise EngineError(f"stream {name!r} has an empty loop")
            if "." in name:
                raise EngineError(f"stream name {name!r} may not contain '.'")
            fixed[name] = (tuple(pre), tuple(loop))
        object.__setattr__(self, "streams", fixed)

    def label(self, name: str, k: int) -> str:
        try:
            pre, loop = self.streams[name]
        except KeyError:
            raise EngineError(f"unknown base stream {name!r}") from None
        return pre[k] if k < len(pre) else loop[(k - len(pre)) % len(loop)]

    @staticmethod
    def color(name: str, k: int = 0) -> Var:
        return Var(f"{name}.{k}")

    def prefix(self, name: str, n: int) -> StreamPrefix:
        return StreamPrefix.from_nodes(
            [self.color(name, k) for k in range(n + 1)], [self.label(name, k) for k in range(n)]
        )

    def renamed(self, mapping: Mapping[str, str]) -> BaseStreamEnv:
        return BaseStreamEnv({mapping.get(n, n): v for n, v in self.streams.items()})

    @classmethod
    def parse(cls, bindings: Iterable[str], alphabet: Iterable[str]) -> BaseStreamEnv:
        """Read ``name=PREFIX:LOOP`` bindings.  Words are split on commas if
        any are present and into single characters otherwise."""
        letters = set(alphabet)
        out = {}
        for b in bindings:
            name, sep, body = b.partition("=")
            if not sep:
                raise EngineError(f"expected name=PREFIX:LOOP, got {b!r}")
            pre_text, sep, loop_text = body.rpartition(":")
            if not sep:
                pre_text, loop_text = "", body
            pre, loop = _word(pre_text), _word(loop_text)
            for a in pre + loop:
                if a not in letters:
                    raise EngineError(f"letter {a!r} of stream {name!r} is not in the alphabet")
            out[name.strip()] = (pre, loop)
        return cls(out)

    @classmethod
    def default(cls, alphabet: Iterable[str]) -> BaseStreamEnv:
        """A few generic streams: the alphabet cycled forwards and
        backwards, and the first letter forever."""
        a = tuple(alphabet)
        return cls({"x": ((), a), "y": ((), tuple(reversed(a))), "z": ((), a[:1])})


def _word(text: str) -> tuple[str, ...]:
    text = text.strip()
    if not text:
        return ()
    if "," in text:
        return tuple(s.strip() for s in text.split(","))
    return tuple(text)


def _split_color(name: str) -> tuple[str, int]:
    base, dot, k = name.rpartition(".")
    if not dot or not k.isdigit():
        raise EngineError(f"variable {name!r} does not name a base stream position (expected NAME.K)")
    return base, int(k)


# --------------------------------------------------------------------------
# witnesses and verdicts

UNKNOWN = "τ"
UNKNOWN_LABEL = "α"


@dataclass
class TraceStep:
    """One rule application: rule index, the instantiation of its
    variables and the transition it yields."""

    rule: int
    instantiation: dict[str, Any]
    term: Term
    label: str
    successor: Term

    def to_json(self) -> dict:
        return {
            "rule": self.rule,
            "instantiation": {k: str(v) for k, v in self.instantiation.items()},
            "entry": [str(self.term), self.label, str(self.successor)],
        }


@dataclass
class Witness:
    """Evidence that no distributive law extends the rules.

    ``OccursCheck``: the derivation in ``step`` makes the unknown successor
    ``τ`` of ``term`` equal to ``equation[1]``, a term properly containing
    ``τ``.  ``EmptyNonemptyClash``: ``step`` derives a transition of ``term``
    when its successor set is assumed empty, while ``nonempty`` lists every
    derivation available when it is assumed nonempty, each producing a
    successor that strictly contains the generic one.  ``CaseSplit`` collects
    one witness per choice of the unknown label.  ``LabelClash`` and
    ``NoRule`` are the remaining stream contradictions.
    """

    kind: str
    term: Term
    position: int | None = None
    equation: tuple[Term, Term] | None = None
    step: TraceStep | None = None
    trace: list[TraceStep] = field(default_factory=list)
    cases: list[tuple[str, Witness]] = field(default_factory=list)
    nonempty: list[TraceStep] = field(default_factory=list)
    assumed_label: str | None = None

    @property
    def unknown(self) -> str:
        return UNKNOWN if self.position is None else f"{UNKNOWN}{self.position}"

    def equation_text(self) -> str | None:
        if self.equation is None:
            return None
        ren = {UNKNOWN: Var(self.unknown)}
        lhs, rhs = self.equation
        return f"{subst(lhs, ren, strict=False)} = {subst(rhs, ren, strict=False)}"

    def to_json(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind, "term": str(self.term), "position": self.position}
        if self.equation is not None:
            out["equation"] = self.equation_text()
        if self.step is not None:
            out["step"] = self.step.to_json()
        if self.assumed_label is not None:
            out["assumed_label"] = self.assumed_label
        out["trace"] = [s.to_json() for s in self.trace]
        if self.cases:
            out["cases"] = [{"letter": a, "witness": w.to_json()} for a, w in self.cases]
        if self.nonempty:
            out["nonempty"] = [s.to_json() for s in self.nonempty]
        return out

    def __str__(self) -> str:
        where = f" at position {self.position}" if self.position is not None else ""
        if self.kind == "OccursCheck" and self.equation is not None:
            return f"OccursCheck{where}: {self.equation_text()}"
        if self.kind == "EmptyNonemptyClash":
            return f"EmptyNonemptyClash{where}: {self.term} can have neither no successors nor some"
        if self.cases:
            inner = "; ".join(f"{a}: {w}" for a, w in self.cases)
            return f"{self.kind}{where} on the next label of {self.term} ({inner})"
        return f"{self.kind}{where} at {self.term}"


@dataclass
class ConsistentPrefix:
    prefixes: dict[Term, StreamPrefix | TreePrefix]
    depth: int
    entries: dict[Term, Entry]
    behavior: str = "stream"
    axioms: dict | None = None
    name = "ConsistentPrefix"

    def to_json(self) -> dict:
        def show(p):
            return str(p) if isinstance(p, StreamPrefix) else _tree_json(p)

        return {
            "verdict": self.name,
            "depth": self.depth,
            "witness": None,
            "prefixes": {str(t): show(p) for t, p in self.prefixes.items()},
            "axioms": self.axioms or {},
        }


@dataclass
class NoExtension:
    witness: Witness
    name = "NoExtension"

    def to_json(self) -> dict:
        return {"verdict": self.name, "depth": self.witness.position, "witness": self.witness.to_json(), "prefixes": {}, "axioms": {}}


@dataclass
class Ambiguous:
    term: Term | None
    position: int | None
    reason: str
    name = "Ambiguous"

    def to_json(self) -> dict:
        w = {"term": None if self.term is None else str(self.term), "position": self.position, "reason": self.reason}
        return {"verdict": self.name, "depth": self.position, "witness": w, "prefixes": {}, "axioms": {}}


@dataclass
class Unknown:
    spent: int
    reason: str = "fuel exhausted"
    name = "Unknown"

    def to_json(self) -> dict:
        return {"verdict": self.name, "depth": None, "witness": {"spent": self.spent, "reason": self.reason}, "prefixes": {}, "axioms": {}}


Verdict = Union[ConsistentPrefix, NoExtension, Ambiguous, Unknown]


def dumps(v: Verdict) -> str:
    return json.dumps(v.to_json(), indent=2, ensure_ascii=False)


def _tree_json(t: TreePrefix) -> dict:
    return {"node": str(t.node), "depth": t.depth, "children": [[a, _tree_json(s)] for a, s in t.children]}


# --------------------------------------------------------------------------
# control flow inside a session


class _Fail(Exception):
    pass


class _OutOfFuel(_Fail):
    pass


class _Contradiction(_Fail):
    def __init__(self, witness: Witness):
        super().__init__(witness.kind)
        self.witness = witness


class _Unforced(_Fail):
    def __init__(self, term: Term | None, reason: str):
        super().__init__(reason)
        self.term = term
        self.reason = reason


class _NeedChoice(_Fail):
    def __init__(self, meta: str):
        super().__init__(meta)
        self.meta = meta


class _NeedHypothesis(_Fail):
    def __init__(self, term: Term):
        super().__init__(str(term))
        self.term = term


class _Inconclusive(_Fail):
    pass


class _Mismatch(Exception):
    pass


class _Occurs(Exception):
    pass


@contextmanager
def _deep_recursion(limit: int = 200_000) -> Iterator[None]:
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, limit))
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


_BIG_STACK = 1 << 30
_deep_local = threading.local()


def _big_stack(fn: Callable) -> Callable:
    """Run ``fn`` on a thread with a large C stack.

    Terms and prefixes thousands of levels deep are walked recursively, which
    overflows the default stack long before the recursion limit is reached.
    """

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        if getattr(_deep_local, "active", False):
            return fn(*args, **kwargs)
        box: dict[str, Any] = {}

        def run() -> None:
            _deep_local.active = True
            try:
                box["value"] = fn(*args, **kwargs)
            except BaseException as e:  # re-raised in the caller
                box["error"] = e

        with _STACK_LOCK:
            old = threading.stack_size(_BIG_STACK)
            try:
                th = threading.Thread(target=run, name=f"bigsos-{fn.__name__}")
                th.start()
            finally:
                threading.stack_size(old)
        th.join()
        if "error" in box:
            raise box["error"]
        return box["value"]

    return wrapper


_STACK_LOCK = threading.Lock()


def _is_meta(x: Any) -> bool:
    if isinstance(x, Var):
        return x.name.startswith("?")
    return isinstance(x, str) and x.startswith("?")


class _Session:
    """Trail-based undo log shared by both session kinds."""

    def __init__(self, spec: Spec, fuel: int):
        self.spec = spec
        self.fuel = fuel
        self.spent = 0
        self.trail: list[tuple[dict, Any]] = []

    def _tick(self) -> None:
        self.spent += 1
        if self.spent > self.fuel:
            raise _OutOfFuel()

    def _set(self, d: dict, key: Any, value: Any) -> None:
        self.trail.append((d, key))
        d[key] = value

    def _mark(self) -> int:
        return len(self.trail)

    def _undo(self, mark: int) -> None:
        while len(self.trail) > mark:
            d, key = self.trail.pop()
            del d[key]


# --------------------------------------------------------------------------
# streams


class _StreamSession(_Session):
    def __init__(self, spec: Spec, labels_of: Callable[[str, int], str] | None = None, fuel: int = DEFAULT_FUEL):
        super().__init__(spec, fuel)
        self.labels_of = labels_of
        self.entries: dict[Term, tuple[str, Term]] = {}
        self.steps: dict[Term, TraceStep] = {}
        self.sources: dict[Term, tuple[Term, ...]] = {}
        self.bind: dict[str, Any] = {}
        self.active: dict[Term, tuple[str, Var] | None] = {}
        self.choice: dict[Term, str] = {}
        self.meta_ids: dict[Term, int] = {}
        self.owner: dict[str, Term] = {}
        self.ground: dict[Term, bool] = {}
        self.rules: dict[str, list[tuple[int, Rule]]] = {}
        for i, r in enumerate(spec.rules):
            self.rules.setdefault(r.head_op, []).append((i, r))

    # metavariables -------------------------------------------------------

    def _placeholder(self, t: Term) -> tuple[str, Var]:
        i = self.meta_ids.setdefault(t, len(self.meta_ids))
        lab, var = f"?L{i}", Var(f"?Z{i}")
        self.owner[lab] = t
        self.owner[var.name] = t
        return lab, var

    def _is_ground(self, t: Term) -> bool:
        g = self.ground.get(t)
        if g is None:
            g = not _is_meta(t) if isinstance(t, Var) else all(self._is_ground(a) for a in t.args)
            self.ground[t] = g
        return g

    def walk_label(self, a: str) -> str:
        while a in self.bind:
            a = self.bind[a]
        return a

    def _walk(self, t: Term) -> Term:
        while isinstance(t, Var) and t.name in self.bind:
            t = self.bind[t.name]
        return t

    def resolve(self, t: Term) -> Term:
        if self._is_ground(t):
            return t
        t = self._walk(t)
        if isinstance(t, Var):
            return t
        return App(t.op, tuple(self.resolve(a) for a in t.args))

    def _unify(self, a: Term, b: Term) -> None:
        a, b = self._walk(a), self._walk(b)
        if a == b:
            return
        if _is_meta(a):
            self._bind_var(a, b)
        elif _is_meta(b):
            self._bind_var(b, a)
        elif isinstance(a, App) and isinstance(b, App) and a.op == b.op and len(a.args) == len(b.args):
            for x, y in zip(a.args, b.args):
                self._unify(x, y)
        else:
            raise _Mismatch()

    def _bind_var(self, v: Var, t: Term) -> None:
        t = self.resolve(t)
        if _mentions(t, v.name):
            raise _Occurs()
        self._set(self.bind, v.name, t)

    def _unify_label(self, a: str, b: str) -> bool:
        a, b = self.walk_label(a), self.walk_label(b)
        if a == b:
            return True
        if _is_meta(a):
            self._set(self.bind, a, b)
            return True
        if _is_meta(b):
            self._set(self.bind, b, a)
            return True
        return False

    # forcing --------------------------------------------------------------

    def force(self, t: Term) -> tuple[str, Term]:
        e = self.entries.get(t)
        if e is not None:
            return e
        if isinstance(t, Var):
            if _is_meta(t):
                raise _Unforced(self.owner.get(t.name), "a successor of an undetermined entry is demanded")
            return self._base(t)
        if t in self.active:
            ph = self.active[t]
            if ph is None:
                ph = self._placeholder(t)
                self.active[t] = ph
                if t in self.choice:
                    self._set(self.bind, ph[0], self.choice[t])
            return ph
        if not self._is_ground(t):
            raise _Unforced(None, f"the entry of {t} depends on undetermined terms")
        self._tick()
        mark = self._mark()
        self.active[t] = None
        try:
            return self._complete(t)
        except _NeedChoice as e:
            if self.owner.get(e.meta) != t:
                raise
            self._undo(mark)
            return self._branch(t, mark)
        finally:
            self.active.pop(t, None)

    def _base(self, t: Var) -> tuple[str, Term]:
        if self.labels_of is None:
            raise EngineError(f"free variable {t.name!r} but no base streams were given")
        name, k = _split_color(t.name)
        e = (self.labels_of(name, k), Var(f"{name}.{k + 1}"))
        self._set(self.entries, t, e)
        return e

    def _complete(self, t: App) -> tuple[str, Term]:
        self.active[t] = None
        label, succ, step, sources = self._derive(t)
        ph = self.active[t]
        if ph is not None:
            plab, pvar = ph
            try:
                self._unify(pvar, succ)
            except _Occurs:
                rhs = self.resolve(succ)
                raise _Contradiction(self._witness("OccursCheck", t, step, sources, equation=(pvar, rhs))) from None
            except _Mismatch:
                raise _Contradiction(self._witness("TermClash", t, step, sources)) from None
            if not self._unify_label(plab, label):
                raise _Contradiction(self._witness("LabelClash", t, step, sources))
            label, succ = self.walk_label(plab), self.resolve(pvar)
            if _is_meta(label) and self.owner.get(label) == t:
                raise _Unforced(t, "the label after this term is not forced by any rule")
            if _mentions(succ, pvar.name):
                raise _Unforced(t, "the successor of this term is not forced by any rule")
            if not self._is_ground(succ) and any(self.owner.get(v) == t for v in _metas(succ)):
                raise _Unforced(t, "the successor of this term is not forced by any rule")
        entry = (label, succ)
        self._set(self.entries, t, entry)
        self._set(self.steps, t, step)
        self._set(self.sources, t, sources)
        return entry

    def _derive(self, t: App) -> tuple[str, Term, TraceStep, tuple[Term, ...]]:
        hits = []
        for idx, rule in self.rules.get(t.op, ()):
            m = self._match(rule, t.args)
            if m is not None:
                hits.append((idx, rule, *m))
        if not hits:
            raise _Contradiction(Witness("NoRule", t, trace=self._trace(())))
        concl = []
        for idx, rule, venv, lenv, sources in hits:
            if isinstance(rule.concl_label, Lit):
                label = rule.concl_label.letter
            elif rule.concl_label.name in lenv:
                label = lenv[rule.concl_label.name]
            else:
                raise _Unforced(t, f"rule {idx} leaves its conclusion label open")
            succ = subst(rule.concl_target, venv)
            inst = {**venv, **lenv}
            concl.append((label, succ, TraceStep(idx, inst, t, label, succ), sources))
        distinct = {(self.walk_label(c[0]), self.resolve(c[1])) for c in concl}
        if len(distinct) > 1:
            raise _Unforced(t, "several rules apply with different conclusions (the specification is not functional)")
        return concl[0]

    def _match(self, rule: Rule, args: tuple[Term, ...]):
        venv: dict[str, Term] = dict(zip(rule.arg_vars, args))
        lenv: dict[str, str] = {}
        sources = []
        for p in rule.premises:
            src = self.resolve(venv[p.source])
            sources.append(src)
            lab, succ = self.force(src)
            lab = self.walk_label(lab)
            if isinstance(p.label, LVar) and p.label.name not in lenv:
                lenv[p.label.name] = lab
                venv[p.target] = succ
                continue
            want = p.label.letter if isinstance(p.label, Lit) else self.walk_label(lenv[p.label.name])
            if lab != want:
                if _is_meta(lab) and _is_meta(want):
                    self._unify_label(lab, want)
                elif _is_meta(lab):
                    raise _NeedChoice(lab)
                elif _is_meta(want):
                    raise _NeedChoice(want)
                else:
                    return None
            venv[p.target] = succ
        return venv, lenv, tuple(sources)

    def _branch(self, t: App, mark: int) -> tuple[str, Term]:
        outcomes: list[tuple[str, str, Any]] = []
        for a in self.spec.alphabet:
            self.choice[t] = a
            try:
                self._complete(t)
                outcomes.append((a, "ok", None))
            except _Contradiction as c:
                outcomes.append((a, "no", c.witness))
            except _Unforced as u:
                outcomes.append((a, "open", u))
            finally:
                self._undo(mark)
                self.choice.pop(t, None)
        ok = [a for a, s, _ in outcomes if s == "ok"]
        open_ = [a for a, s, _ in outcomes if s == "open"]
        if len(ok) == 1 and not open_:
            self.choice[t] = ok[0]
            try:
                return self._complete(t)
            finally:
                self.choice.pop(t, None)
        if not ok and not open_:
            cases = [(a, w) for a, _, w in outcomes]
            kinds = {w.kind for _, w in cases}
            kind = "OccursCheck" if kinds == {"OccursCheck"} else "CaseSplit"
            w = Witness(kind, t, cases=cases, trace=cases[0][1].trace)
            if kind == "OccursCheck":
                # shared shape of the case equations is reported on the cases
                pass
            raise _Contradiction(w)
        if len(ok) > 1:
            raise _Unforced(t, f"several labels after this term are consistent: {', '.join(ok)}")
        raise _Unforced(t, f"the label after this term is undetermined for {', '.join(open_)}")

    # witnesses ------------------------------------------------------------

    def _render(self, x: Any, t: Term) -> Any:
        """Show the placeholder of ``t`` as ``τ``/``α``."""
        i = self.meta_ids.get(t)
        if isinstance(x, str):
            x = self.walk_label(x)
            return UNKNOWN_LABEL if i is not None and x == f"?L{i}" else x
        x = self.resolve(x)
        if i is None:
            return x
        return subst(x, {f"?Z{i}": Var(UNKNOWN)}, strict=False)

    def _witness(self, kind: str, t: App, step: TraceStep, sources: tuple[Term, ...], equation=None) -> Witness:
        shown = TraceStep(
            step.rule,
            {k: self._render(v, t) for k, v in step.instantiation.items()},
            t,
            self._render(step.label, t),
            self._render(step.successor, t),
        )
        eq = None
        if equation is not None:
            eq = (Var(UNKNOWN), self._render(equation[1], t))
        assumed = None
        ph = self.active.get(t)
        if ph is not None:
            assumed = self._render(ph[0], t)
        return Witness(kind, t, equation=eq, step=shown, trace=self._trace(sources), assumed_label=assumed)

    def _trace(self, roots: Iterable[Term]) -> list[TraceStep]:
        need: set[Term] = set()
        stack = list(roots)
        while stack:
            s = stack.pop()
            if s in need or s not in self.steps:
                continue
            need.add(s)
            stack.extend(self.sources.get(s, ()))
        out = []
        for s, step in self.steps.items():
            if s in need:
                out.append(
                    TraceStep(
                        step.rule,
                        {k: self.resolve(v) if not isinstance(v, str) else self.walk_label(v) for k, v in step.instantiation.items()},
                        step.term,
                        self.walk_label(step.label),
                        self.resolve(step.successor),
                    )
                )
        return out

    # unfolding ------------------------------------------------------------

    def unfold(self, seed: Term, n: int) -> StreamPrefix | Verdict:
        nodes = [seed]
        labels: list[str] = []
        cur = seed
        for i in range(n):
            try:
                lab, succ = self.force(cur)
            except _Contradiction as c:
                w = c.witness
                if w.term == cur:
                    _set_position(w, i + 1)
                return NoExtension(w)
            except _Unforced as u:
                term = u.term if u.term is not None else cur
                return Ambiguous(term, i + 1 if term == cur else None, u.reason)
            except _OutOfFuel:
                return Unknown(self.spent)
            labels.append(self.walk_label(lab))
            cur = self.resolve(succ)
            nodes.append(cur)
        return StreamPrefix.from_nodes(nodes, labels)

    def table(self) -> dict[Term, tuple[str, Term]]:
        out = {}
        for t, (lab, succ) in self.entries.items():
            lab, succ = self.walk_label(lab), self.resolve(succ)
            if not _is_meta(lab) and self._is_ground(succ):
                out[t] = (lab, succ)
        return out


def _set_position(w: Witness, pos: int) -> None:
    w.position = pos
    for _, sub in w.cases:
        if sub.term == w.term:
            _set_position(sub, pos)


def _mentions(t: Term, name: str) -> bool:
    if isinstance(t, Var):
        return t.name == name
    return any(_mentions(a, name) for a in t.args)


def _metas(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name} if _is_meta(t) else set()
    out: set[str] = set()
    for a in t.args:
        out |= _metas(a)
    return out


# --------------------------------------------------------------------------
# LTSs

_GL = "?L"
_GZ = Var("?Z")
GENERIC = object()


class _LtsSession(_Session):
    def __init__(self, spec: Spec, fuel: int = DEFAULT_FUEL, closure_cap: int = 16):
        super().__init__(spec, fuel)
        self.closure_cap = closure_cap
        self.entries: dict[Term, frozenset] = {}
        self.steps: dict[Term, list[TraceStep]] = {}
        self.sources: dict[Term, tuple[Term, ...]] = {}
        self.active: set[Term] = set()
        self.hyp: dict[Term, Any] = {}
        self.closed: dict[Term, bool] = {}
        self.rules: dict[str, list[tuple[int, Rule]]] = {}
        for i, r in enumerate(spec.rules):
            for g in ground_rule(spec, r):
                self.rules.setdefault(r.head_op, []).append((i, g))

    def succs(self, t: Term):
        if t in self.hyp:
            return self.hyp[t]
        if not self._is_closed(t):
            if _mentions_any_meta(t):
                raise _Inconclusive("lookahead through a generic successor")
            raise EngineError(f"LTS terms must be closed, got {t}")
        return self.force(t)

    def _is_closed(self, t: Term) -> bool:
        c = self.closed.get(t)
        if c is None:
            c = isinstance(t, App) and all(self._is_closed(a) for a in t.args)
            self.closed[t] = c
        return c

    def force(self, t: Term) -> frozenset:
        e = self.entries.get(t)
        if e is not None:
            return e
        if t in self.active:
            raise _NeedHypothesis(t)
        self._tick()
        mark = self._mark()
        self.active.add(t)
        try:
            try:
                derived = self._derive_all(t)
            except _NeedHypothesis as h:
                if h.term != t:
                    raise
                self._undo(mark)
                derived = self._cycle(t)
        finally:
            self.active.discard(t)
        s = frozenset((step.label, step.successor) for step, _ in derived)
        self._set(self.entries, t, s)
        self._set(self.steps, t, [step for step, _ in derived])
        self._set(self.sources, t, tuple(x for _, srcs in derived for x in srcs))
        return s

    def _derive_all(self, t: App) -> list[tuple[TraceStep, tuple[Term, ...]]]:
        out = []
        seen = set()
        for idx, rule in self.rules.get(t.op, ()):
            for venv, sources in self._matches(rule, 0, dict(zip(rule.arg_vars, t.args)), ()):
                label = rule.concl_label.letter
                succ = subst(rule.concl_target, venv)
                if (label, succ) in seen:
                    continue
                seen.add((label, succ))
                out.append((TraceStep(idx, dict(venv), t, label, succ), sources))
        return out

    def _matches(self, rule: Rule, i: int, venv: dict, sources: tuple) -> Iterator[tuple[dict, tuple]]:
        if i == len(rule.premises):
            yield venv, sources
            return
        p = rule.premises[i]
        src = venv[p.source]
        s = self.succs(src)
        sources = sources + (src,)
        if s is GENERIC:
            if isinstance(p, Pos):
                yield from self._matches(rule, i + 1, {**venv, p.target: _GZ}, sources)
            elif isinstance(p, NegLabel):
                raise _Inconclusive("negative premise on a label of a generic successor set")
            return
        if isinstance(p, Pos):
            for a, u in _edges(s):
                if a == p.label.letter:
                    yield from self._matches(rule, i + 1, {**venv, p.target: u}, sources)
        elif isinstance(p, NegLabel):
            if all(a != p.label.letter for a, _ in s):
                yield from self._matches(rule, i + 1, venv, sources)
        elif isinstance(p, NegAll):
            if not s:
                yield from self._matches(rule, i + 1, venv, sources)

    def _under(self, t: Term, assumption: Any) -> list[tuple[TraceStep, tuple[Term, ...]]]:
        mark = self._mark()
        self.hyp[t] = assumption
        try:
            return self._derive_all(t)
        finally:
            self._undo(mark)
            del self.hyp[t]

    def _cycle(self, t: App) -> list[tuple[TraceStep, tuple[Term, ...]]]:
        """Settle a successor set that depends on itself.

        Assuming it empty must derive nothing.  Assuming it nonempty, a
        generic successor ``?Z`` stands for an element of minimal nesting
        depth: if every derivation then needs ``?Z`` and wraps it in a
        nonempty context, no finite nonempty set is supported.
        """
        empty = self._under(t, frozenset())
        empty_ok = not empty
        reason = None
        try:
            generic = self._under(t, GENERIC)
        except _Inconclusive as e:
            generic, reason = None, str(e)
        nonempty_ok = None
        chosen = None
        if generic is not None:
            concrete = [d for d in generic if not _mentions(d[0].successor, _GZ.name)]
            dependent = [d for d in generic if _mentions(d[0].successor, _GZ.name)]
            if any(d[0].successor == _GZ for d in dependent):
                reason = "a rule copies a successor of this term unchanged"
            elif not concrete:
                nonempty_ok = False
            else:
                current = frozenset((d[0].label, d[0].successor) for d in concrete)
                for _ in range(self.closure_cap):
                    derived = self._under(t, current)
                    nxt = frozenset((d[0].label, d[0].successor) for d in derived)
                    if nxt == current:
                        nonempty_ok, chosen = True, derived
                        break
                    if not nxt >= current:
                        reason = "successor sets do not grow monotonically"
                        break
                    current = nxt
                else:
                    reason = "successor closure did not stabilize"
        if nonempty_ok is False and not empty_ok:
            raise _Contradiction(
                Witness(
                    "EmptyNonemptyClash",
                    t,
                    step=empty[0][0],
                    trace=self._trace(tuple(x for _, srcs in empty + generic for x in srcs)),
                    nonempty=[d[0] for d in generic],
                )
            )
        if nonempty_ok is None:
            raise _Unforced(t, reason or "undetermined successor set")
        if empty_ok and nonempty_ok:
            raise _Unforced(t, "both an empty and a nonempty successor set are supported")
        return [] if empty_ok else chosen

    def _trace(self, roots: Iterable[Term]) -> list[TraceStep]:
        need: set[Term] = set()
        stack = list(roots)
        while stack:
            s = stack.pop()
            if s in need or s not in self.steps:
                continue
            need.add(s)
            stack.extend(self.sources.get(s, ()))
        return [step for s, steps in self.steps.items() if s in need for step in steps]

    def unfold(self, seed: Term, depth: int) -> TreePrefix | Verdict:
        level = [seed]
        seen = {seed}
        for d in range(depth):
            nxt = []
            for t in level:
                try:
                    s = self.force(t)
                except _Contradiction as c:
                    w = c.witness
                    if w.term == t:
                        w.position = d + 1
                    return NoExtension(w)
                except _Unforced as u:
                    term = u.term if u.term is not None else t
                    return Ambiguous(term, d + 1 if term == t else None, u.reason)
                except _Inconclusive as e:
                    return Ambiguous(t, d + 1, str(e))
                except _OutOfFuel:
                    return Unknown(self.spent)
                for _, u in _edges(s):
                    if u not in seen:
                        seen.add(u)
                        nxt.append(u)
            level = nxt
        return _tree_from(self.entries, seed, depth)

    def table(self) -> dict[Term, frozenset]:
        return dict(self.entries)


def _vars_iter(t: Term) -> Iterator[Term]:
    stack = [t]
    while stack:
        s = stack.pop()
        if isinstance(s, Var):
            yield s
        else:
            stack.extend(s.args)


def _mentions_any_meta(t: Term) -> bool:
    return any(_is_meta(v) for v in _vars_iter(t))


def _edge_key(e: tuple[str, Term]) -> tuple[str, str]:
    return (e[0], str(e[1]))


def _edges(s: Iterable[tuple[str, Term]]) -> list[tuple[str, Term]]:
    s = list(s)
    return sorted(s, key=_edge_key) if len(s) > 1 else s


def _tree_from(entries: Mapping[Term, frozenset], t: Term, d: int) -> TreePrefix:
    if d == 0:
        return TreePrefix(t, (), 0)
    kids = tuple((a, _tree_from(entries, u, d - 1)) for a, u in _edges(entries[t]))
    return TreePrefix(t, kids, d)


# --------------------------------------------------------------------------
# one application of the rules


def one_step_rho(spec: Spec, op: str, args: list[StreamPrefix | TreePrefix]) -> set[tuple[str, Term]]:
    """Apply the rules for ``op`` once to the given argument behaviors.

    Premise chains walk along the supplied prefixes or trees; conclusion
    targets are instantiated with the node colors reached.
    """
    k = spec.signature.arity(op)
    if len(args) != k:
        raise EngineError(f"{op} expects {k} arguments, got {len(args)}")
    out: set[tuple[str, Term]] = set()
    for r in spec.rules_for(op):
        for g in ground_rule(spec, r):
            if spec.behavior == "stream":
                hit = _rho_stream(g, args)
                if hit is not None:
                    out.add(hit)
            else:
                out |= _rho_tree(g, args)
    if spec.behavior == "stream" and len(out) != 1:
        raise EngineError(f"{op}: {len(out)} derivable transitions, expected exactly one")
    return out


def _rho_stream(rule: Rule, args: list[StreamPrefix]) -> tuple[str, Term] | None:
    where = {v: (args[i], 0) for i, v in enumerate(rule.arg_vars)}
    for p in rule.premises:
        prefix, pos = where[p.source]
        if pos >= len(prefix):
            raise InsufficientLookahead(f"premise {p} needs a longer argument prefix")
        if prefix.labels[pos] != p.label.letter:
            return None
        where[p.target] = (prefix, pos + 1)
    env = {v: prefix.nodes[pos] for v, (prefix, pos) in where.items()}
    return rule.concl_label.letter, subst(rule.concl_target, env)


def _rho_tree(rule: Rule, args: list[TreePrefix]) -> set[tuple[str, Term]]:
    out = set()

    def go(i: int, env: dict[str, TreePrefix]) -> None:
        if i == len(rule.premises):
            out.add((rule.concl_label.letter, subst(rule.concl_target, {v: t.node for v, t in env.items()})))
            return
        p = rule.premises[i]
        node = env[p.source]
        if node.depth < 1:
            raise InsufficientLookahead(f"premise {p} needs a deeper argument tree")
        if isinstance(p, Pos):
            for a, sub in node.children:
                if a == p.label.letter:
                    go(i + 1, {**env, p.target: sub})
        elif isinstance(p, NegLabel):
            if all(a != p.label.letter for a, _ in node.children):
                go(i + 1, env)
        elif not node.children:
            go(i + 1, env)

    go(0, {v: args[i] for i, v in enumerate(rule.arg_vars)})
    return out


# --------------------------------------------------------------------------
# public entry points


def _prepare(spec: Spec, behavior: str) -> Spec:
    spec = validate_spec(spec)
    if spec.behavior != behavior:
        raise SpecError(f"expected a {behavior} specification, got {spec.behavior}")
    return spec


def _labels_fn(env: BaseStreamEnv | None) -> Callable[[str, int], str] | None:
    return None if env is None else env.label


@_big_stack
def unfold_stream(
    spec: Spec, seeds: Iterable[Term], n: int, fuel: int = DEFAULT_FUEL, env: BaseStreamEnv | None = None
) -> Verdict:
    """Unfold ``n`` transitions of every seed."""
    spec = _prepare(spec, "stream")
    with _deep_recursion():
        sess = _StreamSession(spec, _labels_fn(env), fuel)
        prefixes: dict[Term, StreamPrefix] = {}
        failures: list[Verdict] = []
        for seed in seeds:
            p = sess.unfold(seed, n)
            if isinstance(p, StreamPrefix):
                prefixes[seed] = p
            else:
                failures.append(p)
                sess = _StreamSession(spec, _labels_fn(env), fuel)
        if failures:
            return _worst(failures)
        return ConsistentPrefix(prefixes, n, sess.table(), "stream")


@_big_stack
def unfold_lts(spec: Spec, seeds: Iterable[Term], depth: int, fuel: int = DEFAULT_FUEL) -> Verdict:
    spec = _prepare(spec, "lts")
    with _deep_recursion():
        sess = _LtsSession(spec, fuel)
        prefixes: dict[Term, TreePrefix] = {}
        failures: list[Verdict] = []
        for seed in seeds:
            p = sess.unfold(seed, depth)
            if isinstance(p, TreePrefix):
                prefixes[seed] = p
            else:
                failures.append(p)
                sess = _LtsSession(spec, fuel)
        if failures:
            return _worst(failures)
        return ConsistentPrefix(prefixes, depth, sess.table(), "lts")


_RANK = {"NoExtension": 0, "Ambiguous": 1, "Unknown": 2, "ConsistentPrefix": 3}


def _worst(verdicts: list[Verdict]) -> Verdict:
    return min(verdicts, key=lambda v: _RANK[v.name])


def aggregate(verdicts: list[Verdict]) -> Verdict:
    """NoExtension dominates, then Ambiguous, then Unknown; only an all
    consistent list yields ConsistentPrefix (with merged prefixes)."""
    bad = [v for v in verdicts if v.name != "ConsistentPrefix"]
    if bad:
        return _worst(bad)
    merged_p: dict = {}
    merged_e: dict = {}
    for v in verdicts:
        merged_p.update(v.prefixes)
        merged_e.update(v.entries)
    depth = min((v.depth for v in verdicts), default=0)
    behavior = verdicts[0].behavior if verdicts else "stream"
    return ConsistentPrefix(merged_p, depth, merged_e, behavior)


# --------------------------------------------------------------------------
# extension diagram


@dataclass
class DiagramReport:
    checked: int
    mismatches: list[str]

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_json(self) -> dict:
        return {"checked": self.checked, "mismatches": self.mismatches}


def _stream_from(table: Mapping[Term, tuple[str, Term]], t: Term, n: int, env: BaseStreamEnv | None) -> StreamPrefix | None:
    nodes, labels = [t], []
    for _ in range(n):
        cur = nodes[-1]
        if cur in table:
            a, nxt = table[cur]
        elif isinstance(cur, Var) and env is not None:
            name, k = _split_color(cur.name)
            a, nxt = env.label(name, k), BaseStreamEnv.color(name, k + 1)
        else:
            return None
        labels.append(a)
        nodes.append(nxt)
    return StreamPrefix.from_nodes(nodes, labels)


def _tree_from_table(table: Mapping[Term, frozenset], t: Term, d: int) -> TreePrefix | None:
    if d == 0:
        return TreePrefix(t, (), 0)
    if t not in table:
        return None
    kids = []
    for a, u in _edges(table[t]):
        sub = _tree_from_table(table, u, d - 1)
        if sub is None:
            return None
        kids.append((a, sub))
    return TreePrefix(t, tuple(kids), d)


@_big_stack
def check_extension_diagram(
    spec: Spec,
    table: Mapping[Term, Entry],
    samples: Iterable[Term] | None = None,
    env: BaseStreamEnv | None = None,
) -> DiagramReport:
    """Compare the first step of every sampled compound term in ``table``
    with one application of the rules to its arguments' behaviors."""
    spec = validate_spec(spec)
    checked, bad = 0, []
    terms = list(table) if samples is None else list(samples)
    for t in terms:
        if not isinstance(t, App) or t not in table:
            continue
        la = op_lookahead(spec, t.op)
        if spec.behavior == "stream":
            args = [_stream_from(table, a, max(d, 1), env) for a, d in zip(t.args, la)]
        else:
            args = [_tree_from_table(table, a, max(d, 1)) for a, d in zip(t.args, la)]
        if any(a is None for a in args):
            continue
        try:
            expected = one_step_rho(spec, t.op, args)
        except EngineError as e:
            bad.append(f"{t}: {e}")
            continue
        checked += 1
        got = {table[t]} if spec.behavior == "stream" else set(table[t])
        if got != expected:
            show = lambda s: "{" + ", ".join(f"({a}, {u})" for a, u in sorted(s, key=_edge_key)) + "}"
            bad.append(f"{t}: table has {show(got)}, rules give {show(expected)}")
    return DiagramReport(checked, bad)


# --------------------------------------------------------------------------
# axioms


@dataclass
class AxiomReport:
    n: int
    checked: dict[str, int] = field(default_factory=dict)
    failures: dict[str, list[str]] = field(default_factory=dict)

    AXIOMS = ("i", "ii", "iii", "iv", "naturality")

    @property
    def passed(self) -> bool:
        return not any(self.failures.values())

    def _count(self, axiom: str, ok: bool, detail: str) -> None:
        self.checked[axiom] = self.checked.get(axiom, 0) + 1
        self.failures.setdefault(axiom, [])
        if not ok:
            self.failures[axiom].append(detail)

    def to_json(self) -> dict:
        return {
            a: {"checked": self.checked.get(a, 0), "failures": self.failures.get(a, [])} for a in self.AXIOMS
        }

    def __str__(self) -> str:
        lines = []
        for a in self.AXIOMS:
            fails = self.failures.get(a, [])
            status = "ok" if not fails else f"{len(fails)} failure(s)"
            lines.append(f"axiom {a}: {self.checked.get(a, 0)} checked, {status}")
            lines.extend(f"  {f}" for f in fails)
        return "\n".join(lines)


def _fresh_unfold(spec: Spec, labels_of, t: Term, n: int, fuel: int) -> StreamPrefix:
    p = _StreamSession(spec, labels_of, fuel).unfold(t, n)
    if not isinstance(p, StreamPrefix):
        raise _AxiomAbort(f"{t} does not unfold: {p.name}")
    return p


class _AxiomAbort(Exception):
    pass


def _positions(t: Term, path: tuple[int, ...] = ()) -> Iterator[tuple[tuple[int, ...], Term]]:
    yield path, t
    if isinstance(t, App):
        for i, a in enumerate(t.args):
            yield from _positions(a, path + (i,))


def _replace(t: Term, path: tuple[int, ...], new: Term) -> Term:
    if not path:
        return new
    args = list(t.args)
    args[path[0]] = _replace(args[path[0]], path[1:], new)
    return App(t.op, tuple(args))


@_big_stack
def check_axioms(
    spec: Spec, env: BaseStreamEnv, terms: Iterable[Term], n: int, fuel: int = DEFAULT_FUEL
) -> AxiomReport:
    """Check the distributive-law axioms on length-``n`` prefixes.

    (i) a bare base stream is returned unchanged; (ii) the first node of the
    unfolding of ``t`` is ``t``; (iii) unfolding ``C[s]`` equals unfolding
    ``C`` over the unfolded stream of ``s``, flattened; (iv) unfolding the
    ``i``-th node reproduces the suffix from position ``i``.  Naturality:
    renaming the base streams renames the output and nothing else.
    """
    spec = _prepare(spec, "stream")
    rep = AxiomReport(n)
    terms = list(terms)
    with _deep_recursion():
        for name in env.streams:
            try:
                got = _fresh_unfold(spec, env.label, env.color(name), n, fuel)
                rep._count("i", got == env.prefix(name, n), f"{name}: {got}")
            except _AxiomAbort as e:
                rep._count("i", False, str(e))
        for t in terms:
            try:
                _axioms_for(spec, env, t, n, fuel, rep)
            except _AxiomAbort as e:
                rep._count("ii", False, str(e))
    return rep


def _axioms_for(spec: Spec, env: BaseStreamEnv, t: Term, n: int, fuel: int, rep: AxiomReport) -> None:
    p = _fresh_unfold(spec, env.label, t, n, fuel)
    rep._count("ii", p.nodes[0] == t, f"{t}: head is {p.nodes[0]}")

    for path, s in _positions(t):
        if not path or not isinstance(s, App):
            continue
        hole = "_s"
        while hole in env.streams:
            hole += "_"
        inner = _StreamSession(spec, env.label, fuel)
        inner_nodes: list[Term] = [s]
        inner_labels: list[str] = []

        def grow(k: int) -> None:
            while len(inner_labels) <= k:
                lab, nxt = inner.force(inner_nodes[-1])
                inner_labels.append(inner.walk_label(lab))
                inner_nodes.append(inner.resolve(nxt))

        def labels_of(name: str, k: int) -> str:
            if name == hole:
                grow(k)
                return inner_labels[k]
            return env.label(name, k)

        ctx = _replace(t, path, BaseStreamEnv.color(hole))
        try:
            q = _fresh_unfold(spec, labels_of, ctx, n, fuel)
        except _Fail as e:
            raise _AxiomAbort(f"{s} inside {t} does not unfold: {type(e).__name__}") from None
        flat_nodes = []
        for node in q.nodes:
            ks = [_split_color(v.name)[1] for v in _vars_iter(node) if v.name.startswith(hole + ".")]
            if ks:
                grow(max(ks))
            flat_nodes.append(subst(node, {f"{hole}.{k}": inner_nodes[k] for k in range(len(inner_nodes))}, strict=False))
        flat = StreamPrefix.from_nodes(flat_nodes, q.labels)
        rep._count("iii", flat == p, f"{t} at {list(path)}: {flat} vs {p}")

    for i in range(1, n):
        sub = _fresh_unfold(spec, env.label, p.nodes[i], n - i, fuel)
        rep._count("iv", sub == _suffix(p, i), f"{t} position {i}: {sub}")

    names = sorted({_split_color(v.name)[0] for v in _vars_iter(t)})
    if names:
        ren = {a: a + "'" for a in names}
        back = {v: k for k, v in ren.items()}
        t2 = _rename_colors(t, ren)
        env2 = env.renamed(ren)
        q = _fresh_unfold(spec, env2.label, t2, n, fuel)
        mapped = q.map_nodes(lambda u: _rename_colors(u, back))
        rep._count("naturality", mapped == p, f"{t}: {mapped} vs {p}")


def _suffix(p: StreamPrefix, i: int) -> StreamPrefix:
    return StreamPrefix(p.steps[i:], p.tail_node)


def _rename_colors(t: Term, ren: Mapping[str, str]) -> Term:
    if isinstance(t, Var):
        name, k = _split_color(t.name)
        return BaseStreamEnv.color(ren.get(name, name), k)
    if not t.args:
        return t
    return App(t.op, tuple(_rename_colors(a, ren) for a in t.args))


# --------------------------------------------------------------------------
# forcedness


@_big_stack
def check_forcedness(
    spec: Spec, verdict: ConsistentPrefix, env: BaseStreamEnv | None = None, fuel: int = DEFAULT_FUEL
) -> list[str]:
    """Delete each entry in turn, recompute it from the others and report
    any entry that does not come back identical."""
    spec = validate_spec(spec)
    problems = []
    with _deep_recursion():
        for t, entry in verdict.entries.items():
            if isinstance(t, Var):
                continue
            if spec.behavior == "stream":
                sess: _Session = _StreamSession(spec, _labels_fn(env), fuel)
            else:
                sess = _LtsSession(spec, fuel)
            sess.entries.update({u: e for u, e in verdict.entries.items() if u != t})
            try:
                again = sess.force(t)
                if spec.behavior == "stream":
                    again = (sess.walk_label(again[0]), sess.resolve(again[1]))
            except _Fail as e:
                problems.append(f"{t}: {type(e).__name__} {e}")
                continue
            if again != entry:
                problems.append(f"{t}: recomputed {again}, stored {entry}")
    return problems


# --------------------------------------------------------------------------
# orchestration


def generic_terms(spec: Spec, leaves: list[Term], max_size: int, cap: int) -> list[Term]:
    """Terms with at least one operation, built over ``leaves``, small first."""
    by_size: dict[int, list[Term]] = {0: list(leaves)}
    out: list[Term] = []
    for size in range(1, max_size + 1):
        level = []
        for op, k in spec.signature.operations:
            for parts in itertools.product(range(size), repeat=k):
                if sum(parts) != size - 1:
                    continue
                for args in itertools.product(*(by_size[p] for p in parts)):
                    level.append(App(op, tuple(args)))
        level.sort(key=str)
        by_size[size] = level
        out.extend(level)
    # base-stream seeds only: closed ones are covered elsewhere
    out = [t for t in out if any(True for _ in _vars_iter(t))]
    return out[:cap]


def _seed_job(args):
    spec, seed, n, fuel = args
    if spec.behavior == "stream":
        return unfold_stream(spec, [seed], n, fuel)
    return unfold_lts(spec, [seed], n, fuel)


@_big_stack
def check_extension(
    spec: Spec,
    size_bound: int = 3,
    n: int = 8,
    fuel: int = DEFAULT_FUEL,
    jobs: int = 1,
    env: BaseStreamEnv | None = None,
    generic_cap: int = 24,
    axiom_depth: int = 16,
    diagram_samples: int = 2000,
) -> Verdict:
    """Unfold every closed term up to ``size_bound`` (and, for streams,
    small terms over generic base streams), then check the extension
    diagram on the first ``diagram_samples`` compound entries and the axioms
    on what was built."""
    spec = validate_spec(spec)
    seeds = closed_terms(spec.signature, size_bound)
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            closed = list(pool.map(_seed_job, [(spec, s, n, fuel) for s in seeds]))
    elif spec.behavior == "stream":
        closed = [unfold_stream(spec, seeds, n, fuel)]
    else:
        closed = [unfold_lts(spec, seeds, n, fuel)]
    verdicts = list(closed)

    generic: list[Term] = []
    if any(v.name == "NoExtension" for v in verdicts):
        return _worst(verdicts)
    if spec.behavior == "stream":
        env = env or BaseStreamEnv.default(spec.alphabet)
        leaves = [BaseStreamEnv.color(name) for name in env.streams]
        generic = generic_terms(spec, leaves, max(1, min(size_bound, 2)), generic_cap)
        if generic:
            verdicts.append(unfold_stream(spec, generic, n, fuel, env))

    result = aggregate(verdicts)
    if result.name != "ConsistentPrefix":
        return result

    samples = itertools.islice((t for t in result.entries if isinstance(t, App)), diagram_samples)
    diagram = check_extension_diagram(spec, result.entries, samples, env=env)
    report: dict[str, Any] = {"diagram": diagram.to_json()}
    if not diagram.ok:
        return Unknown(0, "extension diagram mismatch: " + "; ".join(diagram.mismatches[:3]))
    if spec.behavior == "stream" and generic:
        ax = check_axioms(spec, env, generic, min(n, axiom_depth), fuel)
        report.update(ax.to_json())
        if not ax.passed:
            return Unknown(0, "axiom check failed:\n" + str(ax))
    result.prefixes = {t: p for t, p in result.prefixes.items() if t in seeds or t in generic}
    result.axioms = report
    return result
