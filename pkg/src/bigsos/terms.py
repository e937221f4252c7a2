"""Signatures and terms of the free monad over a signature.

Terms are immutable values compared syntactically.  ``subst`` is the monad
multiplication (gluing terms into terms), ``var`` its unit and ``flat_embed``
the embedding of a single operation symbol applied to variables.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Union


class TermError(ValueError):
    pass


class ArityError(TermError):
    pass


class UnboundVariable(TermError):
    pass


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    op: str
    args: tuple[Term, ...] = ()
    # cached so that hashing deeply nested terms stays O(arity)
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        object.__setattr__(self, "_hash", hash((self.op, self.args)))

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        if not self.args:
            return self.op
        return f"{self.op}({','.join(str(a) for a in self.args)})"


Term = Union[Var, App]


@dataclass(frozen=True)
class Signature:
    """Operation symbols with their arities; constants have arity 0."""

    operations: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        ops = tuple((str(n), int(k)) for n, k in self.operations)
        object.__setattr__(self, "operations", ops)
        names = [n for n, _ in ops]
        if len(set(names)) != len(names):
            raise TermError(f"duplicate operation names in {names}")
        for name, arity in ops:
            if arity < 0:
                raise TermError(f"negative arity for {name}")

    @classmethod
    def of(cls, ops: Iterable[tuple[str, int]] | Mapping[str, int]) -> Signature:
        if isinstance(ops, Mapping):
            ops = ops.items()
        return cls(tuple(ops))

    def arity(self, op: str) -> int:
        for name, k in self.operations:
            if name == op:
                return k
        raise TermError(f"unknown operation {op!r}")

    def __contains__(self, op: object) -> bool:
        return any(name == op for name, _ in self.operations)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.operations)

    def constants(self) -> tuple[str, ...]:
        return tuple(n for n, k in self.operations if k == 0)

    def check(self, t: Term) -> None:
        """Raise unless every application in ``t`` respects this signature."""
        for s in subterms(t):
            if isinstance(s, App):
                k = self.arity(s.op)
                if k != len(s.args):
                    raise ArityError(f"{s.op} has arity {k}, applied to {len(s.args)} arguments")


def var(name: str) -> Var:
    return Var(name)


def flat_embed(sig: Signature, op: str, args: Iterable[str]) -> App:
    args = tuple(args)
    k = sig.arity(op)
    if k != len(args):
        raise ArityError(f"{op} has arity {k}, got {len(args)} arguments")
    return App(op, tuple(Var(a) for a in args))


def subst(t: Term, env: Mapping[str, Term], *, strict: bool = True) -> Term:
    """Simultaneously replace variables of ``t`` by their images in ``env``.

    With ``strict`` every variable of ``t`` must be bound; otherwise unbound
    variables are left in place.
    """
    if isinstance(t, Var):
        if t.name in env:
            return env[t.name]
        if strict:
            raise UnboundVariable(t.name)
        return t
    if not t.args:
        return t
    return App(t.op, tuple(subst(a, env, strict=strict) for a in t.args))


def depth(t: Term) -> int:
    if isinstance(t, Var):
        return 0
    return 1 + max((depth(a) for a in t.args), default=0)


def size(t: Term) -> int:
    """Number of operation occurrences."""
    if isinstance(t, Var):
        return 0
    return 1 + sum(size(a) for a in t.args)


def variables(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    out: set[str] = set()
    for a in t.args:
        out |= variables(a)
    return frozenset(out)


def is_closed(t: Term) -> bool:
    return not variables(t)


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)


def occurs(name: str, t: Term) -> bool:
    if isinstance(t, Var):
        return t.name == name
    return any(occurs(name, a) for a in t.args)


def closed_terms(sig: Signature, max_size: int) -> list[App]:
    """All closed terms with at most ``max_size`` operation occurrences,
    ordered by size and then by rendering."""
    by_size: dict[int, list[App]] = {}
    for n in range(1, max_size + 1):
        level: list[App] = []
        for op, k in sig.operations:
            for parts in _compositions(n - 1, k):
                if any(p == 0 for p in parts):
                    continue
                for args in _product([by_size[p] for p in parts]):
                    level.append(App(op, args))
        level.sort(key=str)
        by_size[n] = level
    return [t for n in range(1, max_size + 1) for t in by_size[n]]


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def _product(pools: list[list[App]]) -> Iterator[tuple[App, ...]]:
    if not pools:
        yield ()
        return
    for head in pools[0]:
        for tail in _product(pools[1:]):
            yield (head, *tail)


_TOKEN = re.compile(r"\s*(?:([A-Za-z_?][\w'.?]*)|(\()|(\))|(,))")


def parse_term(text: str, sig: Signature | None = None) -> Term:
    """Parse ``op(arg,...)`` text.  Bare names are constants when ``sig``
    declares them with arity 0 and variables otherwise."""
    pos = 0
    tokens: list[tuple[str, str]] = []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise TermError(f"unexpected character {text[pos]!r} at column {pos + 1} in {text!r}")
        if m.group(1):
            tokens.append(("name", m.group(1)))
        elif m.group(2):
            tokens.append(("(", "("))
        elif m.group(3):
            tokens.append((")", ")"))
        else:
            tokens.append((",", ","))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1

    i = 0

    def parse() -> Term:
        nonlocal i
        if i >= len(tokens) or tokens[i][0] != "name":
            raise TermError(f"expected a name in {text!r}")
        name = tokens[i][1]
        i += 1
        if i < len(tokens) and tokens[i][0] == "(":
            i += 1
            args: list[Term] = []
            if i < len(tokens) and tokens[i][0] == ")":
                i += 1
            else:
                while True:
                    args.append(parse())
                    if i < len(tokens) and tokens[i][0] == ",":
                        i += 1
                        continue
                    if i < len(tokens) and tokens[i][0] == ")":
                        i += 1
                        break
                    raise TermError(f"expected ',' or ')' in {text!r}")
            return App(name, tuple(args))
        if sig is not None and name in sig and sig.arity(name) == 0:
            return App(name)
        return Var(name)

    t = parse()
    if i != len(tokens):
        raise TermError(f"trailing input in {text!r}")
    if sig is not None:
        sig.check(t)
    return t
