"""Independent witness replayer.

Works only from the rules and the transitions listed in a witness trace; it
shares no code with the engine beyond the data types and rule grounding.
"""
from __future__ import annotations


from bigsos.rules import Lit, NegAll, NegLabel, Pos, Spec, ground_rule, validate_spec
from bigsos.terms import App, Term, Var, occurs, subst

HOLE = "?W"


class Incomplete(Exception):
    """A premise needs the successors of a term the trace says nothing about."""


def derive(spec: Spec, succs: dict[Term, set[tuple[str, Term]]], t: App) -> set[tuple[str, Term]]:
    """All transitions of ``t`` derivable by one rule from ``succs``."""
    out: set[tuple[str, Term]] = set()
    for rule in spec.rules:
        if rule.head_op != t.op:
            continue
        for g in ground_rule(spec, rule):
            env = dict(zip(g.arg_vars, t.args))
            for venv in _match(g.premises, env, succs):
                label = g.concl_label.letter if isinstance(g.concl_label, Lit) else None
                if label is None:
                    continue
                out.add((label, subst(g.concl_target, venv)))
    return out


def _match(premises, env, succs):
    if not premises:
        yield env
        return
    p, rest = premises[0], premises[1:]
    src = env[p.source]
    if src not in succs:
        raise Incomplete(str(src))
    edges = succs[src]
    if isinstance(p, Pos):
        for a, u in sorted(edges, key=str):
            if isinstance(p.label, Lit) and p.label.letter != a:
                continue
            yield from _match(rest, {**env, p.target: u}, succs)
    elif isinstance(p, NegLabel):
        if not any(a == p.label.letter for a, _ in edges):
            yield from _match(rest, env, succs)
    elif isinstance(p, NegAll):
        if not edges:
            yield from _match(rest, env, succs)
    else:  # pragma: no cover
        raise TypeError(p)


def replay_trace(spec: Spec, steps) -> dict[Term, set[tuple[str, Term]]]:
    """Check that every trace step is an instance of its rule whose premises
    hold in the transitions listed before it; return the transitions."""
    spec = validate_spec(spec)
    known: dict[Term, set[tuple[str, Term]]] = {}
    for s in steps:
        rule = spec.rules[s.rule]
        inst = s.instantiation
        terms = {k: v for k, v in inst.items() if not isinstance(v, str)}
        labels = {k: v for k, v in inst.items() if isinstance(v, str)}
        head = App(rule.head_op, tuple(terms[x] for x in rule.arg_vars))
        assert head == s.term, f"rule {s.rule} head {head} != {s.term}"
        for p in rule.premises:
            if isinstance(p, Pos):
                lab = p.label.letter if isinstance(p.label, Lit) else labels[p.label.name]
                assert (lab, terms[p.target]) in known.get(terms[p.source], set()), f"premise {p} unsupported"
        concl = rule.concl_label.letter if isinstance(rule.concl_label, Lit) else labels[rule.concl_label.name]
        assert concl == s.label
        assert subst(rule.concl_target, terms) == s.successor
        known.setdefault(s.term, set()).add((s.label, s.successor))
    return known


def replay_stream(spec: Spec, witness) -> tuple[bool, bool]:
    """Try every entry ``(a, τ)`` for the witness term.  Returns whether all
    of them are contradictory and whether some contradiction is an
    occurs-check failure (a successor properly containing ``τ``)."""
    spec = validate_spec(spec)
    known = replay_trace(spec, witness.trace)
    if spec.behavior != "stream" or any(len(v) != 1 for v in known.values()):
        return False, False
    t = witness.term
    tau = Var(HOLE)
    occurs_seen = False
    for a in spec.alphabet:
        derived = derive(spec, {**known, t: {(a, tau)}}, t)
        if len(derived) != 1:
            continue  # no rule, or two rules disagree
        (b, s), = derived
        if s != tau and occurs(HOLE, s):
            occurs_seen = True
        elif b == a:
            return False, occurs_seen  # τ := s (or τ left free) is a solution
    return True, occurs_seen


def replay_clash(spec: Spec, witness) -> bool:
    """Neither an empty nor a nonempty successor set is supported for the
    witness term: the empty set derives a transition, and with a generic
    successor ``Z`` every derivable successor strictly contains ``Z``, so a
    successor of least size can never be derived."""
    spec = validate_spec(spec)
    known = replay_trace(spec, witness.trace)
    t = witness.term
    if derive(spec, {**known, t: set()}, t) == set():
        return False
    z = Var(HOLE)
    for a in spec.alphabet:
        derived = derive(spec, {**known, t: {(a, z)}}, t)
        for _, s in derived:
            if s == z or not occurs(HOLE, s):
                return False
    return True


def replay(spec: Spec, witness) -> bool:
    if witness.kind == "EmptyNonemptyClash":
        return replay_clash(spec, witness)
    contradiction, occurs_seen = replay_stream(spec, witness)
    if witness.kind == "OccursCheck":
        return contradiction and occurs_seen
    return contradiction
