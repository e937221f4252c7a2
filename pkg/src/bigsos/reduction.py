"""Compile queue machines into stream and LTS specifications.

The stream specification has a constant ``C`` and one unary operation per
machine state.  ``C`` starts the stream with ``$`` and the unary operations
replay the machine: a rule without premises for ``delta0``, one premise for
``delta1`` and a depth-2 lookahead for ``delta2``.  The LTS version adds,
for every state and letter on which the machine may stop, a rule that fires
exactly when the argument's successor is stuck.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .behavior import StreamPrefix
from .qm import MachineError, QueueMachine, qm_step, qm_validate
from .rules import Lit, NegAll, Pos, Rule, Spec, validate_spec
from .terms import App, Signature, Term, Var

CONSTANT = "C"


@dataclass(frozen=True)
class ReductionOutput:
    spec: Spec
    op_of_state: dict[str, str]
    constant: str = CONSTANT


def _op_names(states: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    used = {CONSTANT}
    for q in states:
        base = "q_" + re.sub(r"[^\w']", lambda m: f"_{ord(m.group()):x}_", q)
        name, k = base, 1
        while name in used:
            k += 1
            name = f"{base}_{k}"
        used.add(name)
        out[q] = name
    return out


def _machine_rules(m: QueueMachine, ops: dict[str, str]) -> list[Rule]:
    rules = [Rule(CONSTANT, (), (), Lit(m.dollar), App(ops[m.start], (App(CONSTANT),)), tag="C")]
    for q in m.states:
        op = ops[q]
        if q in m.delta0:
            q2, c = m.delta0[q]
            rules.append(Rule(op, ("x",), (), Lit(c), App(ops[q2], (Var("x"),)), tag="R0"))
            continue
        for a in m.alphabet:
            if (q, a) in m.delta1:
                q2, c = m.delta1[(q, a)]
                rules.append(
                    Rule(op, ("x",), (Pos("x", Lit(a), "y"),), Lit(c), App(ops[q2], (Var("y"),)), tag="R1")
                )
                continue
            for b in m.alphabet:
                if (q, a, b) in m.delta2:
                    q2, c = m.delta2[(q, a, b)]
                    premises = (Pos("x", Lit(a), "y"), Pos("y", Lit(b), "z"))
                    rules.append(Rule(op, ("x",), premises, Lit(c), App(ops[q2], (Var("z"),)), tag="R2"))
    return rules


def _check(m: QueueMachine) -> None:
    problems = qm_validate(m)
    if problems:
        raise MachineError("invalid machine: " + "; ".join(problems[:5]))


def _signature(ops: dict[str, str]) -> Signature:
    return Signature.of([(CONSTANT, 0)] + [(name, 1) for name in ops.values()])


def qm_to_stream_spec(m: QueueMachine) -> ReductionOutput:
    _check(m)
    ops = _op_names(m.states)
    spec = Spec("stream", tuple(m.alphabet), _signature(ops), tuple(_machine_rules(m, ops)), m.dollar)
    return ReductionOutput(validate_spec(spec), ops)


def qm_to_lts_spec(m: QueueMachine) -> ReductionOutput:
    _check(m)
    ops = _op_names(m.states)
    rules = _machine_rules(m, ops)
    for q in m.states:
        if q in m.delta0:
            continue
        for a in m.alphabet:
            if (q, a) not in m.delta1:
                rules.append(
                    Rule(ops[q], ("x",), (Pos("x", Lit(a), "y"), NegAll("y")), Lit(a), App(ops[q], (Var("x"),)), tag="R2'")
                )
    spec = Spec("lts", tuple(m.alphabet), _signature(ops), tuple(rules), m.dollar)
    return ReductionOutput(validate_spec(spec), ops)


@dataclass(frozen=True)
class HaltsBefore:
    """The machine stopped after ``steps`` steps, too early for the request."""

    steps: int


def lemma_prefix_oracle(m: QueueMachine, n: int) -> StreamPrefix | HaltsBefore:
    """The first ``n`` transitions of the stream of ``C``, read off a run.

    Configuration ``i`` (counting from 1) has state ``q_i`` and queue
    ``w_i``.  Node ``i`` is ``q_i`` applied to node ``i - |w_i|`` and label
    ``i`` is the letter appended by step ``i`` (``$`` for label 0).  Needs
    ``n - 1`` machine steps.
    """
    if n < 1:
        raise ValueError("the oracle needs n >= 1")
    ops = _op_names(m.states)
    configs = [m.initial()]
    while len(configs) < n:
        nxt = qm_step(m, configs[-1])
        if nxt is None:
            return HaltsBefore(len(configs) - 1)
        configs.append(nxt)
    nodes: list[Term] = [App(CONSTANT)]
    labels = [m.dollar]
    for i in range(1, n + 1):
        c = configs[i - 1]
        nodes.append(App(ops[c.state], (nodes[i - len(c.queue)],)))
        if i < n:
            labels.append(configs[i].queue[-1])
    return StreamPrefix.from_nodes(nodes, labels)
