"""Queue machines that remove 0, 1 or 2 letters per step and append one.

Also the classical variant (remove exactly one letter, append a word) and a
compiler from classical machines into the 0/1/2 variant that preserves
termination from the initial configuration.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping


class MachineError(ValueError):
    pass


@dataclass(frozen=True)
class Configuration:
    state: str
    queue: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.state} | {''.join(self.queue)}"


@dataclass
class QueueMachine:
    states: list[str]
    alphabet: list[str]
    dollar: str
    start: str
    delta0: dict[str, tuple[str, str]] = field(default_factory=dict)
    delta1: dict[tuple[str, str], tuple[str, str]] = field(default_factory=dict)
    delta2: dict[tuple[str, str, str], tuple[str, str]] = field(default_factory=dict)

    def initial(self) -> Configuration:
        return Configuration(self.start, (self.dollar,))

    def to_json(self) -> dict:
        return {
            "states": list(self.states),
            "alphabet": list(self.alphabet),
            "dollar": self.dollar,
            "start": self.start,
            "delta0": {q: list(v) for q, v in self.delta0.items()},
            "delta1": {f"{q},{a}": list(v) for (q, a), v in self.delta1.items()},
            "delta2": {f"{q},{a},{b}": list(v) for (q, a, b), v in self.delta2.items()},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> QueueMachine:
        try:
            return cls(
                states=list(data["states"]),
                alphabet=list(data["alphabet"]),
                dollar=data["dollar"],
                start=data["start"],
                delta0={q: _pair(v) for q, v in data.get("delta0", {}).items()},
                delta1={_key(k, 2): _pair(v) for k, v in data.get("delta1", {}).items()},
                delta2={_key(k, 3): _pair(v) for k, v in data.get("delta2", {}).items()},
            )
        except (KeyError, TypeError) as e:
            raise MachineError(f"malformed machine description: {e}") from None


def _key(text: str, n: int) -> tuple[str, ...]:
    parts = tuple(p.strip() for p in text.split(","))
    if len(parts) != n:
        raise MachineError(f"transition key {text!r} should have {n} components")
    return parts


def _pair(v) -> tuple[str, str]:
    if len(v) != 2:
        raise MachineError(f"transition value {v!r} should be [state, letter]")
    return (str(v[0]), str(v[1]))


def load_machine(path: str | Path) -> QueueMachine:
    return QueueMachine.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def dump_machine(m: QueueMachine) -> str:
    return json.dumps(m.to_json(), indent=2, ensure_ascii=False) + "\n"


def qm_validate(m: QueueMachine) -> list[str]:
    """Violations of the exactly-one-clause condition, plus basic sanity.

    An empty list means the machine is well formed.
    """
    problems = []
    states, letters = set(m.states), set(m.alphabet)
    if m.start not in states:
        problems.append(f"start state {m.start!r} is not a state")
    if m.dollar not in letters:
        problems.append(f"{m.dollar!r} is not in the alphabet")
    for table in (m.delta0, m.delta1, m.delta2):
        for key, (q2, c) in table.items():
            keys = (key,) if isinstance(key, str) else key
            if keys[0] not in states or any(a not in letters for a in keys[1:]):
                problems.append(f"transition {key} mentions unknown states or letters")
            if q2 not in states or c not in letters:
                problems.append(f"transition {key} -> ({q2}, {c}) mentions unknown states or letters")
    for q in m.states:
        for a in m.alphabet:
            for b in m.alphabet:
                defined = [
                    name
                    for name, ok in (
                        ("delta0", q in m.delta0),
                        ("delta1", (q, a) in m.delta1),
                        ("delta2", (q, a, b) in m.delta2),
                    )
                    if ok
                ]
                if len(defined) != 1:
                    what = "none" if not defined else " and ".join(defined)
                    problems.append(f"({q},{a},{b}): {what} defined, expected exactly one")
    return problems


def qm_step(m: QueueMachine, c: Configuration) -> Configuration | None:
    """One step of the machine; ``None`` when it terminates in ``c``."""
    w = c.queue
    if not w:
        raise MachineError("empty queue")
    q = c.state
    if q in m.delta0:
        q2, x = m.delta0[q]
        return Configuration(q2, w + (x,))
    if (q, w[0]) in m.delta1:
        q2, x = m.delta1[(q, w[0])]
        return Configuration(q2, w[1:] + (x,))
    if len(w) == 1:
        return None
    key = (q, w[0], w[1])
    if key not in m.delta2:
        raise MachineError(f"no transition for {key}")
    q2, x = m.delta2[key]
    return Configuration(q2, w[2:] + (x,))


@dataclass
class RunResult:
    trace: list[Configuration]
    halted_at: int | None

    @property
    def halted(self) -> bool:
        return self.halted_at is not None

    @property
    def outcome(self) -> str:
        return f"HaltedAt({self.halted_at})" if self.halted else "StillRunning"


def qm_run(m: QueueMachine, c0: Configuration | None = None, fuel: int = 1000) -> RunResult:
    c = m.initial() if c0 is None else c0
    trace = [c]
    for k in range(fuel + 1):
        nxt = qm_step(m, c)
        if nxt is None:
            return RunResult(trace, k)
        if k == fuel:
            break
        c = nxt
        trace.append(c)
    return RunResult(trace, None)


# --------------------------------------------------------------------------
# classical machines


@dataclass
class ClassicalQM:
    states: list[str]
    alphabet: list[str]
    dollar: str
    start: str
    delta: dict[tuple[str, str], tuple[str, tuple[str, ...]]] = field(default_factory=dict)

    def initial(self) -> Configuration:
        return Configuration(self.start, (self.dollar,))

    def to_json(self) -> dict:
        return {
            "states": list(self.states),
            "alphabet": list(self.alphabet),
            "dollar": self.dollar,
            "start": self.start,
            "delta": {f"{q},{a}": [q2, "".join(w)] for (q, a), (q2, w) in self.delta.items()},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> ClassicalQM:
        alphabet = list(data["alphabet"])
        delta = {}
        for k, v in data.get("delta", {}).items():
            q, a = _key(k, 2)
            word = v[1]
            delta[(q, a)] = (str(v[0]), tuple(word) if isinstance(word, str) else tuple(word))
        if any(len(a) != 1 for a in alphabet):
            # multi-character letters need list-valued words
            for k, v in data.get("delta", {}).items():
                if isinstance(v[1], str) and v[1]:
                    raise MachineError("words must be lists when letters are longer than one character")
        return cls(list(data["states"]), alphabet, data["dollar"], data["start"], delta)


def load_classical(path: str | Path) -> ClassicalQM:
    return ClassicalQM.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def classical_validate(cm: ClassicalQM) -> list[str]:
    problems = []
    for q in cm.states:
        for a in cm.alphabet:
            if (q, a) not in cm.delta:
                problems.append(f"delta({q},{a}) undefined")
    for (q, a), (q2, w) in cm.delta.items():
        if q2 not in cm.states or any(x not in cm.alphabet for x in w):
            problems.append(f"delta({q},{a}) mentions unknown states or letters")
    return problems


def classical_step(cm: ClassicalQM, c: Configuration) -> Configuration | None:
    """``None`` once the queue is empty (the classical halting condition)."""
    if not c.queue:
        return None
    q2, w = cm.delta[(c.state, c.queue[0])]
    return Configuration(q2, c.queue[1:] + w)


def classical_run(cm: ClassicalQM, fuel: int = 1000) -> RunResult:
    c = cm.initial()
    trace = [c]
    for k in range(fuel + 1):
        nxt = classical_step(cm, c)
        if nxt is None:
            return RunResult(trace, k)
        if k == fuel:
            break
        c = nxt
        trace.append(c)
    return RunResult(trace, None)


BLANK = "□"


def classical_to_qm(cm: ClassicalQM, blank: str = BLANK) -> QueueMachine:
    """Compile a classical machine into one that terminates from ``(q1,$)``
    exactly when the classical one empties its queue.

    Letters are consumed with ``delta1``; a word of length ``n >= 1`` is
    appended by ``delta1`` (first letter) followed by a chain of ``delta0``
    appender states.  An empty word appends a blank instead.  A blank at the
    head of the queue is consumed together with the letter behind it by
    ``delta2``, and two blanks shrink to one, so a queue holding only blanks
    collapses to a single blank and the machine stops there.
    """
    problems = classical_validate(cm)
    if problems:
        raise MachineError("; ".join(problems))
    while blank in cm.alphabet:
        blank += "'"
    letters = list(cm.alphabet) + [blank]
    states = list(cm.states)
    delta0: dict[str, tuple[str, str]] = {}
    delta1: dict[tuple[str, str], tuple[str, str]] = {}
    delta2: dict[tuple[str, str, str], tuple[str, str]] = {}
    appenders: dict[tuple[str, tuple[str, ...]], str] = {}

    def emit(q2: str, w: tuple[str, ...]) -> tuple[str, str]:
        """State and letter of the first step that appends ``w`` and then
        continues in ``q2``."""
        if not w:
            return (q2, blank)
        return (appender(q2, w[1:]), w[0])

    def appender(q2: str, rest: tuple[str, ...]) -> str:
        if not rest:
            return q2
        key = (q2, rest)
        if key not in appenders:
            name = f"{q2}~{''.join(rest)}"
            while name in states:
                name += "~"
            appenders[key] = name
            states.append(name)
            delta0[name] = (appender(q2, rest[1:]), rest[0])
        return appenders[key]

    for q in cm.states:
        for a in cm.alphabet:
            q2, w = cm.delta[(q, a)]
            delta1[(q, a)] = emit(q2, w)
            delta2[(q, blank, a)] = emit(q2, w)
        delta2[(q, blank, blank)] = (q, blank)
    return QueueMachine(states, letters, cm.dollar, cm.start, delta0, delta1, delta2)
