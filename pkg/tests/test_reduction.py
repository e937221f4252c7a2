from __future__ import annotations

import random

import pytest
from conftest import CORPUS
from hypothesis import given, settings
from hypothesis import strategies as st
from machines import machine_corpus, random_machine

from bigsos.engine import unfold_stream
from bigsos.qm import MachineError, QueueMachine, load_machine, qm_run
from bigsos.reduction import HaltsBefore, lemma_prefix_oracle, qm_to_lts_spec, qm_to_stream_spec
from bigsos.rules import NegAll, check_functionality, classify_spec, parse_spec, render_spec
from bigsos.terms import App, depth


def loop_machine() -> QueueMachine:
    return QueueMachine(["q1"], ["$"], "$", "q1", delta0={"q1": ("q1", "$")})


def test_loop_machine_spec():
    out = qm_to_stream_spec(loop_machine())
    assert [str(r) for r in out.spec.rules] == ["C => $ -> q_q1(C)", "q_q1(x) => $ -> q_q1(x)"]
    assert out.op_of_state == {"q1": "q_q1"} and out.constant == "C"
    assert out.spec.signature.operations == (("C", 0), ("q_q1", 1))


def _expected_rule_count(m):
    n = 1 + len(m.delta0)
    n += sum(1 for (q, a) in m.delta1 if q not in m.delta0)
    n += sum(1 for (q, a, b) in m.delta2 if q not in m.delta0 and (q, a) not in m.delta1)
    return n


@given(st.integers(0, 100_000))
@settings(max_examples=50)
def test_rule_count_and_classification(seed):
    m = random_machine(random.Random(seed))
    out = qm_to_stream_spec(m)
    assert len(out.spec.rules) == _expected_rule_count(m)
    report = classify_spec(out.spec)
    assert report.verdict == "mixed-GSOS"
    assert report.per_op["C"] == "GSOS"
    assert all(report.per_op[op] == "coGSOS" for op in out.op_of_state.values())
    assert [d for d in check_functionality(out.spec) if d.level == "error"] == []


@given(st.integers(0, 100_000))
@settings(max_examples=50)
def test_lts_spec_adds_one_r2_prime_per_stuck_pair(seed):
    m = random_machine(random.Random(seed))
    stream = qm_to_stream_spec(m).spec
    lts = qm_to_lts_spec(m)
    extra = [r for r in lts.spec.rules if any(isinstance(p, NegAll) for p in r.premises)]
    stuck = [(q, a) for q in m.states for a in m.alphabet if q not in m.delta0 and (q, a) not in m.delta1]
    assert len(extra) == len(stuck)
    assert {(r.head_op, r.premises[0].label.letter) for r in extra} == {(lts.op_of_state[q], a) for q, a in stuck}
    assert lts.spec.rules[: len(stream.rules)] == stream.rules
    report = classify_spec(lts.spec)
    assert report.verdict == "mixed-GSOS"
    assert all(report.per_op[op] == "coGSOS" for op in lts.op_of_state.values())


def test_total_delta0_adds_no_r2_prime():
    m = loop_machine()
    assert qm_to_lts_spec(m).spec.rules == qm_to_stream_spec(m).spec.rules


def test_state_names_are_mangled_and_reparse():
    m = QueueMachine(["q-1", "q_2d_1"], ["$"], "$", "q-1", delta0={"q-1": ("q_2d_1", "$"), "q_2d_1": ("q-1", "$")})
    out = qm_to_stream_spec(m)
    names = list(out.op_of_state.values())
    assert len(set(names)) == 2 and all(n.startswith("q_") for n in names)
    assert parse_spec(render_spec(out.spec)) == out.spec


def test_invalid_machine_rejected():
    with pytest.raises(MachineError):
        qm_to_stream_spec(QueueMachine(["q1"], ["$"], "$", "q1"))


def test_oracle_loop_machine():
    # |w_i| = i, so every node is q1 applied to node 0; R0 agrees: q1(x) -$-> q1(x)
    p = lemma_prefix_oracle(loop_machine(), 3)
    assert str(p) == "C -$-> q_q1(C) -$-> q_q1(C) -$-> q_q1(C)"


def test_oracle_base_case():
    p = lemma_prefix_oracle(loop_machine(), 1)
    assert str(p) == "C -$-> q_q1(C)"


def test_oracle_reports_early_halt():
    m = load_machine(CORPUS / "machines" / "count3.qm")
    assert qm_run(m, fuel=20).halted_at == 5
    assert lemma_prefix_oracle(m, 6) != HaltsBefore(5)
    assert lemma_prefix_oracle(m, 8) == HaltsBefore(5)


@pytest.mark.parametrize("index", range(24))
def test_oracle_queue_words_and_depths(index):
    m, k = machine_corpus()[index]
    n = max(1, min(50, k)) if k is not None else 50
    p = lemma_prefix_oracle(m, n)
    ops = qm_to_stream_spec(m).op_of_state
    configs = qm_run(m, fuel=n).trace
    nodes, labels = p.nodes, p.labels
    assert nodes[0] == App("C") and labels[0] == "$"
    for i in range(1, n + 1):
        w = configs[i - 1].queue
        j = i - len(w)
        assert 0 <= j < i
        assert nodes[i] == App(ops[configs[i - 1].state], (nodes[j],))
        assert depth(nodes[i]) == depth(nodes[j]) + 1
        # a_j ... a_{i-1} spells the queue of configuration i
        assert tuple(labels[j:i]) == w


def test_oracle_matches_engine_on_corpus():
    for name in ("loop", "shuttle"):
        m = load_machine(CORPUS / "machines" / f"{name}.qm")
        spec = qm_to_stream_spec(m).spec
        v = unfold_stream(spec, [App("C")], 30)
        assert v.prefixes[App("C")] == lemma_prefix_oracle(m, 30)
