from __future__ import annotations

import json

import pytest
from conftest import CORPUS, read_spec
from helpers import replay
from machines import machine_corpus

from bigsos.behavior import StreamPrefix, TreePrefix, parse_prefix, tree_branching
from bigsos.engine import (
    Ambiguous,
    BaseStreamEnv,
    ConsistentPrefix,
    EngineError,
    InsufficientLookahead,
    NoExtension,
    Unknown,
    aggregate,
    check_axioms,
    check_extension,
    check_extension_diagram,
    check_forcedness,
    dumps,
    one_step_rho,
    unfold_lts,
    unfold_stream,
)
from bigsos.qm import QueueMachine, load_machine
from bigsos.reduction import lemma_prefix_oracle, qm_to_lts_spec, qm_to_stream_spec
from bigsos.rules import parse_spec
from bigsos.terms import App, Var, parse_term

C = App("C")


def stream(text: str) -> StreamPrefix:
    return parse_prefix(text)


# one application of the rules


def test_rho_zip():
    spec = read_spec("zip.sos")
    x = stream("x -a-> x'")
    y = stream("y -b-> y'")
    assert one_step_rho(spec, "zip", [x, y]) == {("a", App("zip", (Var("y"), Var("x'"))))}


def test_rho_drop():
    spec = read_spec("drop.sos")
    x = stream("x -a-> x' -b-> x''")
    assert one_step_rho(spec, "q", [x]) == {("b", App("q", (Var("x''"),)))}


def test_rho_lts_negative_premise():
    spec = read_spec("lts_neg.sos")
    tree = TreePrefix(Var("r"), (("a", TreePrefix(Var("x"), (), 1)),), 1)
    assert one_step_rho(spec, "q", [tree]) == {("a", App("q", (Var("x"),)))}
    blocked = TreePrefix(Var("r"), (("a", TreePrefix(Var("x"), (), 1)), ("b", TreePrefix(Var("y"), (), 1))), 1)
    assert one_step_rho(spec, "q", [blocked]) == set()


def test_rho_needs_enough_lookahead():
    spec = read_spec("drop.sos")
    with pytest.raises(InsufficientLookahead):
        one_step_rho(spec, "q", [stream("x -a-> x'")])
    with pytest.raises(InsufficientLookahead):
        one_step_rho(read_spec("lts_neg.sos"), "q", [TreePrefix(Var("r"), (), 0)])


def test_rho_stream_requires_exactly_one_pair():
    spec = parse_spec("behavior stream\nalphabet a, b\nop q/1\nrule q(x): x -a-> y => a -> q(y)\n")
    with pytest.raises(EngineError):
        one_step_rho(spec, "q", [stream("x -b-> y")])


# stream unfolding


def test_occurs_check_example():
    v = unfold_stream(read_spec("occurs.sos"), [C], 3)
    assert isinstance(v, NoExtension)
    w = v.witness
    assert w.kind == "OccursCheck" and w.position == 2
    assert w.term == App("q", (C,))
    assert w.equation_text() == "τ2 = q(τ2)"
    assert [s.rule for s in w.trace] == [0]
    assert replay(read_spec("occurs.sos"), w)


def test_ambiguity_example():
    v = unfold_stream(read_spec("ambiguous.sos"), [C], 2)
    assert isinstance(v, Ambiguous)
    assert v.term == App("q", (C,)) and v.position == 2


def test_loop_machine_matches_oracle():
    m = QueueMachine(["q1"], ["$"], "$", "q1", delta0={"q1": ("q1", "$")})
    v = unfold_stream(qm_to_stream_spec(m).spec, [C], 4)
    assert isinstance(v, ConsistentPrefix)
    assert v.prefixes[C] == lemma_prefix_oracle(m, 4)


def test_drop_over_alternating_stream():
    env = BaseStreamEnv.parse(["x=:ab"], ["a", "b"])
    v = unfold_stream(read_spec("drop.sos"), [parse_term("q(x.0)")], 3, env=env)
    assert str(v.prefixes[parse_term("q(x.0)")]) == "q(x.0) -b-> q(x.2) -b-> q(x.4) -b-> q(x.6)"


def test_zip_interleaves():
    env = BaseStreamEnv.parse(["x=:a", "y=:b"], ["a", "b"])
    t = parse_term("zip(x.0,y.0)")
    p = unfold_stream(read_spec("zip.sos"), [t], 6, env=env).prefixes[t]
    assert p.labels == ("a", "b") * 3
    assert str(p.nodes[2]) == "zip(x.1,y.1)"


def test_fuel_exhaustion_is_unknown():
    m = load_machine(CORPUS / "machines" / "shuttle.qm")
    v = unfold_stream(qm_to_stream_spec(m).spec, [C], 200, fuel=20)
    assert isinstance(v, Unknown) and v.spent >= 20


def test_deep_unfolding_does_not_overflow():
    m = load_machine(CORPUS / "machines" / "shuttle.qm")
    assert unfold_stream(qm_to_stream_spec(m).spec, [C], 5000, fuel=10**6).name == "ConsistentPrefix"
    assert unfold_lts(qm_to_lts_spec(m).spec, [C], 5000, fuel=10**6).name == "ConsistentPrefix"


def test_base_env_parsing():
    env = BaseStreamEnv.parse(["x=$:a,b"], ["$", "a", "b"])
    assert [env.label("x", k) for k in range(5)] == ["$", "a", "b", "a", "b"]
    with pytest.raises(EngineError):
        BaseStreamEnv.parse(["x=:c"], ["a"])
    with pytest.raises(EngineError):
        BaseStreamEnv({"x": ((), ())})


# LTS unfolding


def test_lts_only_rule_c():
    spec = parse_spec("behavior lts\nalphabet $\nop C/0\nop q/1\nrule C => $ -> q(C)\n")
    v = unfold_lts(spec, [C], 3)
    assert isinstance(v, ConsistentPrefix)
    tree = v.prefixes[C]
    assert [(a, s.node) for a, s in tree.children] == [("$", App("q", (C,)))]
    assert tree.children[0][1].children == ()


def test_lts_loop_tree_is_the_stream_prefix():
    m = load_machine(CORPUS / "machines" / "shuttle.qm")
    tree = unfold_lts(qm_to_lts_spec(m).spec, [C], 4).prefixes[C]
    assert tree_branching(tree) <= 1
    oracle = lemma_prefix_oracle(m, 4)
    node, path = tree, []
    while node.children:
        (a, node), = node.children
        path.append(a)
    assert tuple(path) == oracle.labels


def test_lts_clash_for_halting_machine():
    m = load_machine(CORPUS / "machines" / "count3.qm")
    spec = qm_to_lts_spec(m).spec
    v = unfold_lts(spec, [C], 10)
    assert isinstance(v, NoExtension)
    w = v.witness
    assert w.kind == "EmptyNonemptyClash"
    # the machine stops in its 6th configuration; the clash is at that node
    assert w.term == lemma_prefix_oracle(m, 6).nodes[6]
    assert w.step is not None and w.nonempty
    assert replay(spec, w)


def test_lts_negative_premise_spec():
    v = unfold_lts(read_spec("lts_neg.sos"), [parse_term("q(A)", read_spec("lts_neg.sos").signature)], 3)
    assert isinstance(v, ConsistentPrefix)


# checks on constructed prefixes


def test_diagram_self_consistency_and_negative_control():
    m = load_machine(CORPUS / "machines" / "shuttle.qm")
    spec = qm_to_stream_spec(m).spec
    v = unfold_stream(spec, [C], 12)
    assert check_extension_diagram(spec, v.entries).ok
    assert v.entries[C] == ("$", App("q_q1", (C,)))
    bad = dict(v.entries)
    lab, succ = bad[C]
    bad[C] = ("a", succ)
    report = check_extension_diagram(spec, bad)
    assert not report.ok and report.mismatches[0].startswith("C:")


def test_axioms_drop_and_zip():
    drop = read_spec("drop.sos")
    env = BaseStreamEnv.parse(["x=:ab"], ["a", "b"])
    rep = check_axioms(drop, env, [parse_term("q(x.0)"), parse_term("q(q(x.0))")], 16)
    assert rep.passed and rep.checked["iii"] >= 1 and rep.checked["iv"] >= 15
    zspec = read_spec("zip.sos")
    env = BaseStreamEnv.parse(["x=:a", "y=a:b"], ["a", "b"])
    rep = check_axioms(zspec, env, [parse_term("zip(zip(x.0,y.0),y.0)")], 16)
    assert rep.passed and rep.checked["iii"] == 1


def test_axiom_report_shape():
    drop = read_spec("drop.sos")
    env = BaseStreamEnv.parse(["x=:ab"], ["a", "b"])
    rep = check_axioms(drop, env, [parse_term("q(x.0)")], 8)
    assert set(rep.to_json()) == {"i", "ii", "iii", "iv", "naturality"}
    assert "axiom i" in str(rep)


def test_forcedness_on_constructed_prefixes():
    m = load_machine(CORPUS / "machines" / "shuttle.qm")
    for spec, fn in ((qm_to_stream_spec(m).spec, unfold_stream), (qm_to_lts_spec(m).spec, unfold_lts)):
        v = fn(spec, [C], 10)
        assert check_forcedness(spec, v) == []


def test_check_extension_verdicts():
    assert check_extension(read_spec("occurs.sos"), 3, 4).name == "NoExtension"
    assert check_extension(read_spec("ambiguous.sos"), 3, 2).name == "Ambiguous"
    v = check_extension(read_spec("drop.sos"), 3, 8)
    assert v.name == "ConsistentPrefix"
    assert v.axioms["diagram"]["mismatches"] == []
    assert all(not v.axioms[a]["failures"] for a in ("i", "ii", "iii", "iv", "naturality"))


@pytest.mark.parametrize("index", range(12))
def test_halting_machines_give_noextension_near_the_halting_step(index):
    m, k = machine_corpus()[index]
    v = check_extension(qm_to_stream_spec(m).spec, 1, k + 2)
    assert v.name == "NoExtension" and v.witness.position == k + 2
    assert replay(qm_to_stream_spec(m).spec, v.witness)


def test_parallel_seeds_match_sequential():
    spec = read_spec("drop.sos")
    zspec = read_spec("zip.sos")
    for s in (spec, zspec):
        a = check_extension(s, 2, 6, jobs=1)
        b = check_extension(s, 2, 6, jobs=2)
        assert a.name == b.name


def test_aggregate_precedence():
    amb = Ambiguous(C, 1, "x")
    unk = Unknown(5)
    assert aggregate([unk, amb]).name == "Ambiguous"
    assert aggregate([unk]).name == "Unknown"


def test_json_report_shape():
    data = json.loads(dumps(check_extension(read_spec("occurs.sos"), 3, 4)))
    assert set(data) == {"verdict", "depth", "witness", "prefixes", "axioms"}
    assert data["witness"]["equation"] == "τ2 = q(τ2)"
    assert data["witness"]["trace"][0]["entry"] == ["C", "$", "q(C)"]
