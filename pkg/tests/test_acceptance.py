"""One test per acceptance criterion; each prints a single PASS/FAIL line."""
from __future__ import annotations

import random
import time

import pytest
from conftest import read_spec
from helpers import replay
from machines import machine_corpus, random_classical
from test_rules import GOLDEN, _golden_spec, _spec

from bigsos.behavior import tree_branching
from bigsos.cli import demo_halting
from bigsos.engine import (
    BaseStreamEnv,
    ConsistentPrefix,
    check_axioms,
    check_extension,
    check_forcedness,
    unfold_stream,
)
from bigsos.qm import classical_run, classical_to_qm, dump_machine, qm_run, qm_validate
from bigsos.reduction import lemma_prefix_oracle, qm_to_lts_spec, qm_to_stream_spec
from bigsos.rules import classify_rule, classify_spec, parse_rule
from bigsos.terms import App, parse_term

C = App("C")
DEMO_FUEL = 10_000


def verdict_line(n: int, ok: bool, detail: str) -> None:
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def oracle_depth(k: int | None) -> int:
    return 50 if k is None else max(1, min(50, k))


@pytest.fixture(scope="module")
def machine_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    out = []
    for i, (m, k) in enumerate(machine_corpus()):
        path = root / f"m{i:02d}.qm"
        path.write_text(dump_machine(m), encoding="utf-8")
        out.append((path, m, k))
    return out


def test_criterion_1_occurs_check():
    start = time.perf_counter()
    v = check_extension(read_spec("occurs.sos"), 3, 4)
    elapsed = time.perf_counter() - start
    w = getattr(v, "witness", None)
    ok = (
        v.name == "NoExtension"
        and w.kind == "OccursCheck"
        and w.position == 2
        and w.term == App("q", (C,))
        and w.equation_text() == "τ2 = q(τ2)"
        and replay(read_spec("occurs.sos"), w)
        and elapsed < 1.0
    )
    verdict_line(1, ok, f"{v.name}, {w} in {elapsed:.3f}s")


def test_criterion_2_ambiguity():
    start = time.perf_counter()
    v = check_extension(read_spec("ambiguous.sos"), 3, 2)
    elapsed = time.perf_counter() - start
    ok = v.name == "Ambiguous" and v.position is not None and v.position <= 2 and elapsed < 1.0
    verdict_line(2, ok, f"{v.name} at position {v.position} in {elapsed:.3f}s")


def test_criterion_3_oracle_equivalence():
    corpus = machine_corpus()
    start = time.perf_counter()
    bad = []
    for i, (m, k) in enumerate(corpus):
        n = oracle_depth(k)
        v = unfold_stream(qm_to_stream_spec(m).spec, [C], n)
        if not isinstance(v, ConsistentPrefix) or v.prefixes[C] != lemma_prefix_oracle(m, n):
            bad.append(i)
    elapsed = time.perf_counter() - start
    halting = sum(k is not None for _, k in corpus)
    ok = len(corpus) >= 20 and 0 < halting < len(corpus) and not bad and elapsed < 10.0
    verdict_line(3, ok, f"{len(corpus) - len(bad)}/{len(corpus)} machines ({halting} halting) in {elapsed:.2f}s")


def _demo_corpus(machine_files, target):
    agree, problems = 0, []
    for path, m, k in machine_files:
        r = demo_halting(path, DEMO_FUEL, target)
        agree += r["agree"]
        v = r["verdict"]
        if k is not None:
            w = v.witness
            kind = "OccursCheck" if target == "stream" else "EmptyNonemptyClash"
            spec = (qm_to_stream_spec if target == "stream" else qm_to_lts_spec)(m).spec
            if w.position != k + 2 or (target == "lts" and w.kind != kind) or not replay(spec, w):
                problems.append(f"{path.name}: {w}")
        else:
            small = check_extension((qm_to_stream_spec if target == "stream" else qm_to_lts_spec)(m).spec, 1, 8)
            if small.name != "ConsistentPrefix":
                problems.append(f"{path.name}: depth 8 gave {small.name}")
            elif target == "lts" and any(tree_branching(t) > 1 for t in small.prefixes.values()):
                problems.append(f"{path.name}: branching tree")
    return agree, problems


def test_criterion_4_halting_stream(machine_files):
    start = time.perf_counter()
    agree, problems = _demo_corpus(machine_files, "stream")
    ok = agree == len(machine_files) and not problems
    verdict_line(4, ok, f"{agree}/{len(machine_files)} agree at fuel {DEMO_FUEL}, witness at k+2"
                 f" ({time.perf_counter() - start:.1f}s){'; ' + '; '.join(problems) if problems else ''}")


def test_criterion_5_halting_lts(machine_files):
    start = time.perf_counter()
    agree, problems = _demo_corpus(machine_files, "lts")
    ok = agree == len(machine_files) and not problems
    verdict_line(5, ok, f"{agree}/{len(machine_files)} agree at fuel {DEMO_FUEL}, clash witnesses, degenerate trees"
                 f" ({time.perf_counter() - start:.1f}s){'; ' + '; '.join(problems) if problems else ''}")


def _axiom_cases():
    zip_env = BaseStreamEnv.parse(["x=:a", "y=:b", "z=ab:b"], ["a", "b"])
    drop_env = BaseStreamEnv.parse(["x=:ab", "y=b:aab"], ["a", "b"])
    zip_terms = [parse_term(t) for t in ("zip(x.0,y.0)", "zip(zip(x.0,y.0),z.0)", "zip(y.0,zip(x.0,x.0))")]
    drop_terms = [parse_term(t) for t in ("q(x.0)", "q(q(x.0))", "q(y.0)")]
    return [("zip", read_spec("zip.sos"), zip_env, zip_terms), ("drop", read_spec("drop.sos"), drop_env, drop_terms)]


def test_criterion_6_axioms():
    start = time.perf_counter()
    reports = {name: check_axioms(spec, env, terms, 16) for name, spec, env, terms in _axiom_cases()}
    elapsed = time.perf_counter() - start
    zenv = BaseStreamEnv.parse(["x=:a", "y=:b"], ["a", "b"])
    zip_labels = unfold_stream(read_spec("zip.sos"), [parse_term("zip(x.0,y.0)")], 16, env=zenv)
    denv = BaseStreamEnv.parse(["x=:ab"], ["a", "b"])
    drop_labels = unfold_stream(read_spec("drop.sos"), [parse_term("q(x.0)")], 16, env=denv)
    ok = (
        all(r.passed and all(r.checked[a] > 0 for a in ("i", "ii", "iii", "iv", "naturality")) for r in reports.values())
        and zip_labels.prefixes[parse_term("zip(x.0,y.0)")].labels == ("a", "b") * 8
        and drop_labels.prefixes[parse_term("q(x.0)")].labels == ("b",) * 16
        and elapsed < 2.0
    )
    counts = ", ".join(f"{n}: {sum(r.checked.values())} checks" for n, r in reports.items())
    verdict_line(6, ok, f"{counts} in {elapsed:.2f}s")


def test_criterion_7_classifier_golden():
    total = hits = 0
    for case in GOLDEN["rules"]:
        spec = _spec(case["behavior"], case["alphabet"], case["ops"])
        total += 1
        hits += sorted(classify_rule(spec, parse_rule(case["rule"], spec))) == case["formats"]
    for case in GOLDEN["specs"]:
        report = classify_spec(_golden_spec(case))
        total += 1
        hits += report.verdict == case["verdict"] and all(report.per_op[o] == c for o, c in case.get("per_op", {}).items())
    compiled = [classify_spec(qm_to_stream_spec(m).spec).verdict for m, _ in machine_corpus()]
    total += 1
    hits += set(compiled) == {"mixed-GSOS"}
    verdict_line(7, hits == total, f"{hits}/{total} golden cases match")


def test_criterion_8_classical_cosimulation():
    agree = halting = invalid = 0
    n = 40
    for seed in range(n):
        cm = random_classical(random.Random(seed))
        m = classical_to_qm(cm)
        invalid += bool(qm_validate(m))
        c = classical_run(cm, 200)
        halting += c.halted
        # a compiled machine needs at least as many steps as the classical one
        compiled_halts = qm_run(m, fuel=200 * 6 + 50).halted if c.halted else qm_run(m, fuel=200).halted
        agree += compiled_halts == c.halted
    ok = agree == n and invalid == 0 and 0 < halting < n
    verdict_line(8, ok, f"{agree}/{n} agree ({halting} halting), {invalid} invalid compiled machines")


def test_criterion_9_forcedness():
    checked, problems = 0, []

    def check(spec, v, env=None):
        nonlocal checked
        assert isinstance(v, ConsistentPrefix), v
        checked += len(v.entries)
        problems.extend(check_forcedness(spec, v, env))

    for m, k in machine_corpus():
        spec = qm_to_stream_spec(m).spec
        check(spec, unfold_stream(spec, [C], oracle_depth(k)))
        if k is None:
            for compile_ in (qm_to_stream_spec, qm_to_lts_spec):
                s = compile_(m).spec
                check(s, check_extension(s, 1, 8))
    for _, spec, env, terms in _axiom_cases():
        check(spec, unfold_stream(spec, terms, 16, env=env), env)
    verdict_line(9, not problems, f"{checked} entries re-derived, {len(problems)} mismatch(es)")
