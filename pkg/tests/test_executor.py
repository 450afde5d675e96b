"""Physical operators, plan interpretation, the oracle and the size bounds."""

from __future__ import annotations

import itertools
import random

import pytest

from yplus.errors import MissingRelation
from yplus.executor import (
    exec_join,
    exec_materialize,
    exec_select,
    exec_semijoin,
    full_join_size,
    measure_bounds,
    oracle,
    participating,
    run_plan,
)
from yplus.generate import random_acyclic_query, random_instance, random_relation, star_instance
from yplus.plan_ir import PlanIR, Project
from yplus.planner import plan, plan_standard, plan_with_tree
from yplus.query import make_query, parse_predicates
from yplus.relation import AnnotatedRelation, same_result
from yplus.semiring import BOOLEAN, MAX_PLUS, SUM_PRODUCT

from conftest import T1


def naive_oracle(query, relations):
    """Cartesian product of all relations, filtered on agreement, then grouped."""
    sr = query.semiring
    lists = []
    for atom in query.atoms:
        rel = relations[atom.name]
        preds = query.selections_for(atom.name)
        rows = []
        for row, ann in zip(rel.rows, rel.annotation_list(sr)):
            if all(p.compile(rel.schema)(row) for p in preds):
                rows.append((dict(zip(rel.schema, row)), ann))
        lists.append(rows)
    out: dict = {}
    for combo in itertools.product(*lists):
        binding: dict = {}
        ok = True
        for b, _ in combo:
            for k, v in b.items():
                if binding.setdefault(k, v) != v:
                    ok = False
        if not ok:
            continue
        v = sr.one
        for _, a in combo:
            v = sr.times(v, a)
        key = tuple(binding[x] for x in query.output)
        out[key] = sr.plus(out[key], v) if key in out else v
    return AnnotatedRelation("naive", query.output, list(out), list(out.values()))


def nested_loop_join(left, right, sr):
    shared = [a for a in left.schema if a in right.schema]
    extra = [a for a in right.schema if a not in left.schema]
    rows, anns = [], []
    for lr, la in zip(left.rows, left.annotation_list(sr)):
        ld = dict(zip(left.schema, lr))
        for rr, ra in zip(right.rows, right.annotation_list(sr)):
            rd = dict(zip(right.schema, rr))
            if all(ld[a] == rd[a] for a in shared):
                rows.append(lr + tuple(rd[a] for a in extra))
                anns.append(sr.times(la, ra))
    return AnnotatedRelation("J", left.schema + tuple(extra), rows, anns)


def test_appendix_join_step():
    r1 = AnnotatedRelation("R1", ("x1", "x2", "x4", "x3"), [(4, 1, 1, 1), (6, 1, 2, 2)], [3, 5])
    tv1 = AnnotatedRelation("T", ("x3", "x4"), [(1, 1), (1, 2), (2, 2)], [6, 7, 8])
    j = exec_join(r1, tv1, SUM_PRODUCT)
    assert j.as_dict(SUM_PRODUCT, ("x1", "x2", "x4", "x3")) == {(4, 1, 1, 1): 18, (6, 1, 2, 2): 40}


def test_join_with_empty_is_empty():
    r = AnnotatedRelation("R", ("x",), [(1,)], [1])
    assert len(exec_join(r, AnnotatedRelation("E", ("x",), [], []), SUM_PRODUCT)) == 0


def test_random_joins_match_nested_loops():
    for seed in range(40):
        rng = random.Random(seed)
        a = random_relation("A", ("x", "y"), 10, 4, rng, distinct=False)
        b = random_relation("B", ("y", "z"), 10, 4, rng, distinct=False)
        for sr in (SUM_PRODUCT, MAX_PLUS):
            got = exec_join(a, b, sr)
            want = nested_loop_join(a, b, sr)
            assert sorted(zip(got.rows, got.annotations)) == sorted(zip(want.rows, want.annotations))


def test_semijoin_examples():
    r3 = AnnotatedRelation("R3", ("x3", "x4"), [(1, 1), (1, 2), (2, 2)], [6, 7, 8])
    r4 = AnnotatedRelation("R4", ("x3", "x6"), [(1, "a"), (2, "b"), (3, "c")], [1, 1, 1])
    assert exec_semijoin(r3, r4).as_dict(SUM_PRODUCT) == r3.as_dict(SUM_PRODUCT)
    assert exec_semijoin(r4, r3).rows == ((1, "a"), (2, "b"))
    assert exec_semijoin(r3, r3).rows == r3.rows
    for seed in range(20):
        rng = random.Random(seed)
        a = random_relation("A", ("x", "y"), 15, 5, rng)
        b = random_relation("B", ("y",), 3, 5, rng)
        keys = {r[0] for r in b.rows}
        assert exec_semijoin(a, b).rows == tuple(r for r in a.rows if r[1] in keys)


def test_select_examples():
    r = AnnotatedRelation("R", ("x4", "x4'"), [(1, 1), (1, 2), (3, 3)], [1, 2, 3])
    eq = exec_select(r, parse_predicates("x4 = x4'"))
    assert eq.rows == ((1, 1), (3, 3)) and eq.annotations == (1, 3)
    assert exec_select(r, parse_predicates("x4 >= 0")).rows == r.rows
    rng = random.Random(1)
    s = random_relation("S", ("a",), 50, 100, rng)
    got = exec_select(s, parse_predicates("a BETWEEN 10 AND 40"))
    assert set(got.rows) == {row for row in s.rows if 10 <= row[0] <= 40}


def test_materialize_unit_copy():
    r = AnnotatedRelation("R", ("x",), [(1,), (1,), (2,)], [4, 5, 6])
    u = exec_materialize(r, True, SUM_PRODUCT, "R_1")
    assert u.rows == ((1,), (2,)) and u.annotations == (1, 1)
    assert exec_materialize(r, False, SUM_PRODUCT, "C").rows == r.rows


def test_appendix_end_to_end(q1, q1rels, tree_of):
    rel, report = run_plan(plan_with_tree(q1, tree_of(T1)), q1rels, q1.semiring)
    want = {(4, 1, "ARGENTINA"): 18, (6, 1, "BRAZIL"): 40}
    assert rel.as_dict(SUM_PRODUCT, ("x1", "x2", "x8")) == want
    assert oracle(q1, q1rels).as_dict(SUM_PRODUCT, ("x1", "x2", "x8")) == want
    assert report.result_rows == 2 and len(report.steps) == 9


def test_empty_plan_echoes_input():
    r = AnnotatedRelation("R", ("x",), [(1,)], [2])
    rel, report = run_plan(PlanIR([], "R"), {"R": r}, SUM_PRODUCT)
    assert rel.rows == r.rows and report.steps == []


def test_missing_relation():
    with pytest.raises(MissingRelation):
        run_plan(PlanIR([Project("Q", "R", ("x",))], "Q"), {}, SUM_PRODUCT)


def test_oracle_matches_naive_product():
    for seed in range(80):
        sr = (SUM_PRODUCT, MAX_PLUS, BOOLEAN)[seed % 3]
        q = random_acyclic_query(seed, relations=(2, 4), attrs=(1, 3), semiring=sr)
        rels = random_instance(q, seed, rows=(1, 8), domain=3)
        assert same_result(oracle(q, rels), naive_oracle(q, rels), sr), seed


def test_oracle_empty_output_folds():
    q = make_query([("R", ("x",), "v"), ("S", ("x",), "v")], [])
    rels = {"R": AnnotatedRelation("R", ("x",), [(1,), (2,)], [2, 3]),
            "S": AnnotatedRelation("S", ("x",), [(1,), (2,)], [5, 7])}
    assert oracle(q, rels).as_dict(SUM_PRODUCT) == {(): 2 * 5 + 3 * 7}


def test_full_join_size_and_participation(q1, q1rels):
    assert full_join_size(q1, q1rels) == 2
    assert participating(q1, q1rels, "R5") == {(1, 1), (2, 2)}


def test_star_bounds_demo():
    q, rels = star_instance(1000)
    n = sum(len(r) for r in rels.values())
    assert n == 2001 and full_join_size(q, rels) == 10**6
    _, std = run_plan(plan_standard(q), rels, SUM_PRODUCT)
    rel, yp = run_plan(plan(q), rels, SUM_PRODUCT)
    assert std.max_intermediate == 10**6
    assert yp.max_intermediate <= n
    assert std.max_intermediate / yp.max_intermediate >= 400
    assert same_result(rel, oracle(q, rels), SUM_PRODUCT)


def test_bounds_hold_on_random_instances():
    from yplus.hypergraph import classify

    for seed in range(60):
        q = random_acyclic_query(seed)
        rels = random_instance(q, seed, rows=(1, 60))
        rel, report = run_plan(plan(q), rels, SUM_PRODUCT)
        n = sum(len(r) for r in rels.values())
        v = measure_bounds(report, n, len(rel), full_join_size(q, rels), classify(q).free_connex)
        assert v.ok, v.violations


def test_report_metrics(q1, q1rels, tree_of):
    _, report = run_plan(plan_with_tree(q1, tree_of(T1)), q1rels, q1.semiring)
    assert report.total_intermediate_rows == sum(s.out_rows for s in report.steps)
    assert report.rows_touched >= report.total_intermediate_rows
    assert "max_intermediate=" in report.to_text()
    assert report.as_dict()["op_counts"]["semijoin"] == 3
