"""GYO reduction, join-tree enumeration and query classification."""

from __future__ import annotations

import itertools
import random

import pytest

from yplus.errors import CyclicQuery, InvalidTree
from yplus.generate import random_acyclic_query
from yplus.hypergraph import (
    JoinTree,
    build_hypergraph,
    check_join_tree,
    classify,
    enumerate_join_trees,
    enumerate_unrooted,
    find_connex_subset,
    gyo_reduce,
)
from yplus.query import make_query

from conftest import T1, T2, q_with_output

TRIANGLE = [("R", ("x1", "x2")), ("S", ("x2", "x3")), ("T", ("x3", "x1"))]
Q5_ATOMS = [
    ("R1", ("x1", "x2")),
    ("R2", ("x2", "x3", "x8")),
    ("R3", ("x3", "x4")),
    ("R4", ("x4", "x5", "x6")),
    ("R5", ("x1", "x4")),
    ("R6", ("x6", "x7")),
]


def brute_join_trees(h) -> set[frozenset]:
    """Every spanning tree over the relations that has the connectedness property."""
    attrs = h.edge_map
    nodes = sorted(attrs)
    pairs = list(itertools.combinations(nodes, 2))
    found = set()
    for edges in itertools.combinations(pairs, len(nodes) - 1):
        adj = {n: set() for n in nodes}
        for a, b in edges:
            adj[a].add(b)
            adj[b].add(a)
        seen, todo = {nodes[0]}, [nodes[0]]
        while todo:
            for m in adj[todo.pop()] - seen:
                seen.add(m)
                todo.append(m)
        if len(seen) != len(nodes):
            continue
        ok = True
        for x in h.vertices:
            holders = {n for n in nodes if x in attrs[n]}
            start = next(iter(holders))
            reach, todo = {start}, [start]
            while todo:
                for m in adj[todo.pop()] & holders - reach:
                    reach.add(m)
                    todo.append(m)
            ok &= reach == holders
        if ok:
            found.add(frozenset(frozenset(e) for e in edges))
    return found


def random_hypergraph_query(seed: int):
    rng = random.Random(seed)
    n = rng.randint(2, 5)
    universe = [f"x{i}" for i in range(1, rng.randint(2, 6) + 1)]
    atoms = [(f"R{i}", tuple(rng.sample(universe, rng.randint(1, min(3, len(universe))))))
             for i in range(1, n + 1)]
    return make_query(atoms, [])


def test_q1_hypergraph_shape(q1):
    h = build_hypergraph(q1)
    assert len(h.edges) == 6 and len(h.vertices) == 8


def test_small_hypergraphs():
    assert len(build_hypergraph(make_query([("R", ("x",))], [])).edges) == 1
    h = build_hypergraph(make_query(TRIANGLE, []))
    assert len(h.edges) == 3 and len(h.vertices) == 3


def test_gyo_q1_acyclic_triangle_and_q5_cyclic(q1):
    assert gyo_reduce(build_hypergraph(q1)).acyclic
    assert gyo_reduce(build_hypergraph(make_query(TRIANGLE, []))).residual
    res = gyo_reduce(build_hypergraph(make_query(Q5_ATOMS, ["x5"])))
    assert set(res.residual) == {0, 1, 2, 4}


def test_gyo_agrees_with_tree_existence():
    # acyclic exactly when some spanning tree has the connectedness property
    for seed in range(300):
        h = build_hypergraph(random_hypergraph_query(seed))
        assert gyo_reduce(h).acyclic == bool(brute_join_trees(h)), seed


def test_enumeration_matches_brute_force():
    for seed in range(150):
        h = build_hypergraph(random_hypergraph_query(seed))
        if not gyo_reduce(h).acyclic:
            with pytest.raises(CyclicQuery):
                enumerate_join_trees(h)
            continue
        assert set(enumerate_unrooted(h)) == brute_join_trees(h), seed
        rooted = enumerate_join_trees(h)
        assert len(rooted) == len(brute_join_trees(h)) * len(h.edges)


def test_q1_includes_t1_and_t2(q1, tree_of):
    encodings = {t.encoding() for t in enumerate_join_trees(build_hypergraph(q1))}
    assert tree_of(T1).encoding() in encodings
    assert tree_of(T2).encoding() in encodings


def test_two_relations_have_two_rooted_trees():
    q = make_query([("R1", ("x1", "x2")), ("R2", ("x2", "x3"))], [])
    assert sorted(t.root for t in enumerate_join_trees(build_hypergraph(q))) == [0, 1]


def test_random_trees_are_valid():
    for seed in range(40):
        q = random_acyclic_query(seed, relations=(5, 5))
        h = build_hypergraph(q)
        for t in enumerate_join_trees(h)[:50]:
            assert check_join_tree(t, h)


def test_connex_subset_examples(tree_of):
    q2 = q_with_output(["x1", "x2", "x3", "x5", "x6"])
    h = build_hypergraph(q2)
    sub = find_connex_subset(tree_of(T2), h, q2.output)
    assert sub is not None and 0 in sub
    # R1 and R3 of T1 meet on x4, which is not an output attribute
    assert find_connex_subset(tree_of(T1), h, q2.output) is None
    assert find_connex_subset(tree_of(T1), h, ()) == frozenset({tree_of(T1).root})


def test_connex_subset_conditions():
    for seed in range(60):
        q = random_acyclic_query(seed)
        h = build_hypergraph(q)
        attrs = h.edge_map
        out = q.output_set
        for t in enumerate_join_trees(h)[:30]:
            sub = find_connex_subset(t, h, out)
            if sub is None:
                continue
            assert out <= frozenset().union(*(attrs[n] for n in sub))
            for n in sub:
                p = t.parent[n]
                if p is not None:
                    assert p in sub and attrs[n] & attrs[p] <= out


def test_classification_examples(q1):
    names = [a.name for a in q1.atoms]
    c1 = classify(q1)
    assert c1.kind == "acyclic" and not c1.free_connex
    c2 = classify(q_with_output(["x1", "x2", "x3", "x5", "x6"]))
    assert c2.kind == "free_connex"
    c3 = classify(q_with_output(["x1"]))
    assert c3.describe(names) == "relation-dominated, root R1"
    assert classify(make_query(TRIANGLE, [])).kind == "cyclic"


def test_class_chain_on_random_queries():
    for seed in range(200):
        q = random_acyclic_query(seed)
        c = classify(q)
        h = build_hypergraph(q)
        dominated = any(q.output_set <= a for _, a in h.edges)
        assert (c.kind == "relation_dominated") == dominated
        if c.free_connex:
            assert find_connex_subset(c.tree, h, q.output_set) is not None
        assert check_join_tree(c.tree, h)


def test_invalid_trees_rejected():
    with pytest.raises(InvalidTree):
        JoinTree({0: None, 1: None})
    with pytest.raises(InvalidTree):
        JoinTree({0: 1, 1: 0})


def test_free_connex_matches_exhaustive_search():
    for seed in range(150):
        q = random_acyclic_query(seed, relations=(2, 5))
        h = build_hypergraph(q)
        any_connex = any(
            find_connex_subset(t, h, q.output_set) is not None for t in enumerate_join_trees(h)
        )
        assert classify(q).free_connex == any_connex, seed
