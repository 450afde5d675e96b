"""Candidate join trees, filtered and ranked by the structural pruning rules."""

from __future__ import annotations

from ..errors import NoValidTree
from ..hypergraph import (
    DEFAULT_TREE_LIMIT,
    JoinTree,
    build_hypergraph,
    classify_hypergraph,
    dominating_relations,
    enumerate_join_trees,
    find_connex_subset,
)
from ..query import ConjunctiveQuery
from .stats import Stats

DEFAULT_SIZE = 1000


def tree_rank_key(tree: JoinTree, sizes: dict[int, float]) -> tuple:
    """Larger relations near the top first, then lower height, then the canonical encoding."""
    weight = sum(sizes[n] * tree.depth(n) for n in tree.nodes)
    return (weight, tree.height(), tree.encoding())


def enumerate_candidate_trees(
    query: ConjunctiveQuery, stats: Stats | None = None, limit: int = DEFAULT_TREE_LIMIT
) -> list[JoinTree]:
    """Valid join trees of an acyclic query, best first.

    Trees of the query's best class come first and are the only ones kept:
    dominating roots for relation-dominated queries, trees with a connex
    subset for free-connex ones.  Among those, trees whose root holds an
    output attribute are kept when any exists.  The rest are ordered by
    ``tree_rank_key``.
    """
    h = build_hypergraph(query)
    trees = enumerate_join_trees(h, limit)
    if not trees:
        raise NoValidTree("no join tree found")
    out = query.output_set
    attrs = h.edge_map
    doms = set(dominating_relations(h, out))
    if doms:
        pool = [t for t in trees if t.root in doms]
        if not pool:
            pool = [classify_hypergraph(h, out, limit).tree]
    else:
        pool = []
        for t in trees:
            connex = find_connex_subset(t, h, out)
            if connex is not None:
                pool.append(t.with_connex(connex))
        if not pool:
            cls = classify_hypergraph(h, out, limit)
            pool = [cls.tree] if cls.free_connex else trees
    with_out = [t for t in pool if attrs[t.root] & out]
    pool = with_out or pool
    sizes = {
        i: float(stats.size(a.name, DEFAULT_SIZE)) if stats is not None else float(DEFAULT_SIZE)
        for i, a in enumerate(query.atoms)
    }
    return sorted(pool, key=lambda t: tree_rank_key(t, sizes))
