"""Query hypergraphs, GYO reduction, join trees and query classification."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import CyclicQuery, InvalidTree
from .query import ConjunctiveQuery

DEFAULT_TREE_LIMIT = 10_000


@dataclass(frozen=True)
class Hypergraph:
    """Edges are ``(relation id, attribute set)``; ids index the query's atoms."""

    edges: tuple[tuple[int, frozenset[str]], ...]
    names: tuple[str, ...] = ()

    @property
    def vertices(self) -> frozenset[str]:
        return frozenset().union(*(e for _, e in self.edges)) if self.edges else frozenset()

    def attrs(self, i: int) -> frozenset[str]:
        return self.edge_map[i]

    @property
    def edge_map(self) -> dict[int, frozenset[str]]:
        return dict(self.edges)

    def name(self, i: int) -> str:
        return self.names[i] if i < len(self.names) else f"E{i}"

    def restrict(self, ids: Iterable[int]) -> "Hypergraph":
        keep = set(ids)
        return Hypergraph(tuple(e for e in self.edges if e[0] in keep), self.names)


def build_hypergraph(query: ConjunctiveQuery) -> Hypergraph:
    return Hypergraph(
        tuple((i, a.attr_set) for i, a in enumerate(query.atoms)),
        tuple(a.name for a in query.atoms),
    )


@dataclass(frozen=True)
class GYOResult:
    residual: tuple[int, ...]
    trace: tuple[tuple[int, int | None], ...]

    @property
    def acyclic(self) -> bool:
        return not self.residual


def _witnesses(ear: int, live: Sequence[int], attrs: Mapping[int, frozenset]) -> list[int]:
    others = [j for j in live if j != ear]
    shared = frozenset().union(*(attrs[j] for j in others)) & attrs[ear] if others else frozenset()
    return [w for w in others if shared <= attrs[w]]


def gyo_reduce(h: Hypergraph) -> GYOResult:
    """Remove ears (lowest id first) until none is left.

    An ear is an edge whose attributes shared with the remaining edges all
    lie in one other edge, its witness.  The final edge is removed with
    witness ``None``.  The hypergraph is acyclic iff the residual is empty.
    """
    attrs = h.edge_map
    live = sorted(attrs)
    trace = []
    while len(live) > 1:
        for e in live:
            ws = _witnesses(e, live, attrs)
            if ws:
                trace.append((e, ws[0]))
                live.remove(e)
                break
        else:
            return GYOResult(tuple(live), tuple(trace))
    if live:
        trace.append((live[0], None))
    return GYOResult((), tuple(trace))


def is_acyclic(h: Hypergraph) -> bool:
    return gyo_reduce(h).acyclic


@dataclass(frozen=True)
class JoinTree:
    """A rooted tree over relation ids, optionally with a connex subset."""

    parent: Mapping[int, int | None]
    connex: frozenset[int] | None = None
    _children: dict = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "parent", dict(self.parent))
        roots = [n for n, p in self.parent.items() if p is None]
        if len(roots) != 1:
            raise InvalidTree(f"a join tree needs exactly one root, found {roots}")
        kids: dict[int, list[int]] = {n: [] for n in self.parent}
        for n, p in self.parent.items():
            if p is not None:
                if p not in kids:
                    raise InvalidTree(f"parent {p} of {n} is not a node")
                kids[p].append(n)
        for v in kids.values():
            v.sort()
        object.__setattr__(self, "_children", kids)
        seen = {roots[0]}
        todo = [roots[0]]
        while todo:
            for c in kids[todo.pop()]:
                seen.add(c)
                todo.append(c)
        if len(seen) != len(self.parent):
            raise InvalidTree("parent map contains a cycle or a detached part")

    def __hash__(self):
        return hash((self.encoding(), self.connex))

    @property
    def nodes(self) -> tuple[int, ...]:
        return tuple(sorted(self.parent))

    @property
    def root(self) -> int:
        return next(n for n, p in self.parent.items() if p is None)

    def children(self, n: int) -> list[int]:
        return list(self._children[n])

    def neighbours(self, n: int) -> list[int]:
        p = self.parent[n]
        return self.children(n) + ([p] if p is not None else [])

    def depth(self, n: int) -> int:
        d = 0
        while self.parent[n] is not None:
            n = self.parent[n]
            d += 1
        return d

    def height(self) -> int:
        return max(self.depth(n) for n in self.parent)

    def post_order(self) -> list[int]:
        out: list[int] = []

        def visit(n):
            for c in self._children[n]:
                visit(c)
            out.append(n)

        visit(self.root)
        return out

    def pre_order(self) -> list[int]:
        out: list[int] = []

        def visit(n):
            out.append(n)
            for c in self._children[n]:
                visit(c)

        visit(self.root)
        return out

    def path_from_root(self, n: int) -> list[int]:
        path = [n]
        while self.parent[n] is not None:
            n = self.parent[n]
            path.append(n)
        return path[::-1]

    def undirected_edges(self) -> frozenset[frozenset[int]]:
        return frozenset(frozenset((n, p)) for n, p in self.parent.items() if p is not None)

    def encoding(self) -> tuple:
        """Canonical encoding used for deterministic ordering."""
        return tuple(sorted((n, -1 if p is None else p) for n, p in self.parent.items()))

    def rerooted(self, root: int) -> "JoinTree":
        return tree_from_edges(self.nodes, self.undirected_edges(), root)

    def with_connex(self, connex: frozenset[int] | None) -> "JoinTree":
        return JoinTree(self.parent, connex)

    def dump(self, attrs: Mapping[int, Iterable[str]] | None = None, names=None) -> str:
        """Indented text rendering: ``name [attrs] *`` with * marking the connex subset."""
        lines = []

        def visit(n, level):
            label = names[n] if names is not None else f"R{n}"
            text = "  " * level + label
            if attrs is not None:
                text += " [" + ", ".join(sorted(attrs[n], key=_natural)) + "]"
            if self.connex is not None and n in self.connex:
                text += " *"
            lines.append(text)
            for c in self._children[n]:
                visit(c, level + 1)

        visit(self.root, 0)
        return "\n".join(lines)


def _natural(s: str):
    head = s.rstrip("0123456789'")
    tail = s[len(head):].rstrip("'")
    return (head, int(tail) if tail else -1, s)


def tree_from_edges(nodes: Iterable[int], edges: Iterable[Iterable[int]], root: int) -> JoinTree:
    adj: dict[int, list[int]] = {n: [] for n in nodes}
    for e in edges:
        a, b = tuple(e)
        adj[a].append(b)
        adj[b].append(a)
    parent = {root: None}
    todo = deque([root])
    while todo:
        n = todo.popleft()
        for m in sorted(adj[n]):
            if m not in parent:
                parent[m] = n
                todo.append(m)
    if len(parent) != len(adj):
        raise InvalidTree("edges do not span every node")
    return JoinTree(parent)


def check_join_tree(tree: JoinTree, h: Hypergraph) -> bool:
    """Connectedness property, checked by BFS per attribute."""
    attrs = h.edge_map
    if set(tree.parent) != set(attrs):
        return False
    for x in h.vertices:
        holders = {n for n in attrs if x in attrs[n]}
        start = next(iter(holders))
        seen = {start}
        todo = [start]
        while todo:
            n = todo.pop()
            for m in tree.neighbours(n):
                if m in holders and m not in seen:
                    seen.add(m)
                    todo.append(m)
        if seen != holders:
            return False
    return True


def tree_from_gyo(h: Hypergraph, root: int | None = None) -> JoinTree:
    result = gyo_reduce(h)
    if not result.acyclic:
        raise CyclicQuery(f"hypergraph is cyclic; residual edges {list(result.residual)}")
    edges = [(e, w) for e, w in result.trace if w is not None]
    last = result.trace[-1][0]
    return tree_from_edges([e for e, _ in result.trace], edges, last if root is None else root)


def enumerate_unrooted(h: Hypergraph, limit: int = DEFAULT_TREE_LIMIT) -> list[frozenset]:
    """All join trees as sets of undirected edges, by recursive ear removal.

    In any join tree a leaf is an ear of the hypergraph with its neighbour as
    witness, and removing it leaves a join tree of the rest.  Subproblem
    results are capped at ``limit``.
    """
    attrs = h.edge_map
    memo: dict[frozenset, list[frozenset]] = {}

    def trees(live: frozenset) -> list[frozenset]:
        if live in memo:
            return memo[live]
        if len(live) == 1:
            memo[live] = [frozenset()]
            return memo[live]
        found: dict[frozenset, None] = {}
        order = sorted(live)
        for e in order:
            ws = _witnesses(e, order, attrs)
            if not ws:
                continue
            for sub in trees(live - {e}):
                for w in ws:
                    found.setdefault(sub | {frozenset((e, w))})
                    if len(found) >= limit:
                        break
                if len(found) >= limit:
                    break
            if len(found) >= limit:
                break
        memo[live] = list(found)
        return memo[live]

    if not attrs:
        return []
    return trees(frozenset(attrs))


def enumerate_join_trees(h: Hypergraph, limit: int = DEFAULT_TREE_LIMIT) -> list[JoinTree]:
    """All rooted join trees (every unrooted tree under every root), sorted canonically."""
    if not gyo_reduce(h).acyclic:
        raise CyclicQuery("join trees exist only for acyclic hypergraphs")
    nodes = sorted(h.edge_map)
    out = []
    # cap unrooted trees so every kept tree appears under every root
    for edges in enumerate_unrooted(h, max(1, limit // len(nodes))):
        for r in nodes:
            out.append(tree_from_edges(nodes, edges, r))
    out.sort(key=JoinTree.encoding)
    return out


def find_connex_subset(
    tree: JoinTree, h: Hypergraph, output: Iterable[str]
) -> frozenset[int] | None:
    """Minimal root-containing subtree meeting both free-connex conditions, if any."""
    attrs = h.edge_map
    out = frozenset(output)
    root = tree.root
    eligible = {root}
    for n in tree.pre_order():
        p = tree.parent[n]
        if p is not None and p in eligible and attrs[n] & attrs[p] <= out:
            eligible.add(n)
    subset = {root}
    for x in out:
        holders = [n for n in tree.parent if x in attrs[n]]
        if not holders:
            return None
        top = min(holders, key=tree.depth)
        if top not in eligible:
            return None
        subset.update(tree.path_from_root(top))
    return frozenset(subset)


@dataclass(frozen=True)
class QueryClass:
    kind: str  # relation_dominated | free_connex | acyclic | cyclic
    tree: JoinTree | None = None
    root: int | None = None

    @property
    def acyclic(self) -> bool:
        return self.kind != "cyclic"

    @property
    def free_connex(self) -> bool:
        return self.kind in ("relation_dominated", "free_connex")

    def describe(self, names: Sequence[str]) -> str:
        if self.kind == "relation_dominated":
            return f"relation-dominated, root {names[self.root]}"
        return self.kind.replace("_", "-")


def dominating_relations(h: Hypergraph, output: Iterable[str]) -> list[int]:
    out = frozenset(output)
    return [i for i, a in h.edges if out <= a]


def _constructive_free_connex(h: Hypergraph, output: frozenset) -> JoinTree | None:
    """Build a free-connex tree from a join tree of ``H + [O]`` rooted at ``[O]``."""
    attrs = h.edge_map
    o_id = max(attrs) + 1
    aug = Hypergraph(h.edges + ((o_id, output),))
    res = gyo_reduce(aug)
    if not res.acyclic:
        return None
    t = tree_from_gyo(aug).rerooted(o_id)
    top = t.children(o_id)
    sub = h.restrict(top)
    if not gyo_reduce(sub).acyclic:
        return None
    inner = tree_from_gyo(sub, root=top[0])
    parent = dict(inner.parent)
    for n, p in t.parent.items():
        if n != o_id and n not in parent:
            parent[n] = p
    tree = JoinTree(parent)
    if not check_join_tree(tree, h):
        return None
    connex = find_connex_subset(tree, h, output)
    return tree.with_connex(connex) if connex is not None else None


def free_connex_tree(
    h: Hypergraph, output: Iterable[str], limit: int = DEFAULT_TREE_LIMIT
) -> JoinTree | None:
    output = frozenset(output)
    if not h.edges:
        return None
    o_id = max(h.edge_map) + 1
    if output and not gyo_reduce(Hypergraph(h.edges + ((o_id, output),))).acyclic:
        return None  # H + [O] cyclic: not free-connex
    tree = _constructive_free_connex(h, output)
    if tree is not None:
        return tree
    for t in enumerate_join_trees(h, limit):
        connex = find_connex_subset(t, h, output)
        if connex is not None:
            return t.with_connex(connex)
    return None


def classify_hypergraph(
    h: Hypergraph, output: Iterable[str], limit: int = DEFAULT_TREE_LIMIT
) -> QueryClass:
    output = frozenset(output)
    if not gyo_reduce(h).acyclic:
        return QueryClass("cyclic")
    doms = dominating_relations(h, output)
    if doms:
        tree = tree_from_gyo(h, root=doms[0])
        return QueryClass(
            "relation_dominated", tree.with_connex(find_connex_subset(tree, h, output)), doms[0]
        )
    tree = free_connex_tree(h, output, limit)
    if tree is not None:
        return QueryClass("free_connex", tree, tree.root)
    tree = tree_from_gyo(h)
    return QueryClass("acyclic", tree, tree.root)


def classify(query: ConjunctiveQuery, limit: int = DEFAULT_TREE_LIMIT) -> QueryClass:
    return classify_hypergraph(build_hypergraph(query), query.output, limit)


def tree_from_names(query: ConjunctiveQuery, parents: Mapping[str, str | None]) -> JoinTree:
    """Build a tree from ``{child name: parent name}`` (root maps to None)."""
    ids = {a.name: i for i, a in enumerate(query.atoms)}
    try:
        parent = {ids[c]: (None if p is None else ids[p]) for c, p in parents.items()}
    except KeyError as exc:
        raise InvalidTree(f"unknown relation {exc.args[0]} in tree") from None
    tree = JoinTree(parent)
    if not check_join_tree(tree, build_hypergraph(query)):
        raise InvalidTree("tree violates the connectedness property")
    return tree
