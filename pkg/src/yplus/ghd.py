"""Generalized hypertree decompositions for cyclic queries.

Bags are generated from connected groups of relations.  Each bag is
materialized by joining every relation it fully contains; a relation covered
by several bags contributes its real annotations to the first of them (in
tree pre-order) and a distinct, one-annotated copy to the others, so no
annotation is multiplied in twice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import InvalidGHD
from .hypergraph import Hypergraph, JoinTree, build_hypergraph, gyo_reduce, tree_from_gyo
from .plan_ir import Join, Materialize, PlanIR
from .query import Atom, ConjunctiveQuery, SchemaConstraints, NO_CONSTRAINTS

DEFAULT_FAN = 4
DEFAULT_GHD_LIMIT = 5_000
DEFAULT_SIZE = 1_000


@dataclass(frozen=True)
class Bag:
    id: int
    attrs: frozenset[str]
    group: tuple[int, ...]  # relations that generated the bag
    covers: tuple[int, ...]  # every relation whose attributes fit in the bag


@dataclass(frozen=True)
class GHD:
    bags: tuple[Bag, ...]
    parent: Mapping[int, int | None]
    width_estimate: tuple[float, ...] = ()

    @property
    def tree(self) -> JoinTree:
        return JoinTree(dict(self.parent))

    def encoding(self) -> tuple:
        attrs = {b.id: tuple(sorted(b.attrs)) for b in self.bags}
        edges = sorted(
            tuple(sorted((attrs[c], attrs[p]))) for c, p in self.parent.items() if p is not None
        )
        return (tuple(sorted(attrs.values())), tuple(edges))

    def describe(self) -> str:
        return " | ".join("{" + ",".join(sorted(b.attrs)) + "}" for b in self.bags)


def _connected(group: Sequence[int], attrs: Mapping[int, frozenset]) -> bool:
    seen = {group[0]}
    todo = [group[0]]
    while todo:
        n = todo.pop()
        for m in group:
            if m not in seen and attrs[n] & attrs[m]:
                seen.add(m)
                todo.append(m)
    return len(seen) == len(group)


def _partitions(items: list[int]) -> Iterator[list[list[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _partitions(rest):
        yield [[first]] + part
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]


def validate_ghd(ghd: GHD, h: Hypergraph) -> None:
    attrs = h.edge_map
    bag_attrs = {b.id: b.attrs for b in ghd.bags}
    for i, a in attrs.items():
        if not any(a <= b for b in bag_attrs.values()):
            raise InvalidGHD(f"relation {h.name(i)} is covered by no bag")
    tree = ghd.tree
    for x in h.vertices:
        holders = {b for b, a in bag_attrs.items() if x in a}
        start = next(iter(holders))
        seen, todo = {start}, [start]
        while todo:
            n = todo.pop()
            for m in tree.neighbours(n):
                if m in holders and m not in seen:
                    seen.add(m)
                    todo.append(m)
        if seen != holders:
            raise InvalidGHD(f"bags holding {x} are not connected")


def _make_ghd(groups: list[list[int]], attrs: Mapping[int, frozenset]) -> GHD | None:
    bag_attrs = [frozenset().union(*(attrs[i] for i in g)) for g in groups]
    bh = Hypergraph(tuple(enumerate(bag_attrs)))
    if not gyo_reduce(bh).acyclic:
        return None
    tree = tree_from_gyo(bh, root=0)
    bags = []
    for k, (g, b) in enumerate(zip(groups, bag_attrs)):
        covers = tuple(sorted(i for i, a in attrs.items() if a <= b))
        bags.append(Bag(k, b, tuple(sorted(g)), covers))
    return GHD(tuple(bags), dict(tree.parent))


def enumerate_ghds(
    h: Hypergraph, limit: int = DEFAULT_GHD_LIMIT, fan: int = DEFAULT_FAN
) -> list[GHD]:
    """Edge-generated GHDs: partitions into connected groups of at most ``fan``
    relations whose bags form an acyclic hypergraph, plus the single bag."""
    attrs = h.edge_map
    ids = sorted(attrs)
    found: dict[tuple, GHD] = {}
    trivial = _make_ghd([ids], attrs)
    found[trivial.encoding()] = trivial
    for part in _partitions(ids):
        if len(found) >= limit:
            break
        if any(len(g) > fan or not _connected(g, attrs) for g in part):
            continue
        part = sorted((sorted(g) for g in part), key=lambda g: g[0])
        ghd = _make_ghd(part, attrs)
        if ghd is not None:
            found.setdefault(ghd.encoding(), ghd)
    return list(found.values())


def merge_key_covered(
    relations: Sequence[tuple[str, Iterable[str], float]],
    constraints: SchemaConstraints = NO_CONSTRAINTS,
) -> float:
    """Size estimate for joining ``(name, attrs, size)`` relations.

    A relation joined through one of its keys onto attributes already held by
    another component does not add rows, so it is merged into that component
    without changing its size.  Whatever is left is bounded by the product.
    """
    comps = [[{name}, set(attrs), float(size)] for name, attrs, size in relations]
    changed = True
    while changed:
        changed = False
        for a, b in itertools.permutations(range(len(comps)), 2):
            names_b, attrs_b, _ = comps[b]
            if len(names_b) != 1:
                continue
            (rel,) = names_b
            keys = constraints.keys_of(rel)
            if any(set(k) <= comps[a][1] for k in keys):
                comps[a][0] |= names_b
                comps[a][1] |= attrs_b
                del comps[b]
                changed = True
                break
    return math.prod(c[2] for c in comps) if comps else 0.0


def bag_estimate(
    bag: Bag, query: ConjunctiveQuery, sizes: Mapping[str, float],
    constraints: SchemaConstraints = NO_CONSTRAINTS,
) -> float:
    """Smallest keyed product bound over subsets of covered relations that span the bag."""
    best = math.inf
    cov = list(bag.covers)
    for r in range(1, len(cov) + 1):
        for subset in itertools.combinations(cov, r):
            span = frozenset().union(*(query.atoms[i].attr_set for i in subset))
            if span != bag.attrs:
                continue
            rels = [
                (query.atoms[i].name, query.atoms[i].attrs, sizes.get(query.atoms[i].name, DEFAULT_SIZE))
                for i in subset
            ]
            best = min(best, merge_key_covered(rels, constraints))
    return best


def rank_ghds(
    ghds: Sequence[GHD], query: ConjunctiveQuery, sizes: Mapping[str, float] | None = None,
    constraints: SchemaConstraints = NO_CONSTRAINTS,
) -> list[GHD]:
    sizes = sizes or {}
    scored = []
    for g in ghds:
        est = tuple(bag_estimate(b, query, sizes, constraints) for b in g.bags)
        scored.append(GHD(g.bags, g.parent, est))
    scored.sort(key=lambda g: (max(g.width_estimate), len(g.bags), g.encoding()))
    return scored


@dataclass
class BagPlan:
    steps: list
    query: ConjunctiveQuery  # acyclic query over bag relations
    tree: JoinTree  # the GHD tree over the bag atoms (atom k = bag k)


def bag_plan(query: ConjunctiveQuery, ghd: GHD) -> BagPlan:
    """Instructions that materialize every bag, and the acyclic query over them."""
    h = build_hypergraph(query)
    validate_ghd(ghd, h)
    taken = {a.name for a in query.atoms}
    tree = ghd.tree
    order = tree.pre_order()
    owner: dict[int, int] = {}
    for b in order:
        for i in ghd.bags[b].covers:
            owner.setdefault(i, b)
    steps: list = []
    unit_copy: dict[int, str] = {}
    atoms: dict[int, Atom] = {}
    for b in order:
        bag = ghd.bags[b]
        sources = []
        for i in bag.covers:
            name = query.atoms[i].name
            if owner[i] != b:
                if i not in unit_copy:
                    unit_copy[i] = _fresh(f"{name}_1", taken)
                    steps.append(Materialize(unit_copy[i], name, unit=True))
                name = unit_copy[i]
            sources.append((i, name))
        if len(sources) == 1 and owner[sources[0][0]] == b:
            i, name = sources[0]
            atoms[b] = Atom(name, query.order_attrs(bag.attrs))
            continue
        dst = _fresh(f"B{b + 1}", taken)
        # greedy connected order, lowest id first
        pending = list(sources)
        cur_name = None
        held: set[str] = set()
        while pending:
            pick = next(
                (s for s in pending if query.atoms[s[0]].attr_set & held), pending[0]
            )
            pending.remove(pick)
            if cur_name is None:
                if not pending:
                    steps.append(Materialize(dst, pick[1]))
                cur_name = pick[1]
            else:
                steps.append(Join(dst, cur_name, pick[1]))
                cur_name = dst
            held |= query.atoms[pick[0]].attr_set
        atoms[b] = Atom(dst, query.order_attrs(bag.attrs))
    bag_query = query.with_atoms([atoms[b.id] for b in ghd.bags], selections=())
    return BagPlan(steps, bag_query, tree)


def _fresh(name: str, taken: set[str]) -> str:
    out = name
    while out in taken:
        out += "_"
    taken.add(out)
    return out


def materialize_bags(query, ghd, relations):
    """Run the bag instructions through the executor.

    Returns the acyclic bag query and the relations it reads.
    """
    from .executor import run_plan

    bp = bag_plan(query, ghd)
    env = dict(relations)
    if bp.steps:
        trace: dict = {}
        run_plan(PlanIR(bp.steps, bp.steps[-1].dst), relations, query.semiring, trace)
        for k, step in enumerate(bp.steps, 1):
            env[step.dst] = trace[k]
    bag_rels = {a.name: env[a.name] for a in bp.query.atoms}
    return bp.query, bag_rels


def choose_ghd(
    query: ConjunctiveQuery, sizes: Mapping[str, float] | None = None,
    constraints: SchemaConstraints = NO_CONSTRAINTS, limit: int = DEFAULT_GHD_LIMIT,
) -> GHD:
    ghds = enumerate_ghds(build_hypergraph(query), limit)
    return rank_ghds(ghds, query, sizes, constraints)[0]


def plan_cyclic(
    query: ConjunctiveQuery, ghd: GHD | None = None, sizes: Mapping[str, float] | None = None,
    constraints: SchemaConstraints = NO_CONSTRAINTS,
) -> PlanIR:
    """Selections, bag materialization, then a Yannakakis+ plan over the bags."""
    from .planner import plan as plan_acyclic, selection_steps

    ghd = ghd or choose_ghd(query, sizes, constraints)
    bp = bag_plan(query, ghd)
    sel = selection_steps(query)
    inner = plan_acyclic(bp.query)
    steps = sel + bp.steps + list(inner.steps)
    phases = ["select"] * len(sel) + ["ghd"] * len(bp.steps) + list(inner.phases)
    return PlanIR(steps, inner.result, phases)
