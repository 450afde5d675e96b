"""Plan generation: the two-round Yannakakis+ planner and the classic baselines."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CyclicQuery, InvalidTree, NotDanglingFree, NotReducible
from .hypergraph import (
    JoinTree,
    build_hypergraph,
    check_join_tree,
    classify_hypergraph,
    gyo_reduce,
)
from .plan_ir import Join, Operand, PlanIR, Project, Select, Semijoin, count_ops  # noqa: F401
from .query import ConjunctiveQuery


@dataclass
class TreeState:
    """Live join tree while planning: names, current attributes and flags per node."""

    query: ConjunctiveQuery
    parent: dict[int, int | None]
    attrs: dict[int, frozenset[str]]
    names: dict[int, str]
    dangling_free: set[int] = field(default_factory=set)

    @property
    def live(self) -> list[int]:
        return sorted(self.parent)

    @property
    def output(self) -> frozenset[str]:
        return self.query.output_set

    def children(self, n: int) -> list[int]:
        return sorted(c for c, p in self.parent.items() if p == n)

    def neighbours(self, n: int) -> list[int]:
        p = self.parent[n]
        return self.children(n) + ([p] if p is not None else [])

    def depth(self, n: int) -> int:
        d = 0
        while self.parent[n] is not None:
            n = self.parent[n]
            d += 1
        return d

    @property
    def root(self) -> int:
        return next(n for n, p in self.parent.items() if p is None)

    def others_attrs(self, *exclude: int) -> frozenset[str]:
        out: set[str] = set()
        for n, a in self.attrs.items():
            if n not in exclude and n in self.parent:
                out |= a
        return frozenset(out)

    def ordered(self, attrs) -> tuple[str, ...]:
        return self.query.order_attrs(attrs)

    def is_reducible(self, j: int, i: int) -> bool:
        """``j`` is reducible for ``i``: every other neighbour meets ``i`` only on output attributes."""
        if j not in self.neighbours(i):
            return False
        return all(
            self.attrs[k] & self.attrs[i] <= self.output for k in self.neighbours(i) if k != j
        )

    def tree(self) -> JoinTree:
        return JoinTree(dict(self.parent))

    def reduced_query(self) -> ConjunctiveQuery:
        from .query import Atom

        atoms = [Atom(self.names[n], self.ordered(self.attrs[n])) for n in self.live]
        return self.query.with_atoms(atoms, selections=())


@dataclass
class FirstRound:
    plan: PlanIR
    state: TreeState

    @property
    def reduced_query(self) -> ConjunctiveQuery:
        return self.state.reduced_query()


def _validate_tree(query: ConjunctiveQuery, tree: JoinTree) -> None:
    h = build_hypergraph(query)
    if not check_join_tree(tree, h):
        raise InvalidTree("tree is not a join tree of the query")


def selection_steps(query: ConjunctiveQuery) -> list[Select]:
    steps = []
    for atom in query.atoms:
        preds = query.selections_for(atom.name)
        if preds:
            steps.append(Select(atom.name, atom.name, preds))
    return steps


def plan_first_round(query: ConjunctiveQuery, tree: JoinTree) -> FirstRound:
    """Post-order traversal that joins away leaves covered by their parent and
    projects and semi-joins the rest (early aggregation)."""
    _validate_tree(query, tree)
    out = query.output_set
    state = TreeState(
        query,
        dict(tree.parent),
        {i: a.attr_set for i, a in enumerate(query.atoms)},
        {i: a.name for i, a in enumerate(query.atoms)},
    )
    sel = selection_steps(query)
    steps: list = list(sel)
    phases = ["select"] * len(sel)

    def emit(step):
        steps.append(step)
        phases.append("round1")

    order = tree.post_order()
    for i in order[:-1]:
        p = state.parent[i]
        ai, ap = state.attrs[i], state.attrs[p]
        if not state.children(i) and ai & out <= ap:
            keep = ap & ai
            right = Operand(state.names[i], None if keep == ai else state.ordered(keep))
            emit(Join(state.names[p], state.names[p], right))
            del state.parent[i]
            del state.attrs[i]
        else:
            keep = ai & (out | state.others_attrs(i))
            if keep != ai:
                emit(Project(state.names[i], state.names[i], state.ordered(keep)))
                state.attrs[i] = keep
            emit(Semijoin(state.names[p], state.names[p], state.names[i]))
    r = tree.root
    keep = state.attrs[r] & (out | state.others_attrs(r))
    if keep != state.attrs[r]:
        emit(Project(state.names[r], state.names[r], state.ordered(keep)))
        state.attrs[r] = keep
    state.dangling_free = {r}
    return FirstRound(PlanIR(steps, state.names[r], phases), state)


def plan_reduction(state: TreeState, i: int, j: int, final_name: str | None = None) -> Join:
    """Merge dangling-free ``i`` with its reducible neighbour ``j`` (mutates ``state``).

    The merged node keeps the name of whichever of the two is closer to the
    root, and becomes dangling-free.
    """
    if i not in state.dangling_free:
        raise NotDanglingFree(f"{state.names.get(i, i)} is not dangling-free")
    if not state.is_reducible(j, i):
        raise NotReducible(f"{state.names.get(j, j)} is not reducible for {state.names.get(i, i)}")
    upper, lower = (j, i) if state.parent[i] == j else (i, j)
    union = state.attrs[i] | state.attrs[j]
    keep = union & (state.output | state.others_attrs(i, j))
    last = len(state.parent) == 2
    dst = final_name if (last and final_name) else state.names[upper]
    step = Join(
        dst, state.names[upper], state.names[lower],
        None if keep == union else state.ordered(keep),
    )
    for c in state.children(lower):
        state.parent[c] = upper
    del state.parent[lower]
    del state.attrs[lower]
    state.dangling_free.discard(lower)
    state.attrs[upper] = keep
    state.names[upper] = dst
    state.dangling_free.add(upper)
    return step


def _find_pair(state: TreeState):
    for i in sorted(state.dangling_free & set(state.parent), key=lambda n: (state.depth(n), n)):
        p = state.parent[i]
        for j in state.children(i) + ([p] if p is not None else []):
            if state.is_reducible(j, i):
                return i, j
    return None


def plan_second_round(state: TreeState) -> PlanIR:
    """Reduce the tree to one relation, inserting semi-joins only when no
    dangling-free node has a reducible neighbour."""
    steps: list = []
    phases: list = []
    final = state.query.name
    while len(state.parent) > 1:
        pair = _find_pair(state)
        if pair is not None:
            steps.append(plan_reduction(state, *pair, final_name=final))
            phases.append("round2")
            continue
        leaves = [
            n for n in state.parent
            if not state.children(n) and n not in state.dangling_free
        ]
        leaf = max(leaves, key=lambda n: (state.depth(n), n))
        path = [leaf]
        while path[-1] not in state.dangling_free:
            path.append(state.parent[path[-1]])
        path.reverse()
        for a, b in zip(path, path[1:]):
            steps.append(Semijoin(state.names[b], state.names[b], state.names[a]))
            phases.append("round2-semijoin")
            state.dangling_free.add(b)
    root = state.root
    result = state.names[root]
    if state.attrs[root] != state.output:
        # only reachable for malformed states; keeps the contract that the result is over O
        steps.append(Project(final, result, state.ordered(state.output)))
        phases.append("round2")
        result = final
    return PlanIR(steps, result, phases)


def plan_with_tree(query: ConjunctiveQuery, tree: JoinTree) -> PlanIR:
    first = plan_first_round(query, tree)
    second = plan_second_round(first.state)
    if not second.steps:
        return first.plan
    return first.plan.concat(second)


def plan_yannakakis_baseline(query: ConjunctiveQuery, tree: JoinTree) -> PlanIR:
    """Semi-join sweep up and down the tree, then joins bottom-up and a final projection."""
    _validate_tree(query, tree)
    out = query.output_set
    names = {i: a.name for i, a in enumerate(query.atoms)}
    base = {i: a.attr_set for i, a in enumerate(query.atoms)}
    sel = selection_steps(query)
    steps: list = list(sel)
    phases = ["select"] * len(sel)
    post = tree.post_order()
    up = []
    for i in post[:-1]:
        p = tree.parent[i]
        steps.append(Semijoin(names[p], names[p], names[i]))
        phases.append("up")
        up.append((p, i))
    for p, i in reversed(up):
        steps.append(Semijoin(names[i], names[i], names[p]))
        phases.append("down")
    cur = dict(names)
    cur_attrs = dict(base)
    k = 0
    for i in post[:-1]:
        p = tree.parent[i]
        keep = cur_attrs[i] & (base[p] | out)
        k += 1
        dst = f"J{k}"
        if keep != cur_attrs[i]:
            steps.append(Join(dst, Operand(cur[i], query.order_attrs(keep)), Operand(cur[p])))
        else:
            steps.append(Join(dst, cur[p], cur[i]))
        phases.append("join")
        cur[p] = dst
        cur_attrs[p] = cur_attrs[p] | keep
    r = tree.root
    result = cur[r]
    if cur_attrs[r] != out:
        steps.append(Project(query.name, cur[r], query.order_attrs(out)))
        phases.append("final")
        result = query.name
    return PlanIR(steps, result, phases)


def plan_standard(query: ConjunctiveQuery) -> PlanIR:
    """Left-deep binary joins in query order followed by one grouped projection."""
    sel = selection_steps(query)
    steps: list = list(sel)
    phases = ["select"] * len(sel)
    cur = query.atoms[0].name
    attrs = set(query.atoms[0].attrs)
    for k, atom in enumerate(query.atoms[1:], 1):
        dst = f"J{k}"
        steps.append(Join(dst, cur, atom.name))
        phases.append("join")
        cur = dst
        attrs |= set(atom.attrs)
    if attrs != set(query.output):
        steps.append(Project(query.name, cur, query.order_attrs(query.output)))
        phases.append("final")
        cur = query.name
    return PlanIR(steps, cur, phases)


def plan(query: ConjunctiveQuery, tree: JoinTree | None = None, limit_trees: int = 10_000) -> PlanIR:
    """End-to-end Yannakakis+ plan.

    With no tree the structurally best candidate tree is used; cyclic queries
    go through a generalized hypertree decomposition first.
    """
    h = build_hypergraph(query)
    if not gyo_reduce(h).acyclic:
        if tree is not None:
            raise CyclicQuery("a join tree was given for a cyclic query")
        from .ghd import plan_cyclic

        return plan_cyclic(query)
    if tree is None:
        from .optimizer.trees import enumerate_candidate_trees

        tree = enumerate_candidate_trees(query, limit=limit_trees)[0]
    return plan_with_tree(query, tree)


def classify_query(query: ConjunctiveQuery):
    return classify_hypergraph(build_hypergraph(query), query.output)
