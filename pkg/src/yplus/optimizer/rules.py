"""Rule-based rewrites driven by key constraints, semiring properties and sizes."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Mapping

from ..hypergraph import build_hypergraph, gyo_reduce
from ..plan_ir import Join, Materialize, Operand, PlanIR, Project, Select, Semijoin, output_schema
from ..query import Atom, AttrRef, ConjunctiveQuery, NO_CONSTRAINTS, Predicate, SchemaConstraints
from .stats import Stats

DEFAULT_FUSION_THRESHOLD = 1000


# ------------------------------------------------------------ helpers


def restrict_constraints(constraints: SchemaConstraints, names) -> SchemaConstraints:
    """Drop every declaration that mentions a relation outside ``names``."""
    names = set(names)
    return SchemaConstraints(
        {r: k for r, k in constraints.primary_keys.items() if r in names},
        tuple(fk for fk in constraints.foreign_keys if fk[0] in names and fk[2] in names),
        {r: k for r, k in constraints.uniques.items() if r in names},
    )


def _connected(atoms) -> bool:
    if not atoms:
        return True
    seen = {0}
    todo = [0]
    while todo:
        i = todo.pop()
        for j, a in enumerate(atoms):
            if j not in seen and a.attr_set & atoms[i].attr_set:
                seen.add(j)
                todo.append(j)
    return len(seen) == len(atoms)


def _fresh(name: str, taken) -> str:
    while name in taken:
        name += "'"
    return name


def _base_schemas(plan: PlanIR, query: ConjunctiveQuery) -> dict[str, tuple[str, ...]]:
    base = {a.name: a.attrs for a in query.atoms}
    for rel, old, new in plan.renames:
        base[rel] = tuple(new if a == old else a for a in base[rel])
    return base


# ------------------------------------------------------------ cycle elimination


@dataclass(frozen=True)
class CycleElimination:
    """An acyclic rewrite of a cyclic query plus the selection that restores it."""

    query: ConjunctiveQuery  # acyclic; output extended by both copies of the attribute
    relation: str
    attr: str
    renamed: str
    predicate: Predicate
    output: tuple[str, ...]  # output of the original query

    @property
    def rename(self) -> tuple[str, str, str]:
        return (self.relation, self.attr, self.renamed)

    def finish(self, plan: PlanIR, name: str) -> PlanIR:
        """Attach the rename, the deferred selection and the final projection."""
        steps = list(plan.steps) + [
            Select(name, plan.result, (self.predicate,)),
            Project(name, name, self.output),
        ]
        phases = list(plan.phases) + ["deferred-select", "final"]
        return PlanIR(steps, name, phases, plan.pruned, plan.renames + (self.rename,))


def _pk_fk_only(atoms, constraints: SchemaConstraints) -> bool:
    """Every attribute shared by two relations is a single-attribute key of one holder."""
    for x in dict.fromkeys(a for atom in atoms for a in atom.attrs):
        holders = [atom for atom in atoms if x in atom.attrs]
        if len(holders) > 1 and not any((x,) in constraints.keys_of(h.name) for h in holders):
            return False
    return True


def _rename_pred(p: Predicate, old: str, new: str) -> Predicate:
    value = p.value
    if isinstance(value, AttrRef) and value.name == old:
        value = AttrRef(new)
    return dataclasses.replace(p, attr=new if p.attr == old else p.attr, value=value)


def rule_cycle_elimination(
    query: ConjunctiveQuery, constraints: SchemaConstraints = NO_CONSTRAINTS
) -> CycleElimination | None:
    """Rename one non-key occurrence of an attribute so the query becomes acyclic.

    Fires only when every join, before and after the rename, is a key join and
    the renamed query stays connected, so the deferred equality selection runs
    over an intermediate of linear size.
    """
    h = build_hypergraph(query)
    if gyo_reduce(h).acyclic or not _pk_fk_only(query.atoms, constraints):
        return None
    universe = query.universe

    def non_key(x):
        return [a for a in query.atoms if x in a.attrs and (x,) not in constraints.keys_of(a.name)]

    shared = [x for x in universe if sum(x in a.attrs for a in query.atoms) > 1]
    shared.sort(key=lambda x: (-len(non_key(x)), universe.index(x)))
    for x in shared:
        for atom in non_key(x):
            new = _fresh(x + "'", set(universe))
            atoms = [
                Atom(a.name, tuple(new if v == x else v for v in a.attrs), a.annotation, a.source)
                if a.name == atom.name else a
                for a in query.atoms
            ]
            if not _connected(atoms) or not _pk_fk_only(atoms, constraints):
                continue
            sels = tuple(
                (r, _rename_pred(p, x, new) if r == atom.name else p) for r, p in query.selections
            )
            attributes = dict(query.attributes)
            if x in attributes:
                attributes[new] = dataclasses.replace(attributes[x], name=new)
            output = query.order_attrs(set(query.output) | {x}) + (new,)
            rewritten = query.with_atoms(
                atoms, output=output, selections=sels, attributes=attributes
            )
            if gyo_reduce(build_hypergraph(rewritten)).acyclic:
                return CycleElimination(
                    rewritten, atom.name, x, new, Predicate(x, "=", AttrRef(new)), query.output
                )
    return None


# ------------------------------------------------------------ aggregation elimination


def _keys_before_steps(plan: PlanIR, base: Mapping[str, tuple], constraints) -> list[dict]:
    """Known keys (as attribute sets) of every name, before each step."""
    renames = {}
    for rel, old, new in plan.renames:
        renames.setdefault(rel, {})[old] = new
    keys = {
        name: [frozenset(renames.get(name, {}).get(a, a) for a in k) for k in constraints.keys_of(name)]
        for name in base
    }
    schemas = dict(base)
    out = []

    def operand_keys(op: Operand):
        ks = list(keys.get(op.name, []))
        if op.keep is None:
            return ks
        return [k for k in ks if k <= set(op.keep)] + [frozenset(op.keep)]

    for step in plan.steps:
        out.append({k: list(v) for k, v in keys.items()})
        if isinstance(step, Join):
            lk, rk = operand_keys(step.left), operand_keys(step.right)
            ls = step.left.keep or schemas[step.left.name]
            rs = step.right.keep or schemas[step.right.name]
            shared = set(ls) & set(rs)
            new = []
            if any(k <= shared for k in rk):
                new += lk
            if any(k <= shared for k in lk):
                new += rk
            if step.keep is not None:
                new = [k for k in new if k <= set(step.keep)] + [frozenset(step.keep)]
        elif isinstance(step, Semijoin):
            new = list(keys.get(step.left, []))
        elif isinstance(step, Project):
            new = [k for k in keys.get(step.src, []) if k <= set(step.keep)] + [frozenset(step.keep)]
        elif isinstance(step, Materialize):
            new = list(keys.get(step.src, []))
            if step.unit:
                new.append(frozenset(schemas[step.src]))
        else:
            new = list(keys.get(step.src, []))
        schemas[step.dst] = output_schema(step, schemas)
        keys[step.dst] = new
    out.append(keys)
    return out


def _join_signature(steps, base: Mapping[str, tuple]) -> list:
    """Shared attributes of every join and semi-join, in order."""
    env = dict(base)
    sig = []
    for s in steps:
        if isinstance(s, Join):
            ls = s.left.keep or env[s.left.name]
            rs = s.right.keep or env[s.right.name]
            sig.append(frozenset(ls) & frozenset(rs))
        elif isinstance(s, Semijoin):
            sig.append(frozenset(env[s.left]) & frozenset(env[s.right]))
        env[s.dst] = output_schema(s, env)
    return sig


def _final_schema(steps, result: str, base) -> tuple[str, ...]:
    env = dict(base)
    for s in steps:
        env[s.dst] = output_schema(s, env)
    return env[result]


def rule_aggregation_elimination(
    plan: PlanIR,
    query: ConjunctiveQuery,
    constraints: SchemaConstraints = NO_CONSTRAINTS,
    output: tuple[str, ...] | None = None,
) -> PlanIR:
    """Drop grouped projections whose group-by attributes contain a key of the source.

    Each grouping touched is one tuple per group, so only the column list
    changes; a removal is kept only if no later join or semi-join starts
    matching on different attributes.  A final projection is added when the
    result would otherwise carry extra columns.
    """
    output = tuple(output or query.output)
    base = _base_schemas(plan, query)
    reference = _join_signature(plan.steps, base)
    steps = list(plan.steps)
    phases = list(plan.phases)
    rejected: set = set()
    changed = False
    while True:
        keys = _keys_before_steps(PlanIR(steps, plan.result, phases, renames=plan.renames), base, constraints)
        move = None
        for idx, step in enumerate(steps):
            known = keys[idx]
            if isinstance(step, Join):
                for side in ("left", "right"):
                    op = getattr(step, side)
                    if op.keep is None or (idx, side) in rejected:
                        continue
                    if any(k <= set(op.keep) for k in known.get(op.name, [])):
                        move = (idx, side)
                        break
            elif isinstance(step, Project) and step.dst == step.src and (idx, "self") not in rejected:
                if any(k <= set(step.keep) for k in known.get(step.src, [])):
                    move = (idx, "self")
            if move:
                break
        if move is None:
            break
        idx, side = move
        trial = list(steps)
        trial_phases = list(phases)
        if side == "self":
            del trial[idx]
            del trial_phases[idx]
        else:
            op = getattr(trial[idx], side)
            trial[idx] = dataclasses.replace(trial[idx], **{side: Operand(op.name)})
        ok = _join_signature(trial, base) == reference
        if ok:
            try:
                _final_schema(trial, plan.result, base)
            except KeyError:
                ok = False
        if ok:
            steps, phases, changed = trial, trial_phases, True
            rejected = {r for r in rejected if r[0] < idx}  # indices may have shifted
        else:
            rejected.add(move)
    if not changed:
        return plan
    result = plan.result
    if set(_final_schema(steps, result, base)) != set(output):
        steps.append(Project(result, result, output))
        phases.append("final")
    return plan.with_steps(steps, phases)


# ------------------------------------------------------------ semi-join elimination


def rule_semijoin_elimination(
    plan: PlanIR, query: ConjunctiveQuery, constraints: SchemaConstraints = NO_CONSTRAINTS
) -> PlanIR:
    """Drop the semi-joins between a relation and an untouched base leaf ``R``
    joined on ``R``'s key through a declared foreign key, when ``R`` carries no
    selection.  Both directions of such a pair are dropped."""
    base = _base_schemas(plan, query)
    env = dict(base)
    touched: set[str] = set()  # names rewritten by a join, projection or selection
    keep_steps, keep_phases = [], []
    for step, phase in zip(plan.steps, plan.phases):
        drop = False
        if isinstance(step, Semijoin):
            a, b = step.left, step.right
            shared = set(env[a]) & set(env[b])
            for child, leaf in ((a, b), (b, a)):
                if leaf not in base or leaf in touched or query.selections_for(leaf):
                    continue
                if len(shared) != 1:
                    continue
                (x,) = shared
                child_base = base.get(child, ())
                if (x,) in constraints.keys_of(leaf) and x in child_base and constraints.has_fk(child, x, leaf):
                    drop = True
                    break
        if not drop:
            keep_steps.append(step)
            keep_phases.append(phase)
        if not isinstance(step, Semijoin):
            touched.add(step.dst)
        env[step.dst] = output_schema(step, env)
    if len(keep_steps) == len(plan.steps):
        return plan
    return plan.with_steps(keep_steps, keep_phases)


# ------------------------------------------------------------ annotation pruning


def rule_annotation_pruning(query: ConjunctiveQuery) -> dict[str, bool]:
    """Per relation: does it need an annotation column?

    With an idempotent plus, a relation whose annotations are all one can be
    read without them: duplicates it introduces collapse under plus anyway.
    Otherwise join multiplicities matter and every relation keeps its column.
    """
    idem = query.semiring.idempotent_plus
    return {a.name: not (idem and a.annotation is None) for a in query.atoms}


def apply_annotation_pruning(plan: PlanIR, query: ConjunctiveQuery) -> PlanIR:
    needed = rule_annotation_pruning(query)
    inputs = set(plan.inputs())
    pruned = frozenset(n for n, need in needed.items() if not need and n in inputs)
    if pruned == plan.pruned:
        return plan
    return plan.with_steps(plan.steps, plan.phases, pruned=pruned)


# ------------------------------------------------------------ dimension fusion


@dataclass(frozen=True)
class Fusion:
    """Small neighbours of a large relation combined into one relation up front."""

    query: ConjunctiveQuery
    prelude: tuple  # instructions building the fused relation
    fused: str
    members: tuple[str, ...]
    hub: str

    def attach(self, plan: PlanIR) -> PlanIR:
        phases = ("fusion",) * len(self.prelude)
        return PlanIR(
            self.prelude + plan.steps, plan.result, phases + plan.phases, plan.pruned, plan.renames
        )


def rule_dimension_fusion(
    query: ConjunctiveQuery, stats: Stats, threshold: int = DEFAULT_FUSION_THRESHOLD
) -> Fusion | None:
    """Fuse two or more small relations that share a common large neighbour.

    A relation is small when it has at most ``threshold`` rows; the hub must
    be larger than the product of the small sizes, so the fused relation is
    never bigger than the join it avoids.
    """
    size = {a.name: stats.size(a.name) for a in query.atoms}
    order = sorted(range(query.n), key=lambda i: (-size[query.atoms[i].name], i))
    for h in order:
        hub = query.atoms[h]
        if size[hub.name] <= threshold:
            break
        small = [
            a for a in query.atoms
            if a.name != hub.name and a.attr_set & hub.attr_set and size[a.name] <= threshold
        ]
        if len(small) < 2:
            continue
        product = 1
        for a in small:
            product *= max(size[a.name], 1)
        if product > size[hub.name]:
            continue
        names = tuple(a.name for a in small)
        taken = {a.name for a in query.atoms}
        fused = _fresh("_".join(names), taken)
        attrs = query.order_attrs(set().union(*(a.attr_set for a in small)))
        annot = next((a.annotation for a in small if a.annotation is not None), None)
        atoms = []
        for a in query.atoms:
            if a.name == names[0]:
                atoms.append(Atom(fused, attrs, annot))
            elif a.name not in names:
                atoms.append(a)
        sels = tuple((r, p) for r, p in query.selections if r not in names)
        rewritten = query.with_atoms(atoms, selections=sels)
        if not gyo_reduce(build_hypergraph(rewritten)).acyclic:
            continue
        prelude: list = [Select(n, n, query.selections_for(n)) for n in names if query.selections_for(n)]
        pending = list(small)
        first = pending.pop(0)
        held = set(first.attrs)
        cur = first.name
        while pending:
            pick = next((a for a in pending if a.attr_set & held), pending[0])
            pending.remove(pick)
            prelude.append(Join(fused, cur, pick.name))
            cur = fused
            held |= pick.attr_set
        return Fusion(rewritten, tuple(prelude), fused, names, hub.name)
    return None
