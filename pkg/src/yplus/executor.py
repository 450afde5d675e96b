"""In-memory evaluation of plans, instrumentation, and the brute-force oracle."""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import MissingRelation, SchemaMismatch
from .plan_ir import Join, Materialize, Operand, PlanIR, Project, Select, Semijoin
from .query import ConjunctiveQuery, Predicate, compile_all
from .relation import AnnotatedRelation, group_aggregate
from .semiring import Semiring


def exec_join(
    left: AnnotatedRelation, right: AnnotatedRelation, semiring: Semiring, name: str | None = None
) -> AnnotatedRelation:
    """Natural hash join; the smaller input is the build side.

    The output schema is the left schema followed by the right's new attributes.
    """
    shared = [a for a in left.schema if a in right.schema]
    extra = [a for a in right.schema if a not in left.schema]
    li = left.index_of(shared)
    ri = right.index_of(shared)
    rx = right.index_of(extra)
    la = left.annotations
    ra = right.annotations
    pruned = la is None and ra is None
    one = semiring.one
    times = semiring.times_op
    rows = []
    anns = []
    if len(left) <= len(right):
        table: dict = {}
        for k, row in enumerate(left.rows):
            table.setdefault(tuple(row[i] for i in li), []).append(k)
        for m, rrow in enumerate(right.rows):
            hits = table.get(tuple(rrow[i] for i in ri))
            if not hits:
                continue
            tail = tuple(rrow[i] for i in rx)
            for k in hits:
                rows.append(left.rows[k] + tail)
                if not pruned:
                    anns.append(times(one if la is None else la[k], one if ra is None else ra[m]))
    else:
        table = {}
        for m, rrow in enumerate(right.rows):
            table.setdefault(tuple(rrow[i] for i in ri), []).append(m)
        for k, lrow in enumerate(left.rows):
            hits = table.get(tuple(lrow[i] for i in li))
            if not hits:
                continue
            for m in hits:
                rrow = right.rows[m]
                rows.append(lrow + tuple(rrow[i] for i in rx))
                if not pruned:
                    anns.append(times(one if la is None else la[k], one if ra is None else ra[m]))
    schema = tuple(left.schema) + tuple(extra)
    return AnnotatedRelation(name or left.name, schema, rows, None if pruned else anns)


def exec_semijoin(
    left: AnnotatedRelation, right: AnnotatedRelation, name: str | None = None
) -> AnnotatedRelation:
    """Tuples of ``left`` with at least one match in ``right``; annotations untouched."""
    shared = [a for a in left.schema if a in right.schema]
    li = left.index_of(shared)
    ri = right.index_of(shared)
    keys = {tuple(r[i] for i in ri) for r in right.rows}
    keep = [k for k, row in enumerate(left.rows) if tuple(row[i] for i in li) in keys]
    rows = [left.rows[k] for k in keep]
    anns = None if left.annotations is None else [left.annotations[k] for k in keep]
    return AnnotatedRelation(name or left.name, left.schema, rows, anns)


def exec_project_aggregate(
    src: AnnotatedRelation, keep: Sequence[str], semiring: Semiring, name: str | None = None
) -> AnnotatedRelation:
    return group_aggregate(src, keep, semiring, name)


def exec_select(
    src: AnnotatedRelation, predicates: Sequence[Predicate], name: str | None = None
) -> AnnotatedRelation:
    test = compile_all(predicates, src.schema)
    keep = [k for k, row in enumerate(src.rows) if test(row)]
    anns = None if src.annotations is None else [src.annotations[k] for k in keep]
    return AnnotatedRelation(name or src.name, src.schema, [src.rows[k] for k in keep], anns)


def exec_materialize(
    src: AnnotatedRelation, unit: bool, semiring: Semiring, name: str
) -> AnnotatedRelation:
    if not unit:
        return src.renamed(name)
    distinct = tuple(dict.fromkeys(src.rows))
    return AnnotatedRelation(name, src.schema, distinct, (semiring.one,) * len(distinct))


@dataclass
class StepStat:
    index: int
    op: str
    dst: str
    phase: str
    in_rows: tuple[int, ...]
    out_rows: int
    inner_rows: tuple[int, ...] = ()  # operand projections and pre-projection join size

    @property
    def peak(self) -> int:
        return max((self.out_rows,) + self.inner_rows)


@dataclass
class ExecutionReport:
    steps: list[StepStat] = field(default_factory=list)
    input_rows: int = 0
    result_rows: int = 0
    wall_time: float = 0.0

    @property
    def max_intermediate(self) -> int:
        return max((s.peak for s in self.steps), default=0)

    @property
    def total_intermediate_rows(self) -> int:
        """Sum of every step's output size (the quantity the optimizer minimises)."""
        return sum(s.out_rows for s in self.steps)

    @property
    def rows_touched(self) -> int:
        return sum(sum(s.in_rows) + s.out_rows for s in self.steps)

    @property
    def op_counts(self) -> dict:
        return dict(Counter(s.op for s in self.steps))

    def to_text(self) -> str:
        lines = [f"step.{s.index}.{s.op} {s.dst} out_rows={s.out_rows}" for s in self.steps]
        lines += [
            f"input_rows={self.input_rows}",
            f"result_rows={self.result_rows}",
            f"max_intermediate={self.max_intermediate}",
            f"total_intermediate_rows={self.total_intermediate_rows}",
            f"rows_touched={self.rows_touched}",
            "ops=" + ",".join(f"{k}:{v}" for k, v in sorted(self.op_counts.items())),
            f"wall_time_s={self.wall_time:.6f}",
        ]
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return {
            "steps": [
                {"index": s.index, "op": s.op, "dst": s.dst, "phase": s.phase,
                 "in_rows": list(s.in_rows), "out_rows": s.out_rows,
                 "inner_rows": list(s.inner_rows)}
                for s in self.steps
            ],
            "input_rows": self.input_rows,
            "result_rows": self.result_rows,
            "max_intermediate": self.max_intermediate,
            "total_intermediate_rows": self.total_intermediate_rows,
            "rows_touched": self.rows_touched,
            "op_counts": self.op_counts,
            "wall_time_s": self.wall_time,
        }


def _operand(env, op: Operand, semiring, inner: list) -> AnnotatedRelation:
    rel = env[op.name]
    if op.keep is None:
        return rel
    out = group_aggregate(rel, op.keep, semiring)
    inner.append(len(out))
    return out


def run_plan(
    plan: PlanIR,
    relations: Mapping[str, AnnotatedRelation],
    semiring: Semiring,
    trace: dict | None = None,
) -> tuple[AnnotatedRelation, ExecutionReport]:
    """Interpret ``plan`` step by step over ``relations``.

    If ``trace`` is a dict it receives the relation produced by every step,
    keyed by 1-based step index.
    """
    env: dict[str, AnnotatedRelation] = {}
    for name in plan.inputs():
        if name not in relations:
            raise MissingRelation(f"plan reads {name} but no such relation was supplied")
        rel = relations[name]
        for target, old, new in plan.renames:
            if target == name:
                if old not in rel.schema:
                    raise SchemaMismatch(f"cannot rename {name}.{old}: no such column")
                schema = tuple(new if a == old else a for a in rel.schema)
                rel = AnnotatedRelation(rel.name, schema, rel.rows, rel.annotations)
        env[name] = rel.without_annotations() if name in plan.pruned else rel
    report = ExecutionReport(input_rows=sum(len(env[n]) for n in env))
    start = time.perf_counter()
    for idx, (step, phase) in enumerate(zip(plan.steps, plan.phases), 1):
        inner: list[int] = []
        if isinstance(step, Join):
            left = _operand(env, step.left, semiring, inner)
            right = _operand(env, step.right, semiring, inner)
            ins = (len(env[step.left.name]), len(env[step.right.name]))
            out = exec_join(left, right, semiring, step.dst)
            if step.keep is not None:
                missing = set(step.keep) - set(out.schema)
                if missing:
                    raise SchemaMismatch(f"step {idx}: {sorted(missing)} not in join output")
                inner.append(len(out))
                out = group_aggregate(out, step.keep, semiring, step.dst)
        elif isinstance(step, Semijoin):
            ins = (len(env[step.left]), len(env[step.right]))
            out = exec_semijoin(env[step.left], env[step.right], step.dst)
        elif isinstance(step, Project):
            src = env[step.src]
            ins = (len(src),)
            out = group_aggregate(src, step.keep, semiring, step.dst)
        elif isinstance(step, Select):
            src = env[step.src]
            ins = (len(src),)
            out = exec_select(src, step.predicates, step.dst)
        elif isinstance(step, Materialize):
            src = env[step.src]
            ins = (len(src),)
            out = exec_materialize(src, step.unit, semiring, step.dst)
        else:  # pragma: no cover - guarded by the IR types
            raise TypeError(f"unknown instruction {step!r}")
        env[step.dst] = out
        if trace is not None:
            trace[idx] = out
        report.steps.append(StepStat(idx, step.op, step.dst, phase, ins, len(out), tuple(inner)))
    report.wall_time = time.perf_counter() - start
    result = env[plan.result]
    report.result_rows = len(result)
    return result, report


def bind_relations(
    query: ConjunctiveQuery, relations: Mapping[str, AnnotatedRelation]
) -> dict[str, AnnotatedRelation]:
    """Check that every atom has data whose schema matches its attributes."""
    out = {}
    for atom in query.atoms:
        if atom.name not in relations:
            raise MissingRelation(f"no data for relation {atom.name}")
        rel = relations[atom.name]
        if set(rel.schema) != set(atom.attrs):
            raise SchemaMismatch(
                f"{atom.name}: data schema {rel.schema} does not match {atom.attrs}"
            )
        out[atom.name] = rel
    return out


# ---------------------------------------------------------------- oracle


def _filtered(query: ConjunctiveQuery, relations) -> list[tuple[tuple, list, list]]:
    """Per atom: (attrs, rows as dicts-free tuples in atom order, annotations)."""
    out = []
    for atom in query.atoms:
        rel = relations[atom.name]
        pos = [rel.schema.index(a) for a in atom.attrs]
        preds = query.selections_for(atom.name)
        test = compile_all(preds, rel.schema) if preds else None
        rows, anns = [], []
        for row, ann in zip(rel.rows, rel.annotation_list(query.semiring)):
            if test is None or test(row):
                rows.append(tuple(row[p] for p in pos))
                anns.append(ann)
        out.append((atom.attrs, rows, anns))
    return out


def _join_levels(query: ConjunctiveQuery, relations) -> list:
    """Nested-loop levels: per atom, the bound and new attributes and an index on the bound ones."""
    atoms = _filtered(query, relations)
    # Order atoms so each one after the first shares attributes with earlier ones when possible.
    order, bound = [], set()
    remaining = list(range(len(atoms)))
    while remaining:
        best = max(remaining, key=lambda k: (len(set(atoms[k][0]) & bound), -k))
        remaining.remove(best)
        order.append(best)
        bound |= set(atoms[best][0])
    plans = []
    seen: set[str] = set()
    for k in order:
        attrs, rows, anns = atoms[k]
        key_pos = [i for i, a in enumerate(attrs) if a in seen]
        new_pos = [i for i, a in enumerate(attrs) if a not in seen]
        index: dict = {}
        for row, ann in zip(rows, anns):
            index.setdefault(tuple(row[i] for i in key_pos), []).append((row, ann))
        plans.append(([attrs[i] for i in key_pos], [attrs[i] for i in new_pos], new_pos, index))
        seen |= set(attrs)
    return plans


def _backtrack(query: ConjunctiveQuery, relations, visit) -> None:
    """Enumerate every full-join tuple by nested loops with per-atom indexes.

    ``visit(binding, annotations)`` is called once per full-join tuple.
    """
    plans = _join_levels(query, relations)
    binding: dict = {}
    chosen: list = []

    def rec(level: int):
        if level == len(plans):
            visit(binding, chosen)
            return
        key_attrs, new_attrs, new_pos, index = plans[level]
        for row, ann in index.get(tuple(binding[a] for a in key_attrs), ()):
            for a, i in zip(new_attrs, new_pos):
                binding[a] = row[i]
            chosen.append(ann)
            rec(level + 1)
            chosen.pop()
        for a in new_attrs:
            binding.pop(a, None)

    rec(0)


def oracle(query: ConjunctiveQuery, relations: Mapping[str, AnnotatedRelation]) -> AnnotatedRelation:
    """Ground truth: full nested-loop join, then grouping on the output attributes."""
    sr = query.semiring
    out = tuple(query.output)
    groups: dict = {}

    def visit(binding, anns):
        v = sr.one
        for a in anns:
            v = sr.times(v, a)
        key = tuple(binding[x] for x in out)
        groups[key] = sr.plus(groups[key], v) if key in groups else v

    _backtrack(query, relations, visit)
    return AnnotatedRelation(query.name, out, tuple(groups), tuple(groups.values()))


def full_join_size(query: ConjunctiveQuery, relations: Mapping[str, AnnotatedRelation]) -> int:
    """F: the number of tuples in the full join (selections applied).

    Same nested loops as the oracle, except that the innermost level adds the
    size of its matching bucket instead of visiting each row.
    """
    plans = _join_levels(query, relations)
    binding: dict = {}

    def rec(level: int) -> int:
        key_attrs, new_attrs, new_pos, index = plans[level]
        bucket = index.get(tuple(binding[a] for a in key_attrs), ())
        if level == len(plans) - 1:
            return len(bucket)
        total = 0
        for row, _ in bucket:
            for a, i in zip(new_attrs, new_pos):
                binding[a] = row[i]
            total += rec(level + 1)
        for a in new_attrs:
            binding.pop(a, None)
        return total

    return rec(0) if plans else 0


def participating(query: ConjunctiveQuery, relations, atom_name: str) -> set[tuple]:
    """Tuples of one relation (in its data schema order) that extend to a full-join result."""
    rel = relations[atom_name]
    found: set = set()

    def visit(binding, anns):
        found.add(tuple(binding[a] for a in rel.schema))

    _backtrack(query, relations, visit)
    return found


@dataclass
class BoundVerdict:
    ok: bool
    n: int
    m: int
    f: int
    free_connex: bool
    worst_round1: int
    worst_round2: int
    violations: list[str]


def measure_bounds(
    report: ExecutionReport, n: int, m: int, f: int, free_connex: bool
) -> BoundVerdict:
    """Size proxies for the running-time guarantees, with constant 1.

    Steps before the second round (selections, round-one work, second-round
    semi-joins) may not exceed ``n``; second-round joins may not exceed
    ``min(n*m, f)``; with a free-connex query everything stays within ``n + m``.
    """
    violations = []
    worst1 = worst2 = 0
    cap2 = min(n * m, f)
    for s in report.steps:
        if s.phase == "round2":
            worst2 = max(worst2, s.peak)
            if s.peak > cap2:
                violations.append(f"step {s.index} ({s.dst}) peak {s.peak} > min(NM,F)={cap2}")
        else:
            worst1 = max(worst1, s.peak)
            if s.peak > n:
                violations.append(f"step {s.index} ({s.dst}) peak {s.peak} > N={n}")
        if free_connex and s.peak > n + m:
            violations.append(f"step {s.index} ({s.dst}) peak {s.peak} > N+M={n + m}")
    return BoundVerdict(not violations, n, m, f, free_connex, worst1, worst2, violations)
