"""Cardinality propagation over plans and the row-counting cost model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from ..plan_ir import Join, Materialize, Operand, PlanIR, Project, Select, Semijoin, count_ops
from ..query import AttrRef, NO_CONSTRAINTS, SchemaConstraints
from ..semiring import SUM_PRODUCT, Semiring
from .stats import Stats

DEFAULT_ROWS = 1000
OTHER_SELECTIVITY = 1 / 3


@dataclass(frozen=True)
class CostEstimate:
    total: float  # sum over instructions of input + output rows
    max_intermediate: float
    op_counts: Mapping[str, int]
    step_rows: tuple[float, ...] = ()  # estimated output size per step

    @property
    def total_intermediate(self) -> float:
        return sum(self.step_rows)


@dataclass
class _Est:
    card: float
    ndv: dict[str, float]
    keys: list[frozenset] = field(default_factory=list)

    def clamp(self) -> "_Est":
        self.ndv = {a: min(d, self.card) for a, d in self.ndv.items()}
        return self


def _project(e: _Est, keep) -> _Est:
    keep = tuple(keep)
    bound = math.prod(e.ndv.get(a, e.card) for a in keep) if keep else 1.0
    card = min(e.card, bound) if e.card > 0 else 0.0
    keys = [k for k in e.keys if k <= set(keep)] + [frozenset(keep)]
    return _Est(card, {a: e.ndv.get(a, card) for a in keep}, keys).clamp()


def _join(left: _Est, right: _Est, mode: str) -> tuple[_Est, float]:
    shared = set(left.ndv) & set(right.ndv)
    r_key = any(k <= shared for k in right.keys)
    l_key = any(k <= shared for k in left.keys)
    cartesian = left.card * right.card
    if mode == "worst_case" or not shared:
        card = cartesian
    else:
        denom = math.prod(max(left.ndv[a], right.ndv[a], 1.0) for a in shared)
        card = cartesian / denom
    if r_key:
        card = min(card, left.card)
    if l_key:
        card = min(card, right.card)
    ndv = dict(left.ndv)
    for a, d in right.ndv.items():
        ndv[a] = min(ndv[a], d) if a in ndv else d
    keys = []
    if r_key:
        keys += left.keys
    if l_key:
        keys += right.keys
    if not keys and left.keys and right.keys:
        keys = [a | b for a in left.keys for b in right.keys]
    return _Est(card, ndv, keys).clamp(), card


def _selectivity(pred, e: _Est, stats: Stats, base: str | None) -> float:
    nd = max(e.ndv.get(pred.attr, 1.0), 1.0)
    if isinstance(pred.value, AttrRef):
        other = max(e.ndv.get(pred.value.name, 1.0), 1.0)
        return 1.0 / max(nd, other) if pred.op == "=" else OTHER_SELECTIVITY
    if pred.op == "=":
        return 1.0 / nd
    if pred.op == "!=":
        return 1.0 - 1.0 / nd
    rs = stats.relations.get(base) if base else None
    q = rs.quantiles.get(pred.attr) if rs else None
    if q and isinstance(q[0], (int, float)):
        lo, hi = q[0], q[-1]
        span = hi - lo
        if pred.op == "between":
            a, b = pred.value
        elif pred.op in ("<", "<="):
            a, b = lo, pred.value
        else:
            a, b = pred.value, hi
        try:
            if span <= 0:
                return 1.0 if a <= lo <= b else 0.0
            return max(0.0, min(1.0, (min(b, hi) - max(a, lo)) / span))
        except TypeError:
            return OTHER_SELECTIVITY
    return OTHER_SELECTIVITY


def estimate_cost(
    plan: PlanIR,
    stats: Stats,
    constraints: SchemaConstraints = NO_CONSTRAINTS,
    mode: str | None = None,
    semiring: Semiring = SUM_PRODUCT,
) -> CostEstimate:
    """Cost = sum of input and output rows over all instructions.

    ``accurate`` runs the plan on the stored data; ``estimated`` uses the
    uniformity/independence formulas; ``worst_case`` uses Cartesian bounds
    capped by declared keys.  ``semiring`` only matters for the dry run.
    """
    mode = mode or stats.mode
    counts = count_ops(plan).as_dict()
    if mode == "accurate":
        from ..executor import run_plan

        if stats.data is None:
            raise ValueError("accurate mode needs the relations")
        _, report = run_plan(plan, stats.data, semiring)
        return CostEstimate(
            float(report.rows_touched), float(report.max_intermediate), counts,
            tuple(float(s.out_rows) for s in report.steps),
        )

    renames = {}
    for rel, old, new in plan.renames:
        renames.setdefault(rel, {})[old] = new
    env: dict[str, _Est] = {}
    origin: dict[str, str] = {}
    for name in plan.inputs():
        rs = stats.relations.get(name)
        rn = renames.get(name, {})
        if rs is None:
            env[name] = _Est(float(DEFAULT_ROWS), {}, [])
        else:
            env[name] = _Est(
                float(rs.cardinality), {rn.get(a, a): float(d) for a, d in rs.ndv.items()}, []
            )
        env[name].keys = [
            frozenset(rn.get(a, a) for a in k) for k in constraints.keys_of(name)
        ]
        origin[name] = name

    def operand(op: Operand, peaks: list) -> _Est:
        e = env[op.name]
        if e.ndv == {} and op.keep is not None:
            e = _Est(e.card, {a: e.card for a in op.keep}, e.keys)
        if op.keep is None:
            return e
        out = _project(e, op.keep)
        peaks.append(out.card)
        return out

    total = 0.0
    peak_all = 0.0
    rows = []
    for step in plan.steps:
        peaks: list[float] = []
        if isinstance(step, Join):
            l_in, r_in = env[step.left.name].card, env[step.right.name].card
            left = operand(step.left, peaks)
            right = operand(step.right, peaks)
            out, inner = _join(left, right, mode)
            peaks.append(inner)
            if step.keep is not None:
                out = _project(out, step.keep)
            ins = l_in + r_in
        elif isinstance(step, Semijoin):
            left, right = env[step.left], env[step.right]
            shared = set(left.ndv) & set(right.ndv)
            card = left.card
            if mode == "estimated":
                for a in shared:
                    card *= min(1.0, right.ndv[a] / max(left.ndv[a], 1.0))
            out = _Est(card, dict(left.ndv), list(left.keys)).clamp()
            ins = left.card + right.card
        elif isinstance(step, Project):
            src = env[step.src]
            out = _project(src, step.keep)
            ins = src.card
        elif isinstance(step, Select):
            src = env[step.src]
            sel = 1.0
            if mode == "estimated":
                for p in step.predicates:
                    sel *= _selectivity(p, src, stats, origin.get(step.src))
            out = _Est(src.card * sel, dict(src.ndv), list(src.keys)).clamp()
            ins = src.card
        elif isinstance(step, Materialize):
            src = env[step.src]
            out = _Est(src.card, dict(src.ndv), list(src.keys))
            ins = src.card
        else:  # pragma: no cover
            raise TypeError(step)
        env[step.dst] = out
        # remember which base relation a filtered copy came from (for quantiles)
        src_name = step.left if isinstance(step, Semijoin) else getattr(step, "src", None)
        if isinstance(step, (Select, Semijoin, Materialize)) and src_name in origin:
            origin[step.dst] = origin[src_name]
        else:
            origin.pop(step.dst, None)
        total += ins + out.card
        rows.append(out.card)
        peak_all = max([peak_all, out.card] + peaks)
    return CostEstimate(total, peak_all, counts, tuple(rows))

