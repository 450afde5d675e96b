"""Cost-based plan selection composing the rewrite rules and tree ranking."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ..hypergraph import DEFAULT_TREE_LIMIT, JoinTree, build_hypergraph, gyo_reduce
from ..plan_ir import PlanIR
from ..planner import plan_with_tree
from ..query import ConjunctiveQuery, NO_CONSTRAINTS, SchemaConstraints
from .cost import CostEstimate, estimate_cost
from .rules import (
    DEFAULT_FUSION_THRESHOLD,
    apply_annotation_pruning,
    rule_aggregation_elimination,
    rule_cycle_elimination,
    rule_dimension_fusion,
    rule_semijoin_elimination,
)
from .stats import Stats
from .trees import enumerate_candidate_trees

ALL_RULES = (
    "cycle_elimination",
    "dimension_fusion",
    "aggregation_elimination",
    "semijoin_elimination",
    "annotation_pruning",
)
DEFAULT_MAX_CANDIDATES = 256
DEFAULT_TIME_BUDGET = 30.0


@dataclass
class Candidate:
    tree: JoinTree
    plan: PlanIR
    cost: CostEstimate
    fired: list[str] = field(default_factory=list)  # plan-level rules that changed the plan


@dataclass
class OptimizedPlan:
    plan: PlanIR
    query: ConjunctiveQuery  # the query actually planned (after rewrites)
    tree: JoinTree | None
    cost: CostEstimate
    candidates: list[Candidate] = field(default_factory=list)
    applied: list[str] = field(default_factory=list)
    fallback: bool = False  # budget ran out, first ranked tree used


def _finish(plan: PlanIR, query: ConjunctiveQuery, constraints, rules, output):
    """Apply the plan-level rules; also report which of them changed something."""
    fired = []
    steps = {
        "aggregation_elimination": lambda p: rule_aggregation_elimination(p, query, constraints, output),
        "semijoin_elimination": lambda p: rule_semijoin_elimination(p, query, constraints),
        "annotation_pruning": lambda p: apply_annotation_pruning(p, query),
    }
    for name, fn in steps.items():
        if name in rules:
            new = fn(plan)
            if new is not plan:
                fired.append(name)
            plan = new
    return plan, fired


def choose_plan(
    query: ConjunctiveQuery,
    stats: Stats | None = None,
    constraints: SchemaConstraints = NO_CONSTRAINTS,
    mode: str | None = None,
    rules=ALL_RULES,
    limit_trees: int = DEFAULT_TREE_LIMIT,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
    time_budget: float = DEFAULT_TIME_BUDGET,
    fusion_threshold: int = DEFAULT_FUSION_THRESHOLD,
) -> OptimizedPlan:
    """Rewrite, plan every candidate tree, score each plan and keep the cheapest.

    Rule order: cycle elimination, dimension fusion, tree choice, then
    aggregation elimination, semi-join elimination and annotation pruning on
    each candidate plan.  Ties go to the canonical tree encoding.  When the
    time budget runs out the first ranked tree is used.
    """
    stats = stats if stats is not None else Stats({}, "estimated")
    mode = mode or stats.mode
    rules = tuple(rules)
    applied: list[str] = []
    q = query
    cons = constraints
    elim = None
    if not gyo_reduce(build_hypergraph(q)).acyclic:
        if "cycle_elimination" in rules:
            elim = rule_cycle_elimination(q, cons)
        if elim is not None:
            q = elim.query
            applied.append("cycle_elimination")
        else:
            from ..ghd import plan_cyclic

            p = plan_cyclic(q, sizes=stats.sizes(), constraints=cons)
            if "annotation_pruning" in rules:
                p = apply_annotation_pruning(p, query)
            cost = estimate_cost(p, stats, cons, mode, query.semiring)
            return OptimizedPlan(p, q, None, cost, [], applied + ["ghd"])
    fusion = None
    if "dimension_fusion" in rules and stats.relations:
        fusion = rule_dimension_fusion(q, stats, fusion_threshold)
        if fusion is not None:
            q = fusion.query
            applied.append("dimension_fusion")
    trees = enumerate_candidate_trees(q, stats, limit_trees)
    candidates: list[Candidate] = []
    fallback = False
    start = time.perf_counter()
    for k, tree in enumerate(trees[:max_candidates]):
        if k > 0 and time.perf_counter() - start > time_budget:
            fallback = True
            break
        p = plan_with_tree(q, tree)
        if fusion is not None:
            p = fusion.attach(p)
        if elim is not None:
            p = elim.finish(p, query.name)
        p, fired = _finish(p, query, cons, rules, query.output)
        cost = estimate_cost(p, stats, cons, mode, query.semiring)
        candidates.append(Candidate(tree, p, cost, fired))
    if fallback:
        best = candidates[0]
    else:
        best = min(candidates, key=lambda c: (c.cost.total, c.tree.encoding()))
    applied += best.fired
    return OptimizedPlan(best.plan, q, best.tree, best.cost, candidates, applied, fallback)
