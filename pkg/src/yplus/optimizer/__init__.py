"""Rule-based rewrites and cost-based join-tree selection."""

from __future__ import annotations

from .choose import ALL_RULES, Candidate, OptimizedPlan, choose_plan
from .cost import CostEstimate, estimate_cost
from .rules import (
    CycleElimination,
    Fusion,
    apply_annotation_pruning,
    restrict_constraints,
    rule_aggregation_elimination,
    rule_annotation_pruning,
    rule_cycle_elimination,
    rule_dimension_fusion,
    rule_semijoin_elimination,
)
from .stats import CE_MODES, RelationStats, Stats, collect_stats, relation_stats
from .trees import enumerate_candidate_trees, tree_rank_key

__all__ = [
    "ALL_RULES", "CE_MODES", "Candidate", "CostEstimate", "CycleElimination", "Fusion",
    "OptimizedPlan", "RelationStats", "Stats", "apply_annotation_pruning", "choose_plan",
    "collect_stats", "enumerate_candidate_trees", "estimate_cost", "relation_stats",
    "restrict_constraints", "rule_aggregation_elimination", "rule_annotation_pruning",
    "rule_cycle_elimination", "rule_dimension_fusion", "rule_semijoin_elimination",
    "tree_rank_key",
]
