"""Yannakakis+ planning and execution for conjunctive queries over semirings."""

from .errors import YPlusError
from .semiring import BOOLEAN, MAX_PLUS, MAX_TIMES, SUM_PRODUCT, Semiring, get_semiring
from .relation import AnnotatedRelation, Attribute, annotate_default, group_aggregate
from .query import Atom, ConjunctiveQuery, Predicate, SchemaConstraints, make_query

__all__ = [
    "YPlusError", "Semiring", "SUM_PRODUCT", "MAX_PLUS", "MAX_TIMES", "BOOLEAN",
    "get_semiring", "AnnotatedRelation", "Attribute", "annotate_default",
    "group_aggregate", "Atom", "ConjunctiveQuery", "Predicate", "SchemaConstraints",
    "make_query",
]
