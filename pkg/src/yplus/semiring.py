"""Commutative semirings used to annotate tuples.

Every aggregation in the package is parameterised by a :class:`Semiring`:
``plus`` folds annotations that land in the same group, ``times`` combines
annotations of tuples that join.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass
from functools import reduce
from typing import Any, Callable, Iterable

from .errors import UnsupportedSemiring

REL_TOL = 1e-9


@dataclass(frozen=True)
class Semiring:
    name: str
    plus_op: Callable[[Any, Any], Any]
    times_op: Callable[[Any, Any], Any]
    zero: Any
    one: Any
    ground_kind: str  # "integer" | "float" | "boolean"
    descriptor: str  # "sum_product" | "max_plus" | "max_times" | "bool_or_and" | "custom"
    idempotent_plus: bool = False

    def plus(self, a, b):
        return self.plus_op(a, b)

    def times(self, a, b):
        return self.times_op(a, b)

    def sum(self, values: Iterable) -> Any:
        return reduce(self.plus_op, values, self.zero)

    def product(self, values: Iterable) -> Any:
        return reduce(self.times_op, values, self.one)

    def coerce(self, value) -> Any:
        """Convert a raw annotation value (e.g. a CSV cell) into the ground set."""
        if self.ground_kind == "boolean":
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "t", "yes")
            return bool(value)
        if isinstance(value, str):
            value = value.strip()
            try:
                return int(value)
            except ValueError:
                return float(value)
        return value

    def equal(self, a, b) -> bool:
        """Exact for integer/boolean values, relative tolerance 1e-9 for floats."""
        if isinstance(a, float) or isinstance(b, float):
            if math.isinf(a) or math.isinf(b):
                return a == b
            return math.isclose(a, b, rel_tol=REL_TOL, abs_tol=1e-12)
        return a == b

    def __repr__(self) -> str:
        return f"Semiring({self.name})"


SUM_PRODUCT = Semiring(
    "sum_product", operator.add, operator.mul, 0, 1,
    ground_kind="float", descriptor="sum_product",
)

MAX_PLUS = Semiring(
    "max_plus", max, operator.add, -math.inf, 0,
    ground_kind="float", descriptor="max_plus", idempotent_plus=True,
)

# Over the non-negative reals; used for MAX(a * b) style aggregates.
MAX_TIMES = Semiring(
    "max_times", max, operator.mul, 0, 1,
    ground_kind="float", descriptor="max_times", idempotent_plus=True,
)

BOOLEAN = Semiring(
    "bool", operator.or_, operator.and_, False, True,
    ground_kind="boolean", descriptor="bool_or_and", idempotent_plus=True,
)

BUILTIN = {
    "sum_product": SUM_PRODUCT,
    "max_plus": MAX_PLUS,
    "max_times": MAX_TIMES,
    "bool": BOOLEAN,
    "bool_or_and": BOOLEAN,
}


def get_semiring(name: str) -> Semiring:
    try:
        return BUILTIN[name]
    except KeyError:
        raise UnsupportedSemiring(f"unknown semiring {name!r}") from None
