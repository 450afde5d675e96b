"""Per-relation statistics used for cardinality estimation."""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field
from typing import Mapping

from ..relation import AnnotatedRelation

CE_MODES = ("accurate", "estimated", "worst_case")
QUANTILES = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class RelationStats:
    cardinality: int
    ndv: Mapping[str, int]
    quantiles: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        for a, d in self.ndv.items():
            if d > self.cardinality:
                raise ValueError(f"distinct count of {a} exceeds cardinality")
        for a, q in self.quantiles.items():
            if list(q) != sorted(q):
                raise ValueError(f"quantiles of {a} are not monotone")


@dataclass(frozen=True)
class Stats:
    relations: Mapping[str, RelationStats]
    mode: str = "estimated"
    data: Mapping[str, AnnotatedRelation] | None = None  # needed by accurate mode

    def __post_init__(self):
        if self.mode not in CE_MODES:
            raise ValueError(f"unknown cardinality-estimation mode {self.mode!r}")
        if self.mode == "accurate" and self.data is None:
            raise ValueError("accurate mode needs the relations themselves")

    def size(self, name: str, default: int = 1000) -> int:
        rs = self.relations.get(name)
        return rs.cardinality if rs is not None else default

    def sizes(self) -> dict[str, int]:
        return {k: v.cardinality for k, v in self.relations.items()}

    def with_mode(self, mode: str) -> "Stats":
        return Stats(self.relations, mode, self.data)

    def to_text(self) -> str:
        lines = []
        for name in sorted(self.relations):
            rs = self.relations[name]
            lines.append(f"{name} rows={rs.cardinality}")
            for a, d in rs.ndv.items():
                q = rs.quantiles.get(a)
                extra = f" quantiles={list(q)}" if q else ""
                lines.append(f"  {a} ndv={d}{extra}")
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return {
            name: {
                "rows": rs.cardinality,
                "ndv": dict(rs.ndv),
                "quantiles": {a: [_plain(v) for v in q] for a, q in rs.quantiles.items()},
            }
            for name, rs in self.relations.items()
        }


def _plain(v):
    return v.isoformat() if isinstance(v, _dt.date) else v


def _quantiles(values: list) -> tuple:
    values = sorted(values)
    if not values:
        return ()
    return tuple(values[min(len(values) - 1, int(q * (len(values) - 1)))] for q in QUANTILES)


def relation_stats(rel: AnnotatedRelation) -> RelationStats:
    ndv = {}
    quant = {}
    for j, a in enumerate(rel.schema):
        col = [r[j] for r in rel.rows]
        ndv[a] = len(set(col))
        if col and all(isinstance(v, (int, float, _dt.date)) and not isinstance(v, bool) for v in col):
            quant[a] = _quantiles(col)
    return RelationStats(len(rel), ndv, quant)


def collect_stats(relations: Mapping[str, AnnotatedRelation], mode: str = "estimated") -> Stats:
    return Stats(
        {name: relation_stats(rel) for name, rel in relations.items()},
        mode,
        dict(relations),
    )
