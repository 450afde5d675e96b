"""Attributes and annotated relations, plus the grouping primitive."""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .errors import DomainMismatch, SchemaMismatch, UnknownAttribute
from .semiring import Semiring

DOMAIN_KINDS = ("integer", "float", "string", "date")


@dataclass(frozen=True)
class Attribute:
    name: str
    domain_kind: str = "integer"

    def __post_init__(self):
        if not self.name:
            raise ValueError("attribute name must be non-empty")
        if self.domain_kind not in DOMAIN_KINDS:
            raise ValueError(f"unknown domain kind {self.domain_kind!r}")

    def accepts(self, value) -> bool:
        if value is None:
            return False
        kind = self.domain_kind
        if kind == "integer":
            return isinstance(value, int) and not isinstance(value, bool)
        if kind == "float":
            return isinstance(value, (int, float)) and not isinstance(value, bool)
        if kind == "string":
            return isinstance(value, str)
        return isinstance(value, _dt.date)

    def parse(self, text: str):
        """Parse a CSV cell. Empty cells are NULLs and are rejected."""
        if text is None or text == "":
            raise DomainMismatch(f"NULL value for attribute {self.name}")
        try:
            if self.domain_kind == "integer":
                return int(text)
            if self.domain_kind == "float":
                return float(text)
            if self.domain_kind == "date":
                return _dt.date.fromisoformat(text)
        except ValueError:
            raise DomainMismatch(
                f"value {text!r} is not a valid {self.domain_kind} for {self.name}"
            ) from None
        return text


@dataclass(frozen=True)
class AnnotatedRelation:
    """A bag of tuples, each carrying one semiring annotation.

    ``annotations is None`` means the annotation column has been pruned: every
    tuple implicitly carries the semiring's multiplicative identity.
    """

    name: str
    schema: tuple[str, ...]
    rows: tuple[tuple, ...] = ()
    annotations: tuple | None = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        if self.annotations is not None:
            object.__setattr__(self, "annotations", tuple(self.annotations))
            if len(self.annotations) != len(self.rows):
                raise SchemaMismatch(
                    f"{self.name}: {len(self.rows)} rows but {len(self.annotations)} annotations"
                )
        width = len(self.schema)
        for row in self.rows:
            if len(row) != width:
                raise SchemaMismatch(
                    f"{self.name}: row {row!r} does not match schema {self.schema}"
                )
        if len(set(self.schema)) != width:
            raise SchemaMismatch(f"{self.name}: duplicate attribute in schema {self.schema}")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def pruned(self) -> bool:
        return self.annotations is None

    def annotation_list(self, semiring: Semiring) -> list:
        if self.annotations is None:
            return [semiring.one] * len(self.rows)
        return list(self.annotations)

    def index_of(self, attrs: Iterable[str]) -> tuple[int, ...]:
        pos = {a: i for i, a in enumerate(self.schema)}
        try:
            return tuple(pos[a] for a in attrs)
        except KeyError as exc:
            raise UnknownAttribute(f"{self.name} has no attribute {exc.args[0]}") from None

    def renamed(self, name: str) -> "AnnotatedRelation":
        return AnnotatedRelation(name, self.schema, self.rows, self.annotations)

    def without_annotations(self) -> "AnnotatedRelation":
        return AnnotatedRelation(self.name, self.schema, self.rows, None)

    def check_domains(self, attributes: Mapping[str, Attribute]) -> None:
        for j, a in enumerate(self.schema):
            attr = attributes.get(a)
            if attr is None:
                continue
            for row in self.rows:
                if not attr.accepts(row[j]):
                    raise DomainMismatch(
                        f"{self.name}.{a}: {row[j]!r} is not a {attr.domain_kind}"
                    )

    def as_dict(self, semiring: Semiring, order: Sequence[str] | None = None) -> dict:
        """Canonical {row: annotation} view, duplicates folded with plus."""
        order = tuple(order) if order is not None else self.schema
        if set(order) != set(self.schema):
            raise SchemaMismatch(f"{self.name}: cannot reorder {self.schema} as {order}")
        idx = self.index_of(order)
        out: dict = {}
        for row, ann in zip(self.rows, self.annotation_list(semiring)):
            key = tuple(row[i] for i in idx)
            out[key] = semiring.plus(out[key], ann) if key in out else ann
        return out

    def pretty(self, limit: int = 20) -> str:
        header = list(self.schema) + ["annot"]
        body = []
        anns = self.annotations if self.annotations is not None else ["(1)"] * len(self.rows)
        for row, ann in list(zip(self.rows, anns))[:limit]:
            body.append([str(v) for v in row] + [str(ann)])
        widths = [max([len(h)] + [len(r[i]) for r in body]) for i, h in enumerate(header)]
        lines = [" | ".join(h.ljust(w) for h, w in zip(header, widths))]
        lines.append("-+-".join("-" * w for w in widths))
        lines += [" | ".join(c.ljust(w) for c, w in zip(r, widths)) for r in body]
        if len(self.rows) > limit:
            lines.append(f"... ({len(self.rows)} rows)")
        return "\n".join(lines)


def annotate_default(
    name: str, schema: Sequence[str], rows: Iterable[Sequence[Any]], semiring: Semiring
) -> AnnotatedRelation:
    """Wrap plain rows as a relation whose annotations are all ``semiring.one``."""
    rows = tuple(tuple(r) for r in rows)
    return AnnotatedRelation(name, schema, rows, (semiring.one,) * len(rows))


def group_aggregate(
    relation: AnnotatedRelation, keep: Sequence[str], semiring: Semiring, name: str | None = None
) -> AnnotatedRelation:
    """One tuple per distinct projection on ``keep``, annotations folded with plus.

    Keeping no attributes on a non-empty input yields the single empty tuple.
    """
    keep = tuple(keep)
    idx = relation.index_of(keep)
    name = name or relation.name
    if relation.annotations is None and semiring.idempotent_plus:
        seen = dict.fromkeys(tuple(row[i] for i in idx) for row in relation.rows)
        return AnnotatedRelation(name, keep, tuple(seen), None)
    groups: dict = {}
    plus = semiring.plus_op
    for row, ann in zip(relation.rows, relation.annotation_list(semiring)):
        key = tuple(row[i] for i in idx)
        if key in groups:
            groups[key] = plus(groups[key], ann)
        else:
            groups[key] = ann
    return AnnotatedRelation(name, keep, tuple(groups), tuple(groups.values()))


def same_result(
    a: AnnotatedRelation, b: AnnotatedRelation, semiring: Semiring
) -> bool:
    """Compare two results as annotated multisets (column order ignored)."""
    if set(a.schema) != set(b.schema):
        return False
    da = a.as_dict(semiring, sorted(a.schema))
    db = b.as_dict(semiring, sorted(b.schema))
    if da.keys() != db.keys():
        return False
    return all(semiring.equal(da[k], db[k]) for k in da)


def diff_results(a: AnnotatedRelation, b: AnnotatedRelation, semiring: Semiring, limit=5) -> str:
    """Human-readable description of where two results disagree."""
    if set(a.schema) != set(b.schema):
        return f"schemas differ: {a.schema} vs {b.schema}"
    da = a.as_dict(semiring, sorted(a.schema))
    db = b.as_dict(semiring, sorted(b.schema))
    msgs = []
    for k in list(da.keys() - db.keys())[:limit]:
        msgs.append(f"only left: {k} -> {da[k]}")
    for k in list(db.keys() - da.keys())[:limit]:
        msgs.append(f"only right: {k} -> {db[k]}")
    for k in da.keys() & db.keys():
        if not semiring.equal(da[k], db[k]) and len(msgs) < 3 * limit:
            msgs.append(f"{k}: {da[k]} != {db[k]}")
    return "; ".join(msgs) or "equal"
