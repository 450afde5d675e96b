"""Conjunctive queries, selection predicates and key constraints."""

from __future__ import annotations

import datetime as _dt
import operator
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import DomainMismatch, EmptyQuery, ParseError, UnknownAttribute
from .relation import Attribute
from .semiring import SUM_PRODUCT, Semiring

_COMPARE = {
    "=": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    ">": operator.gt,
    "<=": operator.le,
    ">=": operator.ge,
}


@dataclass(frozen=True)
class AttrRef:
    """Right-hand side of a predicate that names another attribute."""

    name: str

    def __str__(self) -> str:
        return self.name


def _literal_text(value) -> str:
    if isinstance(value, AttrRef):
        return value.name
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    if isinstance(value, _dt.date):
        return "'" + value.isoformat() + "'"
    return repr(value)


def _align(cell, literal):
    # Dates are written as ISO strings in query text.
    if isinstance(cell, _dt.date) and isinstance(literal, str):
        return _dt.date.fromisoformat(literal)
    return literal


@dataclass(frozen=True)
class Predicate:
    """``attr op value``; ``op`` is a comparison or ``between`` (value is a pair)."""

    attr: str
    op: str
    value: object

    def __post_init__(self):
        if self.op not in _COMPARE and self.op != "between":
            raise ValueError(f"unknown comparison {self.op!r}")

    def attributes(self) -> set[str]:
        out = {self.attr}
        if isinstance(self.value, AttrRef):
            out.add(self.value.name)
        return out

    def compile(self, schema: Sequence[str]):
        """Return a row -> bool function for rows laid out as ``schema``."""
        pos = {a: i for i, a in enumerate(schema)}
        if self.attr not in pos:
            raise UnknownAttribute(f"predicate attribute {self.attr} not in {tuple(schema)}")
        i = pos[self.attr]
        if self.op == "between":
            lo, hi = self.value
            return lambda row: _align(row[i], lo) <= row[i] <= _align(row[i], hi)
        cmp = _COMPARE[self.op]
        if isinstance(self.value, AttrRef):
            if self.value.name not in pos:
                raise UnknownAttribute(f"predicate attribute {self.value.name} not in {tuple(schema)}")
            j = pos[self.value.name]
            return lambda row: cmp(row[i], row[j])
        lit = self.value
        return lambda row: cmp(row[i], _align(row[i], lit))

    def __str__(self) -> str:
        if self.op == "between":
            lo, hi = self.value
            return f"{self.attr} BETWEEN {_literal_text(lo)} AND {_literal_text(hi)}"
        return f"{self.attr} {self.op} {_literal_text(self.value)}"


def compile_all(predicates: Iterable[Predicate], schema: Sequence[str]):
    tests = [p.compile(schema) for p in predicates]
    return lambda row: all(t(row) for t in tests)


_TOKEN = re.compile(
    r"\s*(?:(?P<str>'(?:[^']|'')*')|(?P<num>-?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)"
    r"|(?P<op><=|>=|!=|<>|=|<|>)|(?P<name>[A-Za-z_][A-Za-z0-9_']*))"
)


def _tokens(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected text {text[pos:]!r} in predicate", 0, pos + 1)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return out


def _value(tok):
    kind, text, col = tok
    if kind == "str":
        return text[1:-1].replace("''", "'")
    if kind == "num":
        return float(text) if any(c in text for c in ".eE") else int(text)
    if kind == "name":
        return AttrRef(text)
    raise ParseError(f"expected a value, got {text!r}", 0, col + 1)


def parse_predicates(text: str) -> tuple[Predicate, ...]:
    """Parse ``a = 1 AND b BETWEEN 2 AND 5 AND c != d`` style conjunctions."""
    toks = _tokens(text)
    preds = []
    i = 0
    while i < len(toks):
        if toks[i][0] != "name":
            raise ParseError(f"expected attribute name, got {toks[i][1]!r}", 0, toks[i][2] + 1)
        attr = toks[i][1]
        if i + 1 >= len(toks):
            raise ParseError("incomplete predicate", 0, len(text) + 1)
        kind, word, col = toks[i + 1]
        if kind == "name" and word.lower() == "between":
            if i + 4 >= len(toks) or toks[i + 3][1].lower() != "and":
                raise ParseError("malformed BETWEEN", 0, col + 1)
            preds.append(Predicate(attr, "between", (_value(toks[i + 2]), _value(toks[i + 4]))))
            i += 5
        elif kind == "op":
            if i + 2 >= len(toks):
                raise ParseError("missing comparison operand", 0, col + 1)
            op = "!=" if word == "<>" else word
            preds.append(Predicate(attr, op, _value(toks[i + 2])))
            i += 3
        else:
            raise ParseError(f"expected comparison after {attr}, got {word!r}", 0, col + 1)
        if i < len(toks):
            if toks[i][1].lower() != "and":
                raise ParseError(f"expected AND, got {toks[i][1]!r}", 0, toks[i][2] + 1)
            i += 1
            if i == len(toks):
                raise ParseError("dangling AND", 0, len(text) + 1)
    if not preds:
        raise ParseError("empty predicate", 0, 1)
    return tuple(preds)


@dataclass(frozen=True)
class Atom:
    """One relation occurrence ``name(attrs)`` in a query."""

    name: str
    attrs: tuple[str, ...]
    annotation: str | None = None  # source column, or None for default-one
    source: str | None = None  # CSV path, when loaded from disk

    def __post_init__(self):
        object.__setattr__(self, "attrs", tuple(self.attrs))

    @property
    def attr_set(self) -> frozenset[str]:
        return frozenset(self.attrs)

    def __str__(self) -> str:
        return f"{self.name}({', '.join(self.attrs)})"


@dataclass(frozen=True)
class ConjunctiveQuery:
    """``pi_O (R_1 join ... join R_n)`` over a semiring, with pushed-down selections."""

    atoms: tuple[Atom, ...]
    output: tuple[str, ...]
    semiring: Semiring = SUM_PRODUCT
    attributes: Mapping[str, Attribute] = field(default_factory=dict)
    selections: tuple[tuple[str, Predicate], ...] = ()
    name: str = "Q"

    @property
    def n(self) -> int:
        return len(self.atoms)

    @property
    def output_set(self) -> frozenset[str]:
        return frozenset(self.output)

    @property
    def universe(self) -> tuple[str, ...]:
        """All attributes, in order of first appearance."""
        return tuple(dict.fromkeys(a for atom in self.atoms for a in atom.attrs))

    def atom(self, name: str) -> Atom:
        for a in self.atoms:
            if a.name == name:
                return a
        raise KeyError(name)

    def index(self, name: str) -> int:
        for i, a in enumerate(self.atoms):
            if a.name == name:
                return i
        raise KeyError(name)

    def selections_for(self, name: str) -> tuple[Predicate, ...]:
        return tuple(p for r, p in self.selections if r == name)

    def is_full(self) -> bool:
        return self.output_set == frozenset(self.universe)

    def order_attrs(self, attrs: Iterable[str]) -> tuple[str, ...]:
        """Sort a set of attributes by the universe order (unknown ones last)."""
        attrs = set(attrs)
        order = {a: i for i, a in enumerate(self.universe)}
        return tuple(sorted(attrs, key=lambda a: (order.get(a, len(order)), a)))

    def with_atoms(self, atoms: Sequence[Atom], **changes) -> "ConjunctiveQuery":
        fields = dict(
            atoms=tuple(atoms), output=self.output, semiring=self.semiring,
            attributes=self.attributes, selections=self.selections, name=self.name,
        )
        fields.update(changes)
        return ConjunctiveQuery(**fields)

    def __str__(self) -> str:
        body = " ⋈ ".join(str(a) for a in self.atoms)
        return f"{self.name} = π[{', '.join(self.output)}]({body})"


def make_query(
    relations: Sequence,
    output_attrs: Iterable[str],
    semiring: Semiring = SUM_PRODUCT,
    selections: Iterable = (),
    attributes: Mapping[str, Attribute] | Iterable[Attribute] | None = None,
    name: str = "Q",
) -> ConjunctiveQuery:
    """Validate and build a query.

    ``relations`` holds :class:`Atom` objects or ``(name, attrs)`` /
    ``(name, attrs, annotation_column)`` tuples.  ``selections`` holds
    ``(relation name, Predicate or text)`` pairs.
    """
    atoms = []
    for r in relations:
        if isinstance(r, Atom):
            atoms.append(r)
        else:
            atoms.append(Atom(*r))
    if not atoms:
        raise EmptyQuery("a query needs at least one relation")
    names = [a.name for a in atoms]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate relation names {names}; rename self-join copies")
    for a in atoms:
        if not a.attrs:
            raise EmptyQuery(f"relation {a.name} has no attributes")
        if len(set(a.attrs)) != len(a.attrs):
            raise ValueError(f"relation {a.name} repeats an attribute: {a.attrs}")
        if a.annotation is not None and a.annotation in a.attrs:
            raise ValueError(f"annotation column {a.annotation} of {a.name} is also an attribute")

    universe = dict.fromkeys(x for a in atoms for x in a.attrs)
    if attributes is None:
        attr_map = {}
    elif isinstance(attributes, Mapping):
        attr_map = dict(attributes)
    else:
        attr_map = {a.name: a for a in attributes}
    for x in attr_map:
        if x not in universe:
            raise UnknownAttribute(f"attribute {x} is declared but used by no relation")
    attr_map = {x: attr_map.get(x, Attribute(x)) for x in universe}

    output = tuple(dict.fromkeys(output_attrs))
    for x in output:
        if x not in universe:
            raise UnknownAttribute(f"output attribute {x} does not appear in any relation")

    sels = []
    for rel, pred in selections:
        if rel not in names:
            raise UnknownAttribute(f"selection on unknown relation {rel}")
        preds = parse_predicates(pred) if isinstance(pred, str) else (pred,)
        atom = atoms[names.index(rel)]
        for p in preds:
            for x in p.attributes():
                if x not in atom.attrs:
                    raise UnknownAttribute(f"selection attribute {x} is not in {rel}")
            _check_literal(p, attr_map)
            sels.append((rel, p))
    return ConjunctiveQuery(tuple(atoms), output, semiring, attr_map, tuple(sels), name)


def _check_literal(pred: Predicate, attrs: Mapping[str, Attribute]) -> None:
    kind = attrs[pred.attr].domain_kind
    values = pred.value if pred.op == "between" else (pred.value,)
    for v in values:
        if isinstance(v, AttrRef):
            continue
        ok = {
            "integer": isinstance(v, int),
            "float": isinstance(v, (int, float)),
            "string": isinstance(v, str),
            "date": isinstance(v, str),
        }[kind]
        if kind == "date" and ok:
            try:
                _dt.date.fromisoformat(v)
            except ValueError:
                ok = False
        if not ok:
            raise DomainMismatch(f"literal {v!r} does not fit {pred.attr} ({kind})")


@dataclass(frozen=True)
class SchemaConstraints:
    """Declared primary keys, unique keys and foreign keys."""

    primary_keys: Mapping[str, tuple[str, ...]] = field(default_factory=dict)
    foreign_keys: tuple[tuple[str, str, str, str], ...] = ()  # (child, attr, parent, attr)
    uniques: Mapping[str, tuple[tuple[str, ...], ...]] = field(default_factory=dict)

    def __post_init__(self):
        for child, cattr, parent, pattr in self.foreign_keys:
            if not any(k == (pattr,) for k in self.keys_of(parent)):
                raise ValueError(
                    f"foreign key {child}.{cattr} -> {parent}.{pattr}: target is not a key"
                )

    def keys_of(self, relation: str) -> list[tuple[str, ...]]:
        keys = []
        if relation in self.primary_keys:
            keys.append(tuple(self.primary_keys[relation]))
        keys.extend(tuple(k) for k in self.uniques.get(relation, ()))
        return keys

    def is_key(self, relation: str, attrs: Iterable[str]) -> bool:
        """True when ``attrs`` contains a declared key of ``relation``."""
        attrs = set(attrs)
        return any(set(k) <= attrs for k in self.keys_of(relation))

    def has_fk(self, child: str, attr: str, parent: str) -> bool:
        return any(
            c == child and a == attr and p == parent for c, a, p, _ in self.foreign_keys
        )

    def renamed(self, mapping: Mapping[str, str]) -> "SchemaConstraints":
        """Apply a relation-name mapping (used when relations are fused or copied)."""
        pk = {mapping.get(r, r): k for r, k in self.primary_keys.items()}
        un = {mapping.get(r, r): k for r, k in self.uniques.items()}
        fks = tuple(
            (mapping.get(c, c), a, mapping.get(p, p), b) for c, a, p, b in self.foreign_keys
        )
        return SchemaConstraints(pk, fks, un)

    def validate(self, query: ConjunctiveQuery) -> None:
        names = {a.name: a for a in query.atoms}
        for rel, key in list(self.primary_keys.items()) + [
            (r, k) for r, ks in self.uniques.items() for k in ks
        ]:
            if rel not in names:
                raise UnknownAttribute(f"key declared on unknown relation {rel}")
            for x in key:
                if x not in names[rel].attrs:
                    raise UnknownAttribute(f"key attribute {x} not in {rel}")
        for c, a, p, b in self.foreign_keys:
            for rel, x in ((c, a), (p, b)):
                if rel not in names or x not in names[rel].attrs:
                    raise UnknownAttribute(f"foreign key references unknown {rel}.{x}")


NO_CONSTRAINTS = SchemaConstraints()
