"""Line-oriented query files and CSV loading.

Example::

    name Q1
    semiring sum_product
    relation R1(x1, x2, x3, x4) annot=l_quantity file=r1.csv
    relation R2(x2, x5)
    output x1, x2
    pk R2(x2)
    fk R1.x2 -> R2.x2
    select R2: x5 >= 1990 AND x5 < 2000
    attr x5 integer

Relative file paths resolve against the query file's directory; a relation
without ``file=`` reads ``<name>.csv``.  Attribute domains not declared with
``attr`` are inferred from the data.
"""

from __future__ import annotations

import csv
import datetime as _dt
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import DomainMismatch, MissingRelation, ParseError, SchemaMismatch, YPlusError
from .query import Atom, ConjunctiveQuery, SchemaConstraints, make_query, parse_predicates
from .relation import DOMAIN_KINDS, AnnotatedRelation, Attribute
from .semiring import Semiring, get_semiring

_IDENT = r"[A-Za-z_][A-Za-z0-9_']*"
_REL = re.compile(rf"^(?P<name>{_IDENT})\s*\((?P<attrs>[^)]*)\)\s*(?P<opts>.*)$")
_FK = re.compile(rf"^(?P<c>{_IDENT})\.(?P<ca>{_IDENT})\s*->\s*(?P<p>{_IDENT})\.(?P<pa>{_IDENT})$")


@dataclass
class QueryFile:
    query: ConjunctiveQuery
    constraints: SchemaConstraints
    base_dir: Path
    declared_domains: dict

    def load(self, semiring: Semiring | None = None) -> dict[str, AnnotatedRelation]:
        return load_relations(self, semiring)


def _split_list(text: str, line: int, col: int) -> list[str]:
    items = [t.strip() for t in text.split(",")] if text.strip() else []
    for t in items:
        if not re.fullmatch(_IDENT, t):
            raise ParseError(f"bad attribute name {t!r}", line, col)
    return items


def parse_query_text(text: str, base_dir: str | Path = ".") -> QueryFile:
    relations: list[Atom] = []
    output = None
    semiring_name = "sum_product"
    name = "Q"
    pks: dict = {}
    uniques: dict = {}
    fks: list = []
    selections: list = []
    domains: dict = {}
    positions: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        line = line.strip()
        word, _, rest = line.partition(" ")
        rest = rest.strip()
        col = indent + len(word) + 2
        if word == "relation":
            m = _REL.match(rest)
            if not m:
                raise ParseError("expected 'relation NAME(attr, ...)'", lineno, col)
            attrs = _split_list(m.group("attrs"), lineno, col + m.start("attrs"))
            opts = {}
            for opt in m.group("opts").split():
                key, eq, val = opt.partition("=")
                if not eq or key not in ("annot", "file"):
                    raise ParseError(f"unknown relation option {opt!r}", lineno,
                                     col + m.start("opts") + 1)
                opts[key] = val
            relations.append(Atom(m.group("name"), tuple(attrs), opts.get("annot"), opts.get("file")))
            positions[m.group("name")] = lineno
        elif word == "output":
            output = _split_list(rest, lineno, col)
        elif word == "semiring":
            semiring_name = rest
        elif word == "name":
            if not re.fullmatch(_IDENT, rest):
                raise ParseError(f"bad query name {rest!r}", lineno, col)
            name = rest
        elif word in ("pk", "unique"):
            m = re.match(rf"^(?P<name>{_IDENT})\s*\((?P<attrs>[^)]*)\)$", rest)
            if not m:
                raise ParseError(f"expected '{word} NAME(attr, ...)'", lineno, col)
            key = tuple(_split_list(m.group("attrs"), lineno, col))
            if word == "pk":
                pks[m.group("name")] = key
            else:
                uniques.setdefault(m.group("name"), []).append(key)
        elif word == "fk":
            m = _FK.match(rest)
            if not m:
                raise ParseError("expected 'fk CHILD.attr -> PARENT.attr'", lineno, col)
            fks.append((m.group("c"), m.group("ca"), m.group("p"), m.group("pa")))
        elif word == "select":
            rel, colon, pred = rest.partition(":")
            if not colon:
                raise ParseError("expected 'select NAME: predicate'", lineno, col)
            try:
                preds = parse_predicates(pred)
            except ParseError as exc:
                raise ParseError(str(exc).split(": ", 1)[-1], lineno,
                                 col + len(rel) + 1 + exc.column) from None
            selections.extend((rel.strip(), p) for p in preds)
        elif word == "attr":
            parts = rest.split()
            if len(parts) != 2 or parts[1] not in DOMAIN_KINDS:
                raise ParseError(f"expected 'attr NAME {{{','.join(DOMAIN_KINDS)}}}'", lineno, col)
            domains[parts[0]] = parts[1]
        else:
            raise ParseError(f"unknown directive {word!r}", lineno, indent + 1)
    if output is None:
        raise ParseError("missing 'output' line", len(text.splitlines()) or 1, 1)
    try:
        semiring = get_semiring(semiring_name)
    except YPlusError as exc:
        raise ParseError(str(exc), 0, 0) from None
    known = {x for a in relations for x in a.attrs}
    for x in output:
        if x not in known:
            raise ParseError(f"output attribute {x} is not used by any relation", 0, 0)
    for rel, pred in selections:
        if rel not in positions:
            raise ParseError(f"selection on unknown relation {rel}", 0, 0)
        atom = next(a for a in relations if a.name == rel)
        for x in pred.attributes():
            if x not in atom.attrs:
                raise ParseError(f"selection attribute {x} not in {rel}", positions[rel], 1)
    attributes = {x: Attribute(x, k) for x, k in domains.items() if x in known}
    try:
        query = make_query(relations, output, semiring, selections, attributes, name=name)
        constraints = SchemaConstraints(pks, tuple(fks), {k: tuple(v) for k, v in uniques.items()})
        constraints.validate(query)
    except (YPlusError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc), 0, 0) from None
    return QueryFile(query, constraints, Path(base_dir), domains)


def parse_query_file(path: str | Path) -> QueryFile:
    path = Path(path)
    return parse_query_text(path.read_text(encoding="utf-8"), path.parent)


def infer_kind(values) -> str:
    kinds = ["integer", "float", "date"]
    for kind in kinds:
        try:
            for v in values:
                if kind == "integer":
                    int(v)
                elif kind == "float":
                    float(v)
                else:
                    _dt.date.fromisoformat(v)
            return kind
        except ValueError:
            continue
    return "string"


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file, a header row is required") from None
        rows = [r for r in reader if r]
    for k, r in enumerate(rows, 2):
        if len(r) != len(header):
            raise SchemaMismatch(f"{path}: line {k} has {len(r)} fields, header has {len(header)}")
    return header, rows


def load_relations(qf: QueryFile, semiring: Semiring | None = None) -> dict[str, AnnotatedRelation]:
    """Read every relation's CSV; columns map by name, else by position."""
    query = qf.query
    sr = semiring or query.semiring
    raw: dict[str, tuple[Atom, list[int], int | None, list[list[str]]]] = {}
    for atom in query.atoms:
        path = Path(atom.source or f"{atom.name}.csv")
        if not path.is_absolute():
            path = qf.base_dir / path
        if not path.exists():
            raise MissingRelation(f"data file {path} for {atom.name} not found")
        header, rows = read_csv(path)
        ann_idx = None
        if atom.annotation is not None:
            if atom.annotation not in header:
                raise SchemaMismatch(f"{path}: no annotation column {atom.annotation}")
            ann_idx = header.index(atom.annotation)
        if all(a in header for a in atom.attrs):
            idx = [header.index(a) for a in atom.attrs]
        else:
            rest = [i for i in range(len(header)) if i != ann_idx]
            if len(rest) != len(atom.attrs):
                raise SchemaMismatch(
                    f"{path}: columns {header} cannot be mapped onto {atom.name}{atom.attrs}"
                )
            idx = rest
        raw[atom.name] = (atom, idx, ann_idx, rows)

    kinds: dict[str, str] = {}
    for x in query.universe:
        if x in qf.declared_domains:
            kinds[x] = qf.declared_domains[x]
            continue
        values = []
        for atom, idx, _, rows in raw.values():
            if x in atom.attrs:
                j = idx[atom.attrs.index(x)]
                values.extend(r[j] for r in rows if r[j] != "")
        kinds[x] = infer_kind(values)
    attributes = {x: Attribute(x, k) for x, k in kinds.items()}

    out = {}
    for name, (atom, idx, ann_idx, rows) in raw.items():
        parsed, anns = [], []
        for r in rows:
            parsed.append(tuple(attributes[a].parse(r[j]) for a, j in zip(atom.attrs, idx)))
            if ann_idx is None:
                anns.append(sr.one)
            else:
                cell = r[ann_idx].strip()
                if cell == "":
                    raise DomainMismatch(f"{name}: NULL annotation")
                try:
                    anns.append(sr.coerce(cell))
                except ValueError:
                    raise DomainMismatch(f"{name}: annotation {cell!r} is not numeric") from None
        out[name] = AnnotatedRelation(name, atom.attrs, parsed, anns)
    qf.query = query.with_atoms(query.atoms, attributes=attributes)
    return out


def write_relation_csv(rel: AnnotatedRelation, path: Path, annot: str | None = "annot") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(rel.schema) + ([annot] if annot else []))
        anns = rel.annotations if rel.annotations is not None else [None] * len(rel)
        for row, a in zip(rel.rows, anns):
            cells = [v.isoformat() if isinstance(v, _dt.date) else v for v in row]
            w.writerow(cells + ([a] if annot else []))


def bundled_path(name: str) -> Path:
    return Path(__file__).parent / "data" / name
