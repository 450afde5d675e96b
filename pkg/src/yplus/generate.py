"""Seeded synthetic instances and random acyclic queries.

Every generator takes a ``random.Random`` (or a seed) so the output is
reproducible.  Plain relations contain distinct rows; the k-copy generator is
the one place that deliberately produces repeated keys.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping

from .query import Atom, ConjunctiveQuery, SchemaConstraints, make_query
from .relation import AnnotatedRelation
from .semiring import SUM_PRODUCT, Semiring

INSTANCE_KINDS = ("uniform", "zipf", "pkfk", "kcopy", "star")


def _rng(seed) -> random.Random:
    return seed if isinstance(seed, random.Random) else random.Random(seed)


def zipf_weights(domain: int, skew: float) -> list[float]:
    """Zipf probabilities over ``0..domain-1``; ``skew = 0`` is uniform."""
    return [1.0 / (k + 1) ** skew for k in range(domain)]


def _annotation(rng: random.Random, semiring: Semiring):
    if semiring.ground_kind == "boolean":
        return rng.random() < 0.8
    if semiring.descriptor == "sum_product":
        return float(rng.randint(1, 9)) if rng.random() < 0.5 else rng.randint(1, 9) / 4
    return float(rng.randint(0, 9))


def random_relation(
    name: str,
    schema,
    rows: int,
    domain: int,
    seed=0,
    semiring: Semiring = SUM_PRODUCT,
    annotated: bool = True,
    skew: float = 0.0,
    distinct: bool = True,
) -> AnnotatedRelation:
    """``rows`` tuples over ``0..domain-1`` drawn with Zipf skew (0 = uniform)."""
    rng = _rng(seed)
    schema = tuple(schema)
    weights = zipf_weights(domain, skew)
    values = range(domain)
    limit = domain ** len(schema)
    rows = min(rows, limit) if distinct else rows
    out: dict = {}
    seq = []
    guard = 0
    while (len(out) if distinct else len(seq)) < rows and guard < 50 * rows + 100:
        guard += 1
        t = tuple(rng.choices(values, weights)[0] for _ in schema)
        if distinct:
            out.setdefault(t, None)
        else:
            seq.append(t)
    tuples = list(out) if distinct else seq
    anns = [_annotation(rng, semiring) if annotated else semiring.one for _ in tuples]
    return AnnotatedRelation(name, schema, tuples, anns)


def uniform_instance(
    query: ConjunctiveQuery, rows: int = 100, domain: int = 20, seed=0
) -> dict[str, AnnotatedRelation]:
    return zipf_instance(query, rows, domain, 0.0, seed)


def zipf_instance(
    query: ConjunctiveQuery, rows: int = 100, domain: int = 20, skew: float = 1.0, seed=0
) -> dict[str, AnnotatedRelation]:
    rng = _rng(seed)
    return {
        a.name: random_relation(
            a.name, a.attrs, rows, domain, rng, query.semiring, a.annotation is not None, skew
        )
        for a in query.atoms
    }


def pkfk_instance(
    query: ConjunctiveQuery,
    constraints: SchemaConstraints,
    rows: int = 100,
    domain: int = 20,
    seed=0,
    sizes: Mapping[str, int] | None = None,
) -> dict[str, AnnotatedRelation]:
    """Data honouring declared single-attribute keys and foreign keys.

    Key columns hold distinct values; a foreign-key column draws only from the
    referenced key values, so every child tuple finds its parent.
    """
    rng = _rng(seed)
    sizes = dict(sizes or {})
    sr = query.semiring
    parents = {(c, a): p for c, a, p, _ in constraints.foreign_keys}
    order: list[Atom] = []
    pending = list(query.atoms)
    while pending:
        for atom in pending:
            deps = {p for (c, _), p in parents.items() if c == atom.name and p != atom.name}
            if deps <= {a.name for a in order}:
                order.append(atom)
                pending.remove(atom)
                break
        else:
            order.extend(pending)
            break
    key_values: dict[tuple[str, str], list] = {}
    out = {}
    for atom in order:
        n = sizes.get(atom.name, rows)
        keys = [k for k in constraints.keys_of(atom.name) if len(k) == 1]
        key_attrs = {k[0] for k in keys}
        cols = {}
        for x in atom.attrs:
            if x in key_attrs:
                parent = parents.get((atom.name, x))
                pool = key_values.get((parent, x)) if parent else None
                if pool is not None:
                    n = min(n, len(pool))
                    cols[x] = rng.sample(pool, n)
                else:
                    cols[x] = rng.sample(range(max(n, domain)), n)
        tuples = []
        for k in range(n):
            row = []
            for x in atom.attrs:
                if x in cols:
                    row.append(cols[x][k])
                elif (atom.name, x) in parents:
                    row.append(rng.choice(key_values[(parents[(atom.name, x)], x)]))
                else:
                    row.append(rng.randrange(domain))
            tuples.append(tuple(row))
        for x in key_attrs:
            key_values[(atom.name, x)] = [t[atom.attrs.index(x)] for t in tuples]
        anns = [_annotation(rng, sr) if atom.annotation is not None else sr.one for _ in tuples]
        out[atom.name] = AnnotatedRelation(atom.name, atom.attrs, tuples, anns)
    return out


def kcopy_instance(
    relations: Mapping[str, AnnotatedRelation], copy: set[str] | list[str], k: int = 5
) -> dict[str, AnnotatedRelation]:
    """Repeat every tuple of the named relations ``k`` times.

    A foreign key joining into a copied relation then fans out ``k`` ways,
    turning a key join into a many-to-many one.
    """
    out = dict(relations)
    for name in copy:
        rel = relations[name]
        anns = rel.annotations
        out[name] = AnnotatedRelation(
            name, rel.schema, [r for r in rel.rows for _ in range(k)],
            None if anns is None else [a for a in anns for _ in range(k)],
        )
    return out


def star_instance(degree: int = 1000, semiring: Semiring = SUM_PRODUCT):
    """Two-path query over a star graph with one extra dangling edge.

    ``R1(x1, x2)`` holds the edges leaf -> hub and ``R2(x2, x3)`` the edges
    hub -> leaf plus one edge leaving a node that nothing reaches.  With
    ``O = {x1}`` the full join has ``degree**2`` rows while the input has
    ``2 * degree + 1``.
    """
    q = make_query([("R1", ("x1", "x2")), ("R2", ("x2", "x3"))], ["x1"], semiring, name="Q")
    hub = 0
    r1 = [(i, hub) for i in range(1, degree + 1)]
    r2 = [(hub, j) for j in range(1, degree + 1)] + [(degree + 1, degree + 2)]
    one = semiring.one
    rels = {
        "R1": AnnotatedRelation("R1", ("x1", "x2"), r1, [one] * len(r1)),
        "R2": AnnotatedRelation("R2", ("x2", "x3"), r2, [one] * len(r2)),
    }
    return q, rels


def random_acyclic_query(
    seed=0,
    relations: tuple[int, int] = (2, 7),
    attrs: tuple[int, int] = (1, 4),
    semiring: Semiring = SUM_PRODUCT,
) -> ConjunctiveQuery:
    """A random acyclic query built by growing a join tree.

    Each new relation picks an existing one as its tree parent, shares a
    non-empty subset of the parent's attributes and adds fresh ones.  Every
    relation carries an annotation column named ``v``.  The output is a
    random subset of the attributes.
    """
    rng = _rng(seed)
    n = rng.randint(*relations)
    atoms: list[tuple[str, tuple[str, ...]]] = []
    fresh = iter(range(1, 1000))
    width = rng.randint(*attrs)
    atoms.append(("R1", tuple(f"x{next(fresh)}" for _ in range(width))))
    for i in range(2, n + 1):
        _, parent_attrs = rng.choice(atoms)
        width = rng.randint(max(1, attrs[0]), attrs[1])
        k = rng.randint(1, min(width, len(parent_attrs)))
        shared = rng.sample(parent_attrs, k)
        extra = [f"x{next(fresh)}" for _ in range(width - k)]
        mine = shared + extra
        rng.shuffle(mine)
        atoms.append((f"R{i}", tuple(mine)))
    universe = list(dict.fromkeys(x for _, a in atoms for x in a))
    out = [x for x in universe if rng.random() < 0.35]
    return make_query([(name, a, "v") for name, a in atoms], out, semiring)


def random_instance(
    query: ConjunctiveQuery, seed=0, rows: tuple[int, int] = (1, 200), domain: int | None = None
) -> dict[str, AnnotatedRelation]:
    """Distinct random rows per relation, sized independently in ``rows``."""
    rng = _rng(seed)
    out = {}
    for a in query.atoms:
        n = rng.randint(*rows)
        d = domain or max(2, rng.randint(2, 12))
        out[a.name] = random_relation(
            a.name, a.attrs, n, d, rng, query.semiring, a.annotation is not None
        )
    return out


@dataclass(frozen=True)
class InstanceSpec:
    """What ``gen`` should build; fields unused by a kind are ignored."""

    kind: str = "uniform"
    rows: int = 100
    domain: int = 20
    skew: float = 1.0
    copies: int = 5
    degree: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in INSTANCE_KINDS:
            raise ValueError(f"unknown instance kind {self.kind!r}; expected one of {INSTANCE_KINDS}")


def generate_instance(
    spec: InstanceSpec,
    query: ConjunctiveQuery | None = None,
    constraints: SchemaConstraints | None = None,
) -> tuple[ConjunctiveQuery, dict[str, AnnotatedRelation]]:
    """Build relations for ``query`` (the star kind brings its own query)."""
    if spec.kind == "star":
        return star_instance(spec.degree, query.semiring if query else SUM_PRODUCT)
    if query is None:
        raise ValueError(f"instance kind {spec.kind} needs a query")
    cons = constraints or SchemaConstraints()
    if spec.kind == "uniform":
        return query, uniform_instance(query, spec.rows, spec.domain, spec.seed)
    if spec.kind == "zipf":
        return query, zipf_instance(query, spec.rows, spec.domain, spec.skew, spec.seed)
    base = pkfk_instance(query, cons, spec.rows, spec.domain, spec.seed)
    if spec.kind == "pkfk":
        return query, base
    keyed = [a.name for a in query.atoms if cons.keys_of(a.name)]
    return query, kcopy_instance(base, keyed, spec.copies)
