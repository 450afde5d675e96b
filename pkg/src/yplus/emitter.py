"""Lowering of plans to SQL: one temporary view per instruction, then a final SELECT.

Views carry the annotation in a column named ``__v``.  Base tables hold the
query's attributes plus, when the relation has one, the annotation column
named in the query.  Boolean annotations are rendered as 0/1 integers, so OR
becomes MAX and AND becomes multiplication.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass

from .errors import UnsupportedSemiring
from .plan_ir import Join, Materialize, Operand, PlanIR, Project, Select, Semijoin, output_schema
from .query import AttrRef, ConjunctiveQuery, Predicate

ANN = "__v"
DIALECTS = ("view", "table")

# descriptor -> (aggregate, times operator, literal one)
_SQL_SEMIRING = {
    "sum_product": ("SUM", "*", "1"),
    "max_plus": ("MAX", "+", "0"),
    "max_times": ("MAX", "*", "1"),
    "bool_or_and": ("MAX", "*", "1"),
}


def sql_semiring(semiring) -> tuple[str, str, str]:
    try:
        return _SQL_SEMIRING[semiring.descriptor]
    except KeyError:
        raise UnsupportedSemiring(f"semiring {semiring.name} has no SQL rendering") from None


@dataclass
class _Source:
    """How a plan name is read in SQL: table or view, column per attribute, annotation."""

    table: str
    columns: dict[str, str]  # attribute -> column in ``table``
    ann: str | None  # annotation column, or None when every annotation is one


class _Writer:
    def __init__(self, query: ConjunctiveQuery, quote: str):
        self.query = query
        self.q = quote
        self.agg, self.times, self.one = sql_semiring(query.semiring)

    def ident(self, name: str) -> str:
        return f"{self.q}{name.replace(self.q, self.q * 2)}{self.q}"

    def col(self, alias: str, column: str) -> str:
        return f"{self.ident(alias)}.{self.ident(column)}"

    def literal(self, v) -> str:
        if isinstance(v, bool):
            return "1" if v else "0"
        if isinstance(v, (int, float)):
            return repr(v)
        if isinstance(v, _dt.date):
            v = v.isoformat()
        return "'" + str(v).replace("'", "''") + "'"

    def predicate(self, p: Predicate, alias: str, src: _Source) -> str:
        lhs = self.col(alias, src.columns[p.attr])

        def val(v):
            return self.col(alias, src.columns[v.name]) if isinstance(v, AttrRef) else self.literal(v)

        if p.op == "between":
            lo, hi = p.value
            return f"{lhs} BETWEEN {val(lo)} AND {val(hi)}"
        op = "<>" if p.op == "!=" else p.op
        return f"{lhs} {op} {val(p.value)}"

    def product(self, factors: list[str]) -> str | None:
        return f" {self.times} ".join(factors) if factors else None

    def grouped(self, select_cols: list[str], ann_expr: str | None, from_where: str,
                group_cols: list[str]) -> tuple[str, bool]:
        """SELECT with a plus-aggregate; returns SQL and whether ``__v`` is present."""
        idempotent = self.query.semiring.idempotent_plus
        if ann_expr is None and idempotent and group_cols:
            return f"SELECT DISTINCT {', '.join(select_cols)} {from_where}", False
        expr = ann_expr if ann_expr is not None else self.one
        cols = select_cols + [f"{self.agg}({expr}) AS {self.ident(ANN)}"]
        if group_cols:
            return f"SELECT {', '.join(cols)} {from_where} GROUP BY {', '.join(group_cols)}", True
        return self.folded(cols, from_where), True

    def folded(self, cols: list[str], from_where: str) -> str:
        """Aggregate without grouping that yields no row on empty input.

        A bare HAVING needs a recent SQLite, so the row count is filtered
        outside a subquery instead.
        """
        n = self.ident("__n")
        inner = f"SELECT {', '.join(cols)}, COUNT(*) AS {n} {from_where}"
        return f"SELECT {self.ident(ANN)} FROM ({inner}) AS {self.ident('_f')} WHERE {n} > 0"


def _base_sources(plan: PlanIR, query: ConjunctiveQuery) -> dict[str, _Source]:
    renames: dict[str, dict[str, str]] = {}
    for rel, old, new in plan.renames:
        renames.setdefault(rel, {})[new] = old
    out = {}
    for atom in query.atoms:
        back = renames.get(atom.name, {})
        attrs = [next((n for n, o in back.items() if o == a), a) for a in atom.attrs]
        cols = {x: back.get(x, x) for x in attrs}
        ann = None if atom.name in plan.pruned else atom.annotation
        out[atom.name] = _Source(atom.name, cols, ann)
    return out


def _operand_sql(w: _Writer, op: Operand, src: _Source, alias: str):
    """FROM item for a join operand plus its column map and annotation column."""
    if op.keep is None:
        return f"{w.ident(src.table)} AS {w.ident(alias)}", src.columns, src.ann
    inner = "_g"
    sel = [f"{w.col(inner, src.columns[a])} AS {w.ident(a)}" for a in op.keep]
    grp = [w.col(inner, src.columns[a]) for a in op.keep]
    ann = None if src.ann is None else w.col(inner, src.ann)
    body, has_ann = w.grouped(sel, ann, f"FROM {w.ident(src.table)} AS {w.ident(inner)}", grp)
    return f"({body}) AS {w.ident(alias)}", {a: a for a in op.keep}, (ANN if has_ann else None)


def _step_sql(w: _Writer, step, env: dict[str, _Source], schemas) -> tuple[str, tuple, bool]:
    """Body of one instruction: SQL text, output attributes, annotation present."""
    schema = output_schema(step, schemas)
    if isinstance(step, Join):
        left, lcols, lann = _operand_sql(w, step.left, env[step.left.name], "l")
        right, rcols, rann = _operand_sql(w, step.right, env[step.right.name], "r")
        where = [f"{w.col('l', lcols[a])} = {w.col('r', rcols[a])}" for a in lcols if a in rcols]
        frm = f"FROM {left}, {right}" + (f" WHERE {' AND '.join(where)}" if where else "")

        def ref(a):
            return w.col("l", lcols[a]) if a in lcols else w.col("r", rcols[a])

        factors = [w.col(s, c) for s, c in (("l", lann), ("r", rann)) if c is not None]
        ann = w.product(factors)
        if step.keep is not None:
            sel = [f"{ref(a)} AS {w.ident(a)}" for a in step.keep]
            body, has = w.grouped(sel, ann, frm, [ref(a) for a in step.keep])
            return body, step.keep, has
        sel = [f"{ref(a)} AS {w.ident(a)}" for a in schema]
        if ann is not None:
            sel.append(f"{ann} AS {w.ident(ANN)}")
        return f"SELECT {', '.join(sel)} {frm}", schema, ann is not None
    if isinstance(step, Semijoin):
        ls, rs = env[step.left], env[step.right]
        shared = [a for a in ls.columns if a in rs.columns]
        cond = " AND ".join(f"{w.col('r', rs.columns[a])} = {w.col('l', ls.columns[a])}" for a in shared)
        sel = [f"{w.col('l', ls.columns[a])} AS {w.ident(a)}" for a in schema]
        if ls.ann is not None:
            sel.append(f"{w.col('l', ls.ann)} AS {w.ident(ANN)}")
        exists = f"SELECT 1 FROM {w.ident(rs.table)} AS {w.ident('r')}" + (f" WHERE {cond}" if cond else "")
        body = f"SELECT {', '.join(sel)} FROM {w.ident(ls.table)} AS {w.ident('l')} WHERE EXISTS ({exists})"
        return body, schema, ls.ann is not None
    src = env[step.src]
    alias = "s"
    frm = f"FROM {w.ident(src.table)} AS {w.ident(alias)}"
    if isinstance(step, Project):
        sel = [f"{w.col(alias, src.columns[a])} AS {w.ident(a)}" for a in step.keep]
        ann = None if src.ann is None else w.col(alias, src.ann)
        body, has = w.grouped(sel, ann, frm, [w.col(alias, src.columns[a]) for a in step.keep])
        return body, step.keep, has
    sel = [f"{w.col(alias, src.columns[a])} AS {w.ident(a)}" for a in schema]
    if isinstance(step, Select):
        if src.ann is not None:
            sel.append(f"{w.col(alias, src.ann)} AS {w.ident(ANN)}")
        cond = " AND ".join(w.predicate(p, alias, src) for p in step.predicates)
        return f"SELECT {', '.join(sel)} {frm} WHERE {cond}", schema, src.ann is not None
    if isinstance(step, Materialize):
        if step.unit:
            return f"SELECT DISTINCT {', '.join(sel + [w.one + ' AS ' + w.ident(ANN)])} {frm}", schema, True
        if src.ann is not None:
            sel.append(f"{w.col(alias, src.ann)} AS {w.ident(ANN)}")
        return f"SELECT {', '.join(sel)} {frm}", schema, src.ann is not None
    raise TypeError(f"unknown instruction {step!r}")  # pragma: no cover


def emit_sql(
    plan: PlanIR, query: ConjunctiveQuery, dialect: str = "view", quote: str = '"'
) -> list[str]:
    """One ``CREATE TEMPORARY VIEW`` (or temp table) per instruction but the
    last, whose body becomes the final ``SELECT``."""
    if dialect not in DIALECTS:
        raise ValueError(f"unknown dialect {dialect!r}; expected one of {DIALECTS}")
    w = _Writer(query, quote)
    env = _base_sources(plan, query)
    schemas = {n: tuple(s.columns) for n, s in env.items()}
    statements = []
    kind = "TEMPORARY VIEW" if dialect == "view" else "TEMP TABLE"
    last = len(plan.steps) - 1
    final_inline = bool(plan.steps) and plan.steps[-1].dst == plan.result
    for k, step in enumerate(plan.steps):
        body, schema, has_ann = _step_sql(w, step, env, schemas)
        if k == last and final_inline:
            statements.append(body)
            break
        view = f"v{k + 1}_{step.dst}"
        statements.append(f"CREATE {kind} {w.ident(view)} AS {body}")
        env[step.dst] = _Source(view, {a: a for a in schema}, ANN if has_ann else None)
        schemas[step.dst] = tuple(schema)
    else:
        src = env[plan.result]
        cols = [w.ident(c) for c in src.columns.values()]
        if src.ann is not None:
            cols.append(w.ident(src.ann))
        statements.append(f"SELECT {', '.join(cols)} FROM {w.ident(src.table)}")
    return statements


def emit_baseline_sql(query: ConjunctiveQuery, quote: str = '"') -> str:
    """The whole query as one SELECT over all relations, grouped by the output."""
    w = _Writer(query, quote)
    seen: dict[str, str] = {}
    where = []
    for atom in query.atoms:
        for x in atom.attrs:
            if x in seen:
                where.append(f"{w.col(seen[x], x)} = {w.col(atom.name, x)}")
            else:
                seen[x] = atom.name
        src = _Source(atom.name, {x: x for x in atom.attrs}, atom.annotation)
        where += [w.predicate(p, atom.name, src) for p in query.selections_for(atom.name)]
    frm = "FROM " + ", ".join(w.ident(a.name) for a in query.atoms)
    if where:
        frm += " WHERE " + " AND ".join(where)
    factors = [w.col(a.name, a.annotation) for a in query.atoms if a.annotation is not None]
    ann = w.product(factors)
    sel = [f"{w.col(seen[x], x)} AS {w.ident(x)}" for x in query.output]
    expr = ann if ann is not None else w.one
    cols = sel + [f"{w.agg}({expr}) AS {w.ident(ANN)}"]
    group = [w.col(seen[x], x) for x in query.output]
    if not group:
        return w.folded(cols, frm)
    return f"SELECT {', '.join(cols)} {frm} GROUP BY {', '.join(group)}"


def render_script(statements: list[str]) -> str:
    return ";\n".join(statements) + ";\n"


def run_in_sqlite(statements: list[str], query: ConjunctiveQuery, relations) -> tuple[tuple, list]:
    """Load ``relations`` into an in-memory SQLite database and run ``statements``.

    Returns the final statement's column names and rows; a check aid, not an
    execution engine.
    """
    import sqlite3

    con = sqlite3.connect(":memory:")
    w = _Writer(query, '"')
    boolean = query.semiring.descriptor == "bool_or_and"
    for atom in query.atoms:
        rel = relations[atom.name]
        cols = list(atom.attrs) + ([atom.annotation] if atom.annotation else [])
        con.execute(f"CREATE TABLE {w.ident(atom.name)} ({', '.join(w.ident(c) for c in cols)})")
        order = rel.index_of(atom.attrs)
        anns = rel.annotation_list(query.semiring)
        rows = []
        for row, a in zip(rel.rows, anns):
            vals = [row[i].isoformat() if isinstance(row[i], _dt.date) else row[i] for i in order]
            if atom.annotation:
                vals.append(int(a) if boolean else a)
            rows.append(vals)
        marks = ", ".join("?" * len(cols))
        con.executemany(f"INSERT INTO {w.ident(atom.name)} VALUES ({marks})", rows)
    cur = None
    for s in statements:
        cur = con.execute(s)
    names = tuple(d[0] for d in cur.description)
    out = cur.fetchall()
    con.close()
    return names, out
