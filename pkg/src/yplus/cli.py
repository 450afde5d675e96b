"""Command-line driver: classify, plan, run, compare, emit-sql, gen, stats."""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import sys
from pathlib import Path

from .emitter import DIALECTS, emit_baseline_sql, emit_sql, render_script
from .errors import YPlusError
from .executor import ExecutionReport, oracle, run_plan
from .generate import INSTANCE_KINDS, InstanceSpec, generate_instance
from .hypergraph import DEFAULT_TREE_LIMIT, build_hypergraph, classify, gyo_reduce, tree_from_names
from .optimizer import CE_MODES, choose_plan, collect_stats
from .plan_ir import PlanIR, count_ops, parse_plan
from .planner import plan as plan_yplus, plan_standard, plan_with_tree, plan_yannakakis_baseline
from .queryfile import QueryFile, parse_query_file, write_relation_csv
from .relation import AnnotatedRelation, same_result
from .semiring import BUILTIN, get_semiring

SEMIRINGS = ("sum_product", "max_plus", "max_times", "bool")


# ------------------------------------------------------------ helpers


def parse_tree_arg(text: str, qf: QueryFile):
    """``"R5 R1:R5 R2:R1"``: the root alone, every other relation as ``child:parent``."""
    parents: dict = {}
    for item in text.replace(",", " ").split():
        child, colon, parent = item.partition(":")
        parents[child] = parent if colon and parent else None
    return tree_from_names(qf.query, parents)


def _load(args) -> tuple[QueryFile, dict[str, AnnotatedRelation] | None]:
    qf = parse_query_file(args.query)
    if args.semiring:
        qf.query = qf.query.with_atoms(qf.query.atoms, semiring=get_semiring(args.semiring))
    rels = None
    if getattr(args, "needs_data", False):
        rels = qf.load(qf.query.semiring)
    return qf, rels


def _cell(v) -> str:
    if isinstance(v, _dt.date):
        return v.isoformat()
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def format_table(header: list[str], rows: list[list]) -> str:
    cells = [[_cell(c) for c in r] for r in rows]
    widths = [max([len(h)] + [len(r[k]) for r in cells]) for k, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    return "\n".join(lines)


def _sort_key(row):
    return tuple((0, v) if isinstance(v, (int, float)) else (1, str(v)) for v in row)


def result_rows(rel: AnnotatedRelation, query) -> tuple[list[str], list[list]]:
    order = [a for a in query.output if a in rel.schema] or list(rel.schema)
    idx = rel.index_of(order)
    anns = rel.annotation_list(query.semiring)
    rows = sorted(
        ([row[i] for i in idx] + [a] for row, a in zip(rel.rows, anns)), key=_sort_key
    )
    return order + ["annotation"], rows


def _jsonable(v):
    if isinstance(v, _dt.date):
        return v.isoformat()
    if isinstance(v, float) and v in (float("inf"), float("-inf")):
        return str(v)
    return v


def _emit(args, text: str, data: dict) -> None:
    if args.json:
        print(json.dumps(data, indent=2, default=_jsonable, sort_keys=True))
    else:
        print(text)


def _build_plan(args, qf: QueryFile, rels) -> tuple[PlanIR, str]:
    """The plan selected by the flags, and a short label for it."""
    q = qf.query
    if getattr(args, "plan_file", None):
        return parse_plan(Path(args.plan_file).read_text(encoding="utf-8")), "file"
    tree = parse_tree_arg(args.tree, qf) if getattr(args, "tree", None) else None
    if getattr(args, "baseline", False):
        tree = tree or classify(q, args.limit_trees).tree
        if tree is None:
            raise YPlusError("the classic algorithm needs an acyclic query")
        return plan_yannakakis_baseline(q, tree), "yannakakis"
    if getattr(args, "standard", False):
        return plan_standard(q), "standard"
    if getattr(args, "optimize", False):
        data = rels if rels is not None else qf.load(q.semiring)
        stats = collect_stats(data, args.ce_mode)
        return choose_plan(q, stats, qf.constraints, limit_trees=args.limit_trees).plan, "optimized"
    if tree is not None:
        return plan_with_tree(q, tree), "yannakakis+"
    return plan_yplus(q, limit_trees=args.limit_trees), "yannakakis+"


# ------------------------------------------------------------ subcommands


def cmd_classify(args) -> int:
    qf, _ = _load(args)
    q = qf.query
    cls = classify(q, args.limit_trees)
    names = [a.name for a in q.atoms]
    text = cls.describe(names)
    tree_text = ""
    if cls.tree is not None:
        tree_text = cls.tree.dump({i: a.attrs for i, a in enumerate(q.atoms)}, names)
    _emit(
        args,
        text + ("\n" + tree_text if tree_text else ""),
        {"class": cls.kind, "description": text,
         "root": None if cls.root is None else names[cls.root], "tree": tree_text},
    )
    return 0


def cmd_plan(args) -> int:
    args.needs_data = bool(args.optimize)
    qf, rels = _load(args)
    p, label = _build_plan(args, qf, rels)
    counts = count_ops(p).as_dict()
    _emit(args, p.numbered(), {"kind": label, "plan": p.to_text(), "op_counts": counts})
    return 0


def _report_text(rel, report: ExecutionReport, q) -> str:
    header, rows = result_rows(rel, q)
    return format_table(header, rows) + "\n\n" + report.to_text()


def cmd_run(args) -> int:
    args.needs_data = True
    qf, rels = _load(args)
    p, label = _build_plan(args, qf, rels)
    rel, report = run_plan(p, rels, qf.query.semiring)
    header, rows = result_rows(rel, qf.query)
    _emit(
        args, _report_text(rel, report, qf.query),
        {"kind": label, "columns": header, "rows": rows, "report": report.as_dict()},
    )
    return 0


def cmd_compare(args) -> int:
    args.needs_data = True
    qf, rels = _load(args)
    q = qf.query
    sr = q.semiring
    ref = oracle(q, rels)
    plans = []
    acyclic = gyo_reduce(build_hypergraph(q)).acyclic
    tree = parse_tree_arg(args.tree, qf) if args.tree else None
    if acyclic:
        tree = tree or classify(q, args.limit_trees).tree
        plans.append(("yannakakis+", plan_with_tree(q, tree)))
        plans.append(("yannakakis", plan_yannakakis_baseline(q, tree)))
    else:
        plans.append(("yannakakis+", plan_yplus(q)))
    plans.append(("standard", plan_standard(q)))
    if args.optimize:
        stats = collect_stats(rels, args.ce_mode)
        plans.append(("optimized", choose_plan(q, stats, qf.constraints, limit_trees=args.limit_trees).plan))
    rows = []
    data = {"plans": {}, "oracle_rows": len(ref)}
    ok = True
    for label, p in plans:
        rel, report = run_plan(p, rels, sr)
        agree = same_result(rel, ref, sr)
        ok &= agree
        c = count_ops(p)
        rows.append([label, len(p), c.joins, c.semijoins, c.projections,
                     report.max_intermediate, report.total_intermediate_rows, "yes" if agree else "NO"])
        data["plans"][label] = {
            "steps": len(p), "op_counts": c.as_dict(), "max_intermediate": report.max_intermediate,
            "total_intermediate_rows": report.total_intermediate_rows, "agrees": agree,
        }
    header = ["plan", "steps", "joins", "semijoins", "projections", "max_inter", "total_inter", "=oracle"]
    data["agree"] = ok
    _emit(args, format_table(header, rows), data)
    return 0 if ok else 1


def cmd_emit_sql(args) -> int:
    args.needs_data = bool(args.optimize)
    qf, rels = _load(args)
    if args.baseline:
        stmts = [emit_baseline_sql(qf.query)]
    else:
        p, _ = _build_plan(args, qf, rels)
        stmts = emit_sql(p, qf.query, args.dialect)
    script = render_script(stmts)
    if args.output:
        Path(args.output).write_text(script, encoding="utf-8")
    if args.json:
        _emit(args, "", {"statements": stmts})
    elif not args.output:
        sys.stdout.write(script)
    return 0


def cmd_gen(args) -> int:
    spec = InstanceSpec(args.kind, args.rows, args.domain, args.skew, args.copies, args.degree, args.seed)
    qf = None
    if args.kind != "star":
        if not args.query:
            raise YPlusError(f"gen {args.kind} needs --query")
        qf = parse_query_file(args.query)
    query, rels = generate_instance(spec, qf.query if qf else None, qf.constraints if qf else None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for atom in query.atoms:
        path = out / (Path(atom.source).name if atom.source else f"{atom.name}.csv")
        write_relation_csv(rels[atom.name], path, atom.annotation)
        written.append(str(path))
    if args.kind == "star":
        text = "\n".join([
            "name Q", "semiring sum_product",
            "relation R1(x1, x2) file=R1.csv", "relation R2(x2, x3) file=R2.csv", "output x1", "",
        ])
        (out / "star.query").write_text(text, encoding="utf-8")
        written.append(str(out / "star.query"))
    else:
        # data files are written under their base names, so a copy of the
        # query file next to them runs against the new instance
        target = out / Path(args.query).name
        if not target.exists() or not target.samefile(args.query):
            target.write_text(Path(args.query).read_text(encoding="utf-8"), encoding="utf-8")
        written.append(str(target))
    sizes = {a.name: len(rels[a.name]) for a in query.atoms}
    _emit(args, "\n".join(written), {"files": written, "rows": sizes})
    return 0


def cmd_stats(args) -> int:
    args.needs_data = True
    qf, rels = _load(args)
    stats = collect_stats(rels, args.ce_mode)
    _emit(args, stats.to_text(), stats.as_dict())
    return 0


# ------------------------------------------------------------ parser


def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global flags with suppressed defaults so a flag
    # given before the subcommand is not reset by the subparser
    def d(value):
        return argparse.SUPPRESS if suppress else value

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--semiring", choices=sorted(set(SEMIRINGS) | set(BUILTIN)),
                        default=d(None), help="override the query file's semiring")
    common.add_argument("--ce-mode", choices=CE_MODES, default=d("accurate"),
                        help="cardinality estimation for --optimize and stats")
    common.add_argument("--seed", type=int, default=d(0))
    common.add_argument("--limit-trees", type=int, default=d(DEFAULT_TREE_LIMIT))
    common.add_argument("--json", action="store_true", default=d(False),
                        help="machine-readable output")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(False)
    sub_common = _common(True)
    parser = argparse.ArgumentParser(prog="yplus", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, helptext):
        p = sub.add_parser(name, help=helptext, parents=[sub_common])
        p.set_defaults(func=fn)
        return p

    def plan_flags(p):
        p.add_argument("query", help="query file")
        p.add_argument("--tree", help="join tree as 'ROOT CHILD:PARENT ...'")
        p.add_argument("--baseline", action="store_true", help="classic four-step plan")
        p.add_argument("--standard", action="store_true", help="left-deep join plan")
        p.add_argument("--optimize", action="store_true", help="rules plus cost-based tree choice")

    p = add("classify", cmd_classify, "report the query class and a join tree")
    p.add_argument("query")
    p = add("plan", cmd_plan, "print a plan")
    plan_flags(p)
    p = add("run", cmd_run, "execute a plan and print result and report")
    plan_flags(p)
    p.add_argument("--plan-file", help="run a plan written in the text format")
    p = add("compare", cmd_compare, "check Yannakakis+, classic and standard plans against the oracle")
    p.add_argument("query")
    p.add_argument("--tree")
    p.add_argument("--optimize", action="store_true", help="also check the cost-based plan")
    p = add("emit-sql", cmd_emit_sql, "lower a plan to SQL")
    plan_flags(p)
    p.add_argument("--dialect", choices=DIALECTS, default="view")
    p.add_argument("-o", "--output", help="write the script here instead of stdout")
    p = add("gen", cmd_gen, "generate a synthetic instance as CSV files")
    p.add_argument("kind", choices=INSTANCE_KINDS)
    p.add_argument("--query", help="query file whose relations to fill")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--rows", type=int, default=100)
    p.add_argument("--domain", type=int, default=20)
    p.add_argument("--skew", type=float, default=1.0)
    p.add_argument("--copies", type=int, default=5)
    p.add_argument("--degree", type=int, default=1000)
    p = add("stats", cmd_stats, "collect per-relation statistics")
    p.add_argument("query")
    return parser


def run_command(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (YPlusError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
