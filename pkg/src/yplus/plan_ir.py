"""Plan intermediate representation: an ordered list of relational instructions.

Text form, one instruction per line::

    R1 <- JOIN(R1, PROJECT(R2, [x2]))
    R5 <- SEMIJOIN(R5, R1)
    R5 <- PROJECT(JOIN(R5, R6), [x4, x8])
    R1 <- SELECT(R1, x1 > 3 AND x4 = x4')
    B1 <- MATERIALIZE(R2, ONE)
    RETURN R1

Two optional header lines carry metadata: ``PRUNE R2, R4`` lists base
relations read without annotations, and ``RENAME R3.x4 AS x4'`` renames a
base column before the plan runs.

``PROJECT`` is a grouped projection (the annotation is folded with the
semiring's plus).  A projection may wrap a join operand or a whole join; both
still count as one join instruction plus one projection.  The ``RETURN`` line
is only written when the result is not the last destination.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import ParseError
from .query import Predicate, parse_predicates


def _attrs(keep) -> str:
    return "[" + ", ".join(keep) + "]"


@dataclass(frozen=True)
class Operand:
    """A relation name, optionally grouped onto ``keep`` before use."""

    name: str
    keep: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.keep is not None:
            object.__setattr__(self, "keep", tuple(self.keep))

    def __str__(self) -> str:
        if self.keep is None:
            return self.name
        return f"PROJECT({self.name}, {_attrs(self.keep)})"


def _operand(x) -> Operand:
    return x if isinstance(x, Operand) else Operand(x)


@dataclass(frozen=True)
class Join:
    dst: str
    left: Operand
    right: Operand
    keep: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "left", _operand(self.left))
        object.__setattr__(self, "right", _operand(self.right))
        if self.keep is not None:
            object.__setattr__(self, "keep", tuple(self.keep))

    op = "join"

    @property
    def sources(self) -> tuple[str, ...]:
        return (self.left.name, self.right.name)

    def __str__(self) -> str:
        body = f"JOIN({self.left}, {self.right})"
        if self.keep is not None:
            body = f"PROJECT({body}, {_attrs(self.keep)})"
        return f"{self.dst} <- {body}"


@dataclass(frozen=True)
class Semijoin:
    dst: str
    left: str
    right: str

    op = "semijoin"

    @property
    def sources(self) -> tuple[str, ...]:
        return (self.left, self.right)

    def __str__(self) -> str:
        return f"{self.dst} <- SEMIJOIN({self.left}, {self.right})"


@dataclass(frozen=True)
class Project:
    dst: str
    src: str
    keep: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "keep", tuple(self.keep))

    op = "project"

    @property
    def sources(self) -> tuple[str, ...]:
        return (self.src,)

    def __str__(self) -> str:
        return f"{self.dst} <- PROJECT({self.src}, {_attrs(self.keep)})"


@dataclass(frozen=True)
class Select:
    dst: str
    src: str
    predicates: tuple[Predicate, ...]

    def __post_init__(self):
        object.__setattr__(self, "predicates", tuple(self.predicates))

    op = "select"

    @property
    def sources(self) -> tuple[str, ...]:
        return (self.src,)

    def __str__(self) -> str:
        return f"{self.dst} <- SELECT({self.src}, {' AND '.join(map(str, self.predicates))})"


@dataclass(frozen=True)
class Materialize:
    """Copy ``src`` into ``dst``; with ``unit`` the copy is distinct and annotated with one."""

    dst: str
    src: str
    unit: bool = False

    op = "materialize"

    @property
    def sources(self) -> tuple[str, ...]:
        return (self.src,)

    def __str__(self) -> str:
        return f"{self.dst} <- MATERIALIZE({self.src}{', ONE' if self.unit else ''})"


Instruction = Union[Join, Semijoin, Project, Select, Materialize]


@dataclass(frozen=True)
class PlanIR:
    steps: tuple[Instruction, ...]
    result: str
    phases: tuple[str, ...] = ()
    pruned: frozenset[str] = field(default_factory=frozenset)
    renames: tuple[tuple[str, str, str], ...] = ()  # (relation, old attr, new attr)

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        phases = tuple(self.phases) or ("",) * len(self.steps)
        if len(phases) != len(self.steps):
            raise ValueError("phases must align with steps")
        object.__setattr__(self, "phases", phases)
        object.__setattr__(self, "pruned", frozenset(self.pruned))
        object.__setattr__(self, "renames", tuple(tuple(r) for r in self.renames))

    def __len__(self) -> int:
        return len(self.steps)

    def inputs(self) -> list[str]:
        """Names read before any step writes them, i.e. the base relations used."""
        defined: set[str] = set()
        needed: list[str] = []
        for s in self.steps:
            for src in s.sources:
                if src not in defined and src not in needed:
                    needed.append(src)
            defined.add(s.dst)
        if self.result not in defined and self.result not in needed:
            needed.append(self.result)
        return needed

    def header(self) -> list[str]:
        lines = []
        if self.pruned:
            lines.append("PRUNE " + ", ".join(sorted(self.pruned)))
        for rel, old, new in self.renames:
            lines.append(f"RENAME {rel}.{old} AS {new}")
        return lines

    def to_text(self) -> str:
        lines = self.header() + [str(s) for s in self.steps]
        if not self.steps or self.steps[-1].dst != self.result:
            lines.append(f"RETURN {self.result}")
        return "\n".join(lines)

    __str__ = to_text

    def numbered(self) -> str:
        width = len(str(len(self.steps)))
        lines = self.header() + [f"({i:>{width}}) {s}" for i, s in enumerate(self.steps, 1)]
        if not self.steps or self.steps[-1].dst != self.result:
            lines.append(f"RETURN {self.result}")
        return "\n".join(lines)

    def concat(self, other: "PlanIR") -> "PlanIR":
        return PlanIR(
            self.steps + other.steps, other.result,
            self.phases + other.phases, self.pruned | other.pruned,
            self.renames + tuple(r for r in other.renames if r not in self.renames),
        )

    def with_steps(self, steps: Iterable, phases: Iterable[str] | None = None, **kw) -> "PlanIR":
        steps = tuple(steps)
        fields = dict(
            steps=steps, result=self.result,
            phases=tuple(phases) if phases is not None else (), pruned=self.pruned,
            renames=self.renames,
        )
        fields.update(kw)
        return PlanIR(**fields)


@dataclass(frozen=True)
class OpCounts:
    joins: int = 0
    semijoins: int = 0
    projections: int = 0
    selections: int = 0
    materializations: int = 0

    def as_dict(self) -> dict:
        return dict(
            joins=self.joins, semijoins=self.semijoins, projections=self.projections,
            selections=self.selections, materializations=self.materializations,
        )


def output_schema(step: Instruction, env: dict[str, tuple[str, ...]]) -> tuple[str, ...]:
    """Schema produced by one step given the schemas of the names it reads."""
    if isinstance(step, Join):
        left = step.left.keep if step.left.keep is not None else env[step.left.name]
        right = step.right.keep if step.right.keep is not None else env[step.right.name]
        if step.keep is not None:
            return step.keep
        return tuple(left) + tuple(a for a in right if a not in left)
    if isinstance(step, Semijoin):
        return env[step.left]
    if isinstance(step, Project):
        return step.keep
    return env[step.src]


def propagate_schemas(plan: PlanIR, base: dict[str, tuple[str, ...]]) -> list[dict]:
    """Environment of schemas before each step, plus the final one."""
    env = dict(base)
    for rel, old, new in plan.renames:
        env[rel] = tuple(new if a == old else a for a in env[rel])
    out = []
    for step in plan.steps:
        out.append(dict(env))
        env[step.dst] = output_schema(step, env)
    out.append(env)
    return out


def count_ops(plan: PlanIR) -> OpCounts:
    """Tally operators; projections fused into a join are counted too."""
    j = sj = pr = se = ma = 0
    for s in plan.steps:
        if isinstance(s, Join):
            j += 1
            pr += (s.keep is not None) + (s.left.keep is not None) + (s.right.keep is not None)
        elif isinstance(s, Semijoin):
            sj += 1
        elif isinstance(s, Project):
            pr += 1
        elif isinstance(s, Select):
            se += 1
        else:
            ma += 1
    return OpCounts(j, sj, pr, se, ma)


# ---------------------------------------------------------------- parsing

_NAME = r"[A-Za-z_][A-Za-z0-9_']*"
_LINE = re.compile(rf"^\s*(?P<dst>{_NAME})\s*<-\s*(?P<body>.+?)\s*;?\s*$")
_RETURN = re.compile(rf"^\s*RETURN\s+(?P<name>{_NAME})\s*$", re.IGNORECASE)
_PRUNE = re.compile(r"^\s*PRUNE\s+(?P<names>.*)$")
_RENAME = re.compile(rf"^\s*RENAME\s+(?P<rel>{_NAME})\.(?P<old>{_NAME})\s+AS\s+(?P<new>{_NAME})\s*$")


class _Reader:
    def __init__(self, text: str, line: int, offset: int):
        self.text = text
        self.pos = 0
        self.line = line
        self.offset = offset

    def error(self, msg):
        raise ParseError(msg, self.line, self.offset + self.pos + 1)

    def ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, tok: str):
        self.ws()
        if not self.text.startswith(tok, self.pos):
            self.error(f"expected {tok!r}")
        self.pos += len(tok)

    def peek_word(self) -> str:
        self.ws()
        m = re.compile(_NAME).match(self.text, self.pos)
        return m.group(0) if m else ""

    def name(self) -> str:
        self.ws()
        m = re.compile(_NAME).match(self.text, self.pos)
        if not m:
            self.error("expected a relation name")
        self.pos = m.end()
        return m.group(0)

    def attr_list(self) -> tuple[str, ...]:
        self.expect("[")
        self.ws()
        if self.text.startswith("]", self.pos):
            self.pos += 1
            return ()
        out = [self.name()]
        while True:
            self.ws()
            if self.text.startswith("]", self.pos):
                self.pos += 1
                return tuple(out)
            self.expect(",")
            out.append(self.name())

    def call(self, word: str) -> bool:
        self.ws()
        if self.peek_word().upper() == word:
            save = self.pos
            self.pos += len(word)
            self.ws()
            if self.text.startswith("(", self.pos):
                self.pos += 1
                return True
            self.pos = save
        return False

    def operand(self) -> Operand:
        if self.call("PROJECT"):
            inner = self.name()
            self.expect(",")
            keep = self.attr_list()
            self.expect(")")
            return Operand(inner, keep)
        return Operand(self.name())

    def join_call(self, dst: str, keep=None) -> Join:
        left = self.operand()
        self.expect(",")
        right = self.operand()
        self.expect(")")
        return Join(dst, left, right, keep)

    def instruction(self, dst: str) -> Instruction:
        if self.call("JOIN"):
            return self.join_call(dst)
        if self.call("SEMIJOIN"):
            left = self.name()
            self.expect(",")
            right = self.name()
            self.expect(")")
            return Semijoin(dst, left, right)
        if self.call("PROJECT"):
            if self.call("JOIN"):
                left = self.operand()
                self.expect(",")
                right = self.operand()
                self.expect(")")
                self.expect(",")
                keep = self.attr_list()
                self.expect(")")
                return Join(dst, left, right, keep)
            src = self.name()
            self.expect(",")
            keep = self.attr_list()
            self.expect(")")
            return Project(dst, src, keep)
        if self.call("SELECT"):
            src = self.name()
            self.expect(",")
            depth, start = 0, self.pos
            end = len(self.text)
            for k in range(self.pos, len(self.text)):
                ch = self.text[k]
                if ch == "(":
                    depth += 1
                elif ch == ")":
                    if depth == 0:
                        end = k
                        break
                    depth -= 1
            else:
                self.error("unterminated SELECT")
            try:
                preds = parse_predicates(self.text[start:end])
            except ParseError as exc:
                raise ParseError(str(exc).split(": ", 1)[-1], self.line,
                                 self.offset + start + exc.column) from None
            self.pos = end + 1
            return Select(dst, src, preds)
        if self.call("MATERIALIZE"):
            src = self.name()
            self.ws()
            unit = False
            if self.text.startswith(",", self.pos):
                self.pos += 1
                if self.name().upper() != "ONE":
                    self.error("expected ONE")
                unit = True
            self.expect(")")
            return Materialize(dst, src, unit)
        self.error("expected JOIN, SEMIJOIN, PROJECT, SELECT or MATERIALIZE")


def parse_plan(text: str) -> PlanIR:
    """Inverse of :meth:`PlanIR.to_text`."""
    steps: list[Instruction] = []
    result = None
    pruned: list[str] = []
    renames: list[tuple[str, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        line = re.sub(r"^\s*\(\s*\d+\s*\)\s*", "", line)
        m = _RETURN.match(line)
        if m:
            result = m.group("name")
            continue
        m = _PRUNE.match(line)
        if m:
            pruned += [n.strip() for n in m.group("names").split(",") if n.strip()]
            continue
        m = _RENAME.match(line)
        if m:
            renames.append((m.group("rel"), m.group("old"), m.group("new")))
            continue
        m = _LINE.match(line)
        if not m:
            raise ParseError("expected 'dst <- OP(...)'", lineno, 1)
        reader = _Reader(m.group("body"), lineno, m.start("body"))
        step = reader.instruction(m.group("dst"))
        reader.ws()
        if reader.pos != len(reader.text):
            reader.error("trailing text")
        steps.append(step)
    if result is None:
        if not steps:
            raise ParseError("empty plan without RETURN", 1, 1)
        result = steps[-1].dst
    return PlanIR(tuple(steps), result, pruned=frozenset(pruned), renames=tuple(renames))
