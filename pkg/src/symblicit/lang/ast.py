"""Syntax tree of the guarded-command language and its pretty printer."""

from __future__ import annotations

import dataclasses as d
from fractions import Fraction
from typing import Optional, Union


@d.dataclass(frozen=True)
class Pos:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOPOS = Pos(0, 0)


def _pos() -> d.Field:
    return d.field(default=NOPOS, compare=False, repr=False)


# -- expressions -------------------------------------------------------------


@d.dataclass(frozen=True)
class Num:
    value: Union[int, Fraction]
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class BoolLit:
    value: bool
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class Ident:
    name: str
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class LabelRef:
    """A quoted label name used inside an expression, e.g. ``"ok"``."""

    name: str
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class Unary:
    op: str  # "!" or "-"
    operand: "Expr"
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class Call:
    func: str  # min, max, floor, ceil
    args: tuple["Expr", ...]
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class Ite:
    cond: "Expr"
    then: "Expr"
    other: "Expr"
    pos: Pos = _pos()


Expr = Union[Num, BoolLit, Ident, LabelRef, Unary, Binary, Call, Ite]


# -- declarations ------------------------------------------------------------


@d.dataclass(frozen=True)
class ConstDecl:
    name: str
    type: str  # "int", "double", "bool" or "" when inferred
    value: Optional[Expr]
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class FormulaDecl:
    name: str
    expr: Expr
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class VarDecl:
    name: str
    kind: str  # "bool" or "int"
    low: Optional[Expr]
    high: Optional[Expr]
    init: Optional[Expr]
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class Update:
    var: str
    expr: Expr
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class Alternative:
    weight: Optional[Expr]  # None means weight 1
    updates: tuple[Update, ...]
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class Command:
    guard: Expr
    alternatives: tuple[Alternative, ...]
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class RewardItem:
    guard: Expr
    value: Expr
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class RewardStruct:
    name: str
    items: tuple[RewardItem, ...]
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class LabelDecl:
    name: str
    expr: Expr
    pos: Pos = _pos()


@d.dataclass(frozen=True)
class ModelAst:
    kind: str  # "dtmc" or "ctmc"
    constants: tuple[ConstDecl, ...]
    formulas: tuple[FormulaDecl, ...]
    module: str
    variables: tuple[VarDecl, ...]
    commands: tuple[Command, ...]
    rewards: tuple[RewardStruct, ...]
    labels: tuple[LabelDecl, ...]
    pos: Pos = _pos()

    def variable(self, name: str) -> VarDecl:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def reward_names(self) -> list[str]:
        return [r.name for r in self.rewards]

    def label_names(self) -> list[str]:
        return [lab.name for lab in self.labels]


# -- pretty printing ---------------------------------------------------------

# Binding strength, loosest first.
PRECEDENCE = {
    "?": 0,
    "=>": 1,
    "<=>": 1,
    "|": 2,
    "&": 3,
    "=": 5,
    "!=": 5,
    "<": 6,
    "<=": 6,
    ">": 6,
    ">=": 6,
    "+": 7,
    "-": 7,
    "*": 8,
    "/": 8,
}
UNARY_PREC = 9


def _num_text(value: Union[int, Fraction]) -> str:
    if isinstance(value, int) or value.denominator == 1:
        return str(int(value))
    # Exact decimal when the denominator allows one, otherwise a quotient.
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den == 1:
        digits = max(twos, fives)
        scaled = value * 10**digits
        sign = "-" if scaled < 0 else ""
        s = str(abs(int(scaled))).rjust(digits + 1, "0")
        return f"{sign}{s[:-digits]}.{s[-digits:]}"
    return f"({value.numerator}/{value.denominator})"


def format_expr(e: Expr, parent: int = -1) -> str:
    if isinstance(e, Num):
        text = _num_text(e.value)
        return f"({text})" if text.startswith("-") else text
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, LabelRef):
        return f'"{e.name}"'
    if isinstance(e, Unary):
        inner = format_expr(e.operand, UNARY_PREC)
        text = f"{e.op}{inner}"
        return f"({text})" if parent > UNARY_PREC else text
    if isinstance(e, Binary):
        p = PRECEDENCE[e.op]
        # left-associative operators; comparisons are non-associative
        left = format_expr(e.left, p if p not in (1, 5, 6) else p + 1)
        right = format_expr(e.right, p + 1)
        text = f"{left} {e.op} {right}"
        return f"({text})" if p < parent else text
    if isinstance(e, Call):
        return f"{e.func}(" + ", ".join(format_expr(a) for a in e.args) + ")"
    if isinstance(e, Ite):
        text = (
            f"{format_expr(e.cond, 1)} ? {format_expr(e.then, 1)} : "
            f"{format_expr(e.other, 0)}"
        )
        return f"({text})" if parent > 0 else text
    raise TypeError(f"not an expression: {e!r}")


def format_model(m: ModelAst) -> str:
    out = [m.kind, ""]
    for c in m.constants:
        typ = f"{c.type} " if c.type else ""
        val = f" = {format_expr(c.value)}" if c.value is not None else ""
        out.append(f"const {typ}{c.name}{val};")
    for f in m.formulas:
        out.append(f"formula {f.name} = {format_expr(f.expr)};")
    out.append("")
    out.append(f"module {m.module}")
    for v in m.variables:
        init = f" init {format_expr(v.init)}" if v.init is not None else ""
        if v.kind == "bool":
            out.append(f"  {v.name} : bool{init};")
        else:
            out.append(
                f"  {v.name} : [{format_expr(v.low)}..{format_expr(v.high)}]{init};"
            )
    for c in m.commands:
        alts = []
        for a in c.alternatives:
            if a.updates:
                # right-hand sides are parsed at comparison level, so wrap
                # anything looser
                ups = " & ".join(
                    f"({u.var}'={format_expr(u.expr, 4)})" for u in a.updates
                )
            else:
                ups = "true"
            alts.append(ups if a.weight is None else f"{format_expr(a.weight)} : {ups}")
        out.append(f"  [] {format_expr(c.guard)} -> " + " + ".join(alts) + ";")
    out.append("endmodule")
    for r in m.rewards:
        out.append("")
        out.append(f'rewards "{r.name}"')
        for item in r.items:
            out.append(f"  {format_expr(item.guard)} : {format_expr(item.value)};")
        out.append("endrewards")
    if m.labels:
        out.append("")
    for lab in m.labels:
        out.append(f'label "{lab.name}" = {format_expr(lab.expr)};')
    return "\n".join(out) + "\n"
