"""Property syntax.

Supported forms::

    P=? [ F goal ]                 reachability probability
    P=? [ true U goal ]            same
    R=? [ F goal ]                 expected reward until goal (first structure)
    R{"name"}=? [ F goal ]         expected reward of a named structure
    R=? [ S ]  /  R{"name"}=? [ S ]  long-run average reward

``goal`` is a label (``"ok"``) or any boolean state expression
(``s=5 & !recv``); expressions other than a bare label are turned into
synthesized labels named by their canonical text.
"""

from __future__ import annotations

import dataclasses as d
from typing import Optional

from . import ast as A
from .compiler import ModelError
from .parser import ModelSyntaxError, Parser

__all__ = ["REACH_PROB", "EXP_REWARD", "LONG_RUN_AVG", "PropertySpec", "parse_property"]

REACH_PROB = "ReachProb"
EXP_REWARD = "ExpReward"
LONG_RUN_AVG = "LongRunAvg"


@d.dataclass(frozen=True)
class PropertySpec:
    kind: str
    goal: Optional[str] = None  # label name (possibly synthesized)
    reward: Optional[str] = None  # None selects the model's first structure
    labels: tuple[tuple[str, A.Expr], ...] = ()  # synthesized labels
    text: str = d.field(default="", compare=False)

    def goal_expr(self) -> Optional[A.Expr]:
        """Expression of the goal if it is synthesized, else a label reference."""
        if self.goal is None:
            return None
        for name, expr in self.labels:
            if name == self.goal:
                return expr
        return A.LabelRef(self.goal)

    def __str__(self) -> str:
        if self.kind == REACH_PROB:
            return f"ReachProb({self.goal!r})"
        if self.kind == EXP_REWARD:
            return f"ExpReward({self.reward!r}, {self.goal!r})"
        return f"LongRunAvg({self.reward!r})"


def parse_property(text: str, model: Optional[A.ModelAst] = None) -> PropertySpec:
    """Parse a property; with ``model`` given, label and reward names are checked."""
    p = Parser(text)
    tok = p.tok
    if tok.kind != "IDENT" or tok.text not in ("P", "R"):
        raise p.error("expected 'P' or 'R'")
    p.advance()
    reward = None
    if tok.text == "R" and p.at("{"):
        p.advance()
        reward = p.expect_string().text
        p.expect("}")
    p.expect("=?")
    p.expect("[")
    if p.tok.kind == "IDENT" and p.tok.text == "S":
        if tok.text != "R":
            raise p.error("steady-state operator only supported for rewards")
        p.advance()
        p.expect("]")
        p.expect_eof()
        spec = PropertySpec(LONG_RUN_AVG, None, reward, (), text)
        return _validate(spec, model, tok)
    if p.tok.kind == "IDENT" and p.tok.text == "F":
        p.advance()
        goal = p.expr()
    else:
        left = p.expr()
        if not (p.tok.kind == "IDENT" and p.tok.text == "U"):
            raise p.error("expected 'F', 'S' or 'true U'")
        if not (isinstance(left, A.BoolLit) and left.value):
            raise ModelSyntaxError("only 'true U goal' is supported", left.pos)
        p.advance()
        goal = p.expr()
    p.expect("]")
    p.expect_eof()
    if isinstance(goal, A.LabelRef):
        name, labels = goal.name, ()
    else:
        name = A.format_expr(goal)
        labels = ((name, goal),)
    kind = REACH_PROB if tok.text == "P" else EXP_REWARD
    spec = PropertySpec(kind, name, reward, labels, text)
    return _validate(spec, model, tok)


def _validate(spec: PropertySpec, model: Optional[A.ModelAst], tok) -> PropertySpec:
    if model is None:
        return spec
    if spec.kind != REACH_PROB:
        if spec.reward is None and not model.rewards:
            raise ModelError("the model has no reward structure", tok.pos)
        if spec.reward is not None and spec.reward not in model.reward_names():
            raise ModelError(f"unknown reward structure {spec.reward!r}", tok.pos)
    if spec.goal is not None and not spec.labels and spec.goal not in model.label_names():
        raise ModelError(f"unknown label {spec.goal!r}", tok.pos)
    return spec
