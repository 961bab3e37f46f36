"""Tokenizer and recursive-descent parser for models and properties.

Model syntax (a single-module subset of the PRISM language)::

    dtmc | ctmc
    const [int|double|bool] NAME [= expr];
    formula NAME = expr;
    module NAME
      NAME : [lo..hi] [init expr];
      NAME : bool [init expr];
      [] guard -> w1 : (x'=e) & (y'=e) + w2 : (x'=e & y'=e) + ... ;
    endmodule
    rewards "NAME"  guard : expr; ...  endrewards
    label "NAME" = expr;

``//`` starts a line comment.  An alternative without ``w :`` has weight 1
and ``true`` stands for the empty update list.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterator, NamedTuple, Optional

from . import ast as A

__all__ = ["ModelSyntaxError", "Token", "tokenize", "Parser", "parse_model_syntax"]


class ModelSyntaxError(ValueError):
    """Syntax or static error with a source position."""

    def __init__(self, message: str, pos: Optional[A.Pos] = None):
        self.message = message
        self.pos = pos
        where = f"line {pos.line}, column {pos.col}: " if pos and pos.line else ""
        super().__init__(where + message)


class Token(NamedTuple):
    kind: str  # NUM, IDENT, STRING, OP, KEYWORD, EOF
    text: str
    pos: A.Pos


KEYWORDS = {
    "dtmc", "ctmc", "const", "int", "double", "bool", "rational", "formula",
    "module", "endmodule", "rewards", "endrewards", "label", "init", "true",
    "false",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<num>(?:\d+(?:\.\d+)?|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<op><=>|=>|->|\.\.|=\?|<=|>=|!=|[-+*/&|!?:;,()\[\]{}<>=']|\.)
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> Iterator[Token]:
    line, line_start = 1, 0
    i, n = 0, len(text)
    while i < n:
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ModelSyntaxError(
                f"unexpected character {text[i]!r}", A.Pos(line, i - line_start + 1)
            )
        kind = m.lastgroup
        pos = A.Pos(line, i - line_start + 1)
        value = m.group()
        i = m.end()
        if kind == "nl":
            line += 1
            line_start = i
        elif kind in ("ws", "comment"):
            continue
        elif kind == "num":
            yield Token("NUM", value, pos)
        elif kind == "ident":
            yield Token("KEYWORD" if value in KEYWORDS else "IDENT", value, pos)
        elif kind == "string":
            yield Token("STRING", value[1:-1], pos)
        else:
            yield Token("OP", value, pos)
    yield Token("EOF", "", A.Pos(line, n - line_start + 1))


_COMPARISONS = {"=", "!=", "<", "<=", ">", ">="}


class Parser:
    def __init__(self, text: str):
        self.tokens = list(tokenize(text))
        self.i = 0

    # -- token helpers ---------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("OP", "KEYWORD") and t.text in texts

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.i += 1
        return t

    def error(self, message: str, tok: Optional[Token] = None) -> ModelSyntaxError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        return ModelSyntaxError(f"{message}, found {found}", tok.pos)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != "IDENT":
            raise self.error("expected an identifier")
        return self.advance()

    def expect_string(self) -> Token:
        if self.tok.kind != "STRING":
            raise self.error("expected a quoted name")
        return self.advance()

    def expect_eof(self) -> None:
        if self.tok.kind != "EOF":
            raise self.error("unexpected trailing input")

    # -- expressions -----------------------------------------------------

    def expr(self) -> A.Expr:
        cond = self.implication()
        if self.at("?"):
            pos = self.advance().pos
            then = self.implication()
            self.expect(":")
            other = self.expr()
            return A.Ite(cond, then, other, pos)
        return cond

    def implication(self) -> A.Expr:
        left = self.disjunction()
        while self.at("=>", "<=>"):
            op = self.advance()
            left = A.Binary(op.text, left, self.disjunction(), op.pos)
        return left

    def disjunction(self) -> A.Expr:
        left = self.conjunction()
        while self.at("|"):
            op = self.advance()
            left = A.Binary("|", left, self.conjunction(), op.pos)
        return left

    def conjunction(self) -> A.Expr:
        left = self.negation()
        while self.at("&"):
            op = self.advance()
            left = A.Binary("&", left, self.negation(), op.pos)
        return left

    def negation(self) -> A.Expr:
        if self.at("!"):
            op = self.advance()
            return A.Unary("!", self.negation(), op.pos)
        return self.comparison()

    def comparison(self) -> A.Expr:
        left = self.additive()
        if self.tok.kind == "OP" and self.tok.text in _COMPARISONS:
            op = self.advance()
            left = A.Binary(op.text, left, self.additive(), op.pos)
            if self.tok.kind == "OP" and self.tok.text in _COMPARISONS:
                raise self.error("comparisons cannot be chained")
        return left

    def additive(self) -> A.Expr:
        left = self.multiplicative()
        while self.at("+", "-"):
            op = self.advance()
            left = A.Binary(op.text, left, self.multiplicative(), op.pos)
        return left

    def multiplicative(self) -> A.Expr:
        left = self.unary()
        while self.at("*", "/"):
            op = self.advance()
            left = A.Binary(op.text, left, self.unary(), op.pos)
        return left

    def unary(self) -> A.Expr:
        if self.at("-"):
            op = self.advance()
            return A.Unary("-", self.unary(), op.pos)
        return self.atom()

    def atom(self) -> A.Expr:
        t = self.tok
        if t.kind == "NUM":
            self.advance()
            value = Fraction(t.text)
            if value.denominator == 1 and not any(c in t.text for c in ".eE"):
                return A.Num(int(value), t.pos)
            return A.Num(value, t.pos)
        if t.kind == "STRING":
            self.advance()
            return A.LabelRef(t.text, t.pos)
        if self.at("true", "false"):
            self.advance()
            return A.BoolLit(t.text == "true", t.pos)
        if t.kind == "IDENT":
            self.advance()
            if self.at("(") and t.text in ("min", "max", "floor", "ceil"):
                self.advance()
                args = [self.expr()]
                while self.at(","):
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                return A.Call(t.text, tuple(args), t.pos)
            return A.Ident(t.text, t.pos)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        raise self.error("expected an expression")

    # -- model -----------------------------------------------------------

    def model(self) -> A.ModelAst:
        start = self.tok
        if not self.at("dtmc", "ctmc"):
            raise self.error("expected model type 'dtmc' or 'ctmc'")
        kind = self.advance().text
        constants: list[A.ConstDecl] = []
        formulas: list[A.FormulaDecl] = []
        rewards: list[A.RewardStruct] = []
        labels: list[A.LabelDecl] = []
        module = None
        while self.tok.kind != "EOF":
            if self.at("const"):
                constants.append(self.const_decl())
            elif self.at("formula"):
                formulas.append(self.formula_decl())
            elif self.at("module"):
                if module is not None:
                    raise self.error("only one module per model is supported")
                module = self.module()
            elif self.at("rewards"):
                rewards.append(self.rewards())
            elif self.at("label"):
                labels.append(self.label_decl())
            else:
                raise self.error("expected a declaration")
        if module is None:
            raise self.error("missing module")
        name, variables, commands = module
        return A.ModelAst(
            kind, tuple(constants), tuple(formulas), name, tuple(variables),
            tuple(commands), tuple(rewards), tuple(labels), start.pos,
        )

    def const_decl(self) -> A.ConstDecl:
        pos = self.expect("const").pos
        typ = ""
        if self.at("int", "double", "bool", "rational"):
            typ = self.advance().text
            if typ == "rational":
                typ = "double"
        name = self.expect_ident().text
        value = None
        if self.at("="):
            self.advance()
            value = self.expr()
        self.expect(";")
        return A.ConstDecl(name, typ, value, pos)

    def formula_decl(self) -> A.FormulaDecl:
        pos = self.expect("formula").pos
        name = self.expect_ident().text
        self.expect("=")
        e = self.expr()
        self.expect(";")
        return A.FormulaDecl(name, e, pos)

    def label_decl(self) -> A.LabelDecl:
        pos = self.expect("label").pos
        name = self.expect_string().text
        self.expect("=")
        e = self.expr()
        self.expect(";")
        return A.LabelDecl(name, e, pos)

    def module(self):
        self.expect("module")
        name = self.expect_ident().text
        variables: list[A.VarDecl] = []
        commands: list[A.Command] = []
        while not self.at("endmodule"):
            if self.tok.kind == "IDENT" and self.peek().text == ":":
                variables.append(self.var_decl())
            elif self.at("["):
                commands.append(self.command())
            else:
                raise self.error("expected a variable declaration or a command")
        self.expect("endmodule")
        return name, variables, commands

    def var_decl(self) -> A.VarDecl:
        tok = self.expect_ident()
        self.expect(":")
        if self.at("bool"):
            self.advance()
            kind, low, high = "bool", None, None
        else:
            self.expect("[")
            low = self.expr()
            self.expect("..")
            high = self.expr()
            self.expect("]")
            kind = "int"
        init = None
        if self.at("init"):
            self.advance()
            init = self.expr()
        self.expect(";")
        return A.VarDecl(tok.text, kind, low, high, init, tok.pos)

    def command(self) -> A.Command:
        pos = self.expect("[").pos
        if not self.at("]"):
            raise self.error("synchronisation labels are not supported; expected ']'")
        self.advance()
        guard = self.expr()
        self.expect("->")
        alts = [self.alternative()]
        while self.at("+"):
            self.advance()
            alts.append(self.alternative())
        self.expect(";")
        return A.Command(guard, tuple(alts), pos)

    def alternative(self) -> A.Alternative:
        pos = self.tok.pos
        if self._starts_updates():
            return A.Alternative(None, self.updates(), pos)
        weight = self.expr()
        self.expect(":")
        return A.Alternative(weight, self.updates(), pos)

    def _starts_updates(self) -> bool:
        if self.at("true"):
            return self.peek().text in (";", "+")
        return (
            self.at("(")
            and self.peek().kind == "IDENT"
            and self.peek(2).text == "'"
        )

    def updates(self) -> tuple[A.Update, ...]:
        if self.at("true"):
            self.advance()
            return ()
        ups = list(self.update_group())
        while self.at("&"):
            self.advance()
            ups.extend(self.update_group())
        seen = set()
        for u in ups:
            if u.var in seen:
                raise ModelSyntaxError(f"variable {u.var!r} updated twice", u.pos)
            seen.add(u.var)
        return tuple(ups)

    def update_group(self) -> list[A.Update]:
        # "(x'=e)" or "(x'=e & y'=f)"
        self.expect("(")
        ups = [self.update()]
        while self.at("&"):
            self.advance()
            ups.append(self.update())
        self.expect(")")
        return ups

    def update(self) -> A.Update:
        tok = self.expect_ident()
        self.expect("'")
        self.expect("=")
        # Right-hand sides bind tighter than '&' so updates can share one group.
        e = self.comparison_or_negation()
        return A.Update(tok.text, e, tok.pos)

    def comparison_or_negation(self) -> A.Expr:
        if self.at("!"):
            op = self.advance()
            return A.Unary("!", self.comparison_or_negation(), op.pos)
        return self.comparison()

    def rewards(self) -> A.RewardStruct:
        pos = self.expect("rewards").pos
        name = self.expect_string().text if self.tok.kind == "STRING" else ""
        items = []
        while not self.at("endrewards"):
            gpos = self.tok.pos
            guard = self.expr()
            self.expect(":")
            value = self.expr()
            self.expect(";")
            items.append(A.RewardItem(guard, value, gpos))
        self.expect("endrewards")
        return A.RewardStruct(name, tuple(items), pos)


def parse_model_syntax(text: str) -> A.ModelAst:
    p = Parser(text)
    m = p.model()
    p.expect_eof()
    return m
