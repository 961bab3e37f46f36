"""Static checking and compilation of models into successor functions.

A compiled model works on integer state codes.  Variables are packed in
declaration order, the first variable in the most significant bits, each
stored as the offset from its lower bound in ``(hi - lo).bit_length()``
bits (booleans take one bit).

Guards, updates, weights and rewards are translated to Python source once
and compiled with :func:`compile`; constants are folded exactly before
translation, so ``1 - p`` with ``p = 0.2`` becomes the exact value ``4/5``
converted to the active arithmetic backend.
"""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Any, Callable, Iterable, Mapping, Optional, Union

from .. import arith as _arith
from . import ast as A
from .parser import ModelSyntaxError

log = logging.getLogger(__name__)

__all__ = [
    "ModelError",
    "check_model",
    "compile_model",
    "CompiledModel",
    "Variable",
]

# Tolerance for "weights of a DTMC command sum to one" with inexact backends.
FLOAT_SUM_TOL = 1e-9

INT, NUM, BOOL = "int", "num", "bool"


class ModelError(ModelSyntaxError):
    """Semantic error: undeclared name, type error, bad range, bad weights..."""


Value = Union[int, Fraction, bool]


# -- type checking -------------------------------------------------------------


class _Scope:
    """Names visible to expressions of one model."""

    def __init__(self, ast: A.ModelAst, const_values: Mapping[str, Value]):
        self.ast = ast
        self.const_types: dict[str, str] = {}
        self.const_values: dict[str, Value] = dict(const_values)
        self.formulas = {f.name: f for f in ast.formulas}
        self.variables = {v.name: v for v in ast.variables}
        self.labels = {lab.name: lab for lab in ast.labels}
        self._formula_types: dict[str, str] = {}
        self._active: set[str] = set()


def _infer(e: A.Expr, sc: _Scope, allow_vars: bool = True) -> str:
    """Type of ``e``: ``int``, ``num`` (rational) or ``bool``."""
    if isinstance(e, A.Num):
        return INT if isinstance(e.value, int) else NUM
    if isinstance(e, A.BoolLit):
        return BOOL
    if isinstance(e, A.Ident):
        name = e.name
        if name in sc.const_types:
            return sc.const_types[name]
        if name in sc.variables:
            if not allow_vars:
                raise ModelError(f"{name!r} is a variable, expected a constant expression", e.pos)
            return BOOL if sc.variables[name].kind == "bool" else INT
        if name in sc.formulas:
            if name in sc._active:
                raise ModelError(f"formula {name!r} is defined in terms of itself", e.pos)
            if name not in sc._formula_types:
                sc._active.add(name)
                sc._formula_types[name] = _infer(sc.formulas[name].expr, sc, True)
                sc._active.discard(name)
            if not allow_vars and _mentions_vars(sc.formulas[name].expr, sc):
                raise ModelError(f"formula {name!r} depends on variables", e.pos)
            return sc._formula_types[name]
        raise ModelError(f"undeclared identifier {name!r}", e.pos)
    if isinstance(e, A.LabelRef):
        if e.name not in sc.labels:
            raise ModelError(f"unknown label {e.name!r}", e.pos)
        if e.name in sc._active:
            raise ModelError(f"label {e.name!r} is defined in terms of itself", e.pos)
        sc._active.add(e.name)
        t = _infer(sc.labels[e.name].expr, sc, allow_vars)
        sc._active.discard(e.name)
        return t
    if isinstance(e, A.Unary):
        t = _infer(e.operand, sc, allow_vars)
        if e.op == "!":
            _want(t, BOOL, e)
            return BOOL
        _want_number(t, e)
        return t
    if isinstance(e, A.Binary):
        lt = _infer(e.left, sc, allow_vars)
        rt = _infer(e.right, sc, allow_vars)
        op = e.op
        if op in ("&", "|", "=>", "<=>"):
            _want(lt, BOOL, e.left)
            _want(rt, BOOL, e.right)
            return BOOL
        if op in ("=", "!="):
            if (lt == BOOL) != (rt == BOOL):
                raise ModelError(f"cannot compare {lt} with {rt}", e.pos)
            return BOOL
        _want_number(lt, e.left)
        _want_number(rt, e.right)
        if op in ("<", "<=", ">", ">="):
            return BOOL
        if op == "/":
            return NUM
        return INT if lt == rt == INT else NUM
    if isinstance(e, A.Call):
        ts = [_infer(a, sc, allow_vars) for a in e.args]
        for t, a in zip(ts, e.args):
            _want_number(t, a)
        if e.func in ("floor", "ceil"):
            if len(ts) != 1:
                raise ModelError(f"{e.func} takes one argument", e.pos)
            return INT
        if not ts:
            raise ModelError(f"{e.func} needs arguments", e.pos)
        return INT if all(t == INT for t in ts) else NUM
    if isinstance(e, A.Ite):
        _want(_infer(e.cond, sc, allow_vars), BOOL, e.cond)
        a = _infer(e.then, sc, allow_vars)
        b = _infer(e.other, sc, allow_vars)
        if (a == BOOL) != (b == BOOL):
            raise ModelError("branches of '?' have different types", e.pos)
        return a if a == b else NUM
    raise TypeError(e)


def _want(t: str, expected: str, e: A.Expr) -> None:
    if t != expected:
        raise ModelError(f"expected a {expected} expression, got {t}", e.pos)


def _want_number(t: str, e: A.Expr) -> None:
    if t == BOOL:
        raise ModelError("expected a numeric expression, got bool", e.pos)


def _mentions_vars(e: A.Expr, sc: _Scope, _seen: Optional[set] = None) -> bool:
    _seen = _seen if _seen is not None else set()
    if isinstance(e, A.Ident):
        if e.name in sc.variables:
            return True
        if e.name in sc.formulas and ("f", e.name) not in _seen:
            _seen.add(("f", e.name))
            return _mentions_vars(sc.formulas[e.name].expr, sc, _seen)
        return False
    if isinstance(e, A.LabelRef):
        lab = sc.labels.get(e.name)
        if lab is None or ("l", e.name) in _seen:
            return False
        _seen.add(("l", e.name))
        return _mentions_vars(lab.expr, sc, _seen)
    return any(_mentions_vars(c, sc, _seen) for c in _children(e))


def _children(e: A.Expr) -> Iterable[A.Expr]:
    if isinstance(e, A.Unary):
        return (e.operand,)
    if isinstance(e, A.Binary):
        return (e.left, e.right)
    if isinstance(e, A.Call):
        return e.args
    if isinstance(e, A.Ite):
        return (e.cond, e.then, e.other)
    return ()


# -- exact constant evaluation -----------------------------------------------------


class _Unresolved(Exception):
    def __init__(self, name: str, pos: A.Pos):
        self.name = name
        self.pos = pos


def _eval_const(e: A.Expr, sc: _Scope) -> Value:
    """Exact value of a variable-free expression (ints, Fractions, bools)."""
    if isinstance(e, A.Num):
        return e.value
    if isinstance(e, A.BoolLit):
        return e.value
    if isinstance(e, A.Ident):
        if e.name in sc.const_values:
            return sc.const_values[e.name]
        if e.name in sc.formulas:
            return _eval_const(sc.formulas[e.name].expr, sc)
        if e.name in sc.const_types:
            raise _Unresolved(e.name, e.pos)
        raise ModelError(f"{e.name!r} is not a constant", e.pos)
    if isinstance(e, A.LabelRef):
        return _eval_const(sc.labels[e.name].expr, sc)
    if isinstance(e, A.Unary):
        v = _eval_const(e.operand, sc)
        return (not v) if e.op == "!" else -v
    if isinstance(e, A.Binary):
        op = e.op
        if op == "&":
            return bool(_eval_const(e.left, sc)) and bool(_eval_const(e.right, sc))
        if op == "|":
            return bool(_eval_const(e.left, sc)) or bool(_eval_const(e.right, sc))
        a = _eval_const(e.left, sc)
        b = _eval_const(e.right, sc)
        if op == "=>":
            return (not a) or bool(b)
        if op == "<=>":
            return bool(a) == bool(b)
        if op == "/":
            if b == 0:
                raise ModelError("division by zero", e.pos)
            return Fraction(a) / Fraction(b)
        return _BINOPS[op](a, b)
    if isinstance(e, A.Call):
        vals = [_eval_const(a, sc) for a in e.args]
        if e.func == "min":
            return min(vals)
        if e.func == "max":
            return max(vals)
        if e.func == "floor":
            return math.floor(vals[0])
        return math.ceil(vals[0])
    if isinstance(e, A.Ite):
        c = _eval_const(e.cond, sc)
        return _eval_const(e.then, sc) if c else _eval_const(e.other, sc)
    raise TypeError(e)


_BINOPS: dict[str, Callable[[Any, Any], Any]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def _try_const(e: A.Expr, sc: _Scope) -> Optional[Value]:
    """Exact value if ``e`` is variable-free and all constants are known."""
    if _mentions_vars(e, sc):
        return None
    try:
        return _eval_const(e, sc)
    except _Unresolved:
        return None


def _resolve_constants(
    ast: A.ModelAst, overrides: Mapping[str, Any], strict: bool
) -> _Scope:
    sc = _Scope(ast, {})
    names = set()
    for c in ast.constants:
        if c.name in names:
            raise ModelError(f"constant {c.name!r} declared twice", c.pos)
        names.add(c.name)
    unknown = set(overrides) - names
    if unknown:
        raise ModelError(f"unknown constant(s) in overrides: {', '.join(sorted(unknown))}")
    for c in ast.constants:
        declared = {"int": INT, "double": NUM, "bool": BOOL}.get(c.type, "")
        if c.value is not None:
            t = _infer(c.value, sc, allow_vars=False)
            if declared == INT and t != INT:
                raise ModelError(f"constant {c.name!r} is int but its value is {t}", c.pos)
            if declared and (declared == BOOL) != (t == BOOL):
                raise ModelError(f"constant {c.name!r} is {declared} but its value is {t}", c.pos)
            ctype = declared or t
        else:
            ctype = declared or INT
        sc.const_types[c.name] = ctype
        if c.name in overrides:
            value = _coerce_override(c.name, ctype, overrides[c.name], c.pos)
        elif c.value is not None:
            try:
                value = _eval_const(c.value, sc)
            except _Unresolved as u:
                if strict:
                    raise ModelError(
                        f"constant {c.name!r} depends on undefined constant {u.name!r}", c.pos
                    ) from None
                continue
        else:
            if strict:
                raise ModelError(f"constant {c.name!r} is undefined (use an override)", c.pos)
            continue
        if ctype == NUM and isinstance(value, int) and not isinstance(value, bool):
            value = Fraction(value)
        sc.const_values[c.name] = value
    return sc


def _coerce_override(name: str, ctype: str, raw: Any, pos: A.Pos) -> Value:
    if isinstance(raw, str):
        text = raw.strip()
        if ctype == BOOL:
            if text not in ("true", "false"):
                raise ModelError(f"constant {name!r} expects true/false, got {raw!r}", pos)
            return text == "true"
        try:
            raw = _arith.parse_literal(text)
        except _arith.ArithError as exc:
            raise ModelError(f"constant {name!r}: {exc}", pos) from None
    if ctype == BOOL:
        if not isinstance(raw, bool):
            raise ModelError(f"constant {name!r} expects a boolean", pos)
        return raw
    value = Fraction(raw)
    if ctype == INT:
        if value.denominator != 1:
            raise ModelError(f"constant {name!r} is int, got {raw}", pos)
        return int(value)
    return value


def check_model(ast: A.ModelAst, overrides: Mapping[str, Any] = {}) -> _Scope:
    """Run all static checks that do not need undefined constants."""
    sc = _resolve_constants(ast, overrides, strict=False)
    declared: dict[str, A.Pos] = {}
    for kind, items in (
        ("constant", ast.constants),
        ("formula", ast.formulas),
        ("variable", ast.variables),
    ):
        for item in items:
            if item.name in declared:
                raise ModelError(f"{kind} {item.name!r} clashes with an earlier declaration", item.pos)
            declared[item.name] = item.pos
    for name, pos in declared.items():
        if name in ("min", "max", "floor", "ceil"):
            raise ModelError(f"{name!r} is a reserved function name", pos)
    for group, what in ((ast.labels, "label"), (ast.rewards, "reward structure")):
        names = set()
        for item in group:
            if item.name in names:
                raise ModelError(f"{what} {item.name!r} declared twice", item.pos)
            names.add(item.name)
    if not ast.variables:
        raise ModelError("the module declares no variables", ast.pos)

    for f in ast.formulas:
        _infer(A.Ident(f.name, f.pos), sc)
    for v in ast.variables:
        if v.kind == "int":
            for bound in (v.low, v.high):
                _want(_infer(bound, sc, allow_vars=False), INT, bound)
            lo, hi = _try_const(v.low, sc), _try_const(v.high, sc)
            if lo is not None and hi is not None and lo > hi:
                raise ModelError(f"empty range [{lo}..{hi}] for variable {v.name!r}", v.pos)
            if v.init is not None:
                _want(_infer(v.init, sc, allow_vars=False), INT, v.init)
                iv = _try_const(v.init, sc)
                if iv is not None and lo is not None and hi is not None and not lo <= iv <= hi:
                    raise ModelError(
                        f"initial value {iv} of {v.name!r} outside [{lo}..{hi}]", v.init.pos
                    )
        elif v.init is not None:
            _want(_infer(v.init, sc, allow_vars=False), BOOL, v.init)

    for cmd in ast.commands:
        _want(_infer(cmd.guard, sc), BOOL, cmd.guard)
        const_weights: list[Value] = []
        for alt in cmd.alternatives:
            if alt.weight is not None:
                _want_number(_infer(alt.weight, sc), alt.weight)
                w = _try_const(alt.weight, sc)
                const_weights.append(w)
                if w is not None and w < 0:
                    raise ModelError(f"negative weight {w}", alt.weight.pos)
                if w is not None and ast.kind == "ctmc" and w == 0:
                    raise ModelError("rates must be positive", alt.weight.pos)
            else:
                const_weights.append(1)
            for u in alt.updates:
                if u.var not in sc.variables:
                    raise ModelError(f"update of undeclared variable {u.var!r}", u.pos)
                t = _infer(u.expr, sc)
                if sc.variables[u.var].kind == "bool":
                    _want(t, BOOL, u.expr)
                else:
                    _want(t, INT, u.expr)
        if ast.kind == "dtmc" and all(w is not None for w in const_weights):
            total = sum(Fraction(w) for w in const_weights)
            if total != 1:
                raise ModelError(
                    f"probabilities sum to {_show(total)} instead of 1", cmd.pos
                )
    for r in ast.rewards:
        for item in r.items:
            _want(_infer(item.guard, sc), BOOL, item.guard)
            _want_number(_infer(item.value, sc), item.value)
    for lab in ast.labels:
        _want(_infer(lab.expr, sc), BOOL, lab.expr)
    return sc


def _show(v: Value) -> str:
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v.numerator)
        f = float(v)
        if Fraction(repr(f)) == v:
            return repr(f)
        return f"{v.numerator}/{v.denominator}"
    return str(v)


# -- code generation ---------------------------------------------------------


class Variable:
    __slots__ = ("name", "kind", "low", "high", "width", "shift", "mask")

    def __init__(self, name: str, kind: str, low: int, high: int, shift: int):
        self.name = name
        self.kind = kind
        self.low = low
        self.high = high
        self.width = (high - low).bit_length()
        self.shift = shift
        self.mask = (1 << self.width) - 1

    def __repr__(self) -> str:
        return f"Variable({self.name!r}, [{self.low}..{self.high}], bits={self.width}, shift={self.shift})"


class _Codegen:
    def __init__(self, sc: _Scope, layout: dict[str, Variable], arith: _arith.Arith):
        self.sc = sc
        self.layout = layout
        self.arith = arith
        self.namespace: dict[str, Any] = {}
        self._names: dict[tuple, str] = {}
        self.used_vars: set[str] = set()

    def constant(self, value: Any, scalar: bool) -> str:
        if isinstance(value, bool):
            return "True" if value else "False"
        if isinstance(value, int) and not scalar:
            return repr(value)
        if isinstance(value, Fraction) and value.denominator == 1 and not scalar:
            return repr(int(value))
        key = (scalar, type(value).__name__, value)
        name = self._names.get(key)
        if name is None:
            name = f"_c{len(self._names)}"
            self._names[key] = name
            self.namespace[name] = self.arith.convert(Fraction(value)) if scalar else value
        return name

    def expr(self, e: A.Expr, scalar: bool) -> str:
        """Python source for ``e``; ``scalar`` selects backend arithmetic."""
        c = _try_const(e, self.sc)
        if c is not None:
            return self.constant(c, scalar and not isinstance(c, bool))
        if isinstance(e, A.Ident):
            if e.name in self.layout:
                self.used_vars.add(e.name)
                return f"v_{e.name}"
            if e.name in self.sc.formulas:
                return self.expr(self.sc.formulas[e.name].expr, scalar)
            raise ModelError(f"undefined constant {e.name!r}", e.pos)
        if isinstance(e, A.LabelRef):
            return self.expr(self.sc.labels[e.name].expr, scalar)
        if isinstance(e, A.Unary):
            inner = self.expr(e.operand, scalar)
            return f"(not {inner})" if e.op == "!" else f"(-{inner})"
        if isinstance(e, A.Binary):
            op = e.op
            a = self.expr(e.left, scalar)
            b = self.expr(e.right, scalar)
            if op == "&":
                return f"({a} and {b})"
            if op == "|":
                return f"({a} or {b})"
            if op == "=>":
                return f"((not {a}) or {b})"
            if op == "<=>":
                return f"(bool({a}) == bool({b}))"
            if op == "/":
                return f"_sdiv({a}, {b})" if scalar else f"_div({a}, {b})"
            pyop = "==" if op == "=" else op
            return f"({a} {pyop} {b})"
        if isinstance(e, A.Call):
            args = ", ".join(self.expr(a, scalar) for a in e.args)
            if e.func in ("min", "max"):
                return f"{e.func}({args})"
            return f"_{e.func}({args})"
        if isinstance(e, A.Ite):
            return (
                f"({self.expr(e.then, scalar)} if {self.expr(e.cond, False)} "
                f"else {self.expr(e.other, scalar)})"
            )
        raise TypeError(e)

    def decoder(self, indent: str = "    ") -> list[str]:
        lines = []
        for name in sorted(self.used_vars, key=lambda n: self.layout[n].shift):
            v = self.layout[name]
            field = f"(s >> {v.shift})" if v.shift else "s"
            if v.width == 0:
                val = str(v.low)
            else:
                val = f"({field} & {v.mask})"
                if v.low:
                    val = f"{val} + {v.low}"
            lines.append(f"{indent}v_{name} = {val}")
        return lines


def _div(a: Any, b: Any) -> Any:
    if b == 0:
        raise ModelError("division by zero while evaluating an expression")
    return Fraction(a) / Fraction(b)


class CompiledModel:
    """Executable form of a model over integer state codes.

    ``successors(s)`` yields merged ``(target, weight)`` pairs: probabilities
    for a DTMC (several enabled commands are chosen uniformly), rates for a
    CTMC.  Deadlocked states get a single self-loop of weight one and are
    counted in ``deadlocks``.
    """

    def __init__(
        self,
        ast: A.ModelAst,
        scope: _Scope,
        layout: list[Variable],
        arith: _arith.Arith,
    ):
        self.ast = ast
        self.kind = ast.kind
        self.arith = arith
        self.constants = dict(scope.const_values)
        self.variables = layout
        self.nbits = sum(v.width for v in layout)
        self._scope = scope
        self._layout = {v.name: v for v in layout}
        self.deadlocks = 0
        self._deadlock_warned = False
        self.initial = self.encode(
            {v.name: self._initial_value(v) for v in ast.variables}
        )
        self._build_successors()
        self._rewards: dict[str, Callable[[int], Any]] = {}
        self._predicates: dict[str, Callable[[int], bool]] = {}

    # -- encoding --------------------------------------------------------

    def _initial_value(self, decl: A.VarDecl) -> Value:
        if decl.init is None:
            return False if decl.kind == "bool" else self._layout[decl.name].low
        return _eval_const(decl.init, self._scope)

    def encode(self, valuation: Mapping[str, Value]) -> int:
        code = 0
        for v in self.variables:
            x = valuation[v.name]
            if v.kind == "bool":
                x = int(bool(x))
            elif not (v.low <= x <= v.high):
                raise ModelError(f"value {x} of {v.name!r} outside [{v.low}..{v.high}]")
            code |= (int(x) - v.low) << v.shift
        return code

    def decode(self, code: int) -> dict[str, Value]:
        out: dict[str, Value] = {}
        for v in self.variables:
            raw = (code >> v.shift) & v.mask
            out[v.name] = bool(raw) if v.kind == "bool" else raw + v.low
        return out

    def format_state(self, code: int) -> str:
        vals = self.decode(code)
        return "(" + ",".join(
            ("true" if x else "false") if isinstance(x, bool) else str(x)
            for x in vals.values()
        ) + ")"

    # -- successor function ------------------------------------------------

    def _build_successors(self) -> None:
        gen = _Codegen(self._scope, self._layout, self.arith)
        dtmc = self.kind == "dtmc"
        body: list[str] = []
        for ci, cmd in enumerate(self.ast.commands):
            guard = gen.expr(cmd.guard, False)
            if guard == "False":
                continue
            ind = "    "
            if guard != "True":
                body.append(f"    if {guard}:")
                ind = "        "
            body.append(f"{ind}a = []")
            dynamic = False
            for ai, alt in enumerate(cmd.alternatives):
                if alt.weight is None:
                    w = gen.constant(Fraction(1), True)
                else:
                    const = _try_const(alt.weight, self._scope)
                    if const is not None:
                        if const == 0:
                            continue
                        w = gen.constant(const, True)
                    else:
                        dynamic = True
                        w = f"_S({gen.expr(alt.weight, True)})"
                keep = (1 << self.nbits) - 1
                parts = []
                for u in alt.updates:
                    var = self._layout[u.var]
                    keep &= ~(var.mask << var.shift)
                    val = gen.expr(u.expr, False)
                    tmp = f"n_{u.var}"
                    if var.kind == "bool":
                        body.append(f"{ind}{tmp} = 1 if {val} else 0")
                        if var.width:
                            parts.append(f"({tmp} << {var.shift})" if var.shift else tmp)
                    else:
                        body.append(f"{ind}{tmp} = {val}")
                        body.append(
                            f"{ind}if not ({var.low} <= {tmp} <= {var.high}): "
                            f"_range({ci}, {u.var!r}, {tmp}, s)"
                        )
                        off = f"({tmp} - {var.low})" if var.low else tmp
                        if var.width:
                            parts.append(f"({off} << {var.shift})" if var.shift else off)
                if keep == (1 << self.nbits) - 1:
                    target = "s"
                else:
                    target = " | ".join([f"(s & {keep})"] + parts) if keep else (
                        " | ".join(parts) or "0"
                    )
                body.append(f"{ind}a.append(({target}, {w}))")
            if dtmc and dynamic:
                body.append(f"{ind}_check({ci}, a, s)")
            body.append(f"{ind}cmds.append(a)")
        src = ["def _succ(s):"] + gen.decoder() + ["    cmds = []"] + body + ["    return cmds"]
        self._succ = self._compile("\n".join(src), "_succ", gen)
        self.source = "\n".join(src)

    def _compile(self, source: str, name: str, gen: _Codegen) -> Callable:
        arith = self.arith
        ns: dict[str, Any] = dict(gen.namespace)
        conv = float if arith.type is float else arith.convert

        def _sdiv(a, b):
            if b == 0:
                raise ModelError("division by zero while evaluating an expression")
            return conv(a) / conv(b)

        def _range(ci, var, value, s):
            raise ModelError(
                f"command {ci + 1} assigns {value} to {var!r} outside its range "
                f"in state {self.format_state(s)}",
                self.ast.commands[ci].pos,
            )

        def _check(ci, alts, s):
            total = sum((w for _, w in alts), arith.zero)
            if not _close_to_one(arith, total):
                raise ModelError(
                    f"probabilities of command {ci + 1} sum to {arith.render(total)} "
                    f"in state {self.format_state(s)}",
                    self.ast.commands[ci].pos,
                )

        ns.update(
            _S=conv,
            _div=_div,
            _sdiv=_sdiv,
            _floor=math.floor,
            _ceil=math.ceil,
            _range=_range,
            _check=_check,
            _one=arith.one,
            _zero=arith.zero,
        )
        code = compile(source, f"<model {self.ast.module}:{name}>", "exec")
        with arith.activate():
            exec(code, ns)
        return ns[name]

    def successors(self, s: int) -> list[tuple[int, Any]]:
        try:
            cmds = self._succ(s)
        except ZeroDivisionError:
            raise ModelError(f"division by zero in state {self.format_state(s)}") from None
        if len(cmds) == 1:
            alts = cmds[0]
            if len(alts) == 1 and alts[0][1]:
                return alts
            if len(alts) == 2 and alts[0][0] != alts[1][0] and alts[0][1] and alts[1][1]:
                return alts
        elif cmds and self.kind == "dtmc":
            k = len(cmds)
            cmds = [[(t, w / k) for t, w in a] for a in cmds]
        out: dict[int, Any] = {}
        for alts in cmds:
            for t, w in alts:
                if t in out:
                    out[t] = out[t] + w
                else:
                    out[t] = w
        result = [(t, w) for t, w in out.items() if w != 0]
        if not result:
            self.deadlocks += 1
            if not self._deadlock_warned:
                self._deadlock_warned = True
                log.warning("deadlock in state %s, adding a self-loop", self.format_state(s))
            return [(s, self.arith.one)]
        return result

    def exit_rate(self, s: int) -> Any:
        total = self.arith.zero
        for _, w in self.successors(s):
            total = total + w
        return total

    # -- rewards and predicates -------------------------------------------

    def reward_function(self, name: Optional[str]) -> Callable[[int], Any]:
        """State reward function of the named (or first) reward structure."""
        structs = self.ast.rewards
        if name is None:
            if not structs:
                raise ModelError("the model has no reward structure")
            struct = structs[0]
        else:
            found = [r for r in structs if r.name == name]
            if not found:
                raise ModelError(f"unknown reward structure {name!r}")
            struct = found[0]
        fn = self._rewards.get(struct.name)
        if fn is None:
            gen = _Codegen(self._scope, self._layout, self.arith)
            body = ["    r = _zero"]
            for item in struct.items:
                guard = gen.expr(item.guard, False)
                val = gen.expr(item.value, True)
                if not val.startswith("_c"):
                    val = f"_S({val})"
                if guard == "False":
                    continue
                if guard == "True":
                    body.append(f"    r = r + {val}")
                else:
                    body.append(f"    if {guard}: r = r + {val}")
            src = ["def _rew(s):"] + gen.decoder() + body + ["    return r"]
            fn = self._compile("\n".join(src), "_rew", gen)
            self._rewards[struct.name] = fn
        return fn

    def reward(self, name: Optional[str], s: int) -> Any:
        return self.reward_function(name)(s)

    def predicate(self, target: Union[str, A.Expr]) -> Callable[[int], bool]:
        """Compiled state predicate for a label name or a boolean expression."""
        if isinstance(target, str):
            if target not in self._scope.labels:
                raise ModelError(f"unknown label {target!r}")
            expr: A.Expr = A.LabelRef(target)
            key = "label:" + target
        else:
            _want(_infer(target, self._scope), BOOL, target)
            expr = target
            key = "expr:" + A.format_expr(target)
        fn = self._predicates.get(key)
        if fn is None:
            gen = _Codegen(self._scope, self._layout, self.arith)
            cond = gen.expr(expr, False)
            src = ["def _pred(s):"] + gen.decoder() + [f"    return bool({cond})"]
            fn = self._compile("\n".join(src), "_pred", gen)
            self._predicates[key] = fn
        return fn

    def goal(self, label: str, s: int) -> bool:
        return self.predicate(label)(s)


def _close_to_one(arith: _arith.Arith, total: Any) -> bool:
    if arith is _arith.RATIONAL or arith.type is _arith.RATIONAL.type:
        return total == 1
    return abs(float(total) - 1.0) <= FLOAT_SUM_TOL


def compile_model(
    ast: A.ModelAst,
    overrides: Optional[Mapping[str, Any]] = None,
    arith: Union[str, _arith.Arith, None] = None,
) -> CompiledModel:
    """Resolve constants, lay out the state bits and build the executable model."""
    arith = _arith.get_arith(arith)
    overrides = dict(overrides or {})
    check_model(ast, overrides)
    sc = _resolve_constants(ast, overrides, strict=True)
    layout: list[Variable] = []
    bounds = []
    for v in ast.variables:
        if v.kind == "bool":
            lo, hi = 0, 1
        else:
            lo, hi = _eval_const(v.low, sc), _eval_const(v.high, sc)
            if lo > hi:
                raise ModelError(f"empty range [{lo}..{hi}] for variable {v.name!r}", v.pos)
            if v.init is not None:
                iv = _eval_const(v.init, sc)
                if not lo <= iv <= hi:
                    raise ModelError(
                        f"initial value {iv} of {v.name!r} outside [{lo}..{hi}]", v.init.pos
                    )
        bounds.append((v, int(lo), int(hi)))
    shift = sum((hi - lo).bit_length() for _, lo, hi in bounds)
    for v, lo, hi in bounds:
        shift -= (hi - lo).bit_length()
        layout.append(Variable(v.name, v.kind, lo, hi, shift))
    for cmd in ast.commands:
        if ast.kind == "dtmc":
            ws = [1 if a.weight is None else _try_const(a.weight, sc) for a in cmd.alternatives]
            if all(w is not None for w in ws) and sum(Fraction(w) for w in ws) != 1:
                raise ModelError(
                    f"probabilities sum to {_show(sum(Fraction(w) for w in ws))} instead of 1",
                    cmd.pos,
                )
        else:
            for a in cmd.alternatives:
                w = None if a.weight is None else _try_const(a.weight, sc)
                if w is not None and w <= 0:
                    raise ModelError("rates must be positive", a.pos)
    return CompiledModel(ast, sc, layout, arith)
