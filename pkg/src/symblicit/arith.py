"""Numeric backends for probabilities and rewards.

Three backends share one small interface:

* ``Float64Arith``   - Python floats (binary64), the default.
* ``RationalArith``  - exact reduced fractions (``gmpy2.mpq``).
* ``BigFloatArith``  - MPFR floats with a configurable mantissa width.

Values are plain numbers of the backend's type, so the hot loops of the
engines can use the ordinary arithmetic operators on them.  The methods on
the backend objects (``add``, ``div``, ...) are the checked entry points:
they reject values from another backend and raise on division by zero.
"""

from __future__ import annotations

import contextlib
import math
from fractions import Fraction
from typing import Any, Iterator

import gmpy2
from gmpy2 import mpfr, mpq

__all__ = [
    "ArithError",
    "Arith",
    "Float64Arith",
    "RationalArith",
    "BigFloatArith",
    "FLOAT64",
    "RATIONAL",
    "get_arith",
    "parse_literal",
]

DEFAULT_BIGFLOAT_BITS = 256


class ArithError(ArithmeticError):
    """Backend mismatch or an invalid literal."""


def parse_literal(text: str) -> Fraction:
    """Parse ``"0.125"``, ``"1/8"``, ``"3"`` or ``"1e-3"`` into an exact fraction."""
    text = text.strip()
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return Fraction(parse_literal(num)) / parse_literal(den)
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ArithError(f"invalid numeric literal {text!r}: {exc}") from None


class Arith:
    """Common behaviour of all backends."""

    name: str = "abstract"
    type: type = object

    zero: Any
    one: Any

    def convert(self, x: Any) -> Any:
        raise NotImplementedError

    def parse(self, text: str) -> Any:
        return self.convert(parse_literal(text))

    def render(self, x: Any) -> str:
        raise NotImplementedError

    @contextlib.contextmanager
    def activate(self) -> Iterator[None]:
        """Context in which the native operators use this backend's settings."""
        yield

    def _check(self, *xs: Any) -> None:
        for x in xs:
            if type(x) is not self.type:
                raise ArithError(
                    f"backend mismatch: {type(x).__name__} value given to {self.name}"
                )

    def add(self, a: Any, b: Any) -> Any:
        self._check(a, b)
        with self.activate():
            return a + b

    def sub(self, a: Any, b: Any) -> Any:
        self._check(a, b)
        with self.activate():
            return a - b

    def mul(self, a: Any, b: Any) -> Any:
        self._check(a, b)
        with self.activate():
            return a * b

    def div(self, a: Any, b: Any) -> Any:
        self._check(a, b)
        if b == 0:
            raise ZeroDivisionError(f"division by zero in {self.name} backend")
        with self.activate():
            return a / b

    def is_zero(self, a: Any) -> bool:
        return a == self.zero

    def is_one(self, a: Any) -> bool:
        return a == self.one

    def to_float(self, a: Any) -> float:
        return float(a)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class Float64Arith(Arith):
    name = "f64"
    type = float
    zero = 0.0
    one = 1.0

    def convert(self, x: Any) -> float:
        if isinstance(x, mpq):
            x = Fraction(int(x.numerator), int(x.denominator))
        return float(x)

    def render(self, x: float) -> str:
        # repr is the shortest decimal that round-trips
        return repr(float(x))


class RationalArith(Arith):
    name = "rational"
    type = type(mpq(0))
    zero = mpq(0)
    one = mpq(1)

    def convert(self, x: Any) -> Any:
        if isinstance(x, float):
            if not math.isfinite(x):
                raise ArithError(f"cannot represent {x} exactly")
            return mpq(Fraction(x))
        if isinstance(x, Fraction):
            return mpq(x.numerator, x.denominator)
        if isinstance(x, str):
            return self.parse(x)
        return mpq(x)

    def render(self, x: Any) -> str:
        return str(mpq(x))


class BigFloatArith(Arith):
    """MPFR floats; values carry ``precision`` mantissa bits."""

    type = type(mpfr(0))

    def __init__(self, precision: int = DEFAULT_BIGFLOAT_BITS):
        if int(precision) < 2:
            raise ArithError(f"bigfloat precision must be >= 2 bits, got {precision}")
        self.precision = int(precision)
        self.name = f"bigfloat:{self.precision}"
        self.zero = mpfr(0, self.precision)
        self.one = mpfr(1, self.precision)

    @contextlib.contextmanager
    def activate(self) -> Iterator[None]:
        with gmpy2.context(
            gmpy2.get_context(), precision=self.precision, trap_divzero=True
        ):
            yield

    def convert(self, x: Any) -> Any:
        if isinstance(x, Fraction):
            x = mpq(x.numerator, x.denominator)
        if isinstance(x, str):
            return self.parse(x)
        with self.activate():
            return mpfr(x, self.precision)

    def render(self, x: Any) -> str:
        # enough digits to round-trip at this precision
        digits = int(math.ceil(self.precision * math.log10(2))) + 1
        return format(x, f".{digits}g")

    def to_float(self, a: Any) -> float:
        return float(a)


FLOAT64 = Float64Arith()
RATIONAL = RationalArith()


def get_arith(spec: str | Arith | None = None) -> Arith:
    """Backend from a CLI-style name: ``f64``, ``rational`` or ``bigfloat[:bits]``."""
    if isinstance(spec, Arith):
        return spec
    if spec is None or spec in ("f64", "float", "float64", "double"):
        return FLOAT64
    if spec in ("rational", "exact", "q"):
        return RATIONAL
    if spec.startswith("bigfloat"):
        _, _, bits = spec.partition(":")
        try:
            return BigFloatArith(int(bits) if bits else DEFAULT_BIGFLOAT_BITS)
        except ValueError:
            raise ArithError(f"bad bigfloat precision in {spec!r}") from None
    raise ArithError(f"unknown arithmetic backend {spec!r}")
