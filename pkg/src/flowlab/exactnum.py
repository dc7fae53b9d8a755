"""Exact rational scalars and capacities with an explicit unbounded variant.

Every cost, capacity, balance and flow value in flowlab is a
:class:`fractions.Fraction`. Fractions are always stored in lowest terms with a
positive denominator, so equal values have equal representations.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd
from typing import Iterable, Union

from .errors import EmptyInput, NonPositiveValue, RationalParseError

Rational = Fraction

__all__ = [
    "Rational",
    "Capacity",
    "Unbounded",
    "UNBOUNDED",
    "as_rational",
    "as_capacity",
    "parse_rational",
    "parse_capacity",
    "format_rational",
    "format_capacity",
    "is_canonical",
    "common_granularity",
    "lcm",
]


class Unbounded:
    """The infinite capacity. A singleton; compare with ``is UNBOUNDED``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNBOUNDED"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (Unbounded, ())

    def __hash__(self):
        return hash("flowlab.UNBOUNDED")

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        _check_operand(other)
        return False

    def __le__(self, other):
        _check_operand(other)
        return other is self

    def __gt__(self, other):
        _check_operand(other)
        return other is not self

    def __ge__(self, other):
        _check_operand(other)
        return True

    def __sub__(self, other):
        if other is self:
            raise ArithmeticError("inf - inf is undefined")
        _check_operand(other)
        return self

    def __add__(self, other):
        _check_operand(other)
        return self

    __radd__ = __add__


UNBOUNDED = Unbounded()

Capacity = Union[Fraction, Unbounded]


def _check_operand(other):
    if not isinstance(other, (Fraction, int, Unbounded)):
        raise TypeError(f"cannot combine UNBOUNDED with {type(other).__name__}")


def as_rational(x) -> Fraction:
    """Coerce int / Fraction / 'p/q' text into a Fraction. Floats are refused."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def as_capacity(x) -> Capacity:
    if x is UNBOUNDED or x is None:
        return UNBOUNDED
    if isinstance(x, str):
        return parse_capacity(x)
    return as_rational(x)


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"`` or ``"p"``. Decimal points are rejected to keep inputs exact."""
    s = text.strip()
    num, sep, den = s.partition("/")
    try:
        p = int(num)
        q = int(den) if sep else 1
    except ValueError:
        raise RationalParseError(f"not a rational: {text!r}") from None
    if q == 0:
        raise RationalParseError(f"zero denominator: {text!r}")
    return Fraction(p, q)


def parse_capacity(text: str) -> Capacity:
    if text.strip().lower() in ("inf", "infinity", "unbounded"):
        return UNBOUNDED
    return parse_rational(text)


def format_rational(q: Fraction) -> str:
    q = as_rational(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_capacity(c: Capacity) -> str:
    return "inf" if c is UNBOUNDED else format_rational(c)


def is_canonical(q) -> bool:
    return (
        isinstance(q, Fraction)
        and q.denominator > 0
        and gcd(q.numerator, q.denominator) == 1
    )


def lcm(values: Iterable[int]) -> int:
    return reduce(lambda a, b: a * b // gcd(a, b), values, 1)


def common_granularity(values: Iterable) -> Fraction:
    """Largest ``g`` such that every value is a positive integer multiple of ``g``.

    >>> common_granularity([Fraction(1, 2), Fraction(1, 3)])
    Fraction(1, 6)
    """
    vals = [as_rational(v) for v in values]
    if not vals:
        raise EmptyInput("common_granularity needs at least one value")
    for v in vals:
        if v <= 0:
            raise NonPositiveValue(f"{v} is not positive")
    num = reduce(gcd, (v.numerator for v in vals))
    den = lcm(v.denominator for v in vals)
    return Fraction(num, den)
