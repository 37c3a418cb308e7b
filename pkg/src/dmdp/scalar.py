"""Reward arithmetic.

Two instantiations share one small interface: :class:`Exact` works on
:class:`fractions.Fraction` and compares exactly, :class:`Approx` works on
binary floats and treats values within a relative tolerance as equal.
Solvers never compare rewards with ``==`` or ``<`` directly; they go through
the arithmetic object attached to the graph.
"""
from __future__ import annotations

import os
from fractions import Fraction
from typing import Union

Number = Union[Fraction, float]

DEFAULT_EPS = 1e-9
MODE_ENV = "DMDP_MODE"


class Exact:
    """Exact rational arithmetic (the default for correctness work)."""

    exact = True
    eps = 0
    name = "exact"

    def coerce(self, value) -> Fraction:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, str):
            return Fraction(value.strip())
        return Fraction(value)

    def eq(self, a, b) -> bool:
        return a == b

    def gt(self, a, b) -> bool:
        return a > b

    def lt(self, a, b) -> bool:
        return a < b

    def ge(self, a, b) -> bool:
        return a >= b

    def format(self, value) -> str:
        value = Fraction(value)
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"

    def __repr__(self) -> str:
        return "Exact()"

    def __eq__(self, other) -> bool:
        return isinstance(other, Exact)

    def __hash__(self) -> int:
        return hash("exact")


class Approx:
    """Float arithmetic; ``a == b`` iff ``|a-b| <= eps * max(1, |a|, |b|)``."""

    exact = False
    name = "float"

    def __init__(self, eps: float = DEFAULT_EPS):
        if eps < 0:
            raise ValueError("eps must be non-negative")
        self.eps = eps

    def coerce(self, value) -> float:
        if isinstance(value, str):
            text = value.strip()
            if "/" in text:
                return float(Fraction(text))
            return float(text)
        return float(value)

    def eq(self, a, b) -> bool:
        return abs(a - b) <= self.eps * max(1.0, abs(a), abs(b))

    def gt(self, a, b) -> bool:
        return a > b and not self.eq(a, b)

    def lt(self, a, b) -> bool:
        return a < b and not self.eq(a, b)

    def ge(self, a, b) -> bool:
        return a > b or self.eq(a, b)

    def format(self, value) -> str:
        return repr(float(value))

    def __repr__(self) -> str:
        return f"Approx(eps={self.eps!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Approx) and other.eps == self.eps

    def __hash__(self) -> int:
        return hash(("float", self.eps))


EXACT = Exact()
Arith = Union[Exact, Approx]


def arith_for(mode: str | None = None, eps: float = DEFAULT_EPS) -> Arith:
    """Return the arithmetic for ``mode`` ("exact" or "float").

    ``None`` falls back to the ``DMDP_MODE`` environment variable, then exact.
    """
    if mode is None:
        mode = os.environ.get(MODE_ENV, "exact")
    mode = mode.strip().lower()
    if mode == "exact":
        return EXACT
    if mode == "float":
        return Approx(eps)
    raise ValueError(f"unknown arithmetic mode {mode!r} (expected 'exact' or 'float')")


def parse_number(text: str) -> Fraction:
    """Parse a decimal or ``a/b`` rational exactly."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc


def decimal(value, digits: int = 12) -> str:
    """Human-readable decimal rendering used in CLI output."""
    return f"{float(value):.{digits}g}"
