"""Exact rational arithmetic used everywhere in the core.

All loads, times, speeds and LP coefficients are arbitrary-precision
rationals; no floats enter any computation. gmpy2.mpq is used when
available (it is several times faster than fractions.Fraction), with a
transparent fallback.
"""
from __future__ import annotations

from typing import Union

try:
    from gmpy2 import mpq as Q  # type: ignore
except ImportError:  # pragma: no cover
    from fractions import Fraction as Q  # type: ignore

QLike = Union[int, str, "Q"]

ZERO = Q(0)
ONE = Q(1)


def rat(x: QLike) -> Q:
    """Coerce ints, "p/q" strings or rationals to Q. Floats are rejected."""
    if isinstance(x, float):
        raise TypeError(f"floats are not allowed in exact arithmetic: {x!r}")
    if isinstance(x, str):
        return Q(x.strip())
    return Q(x)


def qstr(x) -> str:
    """Canonical string form: "p/q", or "p" when the value is integral."""
    return str(Q(x))


def qmin(*xs):
    return min(xs)


def qmax(*xs):
    return max(xs)


def harmonic(n: int) -> Q:
    """H_n = 1 + 1/2 + ... + 1/n."""
    if n < 0:
        raise ValueError("harmonic number needs n >= 0")
    total = Q(0)
    for k in range(1, n + 1):
        total += Q(1, k)
    return total
