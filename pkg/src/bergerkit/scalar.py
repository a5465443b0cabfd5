"""Exact-or-real scalars and log-domain positions.

A scalar is either a :class:`fractions.Fraction` (exact) or an
:class:`mpmath.mpf` carried at the working precision.  Arithmetic on two
rationals stays rational; anything touching a real degrades to ``mpf``.

Positions on ``(0, 1]`` are stored through their negative logarithm so
that products of positions become sums.  :class:`LogPos` keeps that
logarithm exact when it is a rational plus rational multiples of
``ln p`` for primes ``p``; this covers ``e^{-1/5}``, ``1/2`` and
``sqrt(1/2)`` alike.
"""
from __future__ import annotations

import math
import os
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Union

import mpmath
from sympy import factorint

Scalar = Union[Fraction, mpmath.mpf]

DEFAULT_DPS = 60


def _env_precision() -> int:
    raw = os.environ.get("BERGERKIT_PRECISION")
    if not raw:
        return DEFAULT_DPS
    try:
        dps = int(raw)
    except ValueError:
        raise ValueError(f"BERGERKIT_PRECISION must be an integer, got {raw!r}") from None
    if dps < 20:
        raise ValueError("BERGERKIT_PRECISION must be at least 20 digits")
    return dps


mpmath.mp.dps = _env_precision()


def working_dps() -> int:
    return mpmath.mp.dps


def set_precision(dps: int) -> None:
    """Set the working precision in decimal digits."""
    if dps < 20:
        raise ValueError("precision must be at least 20 digits")
    mpmath.mp.dps = dps
    _gamma_cached.cache_clear()


def as_scalar(x) -> Scalar:
    """Coerce ``x`` to a Scalar.

    Integers and rationals become ``Fraction``; strings are parsed as
    ``"p/q"`` or decimals (exactly); floats and mpmath values become ``mpf``.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a scalar")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, mpmath.mpf):
        return x
    if isinstance(x, float):
        return mpmath.mpf(x)
    if hasattr(x, "_mpf_"):
        return mpmath.mpf(x)
    raise TypeError(f"cannot interpret {type(x).__name__} as a scalar")


def is_exact(x) -> bool:
    return isinstance(x, (Fraction, int))


def to_mpf(x) -> mpmath.mpf:
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def mixed(*xs):
    """Return ``xs`` unchanged if all are exact, else all as mpf.

    ``Fraction`` does not interoperate with ``mpf`` for ``-``, ``/`` and
    comparisons, so mixed arithmetic goes through this first.
    """
    if all(is_exact(x) for x in xs):
        return xs
    return tuple(to_mpf(x) for x in xs)


def to_float(x) -> float:
    if isinstance(x, Fraction):
        return x.numerator / x.denominator
    return float(x)


def _exact_root(n: int) -> int | None:
    if n < 0:
        return None
    r = math.isqrt(n)
    return r if r * r == n else None


def sqrt(x) -> Scalar:
    """Square root; exact when ``x`` is the square of a rational."""
    x = as_scalar(x)
    if isinstance(x, Fraction):
        if x < 0:
            raise ValueError("square root of a negative scalar")
        p, q = _exact_root(x.numerator), _exact_root(x.denominator)
        if p is not None and q is not None:
            return Fraction(p, q)
    return mpmath.sqrt(to_mpf(x))


def power(x, p) -> Scalar:
    """``x**p`` for ``x > 0``; exact for rational ``x`` and integer ``p``.

    Half-integer and other rational exponents stay exact when the result
    is rational (perfect powers).
    """
    x, p = as_scalar(x), as_scalar(p)
    if isinstance(x, Fraction) and isinstance(p, Fraction):
        if p.denominator == 1:
            if x == 0 and p < 0:
                raise ZeroDivisionError("zero to a negative power")
            return x ** p.numerator
        if x > 0:
            root = _rational_root(x, p.denominator)
            if root is not None:
                return root ** p.numerator
    if isinstance(x, Fraction) and x == 0:
        return Fraction(0) if p > 0 else mpmath.inf
    return mpmath.power(to_mpf(x), to_mpf(p))


def _rational_root(x: Fraction, d: int) -> Fraction | None:
    def iroot(n: int) -> int | None:
        r = round(n ** (1.0 / d)) if n < 2**1000 else int(mpmath.nint(mpmath.root(n, d)))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**d == n:
                return cand
        return None

    p, q = iroot(x.numerator), iroot(x.denominator)
    if p is None or q is None:
        return None
    return Fraction(p, q)


@lru_cache(maxsize=512)
def _gamma_cached(x: Fraction, dps: int) -> mpmath.mpf:
    return mpmath.gamma(to_mpf(x))


def gamma(x) -> Scalar:
    """Gamma function; exact factorial for positive integers."""
    x = as_scalar(x)
    if isinstance(x, Fraction):
        if x.denominator == 1 and x > 0:
            return Fraction(math.factorial(int(x) - 1))
        return _gamma_cached(x, mpmath.mp.dps)
    return mpmath.gamma(x)


def format_scalar(x, decimal: bool = False, digits: int = 20) -> str:
    if isinstance(x, Fraction) and not decimal:
        return str(x)
    return mpmath.nstr(to_mpf(x), digits)


def close(a, b, tol) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return abs(a - b) <= tol
    return abs(to_mpf(a) - to_mpf(b)) <= tol


# --- JSON encoding -----------------------------------------------------------

def scalar_to_json(x) -> dict:
    x = as_scalar(x)
    if isinstance(x, Fraction):
        return {"rat": f"{x.numerator}/{x.denominator}"}
    return {"dec": mpmath.nstr(x, mpmath.mp.dps, min_fixed=-mpmath.inf, max_fixed=mpmath.inf),
            "prec": mpmath.mp.prec}


def scalar_from_json(obj) -> Scalar:
    if isinstance(obj, dict):
        if "rat" in obj:
            return Fraction(obj["rat"])
        if "dec" in obj:
            prec = int(obj.get("prec", mpmath.mp.prec))
            with mpmath.workprec(max(prec, mpmath.mp.prec)):
                value = mpmath.mpf(obj["dec"])
            return value
        raise ValueError(f"unrecognised scalar object {obj!r}")
    if isinstance(obj, (int, str)):
        return as_scalar(obj)
    if isinstance(obj, float):
        return mpmath.mpf(obj)
    raise ValueError(f"unrecognised scalar {obj!r}")


# --- log-domain positions ----------------------------------------------------

def _factor_rational(r: Fraction) -> dict[int, int]:
    out: dict[int, int] = {}
    for p, e in factorint(r.numerator).items():
        out[p] = out.get(p, 0) + e
    for p, e in factorint(r.denominator).items():
        out[p] = out.get(p, 0) - e
    return {p: e for p, e in out.items() if e}


class LogPos:
    """Negative logarithm of a position ``t`` in ``(0, 1]``.

    ``t = exp(-rational) * prod(p ** -e_p)``.  ``rational`` may be an
    ``mpf`` for inexact input, in which case equality is only numeric.
    Instances are immutable and hashable.
    """

    __slots__ = ("rational", "logs", "_hash")

    def __init__(self, rational=0, logs=None):
        self.rational = as_scalar(rational)
        items = {}
        for p, e in (logs or {}).items():
            e = Fraction(e)
            if e:
                items[int(p)] = e
        self.logs = tuple(sorted(items.items()))
        self._hash = hash((self.rational, self.logs))

    @classmethod
    def of(cls, value) -> "LogPos":
        if isinstance(value, LogPos):
            return value
        return cls(value)

    @classmethod
    def from_position(cls, t) -> "LogPos":
        """Log coordinate of a position given directly (``0 < t <= 1``)."""
        t = as_scalar(t)
        if t <= 0 or t > 1:
            raise ValueError(f"position must lie in (0, 1], got {t}")
        if isinstance(t, Fraction):
            return cls(0, {p: -e for p, e in _factor_rational(t).items()})
        return cls(-mpmath.log(t))

    @property
    def is_exact(self) -> bool:
        return isinstance(self.rational, Fraction)

    @property
    def is_zero(self) -> bool:
        return not self.logs and self.rational == 0

    def value(self) -> mpmath.mpf:
        v = to_mpf(self.rational)
        for p, e in self.logs:
            v += to_mpf(e) * mpmath.log(p)
        return v

    def position(self, n=1) -> Scalar:
        """``t ** n``; exact when the result is rational."""
        n = as_scalar(n)
        if isinstance(n, Fraction) and isinstance(self.rational, Fraction):
            if self.rational * n == 0 and all((e * n).denominator == 1 for _, e in self.logs):
                out = Fraction(1)
                for p, e in self.logs:
                    out *= Fraction(p) ** int(-e * n)
                return out
        return mpmath.exp(-to_mpf(n) * self.value())

    def __add__(self, other: "LogPos") -> "LogPos":
        other = LogPos.of(other)
        logs = dict(self.logs)
        for p, e in other.logs:
            logs[p] = logs.get(p, 0) + e
        return LogPos(self.rational + other.rational, logs)

    def __sub__(self, other: "LogPos") -> "LogPos":
        return self + LogPos.of(other) * -1

    def __mul__(self, k) -> "LogPos":
        k = as_scalar(k)
        if not isinstance(k, Fraction):
            return LogPos(self.value() * k)
        return LogPos(self.rational * k, {p: e * k for p, e in self.logs})

    __rmul__ = __mul__

    def half(self) -> "LogPos":
        return self * Fraction(1, 2)

    def _key(self):
        return (self.rational, self.logs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogPos):
            try:
                other = LogPos.of(as_scalar(other))
            except TypeError:
                return NotImplemented
        if self.is_exact and other.is_exact:
            return self._key() == other._key()
        return abs(self.value() - other.value()) <= mpmath.mpf(10) ** (10 - mpmath.mp.dps)

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other) -> bool:
        other = LogPos.of(other)
        if self == other:
            return False
        return self.value() < other.value()

    def __le__(self, other) -> bool:
        return self == other or self < other

    def __gt__(self, other) -> bool:
        return LogPos.of(other) < self

    def __ge__(self, other) -> bool:
        return self == other or self > other

    def __repr__(self) -> str:
        parts = []
        if self.rational != 0 or not self.logs:
            parts.append(format_scalar(self.rational))
        parts += [f"{e}*ln{p}" for p, e in self.logs]
        return f"LogPos({' + '.join(parts)})"

    def to_json(self) -> dict:
        if not self.logs:
            return scalar_to_json(self.rational)
        if not self.is_exact:
            return scalar_to_json(self.value())
        # extension of the plain scalar form: rational + sum of e_p * ln(p)
        return {
            "rat": f"{self.rational.numerator}/{self.rational.denominator}",
            "ln": {str(p): f"{e.numerator}/{e.denominator}" for p, e in self.logs},
        }

    @classmethod
    def from_json(cls, obj) -> "LogPos":
        if isinstance(obj, dict) and "ln" in obj:
            rational = Fraction(obj.get("rat") or 0)
            return cls(rational, {int(p): Fraction(e) for p, e in obj["ln"].items()})
        if isinstance(obj, dict) and "pos" in obj:
            return cls.from_position(scalar_from_json(obj["pos"]))
        return cls(scalar_from_json(obj))
