"""Weighted shifts: weight sequences, moment sequences and shift transformations.

Weights are stored squared.  Every operation here (moments, powers, Schur
products, the Aluthge transform) only ever needs ``alpha_n ** 2`` or square
roots of products of them, so storing squares keeps Agler and Bergman
shifts in exact rational arithmetic.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import mpmath

from .measure import Atom, DensityTerm, Measure, term_moment
from .scalar import (
    LogPos,
    Scalar,
    as_scalar,
    is_exact,
    power,
    scalar_from_json,
    scalar_to_json,
    sqrt,
    to_mpf,
)

__all__ = [
    "TailRule",
    "WeightSequence",
    "MomentSequence",
    "InsufficientWeights",
    "moments_from_weights",
    "weights_from_moments",
    "pth_power_shift",
    "schur_product",
    "aluthge_transform",
    "iterated_aluthge",
    "restriction_shift",
    "backstep_extension",
    "backstep_shift",
    "BackstepResult",
    "constant_shift",
    "agler_shift",
    "bergman_shift",
    "power_rule_shift",
]


class InsufficientWeights(ValueError):
    """Raised when a weight index lies beyond the prefix and there is no rule."""


# --- tail rules ----------------------------------------------------------------

_BASE_RULES = ("constant", "agler", "power")
_COMPOSITE_RULES = ("pow", "schur", "aluthge", "shift", "prepend")


@dataclass(frozen=True)
class TailRule:
    """Closed-form generator ``n -> alpha_n ** 2``.

    Base rules:

    * ``constant(c)``: ``alpha_n = c``
    * ``agler(j)``: ``alpha_n = sqrt((n+1)/(n+j))``
    * ``power(r, a, b)``: ``alpha_n = ((n+a)/(n+b)) ** r``

    Composite rules wrap other rules (``pow``, ``schur``, ``aluthge``,
    ``shift``, ``prepend``) so transformed shifts keep an exact,
    serialisable description.
    """

    name: str
    params: tuple = ()
    children: tuple = ()

    def __post_init__(self):
        if self.name not in _BASE_RULES + _COMPOSITE_RULES:
            raise ValueError(f"unknown tail rule {self.name!r}")

    # constructors
    @classmethod
    def constant(cls, c) -> "TailRule":
        c = as_scalar(c)
        if not 0 < c <= 1:
            raise ValueError("constant weight must lie in (0, 1]")
        return cls("constant", (c,))

    @classmethod
    def agler(cls, j: int) -> "TailRule":
        if int(j) != j or j < 2:
            raise ValueError("Agler index must be an integer >= 2")
        return cls("agler", (Fraction(int(j)),))

    @classmethod
    def power(cls, r, a=1, b=2) -> "TailRule":
        r, a, b = as_scalar(r), as_scalar(a), as_scalar(b)
        if r <= 0 or a <= 0 or b < a:
            raise ValueError("power rule needs r > 0 and 0 < a <= b")
        return cls("power", (r, a, b))

    def square(self, n: int) -> Scalar:
        """``alpha_n ** 2``."""
        name, p = self.name, self.params
        if name == "constant":
            return p[0] * p[0]
        if name == "agler":
            return Fraction(n + 1) / (n + p[0])
        if name == "power":
            r, a, b = p
            return power((n + a) / (n + b), 2 * r)
        if name == "pow":
            return power(self.children[0].square(n), p[0])
        if name == "schur":
            return self.children[0].square(n) * self.children[1].square(n)
        if name == "aluthge":
            c = self.children[0]
            return sqrt(c.square(n) * c.square(n + 1))
        if name == "shift":
            return self.children[0].square(n + int(p[0]))
        if name == "prepend":
            return p[0] if n == 0 else self.children[0].square(n - 1)
        raise AssertionError(name)

    # simplifying combinators
    def pow(self, p) -> "TailRule":
        p = as_scalar(p)
        if p == 1:
            return self
        if self.name == "constant":
            return TailRule.constant(power(self.params[0], p))
        if self.name == "agler":
            return TailRule.power(p / 2, 1, self.params[0])
        if self.name == "power":
            r, a, b = self.params
            return TailRule.power(r * p, a, b)
        if self.name == "pow":
            return self.children[0].pow(self.params[0] * p)
        return TailRule("pow", (p,), (self,))

    def shifted(self, k: int) -> "TailRule":
        if k == 0:
            return self
        if self.name == "constant":
            return self
        if self.name == "agler":
            return TailRule.power(Fraction(1, 2), 1 + k, self.params[0] + k)
        if self.name == "power":
            r, a, b = self.params
            return TailRule.power(r, a + k, b + k)
        if self.name == "shift":
            return self.children[0].shifted(int(self.params[0]) + k)
        if self.name == "prepend":
            return self.children[0].shifted(k - 1)
        return TailRule("shift", (Fraction(k),), (self,))

    def schur(self, other: "TailRule") -> "TailRule":
        if self.name == other.name == "constant":
            return TailRule.constant(self.params[0] * other.params[0])
        a, b = self._as_power(), other._as_power()
        if a is not None and b is not None and a[1:] == b[1:]:
            return TailRule.power(a[0] + b[0], a[1], a[2])
        return TailRule("schur", (), (self, other))

    def aluthge(self) -> "TailRule":
        if self.name == "constant":
            return self
        pw = self._as_power()
        if pw is not None:
            r, a, b = pw
            if b == a + 1:
                # ((n+a)(n+a+1) / ((n+a+1)(n+a+2)))^(r/2)
                return TailRule.power(r / 2, a, a + 2)
        return TailRule("aluthge", (), (self,))

    def _as_power(self):
        if self.name == "agler":
            return (Fraction(1, 2), Fraction(1), self.params[0])
        if self.name == "power":
            return self.params
        return None

    def to_dict(self) -> dict:
        out = {"name": self.name}
        if self.params:
            out["params"] = [scalar_to_json(p) for p in self.params]
        if self.children:
            out["children"] = [c.to_dict() for c in self.children]
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "TailRule":
        name = obj["name"]
        params = tuple(scalar_from_json(p) for p in obj.get("params", []))
        children = tuple(cls.from_dict(c) for c in obj.get("children", []))
        if name == "constant":
            return cls.constant(*params)
        if name == "agler":
            return cls.agler(int(params[0]))
        if name == "power":
            return cls.power(*params)
        return cls(name, params, children)


# --- sequences -------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSequence:
    """Shift weights ``alpha_0, alpha_1, ...`` stored as squares.

    ``prefix_sq`` holds explicit values; ``rule`` (if any) generates every
    index and must agree with the prefix.
    """

    prefix_sq: tuple = ()
    rule: Optional[TailRule] = None

    def __post_init__(self):
        values = tuple(as_scalar(v) for v in self.prefix_sq)
        object.__setattr__(self, "prefix_sq", values)
        for i, v in enumerate(values):
            _check_weight_sq(v, i)
            if self.rule is not None and not _agree(self.rule.square(i), v):
                raise ValueError(f"prefix weight {i} disagrees with the tail rule")

    @classmethod
    def from_weights(cls, weights: Sequence, rule: Optional[TailRule] = None) -> "WeightSequence":
        sq = []
        for w in weights:
            w = as_scalar(w)
            if w <= 0:
                raise ValueError("weights must be strictly positive")
            sq.append(w * w)
        return cls(tuple(sq), rule)

    @classmethod
    def from_rule(cls, rule: TailRule) -> "WeightSequence":
        return cls((), rule)

    def square(self, n: int) -> Scalar:
        if n < len(self.prefix_sq):
            return self.prefix_sq[n]
        if self.rule is None:
            raise InsufficientWeights(
                f"insufficient weights: index {n} beyond prefix of length {len(self.prefix_sq)}")
        v = self.rule.square(n)
        _check_weight_sq(v, n)
        return v

    def weight(self, n: int) -> Scalar:
        return sqrt(self.square(n))

    def squares(self, count: int) -> list:
        return [self.square(n) for n in range(count)]

    def weights(self, count: int) -> list:
        return [self.weight(n) for n in range(count)]

    def available(self, count: int) -> bool:
        return self.rule is not None or count <= len(self.prefix_sq)

    def __len__(self):
        if self.rule is not None:
            raise TypeError("weight sequence with a tail rule is infinite")
        return len(self.prefix_sq)

    def to_dict(self) -> dict:
        out = {"weights_sq": [scalar_to_json(v) for v in self.prefix_sq]}
        if self.rule is not None:
            out["rule"] = self.rule.to_dict()
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "WeightSequence":
        rule = TailRule.from_dict(obj["rule"]) if obj.get("rule") else None
        if "weights" in obj:
            return cls.from_weights([scalar_from_json(v) for v in obj["weights"]], rule)
        return cls(tuple(scalar_from_json(v) for v in obj.get("weights_sq", [])), rule)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "WeightSequence":
        return cls.from_dict(json.loads(text))


def _check_weight_sq(v, n):
    if v <= 0:
        raise ValueError(f"weight {n} must be strictly positive")
    if is_exact(v):
        if v > 1:
            raise ValueError(f"weight {n} exceeds 1 (shifts here are contractions)")
    elif v > 1 + mpmath.mpf(10) ** (10 - mpmath.mp.dps):
        raise ValueError(f"weight {n} exceeds 1 (shifts here are contractions)")


def _agree(a, b) -> bool:
    if is_exact(a) and is_exact(b):
        return a == b
    return abs(to_mpf(a) - to_mpf(b)) <= mpmath.mpf(10) ** (10 - mpmath.mp.dps)


@dataclass(frozen=True)
class MomentSequence:
    """``gamma_0 = 1, gamma_1, ...``; explicit values and/or a generator."""

    values: tuple = ()
    generator: Optional[Callable[[int], Scalar]] = field(default=None, compare=False)

    def __post_init__(self):
        values = tuple(as_scalar(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if values and values[0] != 1 and not (not is_exact(values[0]) and _agree(values[0], 1)):
            raise ValueError("gamma_0 must equal 1")
        for i, v in enumerate(values):
            if v <= 0:
                raise ValueError(f"nonpositive moment at index {i}")

    def __getitem__(self, n: int) -> Scalar:
        if n < len(self.values):
            return self.values[n]
        if self.generator is None:
            raise IndexError(f"moment {n} not available")
        return as_scalar(self.generator(n))

    def take(self, count: int) -> list:
        return [self[n] for n in range(count)]

    def available(self, count: int) -> bool:
        return self.generator is not None or count <= len(self.values)

    def __len__(self):
        return len(self.values)

    @classmethod
    def from_rule(cls, rule: Callable[[int], Scalar]) -> "MomentSequence":
        return cls((), rule)


def moments_from_weights(w: WeightSequence, count: int) -> MomentSequence:
    """``gamma_0..gamma_{count-1}`` with ``gamma_j = prod_{i<j} alpha_i**2``."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    out = []
    g = Fraction(1)
    for j in range(count):
        out.append(g)
        if j + 1 < count:
            g = g * w.square(j)
    return MomentSequence(tuple(out))


def weights_from_moments(gamma: MomentSequence, count: Optional[int] = None) -> WeightSequence:
    """Inverse of :func:`moments_from_weights`: ``alpha_j**2 = gamma_{j+1}/gamma_j``."""
    count = len(gamma.values) if count is None else count
    vals = gamma.take(count)
    for i, v in enumerate(vals):
        if v <= 0:
            raise ValueError(f"nonpositive moment at index {i}")
    return WeightSequence(tuple(vals[j + 1] / vals[j] for j in range(count - 1)))


def pth_power_shift(w: WeightSequence, p) -> WeightSequence:
    p = as_scalar(p)
    if p <= 0:
        raise ValueError("power must be positive")
    rule = w.rule.pow(p) if w.rule is not None else None
    return WeightSequence(tuple(power(v, p) for v in w.prefix_sq), rule)


def schur_product(a: WeightSequence, b: WeightSequence) -> WeightSequence:
    """Entrywise product of weights (moments multiply entrywise)."""
    if a.rule is not None and b.rule is not None:
        n = max(len(a.prefix_sq), len(b.prefix_sq))
        rule = a.rule.schur(b.rule)
    elif a.rule is None and b.rule is None:
        if len(a.prefix_sq) != len(b.prefix_sq):
            raise ValueError("length mismatch between finite weight sequences")
        n, rule = len(a.prefix_sq), None
    else:
        n = len(a.prefix_sq) if a.rule is None else len(b.prefix_sq)
        rule = None
    return WeightSequence(tuple(a.square(i) * b.square(i) for i in range(n)), rule)


def restriction_shift(w: WeightSequence, n: int) -> WeightSequence:
    """Restriction to ``span{e_n, e_{n+1}, ...}``: weights shifted left by ``n``."""
    if n < 0:
        raise ValueError("restriction index must be nonnegative")
    if n == 0:
        return w
    rule = w.rule.shifted(n) if w.rule is not None else None
    return WeightSequence(w.prefix_sq[n:], rule)


def aluthge_transform(w: WeightSequence) -> WeightSequence:
    """Weights ``sqrt(alpha_j * alpha_{j+1})``."""
    rule = w.rule.aluthge() if w.rule is not None else None
    n = len(w.prefix_sq) if w.rule is None else len(w.prefix_sq)
    if w.rule is None:
        n = max(n - 1, 0)
    return WeightSequence(tuple(sqrt(w.square(j) * w.square(j + 1)) for j in range(n)), rule)


def iterated_aluthge(w: WeightSequence, n: int) -> WeightSequence:
    if n < 1:
        raise ValueError("iteration count must be at least 1")
    for _ in range(n):
        w = aluthge_transform(w)
    return w


def backstep_shift(w: WeightSequence, x) -> WeightSequence:
    """Weights ``x, alpha_0, alpha_1, ...``."""
    x = as_scalar(x)
    if x <= 0:
        raise ValueError("back-step weight must be positive")
    rule = TailRule("prepend", (x * x,), (w.rule,)) if w.rule is not None else None
    return WeightSequence((x * x,) + w.prefix_sq, rule)


# --- convenient shifts -----------------------------------------------------------

def constant_shift(c=1) -> WeightSequence:
    return WeightSequence.from_rule(TailRule.constant(c))


def agler_shift(j: int) -> WeightSequence:
    return WeightSequence.from_rule(TailRule.agler(j))


def bergman_shift() -> WeightSequence:
    return agler_shift(2)


def power_rule_shift(r, a=1, b=2) -> WeightSequence:
    return WeightSequence.from_rule(TailRule.power(r, a, b))


# --- back-step extension at the measure level ---------------------------------------

@dataclass(frozen=True)
class BackstepResult:
    feasible: bool
    measure: Optional[Measure] = None
    reciprocal_integral: Optional[Scalar] = None   # integral of 1/t dmu, None if divergent
    reason: str = ""


def reciprocal_integral(mu: Measure) -> Optional[Scalar]:
    """``integral (1/t) dmu`` in closed form, or ``None`` if it diverges."""
    if mu.zero_mass > 0:
        return None
    total = Fraction(0)
    for a in mu.atoms:
        total = total + a.mass * a.log_pos.position(-1)
    for t in mu.terms:
        if t.alpha <= 0:
            return None
        total = total + term_moment(t, -1)
    return total


def backstep_extension(mu: Measure, x) -> BackstepResult:
    """Berger measure of the shift with weights ``x, alpha_0, ...``.

    Feasible iff ``1/t`` is ``mu``-integrable with integral ``I`` and
    ``x**2 * I <= 1``; the measure is then
    ``(x**2/t) dmu + (1 - x**2 I) delta_0``.
    """
    x = as_scalar(x)
    if x <= 0:
        raise ValueError("back-step weight must be positive")
    integral = reciprocal_integral(mu)
    if integral is None:
        return BackstepResult(False, reason="1/t not integrable")
    x2 = x * x
    slack = 1 - x2 * integral
    if slack < 0 and (is_exact(slack) or slack < -mpmath.mpf(10) ** (10 - mpmath.mp.dps)):
        return BackstepResult(False, reciprocal_integral=integral,
                              reason=f"x too large: x^2 * I = {mpmath.nstr(to_mpf(x2 * integral), 15)} > 1")
    if not is_exact(slack) and slack < 0:
        slack = Fraction(0)
    atoms = tuple(Atom(a.log_pos, a.mass * x2 * a.log_pos.position(-1)) for a in mu.atoms)
    terms = tuple(DensityTerm(t.coeff * x2 * t.log_support.position(-1), t.alpha - 1, t.k,
                              t.log_support) for t in mu.terms)
    return BackstepResult(True, Measure(atoms, terms, slack), integral)
