"""Measures on [0, 1]: finitely many atoms plus a closed family of densities.

A :class:`DensityTerm` ``(coeff, alpha, k, log_support)`` is ``coeff`` times
the pushforward of ``t**alpha * (-ln t)**k dt`` on ``(0, 1)`` under
``t -> c*t`` with ``c = exp(-log_support)``, i.e. the density

    coeff / c * (t/c)**alpha * (-ln(t/c))**k      on (0, c).

Its moments are ``coeff * c**n * Gamma(k+1) / (n+alpha+1)**(k+1)``.  The
family is closed under multiplicative convolution when ``k`` is a
nonnegative integer, which is what makes exact squaring possible.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .scalar import (
    LogPos,
    Scalar,
    as_scalar,
    gamma,
    is_exact,
    mixed,
    power,
    scalar_from_json,
    scalar_to_json,
    to_float,
    to_mpf,
)

__all__ = [
    "Atom",
    "DensityTerm",
    "Measure",
    "term_moment",
    "measure_moment",
    "density_eval",
    "density_function",
    "support_set",
    "support_square_check",
    "restrict_and_normalize",
    "lebesgue",
    "monomial",
    "agler_measure",
    "dirac",
]


@dataclass(frozen=True)
class Atom:
    """Point mass ``mass`` at ``t = exp(-log_pos)``."""

    log_pos: LogPos
    mass: Scalar

    def __post_init__(self):
        object.__setattr__(self, "log_pos", LogPos.of(self.log_pos))
        object.__setattr__(self, "mass", as_scalar(self.mass))
        if self.mass <= 0:
            raise ValueError(f"atom mass must be positive, got {self.mass}")
        if self.log_pos.value() < 0:
            raise ValueError("atom position must lie in (0, 1]")

    @classmethod
    def at(cls, position, mass) -> "Atom":
        return cls(LogPos.from_position(position), mass)

    @property
    def position(self) -> Scalar:
        return self.log_pos.position(1)


@dataclass(frozen=True)
class DensityTerm:
    coeff: Scalar
    alpha: Scalar
    k: Scalar = Fraction(0)
    log_support: LogPos = field(default_factory=LogPos)

    def __post_init__(self):
        object.__setattr__(self, "coeff", as_scalar(self.coeff))
        object.__setattr__(self, "alpha", as_scalar(self.alpha))
        object.__setattr__(self, "k", as_scalar(self.k))
        object.__setattr__(self, "log_support", LogPos.of(self.log_support))
        if self.alpha <= -1:
            raise ValueError(f"alpha must exceed -1, got {self.alpha}")
        if self.k <= -1:
            raise ValueError(f"k must exceed -1, got {self.k}")
        if self.coeff == 0:
            raise ValueError("coefficient must be nonzero")
        if self.log_support.value() < 0:
            raise ValueError("support endpoint must lie in (0, 1]")

    @property
    def key(self):
        return (self.alpha, self.k, self.log_support)

    @property
    def sort_key(self):
        return (to_mpf(self.alpha), to_mpf(self.k), self.log_support.value())

    @property
    def support_end(self) -> Scalar:
        return self.log_support.position(1)

    @property
    def symbolic(self) -> bool:
        """True when ``k`` is a nonnegative integer (closed under convolution)."""
        return isinstance(self.k, Fraction) and self.k.denominator == 1

    def scaled(self, factor) -> "DensityTerm":
        return DensityTerm(self.coeff * as_scalar(factor), self.alpha, self.k, self.log_support)


def term_moment(term: DensityTerm, n) -> Scalar:
    """Closed-form ``n``-th moment of a density term.

    Exact when ``coeff``, ``alpha`` are rational, ``k`` is a nonnegative
    integer and ``c**n`` is rational (always for ``log_support == 0``).
    ``n`` may be any real with ``n + alpha + 1 > 0`` (``n = -1`` gives the
    integral of ``1/t``).
    """
    n = as_scalar(n)
    base = n + term.alpha + 1
    if base <= 0:
        raise ValueError(f"moment {n} diverges for alpha={term.alpha}")
    scale = term.log_support.position(n)
    return term.coeff * scale * gamma(term.k + 1) / power(base, term.k + 1)


def _sum(values: Iterable) -> Scalar:
    total = Fraction(0)
    for v in values:
        total = total + v
    return total


@dataclass(frozen=True)
class Measure:
    """Atoms, density terms and an optional mass at ``t = 0``.

    Construction canonicalises: atoms with equal positions are merged and
    sorted by ``log_pos``; terms with equal ``(alpha, k, log_support)`` are
    merged, zero coefficients dropped, and sorted lexicographically.
    """

    atoms: tuple = ()
    terms: tuple = ()
    zero_mass: Scalar = Fraction(0)

    def __post_init__(self):
        zero_mass = as_scalar(self.zero_mass)
        if zero_mass < 0:
            raise ValueError("zero_mass must be nonnegative")
        object.__setattr__(self, "zero_mass", zero_mass)
        object.__setattr__(self, "atoms", _merge_atoms(self.atoms))
        object.__setattr__(self, "terms", _merge_terms(self.terms))

    @property
    def is_atomic(self) -> bool:
        return not self.terms

    @property
    def symbolic(self) -> bool:
        return all(t.symbolic for t in self.terms)

    def total_mass(self) -> Scalar:
        return measure_moment(self, 0)

    def is_probability(self, tol=Fraction(0)) -> bool:
        total = self.total_mass()
        if is_exact(total) and tol == 0:
            return total == 1
        return abs(to_mpf(total) - 1) <= to_mpf(tol or mpmath.mpf(10) ** (10 - mpmath.mp.dps))

    def scaled(self, factor) -> "Measure":
        factor = as_scalar(factor)
        return Measure(
            tuple(Atom(a.log_pos, a.mass * factor) for a in self.atoms),
            tuple(t.scaled(factor) for t in self.terms),
            self.zero_mass * factor,
        )

    def __add__(self, other: "Measure") -> "Measure":
        return Measure(self.atoms + other.atoms, self.terms + other.terms,
                       self.zero_mass + other.zero_mass)

    def moments(self, count: int) -> list:
        return [measure_moment(self, n) for n in range(count)]

    # serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "zero_mass": scalar_to_json(self.zero_mass),
            "atoms": [{"log_pos": a.log_pos.to_json(), "mass": scalar_to_json(a.mass)}
                      for a in self.atoms],
            "terms": [{"coeff": scalar_to_json(t.coeff), "alpha": scalar_to_json(t.alpha),
                       "k": scalar_to_json(t.k), "log_support": t.log_support.to_json()}
                      for t in self.terms],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, obj: dict) -> "Measure":
        unknown = set(obj) - {"zero_mass", "atoms", "terms"}
        if unknown:
            raise ValueError(f"unknown measure fields: {sorted(unknown)}")
        atoms = []
        for a in obj.get("atoms", []):
            if "position" in a:
                lp = LogPos.from_position(scalar_from_json(a["position"]))
            else:
                lp = LogPos.from_json(a["log_pos"])
            atoms.append(Atom(lp, scalar_from_json(a["mass"])))
        terms = [
            DensityTerm(
                scalar_from_json(t["coeff"]),
                scalar_from_json(t["alpha"]),
                scalar_from_json(t.get("k", {"rat": "0/1"})),
                LogPos.from_json(t.get("log_support", {"rat": "0/1"})),
            )
            for t in obj.get("terms", [])
        ]
        zero = scalar_from_json(obj.get("zero_mass", {"rat": "0/1"}))
        return cls(tuple(atoms), tuple(terms), zero)

    @classmethod
    def from_json(cls, text: str) -> "Measure":
        return cls.from_dict(json.loads(text))


def _merge_atoms(atoms: Iterable[Atom]) -> tuple:
    merged: list[Atom] = []
    for a in atoms:
        for i, b in enumerate(merged):
            if b.log_pos == a.log_pos:
                merged[i] = Atom(b.log_pos, b.mass + a.mass)
                break
        else:
            merged.append(a)
    return tuple(sorted(merged, key=lambda a: a.log_pos.value()))


def _merge_terms(terms: Iterable[DensityTerm]) -> tuple:
    coeffs: dict = {}
    reps: dict = {}
    for t in terms:
        key = t.key
        for existing in reps:
            if existing[0] == key[0] and existing[1] == key[1] and existing[2] == key[2]:
                key = existing
                break
        coeffs[key] = coeffs.get(key, Fraction(0)) + t.coeff
        reps.setdefault(key, t)
    out = []
    for key, c in coeffs.items():
        if c == 0 or (not is_exact(c) and abs(c) <= mpmath.mpf(10) ** (15 - mpmath.mp.dps)):
            continue
        t = reps[key]
        out.append(DensityTerm(c, t.alpha, t.k, t.log_support))
    return tuple(sorted(out, key=lambda t: t.sort_key))


def measure_moment(mu: Measure, n) -> Scalar:
    """``integral t**n dmu``: zero mass (n=0 only) + atoms + closed-form terms."""
    n = as_scalar(n)
    if n < 0:
        raise ValueError("moment index must be nonnegative")
    total = mu.zero_mass if n == 0 else Fraction(0)
    total = total + _sum(a.mass * a.log_pos.position(n) for a in mu.atoms)
    return total + _sum(term_moment(t, n) for t in mu.terms)


def _term_density(term: DensityTerm, t) -> Scalar:
    t, c, coeff = mixed(t, term.support_end, term.coeff)
    if t >= c:
        return Fraction(0)
    ratio = t / c
    value = coeff / c * power(ratio, term.alpha)
    if term.k != 0:
        value = value * power(-mpmath.log(to_mpf(ratio)), term.k)
    return value


def density_eval(mu: Measure, t) -> Scalar:
    """Value of the absolutely continuous part at ``0 < t < 1``."""
    t = as_scalar(t)
    if not 0 < t < 1:
        raise ValueError(f"density is evaluated on (0, 1) only, got {t}")
    if not is_exact(t):
        t = to_mpf(t)
    return _sum(_term_density(term, t) for term in mu.terms)


def density_function(mu: Measure):
    """Vectorised float64 evaluator of the density part, for quadrature."""
    params = [(to_float(t.coeff), to_float(t.alpha), to_float(t.k), float(t.support_end))
              for t in mu.terms]

    def f(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for coeff, alpha, k, c in params:
            inside = (t > 0) & (t < c)
            r = t[inside] / c
            val = coeff / c * r**alpha
            if k != 0:
                val = val * (-np.log(r)) ** k
            out[inside] += val
        return out

    return f


# --- supports -----------------------------------------------------------------

@dataclass(frozen=True)
class SupportDescription:
    points: tuple            # LogPos of atoms, ascending log (descending t)
    has_zero: bool
    intervals: tuple         # (0, c) endpoints of density terms as LogPos

    def __str__(self):
        pts = ", ".join(mpmath.nstr(mpmath.exp(-p.value()), 12) for p in self.points)
        ivs = ", ".join(f"[0, {mpmath.nstr(mpmath.exp(-c.value()), 12)}]" for c in self.intervals)
        return f"atoms {{{pts}}}" + (" + {0}" if self.has_zero else "") + (f"; intervals {ivs}" if ivs else "")


def support_set(mu: Measure) -> SupportDescription:
    widest = {}
    for t in mu.terms:
        widest.setdefault(t.log_support, t)
    ends = tuple(sorted(widest, key=lambda lp: lp.value()))
    # only the widest interval matters for the closed support
    return SupportDescription(tuple(a.log_pos for a in mu.atoms), mu.zero_mass > 0, ends[:1])


def squared_support(nu: Measure) -> SupportDescription:
    """Closure of pairwise products of the support of ``nu``."""
    pts = [a.log_pos for a in nu.atoms]
    prods = []
    for i, p in enumerate(pts):
        for q in pts[i:]:
            s = p + q
            if not any(s == r for r in prods):
                prods.append(s)
    base = support_set(nu)
    intervals = ()
    if base.intervals:
        # [0, c] * ([0, c] u atoms) = [0, c * max(c, largest atom)]
        c = base.intervals[0]
        best = c + (min([c] + pts, key=lambda lp: lp.value()))
        intervals = (best,)
    return SupportDescription(tuple(sorted(prods, key=lambda lp: lp.value())),
                              base.has_zero, intervals)


def support_square_check(mu: Measure, nu: Measure) -> bool:
    """Does ``supp(mu)`` equal the closure of ``supp(nu)**2``?

    Atomic supports are compared exactly in log coordinates; density supports
    are compared as intervals ``[0, c]``.  Atoms lying inside a density
    interval are absorbed into it before comparing.
    """
    want = squared_support(nu)
    have = support_set(mu)

    def normalise(desc: SupportDescription):
        if desc.intervals:
            c = desc.intervals[0]
            pts = tuple(p for p in desc.points if p < c)
            return pts, True, desc.intervals
        return desc.points, desc.has_zero, ()

    wp, wz, wi = normalise(want)
    hp, hz, hi = normalise(have)
    if len(wp) != len(hp) or wz != hz or len(wi) != len(hi):
        return False
    return all(a == b for a, b in zip(wp, hp)) and all(a == b for a, b in zip(wi, hi))


def restrict_and_normalize(mu: Measure, n: int) -> Measure:
    """Normalised ``t**n dmu``: the Berger measure of the n-fold restricted shift."""
    if n < 1:
        raise ValueError("restriction order must be at least 1")
    weighted = Measure(
        tuple(Atom(a.log_pos, a.mass * a.log_pos.position(n)) for a in mu.atoms),
        tuple(DensityTerm(t.coeff * t.log_support.position(n), t.alpha + n, t.k, t.log_support)
              for t in mu.terms),
    )
    total = weighted.total_mass()
    if total == 0:
        raise ValueError("restricted measure has zero mass")
    return weighted.scaled(1 / total if is_exact(total) else 1 / to_mpf(total))


# --- common measures ----------------------------------------------------------

def lebesgue() -> Measure:
    return Measure(terms=(DensityTerm(1, 0),))


def monomial(coeff, alpha, k=0, log_support=0) -> Measure:
    return Measure(terms=(DensityTerm(coeff, alpha, k, LogPos.of(log_support)),))


def dirac(position=1, mass=1) -> Measure:
    position = as_scalar(position)
    if position == 0:
        return Measure(zero_mass=mass)
    return Measure(atoms=(Atom.at(position, mass),))


def agler_measure(j: int) -> Measure:
    """``(j-1)(1-t)**(j-2) dt`` expanded into monomials."""
    if j < 2:
        raise ValueError("Agler index starts at 2")
    from math import comb

    terms = [DensityTerm((j - 1) * comb(j - 2, i) * (-1) ** i, i)
             for i in range(j - 1)]
    return Measure(terms=tuple(terms))


def poly_measure(coeffs: Sequence) -> Measure:
    """Density ``sum a_i t**i`` on (0, 1)."""
    return Measure(terms=tuple(DensityTerm(a, i) for i, a in enumerate(coeffs) if as_scalar(a) != 0))
