"""Squares and square roots of measures under ``mu = nu**2``.

``nu**2`` is the image of ``nu x nu`` under ``(s, t) -> s*t``; equivalently
its moments are the squares of the moments of ``nu``.  Densities combine
by multiplicative convolution on ``(0, 1)``.  Under ``t = exp(-x)`` a
family term ``t**alpha (-ln t)**k`` becomes ``x**k exp(-alpha x)``, whose
Laplace transform is ``k! / (s+alpha)**(k+1)``; convolving two terms is
multiplying these, and a partial-fraction split brings the product back
into the family.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Optional, Sequence

import mpmath
import numpy as np

from .measure import (
    Atom,
    DensityTerm,
    Measure,
    agler_measure,
    lebesgue,
    measure_moment,
    poly_measure,
    support_square_check,
)
from .scalar import (
    LogPos,
    mixed,
    Scalar,
    as_scalar,
    gamma,
    is_exact,
    sqrt,
    to_mpf,
)

__all__ = [
    "OutsideSymbolicFamily",
    "PartialFractionExpansion",
    "partial_fractions",
    "convolve_terms",
    "square_atomic",
    "square_measure",
    "polynomial_square_direct",
    "SqrtCandidate",
    "SqrtFailure",
    "sqrt_atomic",
    "sqrt_geometric",
    "square_series",
    "pth_power_lebesgue",
    "catalog_sqrt",
    "catalog_measure",
    "HalfLineDensity",
    "LevyDensity",
    "transport_from_halfline",
    "transport_to_halfline",
]


class OutsideSymbolicFamily(ValueError):
    """A term has non-integer ``k``; only the numeric oracle can square it."""


# --- partial fractions -----------------------------------------------------------

@dataclass(frozen=True)
class PartialFractionExpansion:
    """``1/((s+a)^J (s+b)^K) = sum coeff / (s+pole)^m`` over the listed parts."""

    a: Scalar
    J: int
    b: Scalar
    K: int
    parts: tuple  # (pole, m, coeff)

    def evaluate(self, s) -> Scalar:
        return sum((c / (s + p) ** m for p, m, c in self.parts), Fraction(0))

    def target(self, s) -> Scalar:
        return 1 / ((s + self.a) ** self.J * (s + self.b) ** self.K)


def partial_fractions(a, J: int, b, K: int) -> PartialFractionExpansion:
    """Split ``1/((s+a)^J (s+b)^K)`` for ``a != b``.

    With ``d = b - a`` the coefficient of ``1/(s+a)^r`` is
    ``(-1)^(J-r) C(K+J-r-1, J-r) d^-(K+J-r)`` and symmetrically for ``b``.
    Exact whenever ``a`` and ``b`` are rational.
    """
    a, b = as_scalar(a), as_scalar(b)
    if a == b:
        raise ValueError("poles must be distinct")
    parts = []
    for pole, own, other_pole, other in ((a, J, b, K), (b, K, a, J)):
        d = other_pole - pole
        for r in range(1, own + 1):
            i = own - r
            c = (-1) ** i * math.comb(other + i - 1, i) / d ** (other + i)
            parts.append((pole, r, c))
    return PartialFractionExpansion(a, J, b, K, tuple(parts))


def _require_symbolic(t: DensityTerm) -> int:
    if not t.symbolic:
        raise OutsideSymbolicFamily(
            f"term with k={t.k} is outside the symbolic family; use the numeric oracle")
    return int(t.k)


def convolve_terms(t1: DensityTerm, t2: DensityTerm) -> list[DensityTerm]:
    """Multiplicative convolution of two family terms, exactly.

    Laplace images are ``j!/(s+a)^(j+1)`` and ``k!/(s+b)^(k+1)``.  Equal
    ``a`` gives one term of order ``j+k+1`` scaled by ``j!k!/(j+k+1)!``;
    distinct ``a, b`` go through :func:`partial_fractions`.  Support
    endpoints multiply, i.e. log supports add.
    """
    j, k = _require_symbolic(t1), _require_symbolic(t2)
    coeff = t1.coeff * t2.coeff
    support = t1.log_support + t2.log_support
    if t1.alpha == t2.alpha:
        scale = Fraction(math.factorial(j) * math.factorial(k), math.factorial(j + k + 1))
        return [DensityTerm(coeff * scale, t1.alpha, j + k + 1, support)]
    pf = partial_fractions(t1.alpha, j + 1, t2.alpha, k + 1)
    lead = coeff * math.factorial(j) * math.factorial(k)
    out = []
    for pole, m, c in pf.parts:
        # 1/(s+p)^m  <->  x^(m-1) e^(-p x) / (m-1)!
        value = lead * c / math.factorial(m - 1)
        if value != 0:
            out.append(DensityTerm(value, pole, m - 1, support))
    return out


def square_atomic(nu: Measure) -> Measure:
    """``sum_z (sum_{x_i x_j = z} phi_i phi_j) delta_z`` (log positions add)."""
    if nu.terms:
        raise ValueError("square_atomic expects a purely atomic measure")
    atoms = []
    for a, b in combinations_with_replacement(nu.atoms, 2):
        mass = a.mass * b.mass * (1 if a is b else 2)
        atoms.append(Atom(a.log_pos + b.log_pos, mass))
    rest = sum((a.mass for a in nu.atoms), Fraction(0))
    z = nu.zero_mass
    return Measure(tuple(atoms), (), z * z + 2 * z * rest)


def square_measure(nu: Measure, self_check: int = 0) -> Measure:
    """Exact square of a measure in the symbolic family.

    Atom x atom products add log positions, atom x term pushes the term
    forward (log support grows by the atom's log position), term x term
    goes through :func:`convolve_terms`.  Mass at zero collects
    ``z**2 + 2 z (mass elsewhere)``.  With ``self_check > 0`` the first
    ``self_check`` moments are compared with the squared input moments.
    """
    for t in nu.terms:
        _require_symbolic(t)
    out = square_atomic(Measure(nu.atoms, (), nu.zero_mass))
    atoms, terms = list(out.atoms), []
    term_mass = sum((measure_moment(Measure(terms=(t,)), 0) for t in nu.terms), Fraction(0))
    zero = out.zero_mass + 2 * nu.zero_mass * term_mass
    for a in nu.atoms:
        for t in nu.terms:
            terms.append(DensityTerm(2 * a.mass * t.coeff, t.alpha, t.k,
                                     t.log_support + a.log_pos))
    for i, t1 in enumerate(nu.terms):
        for t2 in nu.terms[i:]:
            factor = 1 if t1 is t2 else 2
            terms.extend(t.scaled(factor) for t in convolve_terms(t1, t2))
    result = Measure(tuple(atoms), tuple(terms), zero)
    if self_check:
        for n in range(self_check):
            lhs, rhs = measure_moment(result, n), measure_moment(nu, n) ** 2
            if is_exact(lhs) and is_exact(rhs):
                ok = lhs == rhs
            else:
                ok = abs(to_mpf(lhs) - to_mpf(rhs)) <= mpmath.mpf(10) ** (12 - mpmath.mp.dps)
            if not ok:
                raise AssertionError(f"square self-check failed at moment {n}")
    return result


def polynomial_square_direct(coeffs: Sequence, check: bool = True) -> Measure:
    """Square of ``g(t) = sum a_i t^i`` on (0, 1) from the direct formula

        f(x) = sum_{d>=1} (1-x^d)/d   sum_j a_j a_{j+d} x^j
             - ln x * sum_i a_i^2 x^i
             + sum_{d<=-1} (1-x^d)/d  sum_j a_j a_{j+d} x^j

    evaluated coefficient by coefficient, with no convolution engine.
    """
    a = [as_scalar(c) for c in coeffs]
    n = len(a) - 1
    if check:
        total = sum((c / (i + 1) for i, c in enumerate(a)), Fraction(0))
        if total != 1 and not (not is_exact(total) and abs(to_mpf(total) - 1) < 1e-12):
            raise ValueError("polynomial does not define a probability measure")
        grid = [mpmath.mpf(i) / 200 for i in range(201)]
        if min(sum(to_mpf(c) * x**i for i, c in enumerate(a)) for x in grid) < -1e-12:
            raise ValueError("polynomial is negative somewhere on [0, 1]")
    poly: dict[int, Scalar] = {}
    logs: dict[int, Scalar] = {}

    def add(table, p, v):
        table[p] = table.get(p, Fraction(0)) + v

    for d in range(1, n + 1):
        for j in range(0, n - d + 1):
            v = a[j] * a[j + d] / d
            add(poly, j, v)            # x^j
            add(poly, j + d, -v)       # -x^(j+d)
    for i in range(n + 1):
        add(logs, i, a[i] * a[i])
    for d in range(-n, 0):
        for j in range(-d, n + 1):
            v = a[j] * a[j + d] / d
            add(poly, j, v)
            add(poly, j + d, -v)
    terms = [DensityTerm(v, p, 0) for p, v in poly.items() if v != 0]
    terms += [DensityTerm(v, p, 1) for p, v in logs.items() if v != 0]
    return Measure(terms=tuple(terms))


# --- square roots of atomic measures ---------------------------------------------------

@dataclass
class SqrtFailure:
    reason: str
    detail: str = ""
    candidate: Optional[Measure] = None
    residual: Optional[Scalar] = None

    ok = False


@dataclass
class SqrtCandidate:
    measure: Measure
    method: str
    verified: bool
    max_residual: Scalar
    n_checked: int
    residuals: list = field(default_factory=list)
    alternate: Optional[Measure] = None
    paths_agree: Optional[bool] = None
    coefficients: Optional[list] = None

    ok = True


def _is_zero(x) -> bool:
    return x == 0 if is_exact(x) else abs(x) <= mpmath.mpf(10) ** (10 - mpmath.mp.dps)


def _forced_root(mu: Measure):
    """Root atoms forced by ``mu`` (largest atom at 1), largest first.

    Candidates are the atoms of ``mu`` in ``[sqrt(x0), 1]``.  Walking them
    downward, the mass at ``p`` not explained by products of root atoms
    already found must come from the pair ``(p, 1)``, which fixes the root
    mass at ``p`` as that residual over ``2 phi_1``.  Candidates whose
    forced mass is zero are dropped.  Returns ``(support, masses, failure)``.
    """
    lim = mu.atoms[-1].log_pos.half()
    support = [mu.atoms[0].log_pos]
    phi = [sqrt(mu.atoms[0].mass)]
    for a in mu.atoms[1:]:
        if a.log_pos > lim:
            break
        inner = Fraction(0)
        for i in range(1, len(support)):
            for j in range(i, len(support)):
                if support[i] + support[j] == a.log_pos:
                    inner = inner + phi[i] * phi[j] * (1 if i == j else 2)
        num, inner_ = mixed(a.mass, inner)
        residual = num - inner_
        if _is_zero(residual):
            continue
        if residual < 0:
            at = mpmath.nstr(mpmath.exp(-a.log_pos.value()), 12)
            return support, phi, SqrtFailure(
                "negative mass", f"forced root mass at {at} is negative: "
                f"{mpmath.nstr(to_mpf(residual), 12)} left to explain")
        num, den = mixed(residual, 2 * phi[0])
        support.append(a.log_pos)
        phi.append(num / den)
    return support, phi, None


def _lookup(rho: dict, key: LogPos):
    for k, v in rho.items():
        if k == key:
            return v
    return Fraction(0)


def _vandermonde_masses(mu: Measure, support: list[LogPos], zero: bool) -> list:
    nodes = ([mpmath.mpf(0)] if zero else []) + [mpmath.exp(-p.value()) for p in support]
    size = len(nodes)
    rhs = mpmath.matrix([mpmath.sqrt(to_mpf(measure_moment(mu, n))) for n in range(size)])
    mat = mpmath.matrix(size, size)
    for r in range(size):
        for c, s in enumerate(nodes):
            mat[r, c] = mpmath.mpf(1) if r == 0 else s**r
    sol = mpmath.lu_solve(mat, rhs)
    return [sol[i] for i in range(size)]


def sqrt_atomic(mu: Measure, tol=Fraction(1, 10**10), n_check: Optional[int] = None):
    """Square root of a finitely atomic probability measure.

    Returns a :class:`SqrtCandidate` (verified or not, with residuals) or a
    :class:`SqrtFailure` carrying a reason: ``"support mismatch"``,
    ``"negative mass"`` or ``"not a probability measure"``.
    """
    if mu.terms:
        raise ValueError("sqrt_atomic expects a purely atomic measure")
    tol = as_scalar(tol)
    if not mu.is_probability(tol=tol):
        return SqrtFailure("not a probability measure", f"total mass {mu.total_mass()}")
    if not mu.atoms:
        if mu.zero_mass == 1:
            return SqrtCandidate(Measure(zero_mass=1), "algorithmic", True, Fraction(0), 1)
        return SqrtFailure("not a probability measure", "no atoms")
    top = mu.atoms[0].log_pos
    if not top.is_zero:
        # rescale so the largest atom sits at 1; the root scales by its square root
        shifted = Measure(tuple(Atom(a.log_pos - top, a.mass) for a in mu.atoms), (), mu.zero_mass)
        res = sqrt_atomic(shifted, tol, n_check)
        if res.ok:
            res.measure = _shift_atoms(res.measure, top.half())
            if res.alternate is not None:
                res.alternate = _shift_atoms(res.alternate, top.half())
        return res

    count = len(mu.atoms)
    if not any(2 * k - 1 <= count <= k * (k + 1) // 2 for k in range(1, count + 1)):
        # in log coordinates k root points have a sumset of 2k-1 .. k(k+1)/2 points
        return SqrtFailure(
            "support mismatch",
            f"k root atoms square to between 2k-1 and k(k+1)/2 points; no k gives {count} "
            f"(a root needs atoms at 1 and sqrt(x0), whose support squares to 3 points)")
    support, phi, failure = _forced_root(mu)
    if failure is not None:
        return failure
    zero = mu.zero_mass > 0
    # the smallest root atom is always sqrt(x0)
    forced = sorted(set(support) | {mu.atoms[-1].log_pos.half()})
    shape = Measure(tuple(Atom(p, 1) for p in forced), (), 1 if zero else 0)
    if not support_square_check(mu, shape):
        pts = ", ".join(mpmath.nstr(mpmath.exp(-p.value()), 8) for p in forced)
        squared = square_atomic(Measure(tuple(Atom(p, 1) for p in forced)))
        return SqrtFailure(
            "support mismatch",
            f"root support must contain {{{pts}}}; its support squares to "
            f"{len(squared.atoms)} points but the measure has {len(mu.atoms)}")

    atoms = tuple(Atom(p, m) for p, m in zip(support, phi))
    z = Fraction(0)
    if zero:
        # phi_0 (2 - phi_0) = mu({0}), root in [0, 1]
        z = 1 - sqrt(1 - mu.zero_mass)
    candidate = Measure(atoms, (), z)

    vander = _vandermonde_masses(mu, support, zero)
    vz, vmasses = (vander[0], vander[1:]) if zero else (Fraction(0), vander)
    agree = all(abs(to_mpf(m) - v) <= to_mpf(tol) for m, v in zip(phi, vmasses)) and \
        abs(to_mpf(z) - to_mpf(vz)) <= to_mpf(tol)
    alternate = None
    if all(v > 0 for v in vmasses):
        alternate = Measure(tuple(Atom(p, v) for p, v in zip(support, vmasses)), (),
                            max(to_mpf(vz), 0))

    n_check = n_check if n_check is not None else len(mu.atoms) + (1 if zero else 0)
    residuals = _mass_residuals(mu, square_atomic(candidate))
    residuals += [abs(to_mpf(measure_moment(candidate, n)) ** 2 - to_mpf(measure_moment(mu, n)))
                  for n in range(n_check)]
    worst = max(residuals) if residuals else mpmath.mpf(0)
    verified = worst <= to_mpf(tol)
    return SqrtCandidate(candidate, "algorithmic", verified, worst, n_check,
                         residuals, alternate, agree)


def _shift_atoms(nu: Measure, by: LogPos) -> Measure:
    return Measure(tuple(Atom(a.log_pos + by, a.mass) for a in nu.atoms), (), nu.zero_mass)


def _mass_residuals(mu: Measure, sq: Measure) -> list:
    out = [abs(to_mpf(mu.zero_mass) - to_mpf(sq.zero_mass))]
    want = {a.log_pos: a.mass for a in mu.atoms}
    seen = set()
    for a in sq.atoms:
        m = _lookup(want, a.log_pos)
        out.append(abs(to_mpf(a.mass) - to_mpf(m)))
        seen.add(a.log_pos)
    for a in mu.atoms:
        if not any(a.log_pos == s for s in seen):
            out.append(abs(to_mpf(a.mass)))
    return out


# --- geometric supports -------------------------------------------------------------

def square_series(phi: Sequence) -> list:
    phi = [as_scalar(p) for p in phi]
    n = len(phi)
    return [sum((phi[i] * phi[m - i] for i in range(m + 1)), Fraction(0)) for m in range(n)]


def sqrt_geometric(rho: Sequence, tol=Fraction(1, 10**12), r=None):
    """Power-series square root of ``sum rho_n z^n``.

    Masses ``rho_n`` sit at ``r**n``; the value of ``r`` plays no role.
    Returns a :class:`SqrtCandidate` whose measure has atoms at ``r**n``
    (``r`` defaults to 1/2) or a :class:`SqrtFailure` on a negative
    coefficient.
    """
    rho = [as_scalar(v) for v in rho]
    if not rho or rho[0] <= 0:
        raise ValueError("leading mass must be positive")
    phi = [sqrt(rho[0])]
    for n in range(1, len(rho)):
        inner = sum((phi[i] * phi[n - i] for i in range(1, n)), Fraction(0))
        num, inner_, den = mixed(rho[n], inner, 2 * phi[0])
        value = (num - inner_) / den
        if value < 0 and (is_exact(value) or value < -mpmath.mpf(10) ** (10 - mpmath.mp.dps)):
            return SqrtFailure("negative mass", f"coefficient {n} is {mpmath.nstr(to_mpf(value), 12)}")
        phi.append(value)
    back = square_series(phi)
    residuals = [abs(to_mpf(a) - to_mpf(b)) for a, b in zip(back, rho)]
    worst = max(residuals)
    base = LogPos.from_position(as_scalar(r) if r is not None else Fraction(1, 2))
    atoms = tuple(Atom(base * n, p) for n, p in enumerate(phi) if p != 0)
    return SqrtCandidate(Measure(atoms), "generating", worst <= to_mpf(tol), worst,
                         len(rho), residuals, coefficients=phi)


# --- catalog -------------------------------------------------------------------------

def pth_power_lebesgue(q) -> Measure:
    """q-th power of Lebesgue measure: ``(1/Gamma(q)) (-ln u)^(q-1) du``."""
    q = as_scalar(q)
    if q <= 0:
        raise ValueError("q must be positive")
    g = gamma(q)
    return Measure(terms=(DensityTerm(1 / g, 0, q - 1),))


def _bessel_tail_bound(M: int, n: int = 0) -> mpmath.mpf:
    s = mpmath.mpf(n) + mpmath.mpf(3) / 2
    ratio = 1 / (4 * s * s)
    a_M = mpmath.sqrt(2) * mpmath.binomial(2 * M, M) / (16 * s * s) ** M / s
    return a_M / (1 - ratio)


def catalog_sqrt(name: str, M: Optional[int] = None, tol=mpmath.mpf("1e-12"), **params):
    """Known square roots.  Returns ``(measure, moment_error_bound)``.

    * ``"sqrtA3"``: root of ``2(1-t) dt``, a series in ``u^(1/2)(-ln u)^(2m)``
      truncated at ``M`` terms (chosen from the tail bound when omitted).
    * ``"lebesgue"`` / ``"pth-lebesgue"`` with ``q``: delegates to
      :func:`pth_power_lebesgue` (``q=1/2`` by default), exact, bound 0.
    """
    if name == "sqrtA3":
        if M is None:
            M = 1
            while _bessel_tail_bound(M) >= to_mpf(tol):
                M += 1
        root2 = mpmath.sqrt(2)
        terms = tuple(
            DensityTerm(root2 / (mpmath.mpf(16) ** m * math.factorial(m) ** 2), Fraction(1, 2), 2 * m)
            for m in range(M))
        return Measure(terms=terms), _bessel_tail_bound(M)
    if name in ("lebesgue", "pth-lebesgue", "lebesgue_pth"):
        return pth_power_lebesgue(params.get("q", Fraction(1, 2))), Fraction(0)
    raise KeyError(f"unknown catalog entry {name!r}")


def catalog_measure(name: str, **params) -> Measure:
    """Named measures: ``lebesgue``, ``agler`` (``j``), ``pth-lebesgue`` (``q``), ``sqrtA3``."""
    if name == "lebesgue":
        return lebesgue()
    if name == "agler":
        return agler_measure(int(params.get("j", 2)))
    if name in ("pth-lebesgue", "lebesgue_pth"):
        return pth_power_lebesgue(params.get("q", 1))
    if name == "sqrtA3":
        return catalog_sqrt("sqrtA3", params.get("M"))[0]
    if name == "poly":
        return poly_measure(params["coeffs"])
    raise KeyError(f"unknown catalog entry {name!r}")


# --- half-line transport ----------------------------------------------------------------

@dataclass(frozen=True)
class HalfLineDensity:
    """``coeff * (x-shift)^k * exp(-alpha (x-shift)) * H(x-shift)`` on (0, inf)."""

    coeff: Scalar
    k: Scalar = Fraction(0)
    alpha: Scalar = Fraction(0)
    shift: LogPos = field(default_factory=LogPos)

    def __call__(self, x):
        x = to_mpf(x) - self.shift.value()
        if x < 0:
            return mpmath.mpf(0)
        return to_mpf(self.coeff) * x ** to_mpf(self.k) * mpmath.exp(-to_mpf(self.alpha) * x)


@dataclass(frozen=True)
class LevyDensity:
    """``c / (2 sqrt(pi x^3)) exp(-c^2 / (4x))``; Laplace transform ``exp(-c sqrt(s))``."""

    c: Scalar

    def __call__(self, x):
        x = to_mpf(x)
        if x <= 0:
            return mpmath.mpf(0)
        c = to_mpf(self.c)
        return c / (2 * mpmath.sqrt(mpmath.pi * x**3)) * mpmath.exp(-c * c / (4 * x))


def transport_from_halfline(g):
    """Move a density on (0, inf) to (0, 1) by ``f(t) = g(-ln t)``.

    Family densities map exactly to :class:`DensityTerm`; a
    :class:`LevyDensity` maps to a quadrature-backed measure whose moment
    rule is the shifted Laplace transform ``exp(-c sqrt(n+1))``.
    """
    if isinstance(g, (list, tuple)):
        terms = []
        for part in g:
            terms.extend(transport_from_halfline(part).terms)
        return Measure(terms=tuple(terms))
    if isinstance(g, HalfLineDensity):
        c = g.shift.position(1)
        return Measure(terms=(DensityTerm(g.coeff * c, g.alpha, g.k, g.shift),))
    if isinstance(g, LevyDensity):
        from .oracle import QuadratureMeasure

        c = to_mpf(g.c)
        cf = float(c)

        def density(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            pos = x > 0
            xp = x[pos]
            # log form: x**-1.5 overflows long before the exponential underflows
            out[pos] = np.exp(np.log(cf / (2 * np.sqrt(np.pi))) - 1.5 * np.log(xp) - cf * cf / (4 * xp))
            return out

        return QuadratureMeasure(density, moment_rule=lambda n: mpmath.exp(-c * mpmath.sqrt(n + 1)),
                                 name=f"levy(c={mpmath.nstr(c, 10)})", log_domain=True)
    raise ValueError(f"unsupported half-line density {g!r}")


def transport_to_halfline(mu: Measure) -> list[HalfLineDensity]:
    """Inverse of :func:`transport_from_halfline` for the density family."""
    if mu.atoms or mu.zero_mass:
        raise ValueError("atoms have no half-line density counterpart")
    out = []
    for t in mu.terms:
        c = t.log_support.position(-1)   # 1/c
        out.append(HalfLineDensity(t.coeff * c, t.k, t.alpha, t.log_support))
    return out
