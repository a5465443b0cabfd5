"""Independent numeric checks: quadrature moments and moment matching.

Nothing here uses the closed-form moment formulas of the density family;
densities are integrated numerically in the coordinate ``x = -ln t`` so
that singular behaviour at ``t -> 1`` is resolved without cancellation.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import mpmath
import numpy as np

from .measure import Measure, measure_moment
from .quadrature import integrate_halfline, integrate_interval
from .scalar import LogPos, is_exact, to_float, to_mpf
from .shift import MomentSequence

DEFAULT_TOL = 1e-10


def halfline_density(mu: Measure) -> tuple[Callable, list]:
    """``h(x) = f(exp(-x))`` for the density part of ``mu`` and the
    breakpoints ``x = log_support`` of its terms."""
    params = []
    marks = set()
    for t in mu.terms:
        L = float(t.log_support.value())
        params.append((to_float(t.coeff) * np.exp(L), to_float(t.alpha), to_float(t.k), L))
        if L > 0:
            marks.add(L)

    def h(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for coeff, alpha, k, L in params:
            inside = x > L
            u = x[inside] - L
            val = coeff * np.exp(-alpha * u)
            if k != 0:
                val = val * u**k
            out[inside] += val
        return out

    return h, sorted(marks)


def _from_t(density: Callable) -> Callable:
    def h(x):
        return np.asarray(density(np.exp(-np.asarray(x, dtype=float))), dtype=float)
    return h


@dataclass
class QuadratureMeasure:
    """A measure known through a density (and possibly a moment rule).

    ``density`` is a vectorised function of ``t`` on (0, 1) unless
    ``log_domain`` is true, in which case it is a function of ``x = -ln t``.
    """

    density: Callable
    moment_rule: Optional[Callable[[int], object]] = None
    name: str = "quadrature measure"
    log_domain: bool = False
    breakpoints: tuple = ()

    def halfline(self) -> Callable:
        return self.density if self.log_domain else _from_t(self.density)


def quad_moment(density, n: int, tol: float = DEFAULT_TOL, log_domain: bool = False,
                breakpoints=()) -> float:
    """``int_0^1 t**n f(t) dt`` by adaptive Gauss-Legendre after ``t = exp(-x)``.

    ``density`` may be a :class:`Measure` (density part only), a
    :class:`QuadratureMeasure`, or a vectorised callable.
    """
    if n < 0:
        raise ValueError("moment index must be nonnegative")
    if isinstance(density, Measure):
        return sum((_term_quad(t, n, tol / max(len(density.terms), 1)) for t in density.terms), 0.0)
    if isinstance(density, QuadratureMeasure):
        h = density.halfline()
        breakpoints = tuple(breakpoints) + tuple(density.breakpoints)
    else:
        h = density if log_domain else _from_t(density)

    def integrand(x):
        return np.exp(-(n + 1) * x) * h(x)

    return integrate_halfline(integrand, tol, breakpoints).value


def _term_quad(term, n: int, tol: float) -> float:
    """One family term in its local coordinate ``u = x - L``, so the
    singularity sits exactly at ``u = 0`` with no cancellation."""
    L = float(term.log_support.value())
    coeff, alpha, k = to_float(term.coeff), to_float(term.alpha), to_float(term.k)
    scale = coeff * np.exp(L) * np.exp(-(n + 1) * L)

    def integrand(u):
        u = np.asarray(u, dtype=float)
        val = np.exp(-(n + 1 + alpha) * u)
        return val * u**k if k != 0 else val

    return scale * integrate_halfline(integrand, tol / max(abs(scale), 1e-300)).value


def quad_measure_moment(mu, n: int, tol: float = DEFAULT_TOL) -> float:
    """Moment of a whole measure: atoms summed directly, densities by quadrature."""
    if isinstance(mu, QuadratureMeasure):
        return quad_moment(mu, n, tol)
    atoms = sum(to_float(a.mass) * float(mpmath.exp(-n * a.log_pos.value())) for a in mu.atoms)
    zero = to_float(mu.zero_mass) if n == 0 else 0.0
    dens = quad_moment(mu, n, tol) if mu.terms else 0.0
    return atoms + zero + dens


@dataclass
class VerificationReport:
    n_checked: int
    residuals: list
    tol: float
    notes: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residuals, key=to_mpf) if self.residuals else 0.0

    @property
    def passed(self) -> bool:
        return to_mpf(self.max_residual) <= to_mpf(self.tol)

    @property
    def first_failure(self) -> Optional[int]:
        return next((n for n, r in enumerate(self.residuals) if to_mpf(r) > to_mpf(self.tol)), None)

    def to_dict(self) -> dict:
        return {
            "N_checked": self.n_checked,
            "residuals": [float(r) for r in self.residuals],
            "max_residual": float(self.max_residual),
            "tol": float(self.tol),
            "pass": self.passed,
            "notes": self.notes,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def table(self) -> str:
        lines = [f"{'n':>4}  {'residual':>12}"]
        lines += [f"{n:>4}  {float(r):12.3e}" + ("  FAIL" if to_mpf(r) > to_mpf(self.tol) else "")
                  for n, r in enumerate(self.residuals)]
        lines.append(f"max residual {float(self.max_residual):.3e} "
                     f"(tol {float(self.tol):.1e}): {'pass' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _moment(mu, n: int, method: str, tol: float):
    if method == "quad" or isinstance(mu, QuadratureMeasure):
        if method != "quad" and isinstance(mu, QuadratureMeasure) and mu.moment_rule is not None:
            return mu.moment_rule(n)
        return quad_measure_moment(mu, n, tol / 10)
    return measure_moment(mu, n)


def _residual(a, b):
    if is_exact(a) and is_exact(b):
        return abs(a - b)
    return abs(to_mpf(a) - to_mpf(b))


def verify_square(mu, nu, N: int, tol: float = DEFAULT_TOL, method: str = "auto") -> VerificationReport:
    """Residuals ``|gamma_n(mu) - gamma_n(nu)**2|`` for ``n = 0..N``.

    ``method="auto"`` uses closed-form moments for family measures and
    quadrature otherwise; ``"quad"`` forces quadrature for both sides.
    """
    res = [_residual(_moment(mu, n, method, tol), _square(_moment(nu, n, method, tol)))
           for n in range(N + 1)]
    return VerificationReport(N + 1, res, tol, {"method": method, "check": "square"})


def _square(x):
    return x * x


def verify_moments(mu, target, N: int, tol: float = DEFAULT_TOL, method: str = "auto") -> VerificationReport:
    """Compare moments ``0..N`` of ``mu`` with a sequence or rule ``n -> gamma_n``."""
    if isinstance(target, MomentSequence):
        rule = target.__getitem__
    elif callable(target):
        rule = target
    else:
        seq = list(target)
        rule = seq.__getitem__
    res = [_residual(_moment(mu, n, method, tol), rule(n)) for n in range(N + 1)]
    return VerificationReport(N + 1, res, tol, {"method": method, "check": "moments"})


def numeric_convolution(g, a: float, tol: float = 1e-12, log_domain: bool = False) -> float:
    """``f(a) = int_a^1 g(a/x) g(x) dx / x`` by direct quadrature.

    With ``x = exp(-u)`` and ``A = -ln a`` this is
    ``int_0^A h(A-u) h(u) du`` where ``h(u) = g(exp(-u))``.
    """
    if not 0 < a < 1:
        raise ValueError("convolution point must lie in (0, 1)")
    if isinstance(g, Measure):
        h, marks = halfline_density(g)
    else:
        h, marks = (g if log_domain else _from_t(g)), []
    A = -float(np.log(a))

    def integrand(u):
        u = np.asarray(u, dtype=float)
        return h(A - u) * h(u)

    cuts = sorted({0.0, A, *[m for m in marks if 0 < m < A], *[A - m for m in marks if 0 < m < A]})
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        total += integrate_interval(integrand, lo, hi, tol / len(cuts)).value
    return total
