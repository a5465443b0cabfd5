"""Adaptive Gauss-Legendre quadrature for integrands with endpoint singularities.

Integrands on ``(0, 1)`` are moved to ``(0, inf)`` by ``t = exp(-x)``.  There
the family ``t**a (-ln t)**k`` becomes ``x**k exp(-a x)``: an algebraic
singularity at ``x = 0`` and exponential decay at infinity.

Near a singular endpoint ``e`` the variable is replaced by
``x = e + w * y**P``, which turns ``(x-e)**k`` into ``y**(P(k+1)-1)``; for
``k > -1`` that is bounded or only mildly singular, and geometric panels
in ``y`` finish the job.  Every panel is accepted when the Gauss rule and
the same rule on its two halves agree.

The integrand only sees ``x``, so a singularity at an endpoint ``e != 0``
is resolved only to the relative precision of ``x - e``; callers that can
should integrate in a coordinate with the singularity at zero.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

NODES = 20
MAX_DEPTH = 50
POWER = 8
LEVELS = 90
ROUNDOFF = 64 * np.finfo(float).eps


class QuadratureError(RuntimeError):
    """Adaptive refinement exhausted its budget without converging."""


@lru_cache(maxsize=8)
def _rule(n: int):
    return np.polynomial.legendre.leggauss(n)


def _gl(f, a: float, b: float, n: int = NODES) -> float:
    x, w = _rule(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return float(half * np.dot(w, f(mid + half * x)))


@dataclass
class QuadResult:
    value: float
    error: float
    panels: int

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(self.value + other.value, self.error + other.error,
                          self.panels + other.panels)


ZERO = QuadResult(0.0, 0.0, 0)


def adaptive(f, a: float, b: float, tol: float, budget: int = 50000) -> QuadResult:
    """Integrate a vectorised ``f`` over ``[a, b]`` to absolute ``tol``."""
    stack = [(a, b, _gl(f, a, b), tol, 0)]
    total, err, panels = 0.0, 0.0, 0
    while stack:
        lo, hi, whole, local_tol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = _gl(f, lo, mid), _gl(f, mid, hi)
        diff = abs(left + right - whole)
        panels += 1
        if not np.isfinite(diff):
            raise QuadratureError(f"non-finite integrand on [{lo}, {hi}]")
        # the second test is a round-off floor: a panel agreeing to a few ulps
        # cannot be improved by further splitting
        if diff <= local_tol or diff <= ROUNDOFF * abs(left + right) or hi - lo <= ROUNDOFF * abs(lo):
            total += left + right
            err += diff
            continue
        if depth >= MAX_DEPTH or panels > budget:
            raise QuadratureError(
                f"no convergence on [{lo:.6g}, {hi:.6g}]: difference {diff:.3g} > {local_tol:.3g}")
        stack.append((lo, mid, left, local_tol / 2, depth + 1))
        stack.append((mid, hi, right, local_tol / 2, depth + 1))
    return QuadResult(total, err, panels)


def _toward(f, e: float, w: float, tol: float) -> QuadResult:
    """``int`` of ``f`` between ``e`` and ``e + w`` (``w`` may be negative),
    with the substitution ``x = e + w y**P`` clustering at ``e``."""
    sign = 1.0 if w > 0 else -1.0

    def g(y):
        x = e + w * y**POWER
        # nodes that collapse onto the endpoint in floating point carry no
        # resolvable mass (at most ulp(e)**(k+1)); drop them
        keep = x != e
        out = np.zeros_like(y)
        out[keep] = f(x[keep]) * (POWER * abs(w) * y[keep] ** (POWER - 1))
        return out

    edges = [0.0] + [0.5**j for j in range(LEVELS, 0, -1)] + [1.0]
    out = ZERO
    local = tol / len(edges)
    for lo, hi in zip(edges[:-1], edges[1:]):
        out = out + adaptive(g, lo, hi, local)
    return QuadResult(sign * out.value, out.error, out.panels)


def integrate_interval(f, a: float, b: float, tol: float) -> QuadResult:
    """``int_a^b f`` allowing integrable singularities at both ends."""
    if b <= a:
        return ZERO
    mid = 0.5 * (a + b)
    left = _toward(f, a, mid - a, tol / 2)
    right = _toward(f, b, mid - b, tol / 2)
    return QuadResult(left.value - right.value, left.error + right.error,
                      left.panels + right.panels)


def integrate_halfline(f, tol: float, breakpoints=(), start: float = 1.0) -> QuadResult:
    """``int_0^inf f`` with singularities allowed at 0 and at ``breakpoints``.

    Beyond the last breakpoint panels double in width until three in a row
    contribute less than ``tol / 100`` each.
    """
    marks = sorted({0.0, *[float(b) for b in breakpoints if b > 0]})
    pieces = len(marks) + 1
    out = ZERO
    for lo, hi in zip(marks[:-1], marks[1:]):
        out = out + integrate_interval(f, lo, hi, tol / pieces)
    last = marks[-1]
    out = out + _toward(f, last, start, tol / pieces)
    a, width, quiet = last + start, start, 0
    while quiet < 3:
        r = adaptive(f, a, a + width, tol / 200)
        out = out + r
        quiet = quiet + 1 if abs(r.value) < tol / 100 else 0
        a, width = a + width, width * 2
        if a > 1e7:
            raise QuadratureError("integrand does not decay")
    return out
