"""Finite-order subnormality evidence for weighted shifts.

Two families of necessary conditions are checked on a window of indices:
positivity of the Hankel moment matrices (k-hyponormality) and
nonnegativity of alternating binomial sums (n-contractivity).  Passing
finitely many of these never proves subnormality; failing one disproves it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Optional, Sequence, Union

import mpmath
import numpy as np

from .scalar import Scalar, is_exact, to_mpf
from .shift import MomentSequence, WeightSequence, moments_from_weights

DEFAULT_TOL = 1e-12
DEFAULT_M_MAX = 50


@dataclass(frozen=True)
class HankelWindow:
    base: int
    order: int
    entries: tuple  # rows of gamma_{m+i+j}

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for row in self.entries for v in row)

    def as_array(self) -> np.ndarray:
        return np.array([[float(to_mpf(v)) for v in row] for row in self.entries])

    def as_mp(self) -> mpmath.matrix:
        return mpmath.matrix([[to_mpf(v) for v in row] for row in self.entries])


def _moments(source, count: int) -> list:
    if isinstance(source, WeightSequence):
        return moments_from_weights(source, count).take(count)
    if isinstance(source, MomentSequence):
        if not source.available(count):
            raise ValueError(f"insufficient moments: need {count}, have {len(source)}")
        return source.take(count)
    vals = list(source)
    if len(vals) < count:
        raise ValueError(f"insufficient moments: need {count}, have {len(vals)}")
    return vals[:count]


def hankel_matrix(gamma, m: int, k: int) -> HankelWindow:
    """``(k+1) x (k+1)`` matrix with entries ``gamma_{m+i+j}``."""
    if m < 0 or k < 0:
        raise ValueError("base index and order must be nonnegative")
    vals = _moments(gamma, m + 2 * k + 1)
    rows = tuple(tuple(vals[m + i + j] for j in range(k + 1)) for i in range(k + 1))
    return HankelWindow(m, k, rows)


# --- PSD tests ---------------------------------------------------------------------

@dataclass
class PSDResult:
    psd: bool
    min_eig: Optional[float] = None
    witness: Optional[list] = None   # v with v^T H v < 0
    quadratic_form: Optional[Scalar] = None


def _solve_exact(a: list, b: list) -> list:
    """Solve a nonsingular square rational system by Gaussian elimination."""
    n = len(a)
    m = [list(row) + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


def _quad(h, v):
    n = len(v)
    return sum(v[i] * h[i][j] * v[j] for i in range(n) for j in range(n))


def psd_exact(h: Sequence[Sequence[Fraction]]) -> PSDResult:
    """Exact PSD test by symmetric elimination with diagonal pivots.

    A negative pivot, or a zero pivot whose row is not zero, certifies
    indefiniteness; a witness vector is reconstructed in original
    coordinates and checked exactly.
    """
    n = len(h)
    s = [list(map(Fraction, row)) for row in h]
    remaining = list(range(n))
    pivots: list[int] = []
    while remaining:
        i = remaining[0]
        d = s[i][i]
        if d < 0:
            return _exact_witness(h, pivots, {i: Fraction(1)})
        if d == 0:
            bad = next((j for j in remaining if s[i][j] != 0), None)
            if bad is not None:
                a = -(s[bad][bad] + 1) / (2 * s[i][bad])
                return _exact_witness(h, pivots, {i: a, bad: Fraction(1)})
            remaining.pop(0)
            continue
        remaining.pop(0)
        pivots.append(i)
        for r in remaining:
            f = s[r][i] / d
            if f:
                for c in remaining:
                    s[r][c] -= f * s[i][c]
    return PSDResult(True)


def _exact_witness(h, pivots, tail: dict) -> PSDResult:
    n = len(h)
    v = [Fraction(0)] * n
    for idx, val in tail.items():
        v[idx] = val
    if pivots:
        # choose the pivot coordinates to minimise the form: H_PP x = -H_PT u
        rhs = [-sum(h[p][j] * v[j] for j in tail) for p in pivots]
        sol = _solve_exact([[h[p][q] for q in pivots] for p in pivots], rhs)
        for p, x in zip(pivots, sol):
            v[p] = x
    form = _quad(h, v)
    assert form < 0, "witness construction failed"
    return PSDResult(False, witness=v, quadratic_form=form)


def psd_numeric(h: np.ndarray, tol: float = DEFAULT_TOL) -> PSDResult:
    """Eigenvalue test with tolerance relative to the trace."""
    w, vecs = np.linalg.eigh(h)
    scale = max(float(np.trace(h)), 0.0)
    ok = w[0] >= -tol * scale
    return PSDResult(bool(ok), float(w[0]), None if ok else vecs[:, 0].tolist(),
                     None if ok else float(w[0]))


def psd_mp(h: mpmath.matrix, tol) -> PSDResult:
    w, q = mpmath.eigsy(h)
    order = sorted(range(len(w)), key=lambda i: w[i])
    lo = w[order[0]]
    scale = sum(h[i, i] for i in range(h.rows))
    ok = lo >= -to_mpf(tol) * scale
    vec = None if ok else [q[i, order[0]] for i in range(h.rows)]
    return PSDResult(bool(ok), float(lo), vec, None if ok else lo)


def window_is_psd(window: HankelWindow, tol=DEFAULT_TOL, method: str = "auto") -> PSDResult:
    """PSD verdict for one window.

    ``method``: ``"exact"`` (rational elimination), ``"float"`` (float64
    eigenvalues), ``"mp"`` (working-precision eigenvalues) or ``"auto"``
    (exact for rational windows, else mp).
    """
    if method == "auto":
        method = "exact" if window.exact else "mp"
    if method == "exact":
        if not window.exact:
            raise ValueError("exact PSD test requires rational entries")
        return psd_exact(window.entries)
    if method == "float":
        return psd_numeric(window.as_array(), tol)
    if method == "mp":
        return psd_mp(window.as_mp(), tol)
    raise ValueError(f"unknown PSD method {method!r}")


@dataclass
class WindowVerdict:
    m: int
    passed: bool
    detail: Scalar | float | None = None   # min eigenvalue or alternating sum


@dataclass
class TestReport:
    test: str
    order: int
    verdicts: list = field(default_factory=list)
    witness: Optional[dict] = None

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    @property
    def first_failure(self) -> Optional[int]:
        return next((v.m for v in self.verdicts if not v.passed), None)

    def summary(self) -> str:
        status = "pass" if self.passed else f"FAIL at m={self.first_failure}"
        return f"{self.test} order {self.order}, m=0..{len(self.verdicts) - 1}: {status}"


def is_k_hyponormal(source, k: int, m_max: int = DEFAULT_M_MAX, tol=DEFAULT_TOL,
                    method: str = "auto") -> TestReport:
    """Test Hankel windows of order ``k`` at bases ``m = 0..m_max``."""
    if k < 1 or m_max < 0:
        raise ValueError("need k >= 1 and m_max >= 0")
    vals = _moments(source, m_max + 2 * k + 1)
    report = TestReport("k-hyponormality", k)
    for m in range(m_max + 1):
        res = window_is_psd(hankel_matrix(vals, m, k), tol, method)
        report.verdicts.append(WindowVerdict(m, res.psd, res.min_eig if res.min_eig is not None
                                             else res.quadratic_form))
        if not res.psd and report.witness is None:
            report.witness = {"m": m, "vector": res.witness, "form": res.quadratic_form}
    return report


def alternating_sum(vals: Sequence, m: int, n: int) -> Scalar:
    """``sum_j (-1)^j C(n, j) gamma_{m+j}``: the n-th backward difference."""
    total = Fraction(0)
    for j in range(n + 1):
        total = total + (-1) ** j * comb(n, j) * vals[m + j]
    return total


def is_n_contractive(source, n: int, m_max: int = DEFAULT_M_MAX, tol=None) -> TestReport:
    """Check alternating binomial sums of order ``n`` for ``m = 0..m_max``.

    Rational inputs are compared with zero exactly.  Real inputs allow a
    round-off slack of ``tol`` times the sum of absolute terms (default
    scaled to the working precision).
    """
    if n < 1 or m_max < 0:
        raise ValueError("need n >= 1 and m_max >= 0")
    vals = _moments(source, m_max + n + 1)
    if tol is None:
        tol = mpmath.mpf(10) ** (20 - mpmath.mp.dps)
    report = TestReport("n-contractivity", n)
    for m in range(m_max + 1):
        s = alternating_sum(vals, m, n)
        if is_exact(s):
            ok = s >= 0
        else:
            scale = sum(comb(n, j) * abs(to_mpf(vals[m + j])) for j in range(n + 1))
            ok = s >= -to_mpf(tol) * scale
        report.verdicts.append(WindowVerdict(m, bool(ok), s))
        if not ok and report.witness is None:
            report.witness = {"m": m, "sum": s}
    return report


@dataclass
class ScanReport:
    reports: list

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def table(self) -> str:
        return "\n".join(r.summary() for r in self.reports)


def complete_monotonicity_scan(source, max_order: int, m_max: int = DEFAULT_M_MAX,
                               tol=None) -> ScanReport:
    """n-contractivity for every ``n = 1..max_order``."""
    return ScanReport([is_n_contractive(source, n, m_max, tol) for n in range(1, max_order + 1)])


def subnormality_suite(source, k_max: int = 4, n_max: int = 8, m_max: int = 30,
                       tol=DEFAULT_TOL, method: str = "auto") -> ScanReport:
    reports = [is_k_hyponormal(source, k, m_max, tol, method) for k in range(1, k_max + 1)]
    reports += complete_monotonicity_scan(source, n_max, m_max).reports
    return ScanReport(reports)
