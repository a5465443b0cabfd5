"""Hankel positivity and alternating-sum tests on moment windows."""
from fractions import Fraction as F

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bergerkit.measure import Atom, Measure, measure_moment
from bergerkit.shift import MomentSequence, WeightSequence, agler_shift, bergman_shift, constant_shift
from bergerkit.subnormality import (
    alternating_sum,
    complete_monotonicity_scan,
    hankel_matrix,
    is_k_hyponormal,
    is_n_contractive,
    psd_exact,
    subnormality_suite,
    window_is_psd,
)


def _two_atom_root_moments(count):
    nu = Measure((Atom.at(F(1, 2), F(1, 2)), Atom.at(1, F(1, 2))))
    return [mpmath.sqrt(measure_moment(nu, n)) for n in range(count)]


def test_hankel_bergman_is_hilbert_block():
    h = hankel_matrix(bergman_shift(), 0, 2)
    assert h.entries == ((1, F(1, 2), F(1, 3)), (F(1, 2), F(1, 3), F(1, 4)), (F(1, 3), F(1, 4), F(1, 5)))


def test_hankel_small_cases():
    g = [1, F(1, 2), F(1, 3), F(1, 4)]
    assert hankel_matrix(g, 2, 0).entries == ((F(1, 3),),)
    assert hankel_matrix(constant_shift(), 3, 2).entries == ((1,) * 3,) * 3
    with pytest.raises(ValueError):
        hankel_matrix(g, 2, 2)


def test_bergman_three_hyponormal():
    assert is_k_hyponormal(bergman_shift(), 3, m_max=10).passed


def test_two_atom_root_fails_somewhere():
    vals = _two_atom_root_moments(80)
    suite = subnormality_suite(vals, k_max=4, n_max=8, m_max=30)
    assert not suite.passed
    rep = is_k_hyponormal(vals, 2, m_max=30)
    assert not rep.passed and rep.witness is not None


def test_witness_vector_is_genuine():
    vals = _two_atom_root_moments(20)
    rep = is_k_hyponormal(vals, 2, m_max=5)
    m, v = rep.witness["m"], rep.witness["vector"]
    h = hankel_matrix(vals, m, 2).as_mp()
    form = sum(v[i] * h[i, j] * v[j] for i in range(3) for j in range(3))
    assert form < 0


@given(st.lists(st.fractions(F(1, 10), 1, max_denominator=30), min_size=4, max_size=8))
def test_one_hyponormal_means_increasing_weights(sq):
    w = WeightSequence(tuple(sq))
    rep = is_k_hyponormal(w, 1, m_max=len(sq) - 2)
    increasing = all(sq[i] <= sq[i + 1] for i in range(len(sq) - 1))
    assert rep.passed == increasing


def test_exact_witness_for_indefinite_matrix():
    res = psd_exact([[F(1), F(2)], [F(2), F(1)]])
    assert not res.psd and res.quadratic_form < 0
    res = psd_exact([[F(0), F(1)], [F(1), F(0)]])
    assert not res.psd
    assert psd_exact([[F(1), F(1)], [F(1), F(1)]]).psd


@given(st.lists(st.lists(st.integers(-4, 4), min_size=3, max_size=3), min_size=3, max_size=3))
def test_exact_psd_agrees_with_eigenvalues(rows):
    a = np.array(rows, dtype=float)
    h = [[F(int(x)) for x in row] for row in (a @ a.T + np.diag([0, 0, -1]) * rows[0][0]).tolist()]
    eig = np.linalg.eigvalsh(np.array(h, dtype=float))
    res = psd_exact(h)
    if eig[0] < -1e-9:
        assert not res.psd
    elif eig[0] > 1e-9:
        assert res.psd


def test_numeric_methods_agree_on_bergman():
    win = hankel_matrix(bergman_shift(), 3, 3)
    for method in ("exact", "float", "mp"):
        assert window_is_psd(win, method=method).psd


def test_alternating_sums():
    g = [1, F(1, 2), F(1, 3)]
    assert alternating_sum(g, 0, 2) == F(1, 3)
    assert is_n_contractive(constant_shift(), 5, m_max=10).passed
    assert all(v.detail == 0 for v in is_n_contractive(constant_shift(), 3, m_max=4).verdicts)


def test_scan_on_subnormal_sequences():
    assert complete_monotonicity_scan(bergman_shift(), 6, m_max=20).passed
    squares = MomentSequence.from_rule(lambda n: F(1, (n + 1) ** 2))
    assert complete_monotonicity_scan(squares, 6, m_max=20).passed


def test_first_difference_catches_increase():
    g = [1, F(1, 2), F(1, 4), F(1, 3), F(1, 5)]
    rep = is_n_contractive(g, 1, m_max=3)
    assert not rep.passed and rep.first_failure == 2


def test_reciprocal_root_exponential_is_not_contractive():
    # exp(-c/sqrt(n+1)) / exp(-c) increases with n, so it already fails order 1
    c = 1
    g = MomentSequence.from_rule(lambda n: mpmath.exp(-c / mpmath.sqrt(n + 1)) / mpmath.exp(-c))
    rep = is_n_contractive(g, 1, m_max=20)
    assert not rep.passed and rep.first_failure == 0


def test_laplace_exponential_moments_pass():
    # exp(-c sqrt(n+1)) / exp(-c): the transform the inverse Gaussian density actually has
    c = 1
    g = MomentSequence.from_rule(lambda n: mpmath.exp(-c * mpmath.sqrt(n + 1)) / mpmath.exp(-c))
    assert complete_monotonicity_scan(g, 8, m_max=20).passed


@pytest.mark.parametrize("j", [2, 3, 4, 5, 6])
def test_agler_shifts_pass_suite(j):
    assert subnormality_suite(agler_shift(j), k_max=4, n_max=8, m_max=30).passed


def test_insufficient_moments():
    with pytest.raises(ValueError):
        is_k_hyponormal([1, F(1, 2)], 2, m_max=3)
