"""Weight sequences, moments and shift transforms."""
from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bergerkit.scalar import to_mpf
from bergerkit.measure import Atom, Measure, dirac, lebesgue, monomial
from bergerkit.shift import (
    InsufficientWeights,
    MomentSequence,
    TailRule,
    WeightSequence,
    agler_shift,
    aluthge_transform,
    backstep_extension,
    backstep_shift,
    bergman_shift,
    constant_shift,
    iterated_aluthge,
    moments_from_weights,
    pth_power_shift,
    restriction_shift,
    schur_product,
    weights_from_moments,
)

rationals01 = st.fractions(min_value=F(1, 50), max_value=1, max_denominator=60)
finite_shift = st.lists(rationals01, min_size=3, max_size=10).map(lambda v: WeightSequence(tuple(v)))


def test_bergman_moments():
    assert moments_from_weights(bergman_shift(), 4).take(4) == [1, F(1, 2), F(1, 3), F(1, 4)]


def test_constant_moments():
    assert moments_from_weights(constant_shift(), 3).take(3) == [1, 1, 1]


def test_agler3_moments_telescope():
    assert moments_from_weights(agler_shift(3), 3).take(3) == [1, F(1, 3), F(1, 6)]
    g = moments_from_weights(agler_shift(3), 30)
    assert all(g[n] == F(2, (n + 1) * (n + 2)) for n in range(30))


def test_weights_from_moments_ratio():
    w = weights_from_moments(MomentSequence((1, F(1, 2), F(1, 3))))
    assert w.squares(2) == [F(1, 2), F(2, 3)]
    assert weights_from_moments(MomentSequence((1, 1, 1))).squares(2) == [1, 1]
    assert weights_from_moments(MomentSequence((1, F(1, 4), F(1, 16)))).weights(2) == [F(1, 2), F(1, 2)]


def test_weights_must_be_positive_and_contractive():
    with pytest.raises(ValueError):
        WeightSequence((F(1, 2), F(0)))
    with pytest.raises(ValueError):
        WeightSequence((F(3, 2),))
    with pytest.raises(ValueError):
        MomentSequence((1, F(-1, 2)))


def test_insufficient_weights():
    with pytest.raises(InsufficientWeights):
        WeightSequence((F(1, 2),)).square(3)


def test_prefix_must_agree_with_rule():
    WeightSequence((F(1, 2),), TailRule.agler(2))
    with pytest.raises(ValueError):
        WeightSequence((F(1, 3),), TailRule.agler(2))


def test_bergman_square_rule():
    sq = pth_power_shift(bergman_shift(), 2)
    assert sq.squares(5) == [F((n + 1) ** 2, (n + 2) ** 2) for n in range(5)]
    g = moments_from_weights(sq, 10)
    assert all(g[n] == F(1, (n + 1) ** 2) for n in range(10))


def test_bergman_square_root_moments():
    g = moments_from_weights(pth_power_shift(bergman_shift(), F(1, 2)), 20)
    for n in range(20):
        assert abs(to_mpf(g[n]) - 1 / mpmath.sqrt(n + 1)) < to_mpf(10) ** -50


@given(finite_shift)
def test_power_one_is_identity(w):
    assert pth_power_shift(w, 1) == w


@given(finite_shift, st.sampled_from([F(1, 2), F(2), F(3)]), st.sampled_from([F(1, 3), F(2)]))
def test_powers_compose(w, p, q):
    a = pth_power_shift(pth_power_shift(w, p), q).squares(len(w))
    b = pth_power_shift(w, p * q).squares(len(w))
    assert all(abs(to_mpf(x) - to_mpf(y)) < to_mpf(10) ** -40 for x, y in zip(a, b))


@given(finite_shift)
def test_schur_identity(w):
    ones = WeightSequence(tuple([1] * len(w)))
    assert schur_product(w, ones) == w


def test_schur_bergman():
    g = moments_from_weights(schur_product(bergman_shift(), bergman_shift()), 12)
    assert all(g[n] == F(1, (n + 1) ** 2) for n in range(12))


@given(finite_shift, finite_shift)
def test_schur_moments_multiply(a, b):
    n = min(len(a), len(b))
    a, b = WeightSequence(a.prefix_sq[:n]), WeightSequence(b.prefix_sq[:n])
    ga, gb = moments_from_weights(a, n + 1), moments_from_weights(b, n + 1)
    gs = moments_from_weights(schur_product(a, b), n + 1)
    assert all(gs[j] == ga[j] * gb[j] for j in range(n + 1))


def test_aluthge_as_schur_of_root_and_restriction():
    root = pth_power_shift(bergman_shift(), F(1, 2))
    lhs = schur_product(root, restriction_shift(root, 1))
    rhs = aluthge_transform(bergman_shift())
    for n in range(25):
        assert abs(to_mpf(lhs.square(n)) - to_mpf(rhs.square(n))) < to_mpf(10) ** -50


def test_aluthge_fixes_constant():
    c = constant_shift(F(1, 2))
    assert aluthge_transform(c).squares(10) == c.squares(10)


def test_aluthge_of_bergman_squared_is_agler3():
    at = aluthge_transform(pth_power_shift(bergman_shift(), 2))
    assert at.squares(41) == agler_shift(3).squares(41)


def test_iterated_aluthge():
    w = WeightSequence((F(1, 4), F(1, 2), F(9, 16), F(3, 4), 1))
    assert iterated_aluthge(w, 2) == aluthge_transform(aluthge_transform(w))
    assert iterated_aluthge(bergman_shift(), 2).squares(8) == \
        aluthge_transform(aluthge_transform(bergman_shift())).squares(8)


@given(finite_shift)
def test_aluthge_is_geometric_mean(w):
    at = aluthge_transform(w)
    for j in range(len(at)):
        assert at.square(j) ** 2 == w.square(j) * w.square(j + 1) or \
            abs(to_mpf(at.square(j)) ** 2 - to_mpf(w.square(j) * w.square(j + 1))) < to_mpf(10) ** -50


def test_restriction():
    assert restriction_shift(bergman_shift(), 0) == bergman_shift()
    r = restriction_shift(bergman_shift(), 1)
    assert r.squares(6) == [F(n + 2, n + 3) for n in range(6)]


@given(finite_shift, st.integers(0, 2))
def test_restriction_moment_quotient(w, k):
    r = restriction_shift(w, k)
    g = moments_from_weights(w, len(w) + 1)
    gr = moments_from_weights(r, len(r) + 1)
    assert all(gr[m] == g[m + k] / g[k] for m in range(len(r) + 1))


def test_backstep_shift_prefixes():
    b = backstep_shift(bergman_shift(), F(1, 2))
    assert b.squares(4) == [F(1, 4), F(1, 2), F(2, 3), F(3, 4)]


def test_backstep_two_t():
    res = backstep_extension(monomial(2, 1), F(1, 2))
    assert res.feasible and res.reciprocal_integral == 2
    assert res.measure == Measure(terms=lebesgue().scaled(F(1, 2)).terms, zero_mass=F(1, 2))


def test_backstep_lebesgue_infeasible():
    res = backstep_extension(lebesgue(), F(1, 10))
    assert not res.feasible and "not integrable" in res.reason


def test_backstep_boundary_dirac():
    res = backstep_extension(dirac(1), 1)
    assert res.feasible and res.measure == dirac(1)


def test_backstep_too_large():
    res = backstep_extension(monomial(2, 1), F(3, 4))
    assert not res.feasible and res.reason.startswith("x too large")


@given(st.lists(st.tuples(st.sampled_from([F(1), F(1, 2), F(1, 3), F(2, 3), F(3, 4)]),
                          st.integers(1, 5)), min_size=1, max_size=4),
       st.fractions(F(1, 20), 1, max_denominator=20))
def test_backstep_measure_matches_shift(parts, x):
    total = sum(m for _, m in parts)
    mu = Measure(tuple(Atom.at(p, F(m) / total) for p, m in parts))
    res = backstep_extension(mu, x)
    integral = sum(a.mass / a.position for a in mu.atoms)
    assert res.feasible == (x * x * integral <= 1)
    if res.feasible:
        gmu = [sum(a.mass * a.position ** n for a in mu.atoms) for n in range(8)]
        gext = [sum(a.mass * a.position ** n for a in res.measure.atoms) + (res.measure.zero_mass if n == 0 else 0)
                for n in range(9)]
        assert gext[0] == 1
        assert all(gext[n + 1] == x * x * gmu[n] for n in range(8))


def test_rule_serialization_round_trip():
    w = aluthge_transform(schur_product(bergman_shift(), restriction_shift(agler_shift(4), 2)))
    back = WeightSequence.from_json(w.to_json())
    assert back.squares(15) == w.squares(15)


def test_weights_json_accepts_plain_weights():
    w = WeightSequence.from_dict({"weights": [{"rat": "1/2"}, {"rat": "1/3"}]})
    assert w.squares(2) == [F(1, 4), F(1, 9)]
