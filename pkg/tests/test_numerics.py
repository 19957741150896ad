from fractions import Fraction

import mpmath
import pytest
import sympy
from hypothesis import given, strategies as st

from loopblocks.errors import (
    ExponentMismatch, NegativeLeadingExponent, RankDeficient, RingMismatch,
    ValidationFailed, VariableMismatch, ZeroLeadingCoefficient,
)
from loopblocks.numerics import (
    PuiseuxSeries, RationalFunc, binomial_series, determinant, precision, rational_reconstruct,
    series_exp, series_log, series_mul, series_pow, series_revert, solve_linear,
)

x = sympy.Symbol("x")

small_fracs = st.fractions(min_value=-3, max_value=3, max_denominator=7)


def series(coeffs, exponent=0, r=1, var="sigma"):
    return PuiseuxSeries(tuple(Fraction(c) for c in coeffs), Fraction(exponent), r, var)


def sympy_coeffs(expr, n):
    s = sympy.series(expr, x, 0, n).removeO()
    return [Fraction(str(s.coeff(x, k))) for k in range(n)]


def test_precision_context_restores():
    before = mpmath.mp.dps
    with precision(90):
        assert mpmath.mp.dps == 90
    assert mpmath.mp.dps == before


def test_binomial_square_example():
    # (1 + a x^{1/3})^2 expands to 1 + 2a x^{1/3} + a^2 x^{2/3}
    a = Fraction(5, 7)
    s = series([1, a], r=3)
    sq = series_mul(s, series([1, a, 0], r=3).truncate(3))
    assert sq.coeffs[:2] == (1, 2 * a)


def test_exp_of_cube_root_ladder():
    a = Fraction(2, 5)
    s = PuiseuxSeries((Fraction(0), a, Fraction(0), Fraction(0), Fraction(0)), Fraction(0), 3)
    e = series_exp(s)
    assert e.coeffs == (1, a, a**2 / 2, a**3 / 6, a**4 / 24)


def test_mul_matches_sympy():
    a = series([1, 2, -1, 3])
    b = series([2, 0, 5, 1])
    expected = sympy_coeffs((1 + 2*x - x**2 + 3*x**3) * (2 + 5*x**2 + x**3), 4)
    assert list(series_mul(a, b).coeffs) == expected


def test_exp_log_pow_match_sympy():
    f = 3*x - x**2 + x**3 / 2
    s = series([0, 3, -1, Fraction(1, 2), 0, 0])
    assert list(series_exp(s).coeffs) == sympy_coeffs(sympy.exp(f), 6)
    one_plus = series([1, 3, -1, Fraction(1, 2), 0, 0])
    assert list(series_log(one_plus).coeffs) == sympy_coeffs(sympy.log(1 + f), 6)
    assert list(series_pow(one_plus, Fraction(1, 3)).coeffs) == sympy_coeffs((1 + f) ** sympy.Rational(1, 3), 6)


def test_binomial_series():
    b = binomial_series(Fraction(-1, 2), 5, sign=-1)
    assert list(b.coeffs) == sympy_coeffs((1 - x) ** sympy.Rational(-1, 2), 5)


def test_revert_sine_like():
    s = PuiseuxSeries(tuple(Fraction(c) for c in sympy_coeffs(sympy.sin(x), 8)[1:]), Fraction(1), 1)
    inv = series_revert(s)
    assert list(inv.coeffs) == sympy_coeffs(sympy.asin(x), 8)[1:]


def test_truncation_tracked_through_product():
    a = series([1, 1, 1])            # known through x^2
    b = series([1, 1, 1, 1, 1])      # known through x^4
    assert series_mul(a, b).truncation == 3


def test_add_aligns_ladders():
    a = series([1, 1], r=3)          # 1 + x^{1/3}
    b = series([1, 1], exponent=1)   # x + x^2
    s = a + b
    assert s.ramification == 3 and s.truncation == Fraction(2, 3)
    c = series([1, 1, 1, 1, 1, 1], r=3) + b
    assert c.coefficient(1) == 2


def test_errors():
    with pytest.raises(VariableMismatch):
        series([1]) + series([1], var="w")
    with pytest.raises(RingMismatch):
        series([1]) + series([1]).to_real()
    with pytest.raises(ExponentMismatch):
        series([1]) + PuiseuxSeries((Fraction(1),), Fraction(1, 2), 1)
    with pytest.raises(NegativeLeadingExponent):
        series_exp(series([1], exponent=-1))
    with pytest.raises(ZeroLeadingCoefficient):
        series_log(series([0, 1]).to_real())
    with pytest.raises(RankDeficient):
        solve_linear([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]], [Fraction(1), Fraction(1)])


def test_evaluation():
    s = series([1, 1, 1, 1], r=3).to_real()
    t = mpmath.mpf("0.008")
    assert abs(s(t) - (1 + mpmath.mpf("0.2") + mpmath.mpf("0.04") + mpmath.mpf("0.008"))) < mpmath.mpf(10) ** -55


@given(st.lists(small_fracs, min_size=1, max_size=6), st.lists(small_fracs, min_size=1, max_size=6),
       st.lists(small_fracs, min_size=1, max_size=6))
def test_mul_associative_commutative(a, b, c):
    n = min(len(a), len(b), len(c))
    A, B, C = series(a[:n]), series(b[:n]), series(c[:n])
    assert series_mul(A, B).coeffs == series_mul(B, A).coeffs
    assert series_mul(series_mul(A, B), C).coeffs == series_mul(A, series_mul(B, C)).coeffs


@given(st.lists(small_fracs, min_size=2, max_size=7))
def test_exp_log_roundtrip(tail):
    s = series([0] + tail)
    assert series_log(series_exp(s)).coeffs == s.coeffs


@given(st.lists(small_fracs, min_size=2, max_size=6), small_fracs)
def test_pow_multiplicative(tail, alpha):
    s = series([1] + tail)
    lhs = series_pow(s, alpha + 1)
    rhs = series_mul(series_pow(s, alpha), s)
    assert lhs.coeffs == rhs.coeffs


@given(st.lists(small_fracs, min_size=2, max_size=6).filter(lambda t: t[0] != 0))
def test_revert_is_inverse(coeffs):
    s = PuiseuxSeries(tuple(coeffs), Fraction(1), 1)
    inv = series_revert(s)
    comp = PuiseuxSeries((Fraction(0),) + tuple(s.coeffs), Fraction(0), 1).compose(inv)
    assert comp.coeffs[0] == 0 and comp.coeffs[1] == 1 and all(c == 0 for c in comp.coeffs[2:])


def test_determinant_and_solve():
    m = [[Fraction(2), Fraction(1)], [Fraction(1), Fraction(3)]]
    assert determinant(m) == 5
    assert solve_linear(m, [Fraction(3), Fraction(4)]) == [1, 1]
    assert solve_linear([[2, 1], [1, 3]], [3, 5]) == [Fraction(4, 5), Fraction(7, 5)]


def test_rational_func_normalization():
    f = RationalFunc((Fraction(0), Fraction(2), Fraction(2)), (Fraction(2), Fraction(2)))  # 2x(1+x)/(2(1+x))
    assert f.numerator == (0, 1) and f.denominator == (1,)
    g = RationalFunc.from_expr("18*lambda**2/(6875*(5*lambda+11))")
    assert g.denominator[-1] == 1
    assert g(Fraction(1, 2)) == Fraction(1, 20625)


rat_coeffs = st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=9), min_size=1, max_size=4)


@given(rat_coeffs, rat_coeffs.filter(lambda c: c[0] != 0))
def test_reconstruction_recovers_rational_functions(num, den):
    target = RationalFunc(tuple(num), tuple(den))
    pts = [Fraction(k, 13) + 3 for k in range(12)]
    pts = [p for p in pts if target_den(target, p) != 0]
    samples = [(p, target(p)) for p in pts]
    nd, dd = target.degrees
    if len(samples) < nd + dd + 3:
        return
    rec = rational_reconstruct(samples, nd, dd)
    assert rec.func == target


def target_den(f, p):
    return sum(c * p**k for k, c in enumerate(f.denominator))


def test_reconstruction_floating_samples():
    f = RationalFunc.from_expr("(3*lambda - 1)/(lambda**2 + 7)")
    samples = [(Fraction(k, 5), f(mpmath.mpf(k) / 5)) for k in range(1, 9)]
    rec = rational_reconstruct(samples, 1, 2)
    assert rec.func == f


def test_reconstruction_rejects_low_degree():
    f = RationalFunc.from_expr("lambda**3/(lambda + 2)")
    samples = [(Fraction(k, 3), f(Fraction(k, 3))) for k in range(1, 9)]
    with pytest.raises((ValidationFailed, RankDeficient)):
        rational_reconstruct(samples, 1, 1)
