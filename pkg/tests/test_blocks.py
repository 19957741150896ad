from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

import oracles
from loopblocks.blocks import (
    BlockParams, b_from_c, block_s, block_t, c_from_b, degenerate_dim, gram_block,
    h_series, kac_determinant, partitions, rmn,
)
from loopblocks.errors import NearPole, SingularGram

M = mpmath.mpf


def generic(c="0.37", delta="0.71", ext=("0.1", "0.23", "0.05", "0.31")):
    return BlockParams(M(c), M(delta), tuple(M(e) for e in ext))


def test_b_and_c_roundtrip():
    for c in ("0.2", "0.6", "1"):
        b = b_from_c(M(c))
        assert b >= 1
        assert abs(c_from_b(b) - M(c)) < M(10) ** -55


def test_partitions():
    assert partitions(4) == [(4,), (3, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]
    assert partitions(5, 2) == [(5,), (3, 2)]


def test_kac_determinant_zero_at_degenerate_dims():
    c = Fraction(3, 5)
    assert kac_determinant(c, 0, 1) == 0
    # level 2 determinant: 32 D (D - D_(1,2)) (D - D_(2,1)) up to normalization
    b = b_from_c(M("0.6"))
    for m, n in ((1, 2), (2, 1)):
        d = degenerate_dim(m, n, b)
        assert abs(kac_determinant(M("0.6"), d, 2)) < M(10) ** -50
    assert kac_determinant(c, Fraction(1, 3), 2) != 0


def test_first_two_coefficients_against_explicit_gram():
    p = generic()
    a = block_s(p, 2).coeffs
    a1, a2 = oracles.block_level2("0.37", "0.71", "0.1", "0.23", "0.05", "0.31")
    assert abs(a[1] - a1) < M(10) ** -50
    assert abs(a[2] - a2) < M(10) ** -50


def test_recursion_matches_gram_to_level_six():
    p = generic()
    rec = block_s(p, 6, method="recursion").coeffs
    gram = block_s(p, 6, method="gram").coeffs
    assert max(abs(x - y) for x, y in zip(rec, gram)) < M(10) ** -45


def test_rmn_zero_and_pole():
    b = b_from_c(M("0.37"))
    p = BlockParams(M("0.37"), M("0.5"), (M("0.2"),) * 4).ext_momenta
    # pairwise-equal externals make every R_{1,n} vanish (fusion to the identity)
    assert rmn(1, 1, p, b) == 0
    q = generic().ext_momenta
    with pytest.raises(NearPole):
        rmn(2, 2, q, M(1))   # P_(1,1) = 0 at b = 1


def test_near_pole_raised_at_degenerate_internal_dimension():
    b = b_from_c(M("0.37"))
    d12 = degenerate_dim(1, 2, b)
    p = BlockParams(M("0.37"), d12 + M(10) ** -30, (M("0.1"), M("0.23"), M("0.05"), M("0.31")))
    with pytest.raises(NearPole) as err:
        block_s(p, 3)
    assert (err.value.m, err.value.n) == (1, 2)


def test_vacuum_block_level_two_exact():
    lam = Fraction(3, 10)
    d1, d2 = Fraction(3, 50), Fraction(1, 25)
    vac = gram_block(BlockParams(2 * lam, 0, (d1, d1, d2, d2)), 3)
    assert vac[0] == 0
    assert vac[1] == 2 * d1 * d2 / (2 * lam)


def test_vacuum_block_numeric_matches_exact():
    c, d1, d2 = Fraction(3, 5), Fraction(3, 50), Fraction(1, 25)
    exact = block_s(BlockParams(c, 0, (d1, d1, d2, d2)), 5, method="gram").coeffs
    num = block_s(BlockParams(M(c.numerator) / c.denominator, M(0), tuple(M(x.numerator) / x.denominator for x in (d1, d1, d2, d2))), 5).coeffs
    for e, n in zip(exact, num):
        assert abs(M(e.numerator) / e.denominator - n if isinstance(e, Fraction) else e - n) < M(10) ** -45


def test_c_equal_one_needs_gram():
    p = BlockParams(Fraction(1), Fraction(1, 3), (Fraction(1, 10),) * 4)
    with pytest.raises(NearPole):
        block_s(BlockParams(M(1), M(1) / 3, (M(1) / 10,) * 4), 2, method="recursion")
    coeffs = block_s(p, 3, method="auto").coeffs
    assert coeffs[1] == Fraction(1, 3) * Fraction(1, 3) / (2 * Fraction(1, 3))


def test_singular_gram_at_c_one():
    # Delta = 4 at c = 1 is degenerate (P = 2 with r - s = 4), null state at level 5
    p = BlockParams(Fraction(1), 4, (Fraction(1, 10),) * 4)
    gram_block(p, 4)
    with pytest.raises(SingularGram) as err:
        gram_block(p, 5)
    assert err.value.level == 5


def test_t_block_swaps_externals():
    p = generic()
    t = block_t(p, 3).coeffs
    d1, d2, d3, d4 = p.externals
    s = block_s(BlockParams(p.c, p.delta, (d1, d4, d3, d2)), 3).coeffs
    assert t == s


def test_h_series_starts_at_one():
    h = h_series(generic(), 4)
    assert h.coeffs[0] == 1 and h.variable == "q"


unit = st.integers(min_value=5, max_value=95).map(lambda k: M(k) / 100)


@given(unit, st.integers(min_value=30, max_value=200).map(lambda k: M(k) / 100), unit, unit, unit, unit)
def test_recursion_gram_agree_random(c, delta, e1, e2, e3, e4):
    p = BlockParams(c, delta, (e1 / 2, e2 / 2, e3 / 2, e4 / 2))
    try:
        rec = block_s(p, 4, method="recursion").coeffs
    except NearPole:
        return
    gram = [1] + gram_block(p, 4)
    scale = max(1, max(abs(x) for x in gram))
    assert max(abs(x - y) for x, y in zip(rec, gram)) < M(10) ** -35 * scale


@given(unit, st.integers(min_value=30, max_value=200).map(lambda k: M(k) / 100), unit, unit)
def test_block_symmetric_under_pair_exchange(c, delta, e1, e2):
    # swapping (1,2) <-> (4,3) leaves the coefficients unchanged
    p = BlockParams(c, delta, (e1, e2, M("0.07"), M("0.2")))
    q = BlockParams(c, delta, (M("0.2"), M("0.07"), e2, e1))
    try:
        a, b = block_s(p, 3).coeffs, block_s(q, 3).coeffs
    except NearPole:
        return
    assert max(abs(x - y) for x, y in zip(a, b)) < M(10) ** -40 * max(1, max(abs(x) for x in a))
