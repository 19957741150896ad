from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

import oracles
from loopblocks.correlator import Angle, LayeringParams, g_t_expansion
from loopblocks.decomposer import (
    D4_CLOSED, D6_CLOSED, c_hat_1, gamma_identity_residual, ope_consistency, r_one,
    rational_form, s_constants, spectrum, t_constants, verify_vanishing,
)
from loopblocks.errors import CheckFailed
from loopblocks.numerics import RationalFunc

M = mpmath.mpf
PI, MPI = Angle.pi(), Angle.pi(-1)


def pi_params(lam):
    return LayeringParams(lam, PI, MPI)


def test_s_constants_generic_match_closed_forms():
    p = LayeringParams(M("0.3"), Angle.of(1), Angle.of(M("0.7")))
    rep = s_constants(p, 4)
    ref = oracles.d_closed("0.3", M(1), M("0.7"))
    for e, r in zip(rep.entries, ref):
        assert abs(e.value - r) < M(10) ** -45
    assert [e.k for e in rep.entries] == [0, 1, 2, 3, 4]
    assert all(e.label == f"E({e.k})" for e in rep.entries)


def test_printed_d3_d4_forms_disagree_at_generic_beta():
    p = LayeringParams(M("0.3"), Angle.of(1), Angle.of(M("0.7")))
    rep = s_constants(p, 4)
    d3, d4 = oracles.d_literal("0.3", M(1), M("0.7"))
    assert abs(rep.value(3) - d3) > M(10) ** -3
    assert abs(rep.value(4) - d4) > M(10) ** -3


def test_s_constants_at_pi_minus_pi_exponential_pattern():
    rep = s_constants(pi_params(Fraction(1, 2)), 6)
    a0, a1 = rep.value(0), rep.value(1)
    for k in range(7):
        assert abs(rep.value(k) - a0 * (a1 / a0) ** k / mpmath.factorial(k)) < M(10) ** -50


def test_s_constants_stable_in_order():
    p = LayeringParams(M("0.2"), Angle.of(M("2.1")), Angle.of(M("-0.4")))
    a = s_constants(p, 4).values
    b = s_constants(p, 7).values
    assert all(abs(a[k] - b[k]) < M(10) ** -42 for k in a)


def test_t_constants_d0_d1_d2():
    p = LayeringParams(M("0.35"), Angle.of(M("1.2")), Angle.of(M("2.5")))
    rep = t_constants(p, 4)
    d1, d2, d12 = p.d1, p.d2, p.d12
    assert abs(rep.value(0) - 1) < M(10) ** -55
    assert abs(rep.value(1)) < M(10) ** -50
    assert abs(rep.value(2) - ((d1 + d2 - d12) / 10 - d1 * d2 / p.lam)) < M(10) ** -50


def test_identity_block_self_consistency():
    for lam, b1, b2 in (("0.1", "0.5", "1.5"), ("0.45", "3", "-2"), ("0.25", "1", "1")):
        p = LayeringParams(M(lam), Angle.of(M(b1)), Angle.of(M(b2)))
        B2 = g_t_expansion(p, 2).coeffs[2]
        D2 = t_constants(p, 2).value(2)
        assert abs(B2 - p.d1 * p.d2 / p.lam - D2) < M(10) ** -50


def test_exact_pi_minus_pi_values():
    rep = t_constants(pi_params(Fraction(1, 2)), 8)
    v = rep.values
    assert v[0] == 1 and all(v[k] == 0 for k in (1, 2, 3, 5, 7))
    assert v[4] == Fraction(1, 20625) == D4_CLOSED(Fraction(1, 2))
    assert v[6] == D6_CLOSED(Fraction(1, 2))


def test_c_equal_one_stops_where_gram_is_singular():
    rep = t_constants(pi_params(Fraction(1, 2)), 11)
    assert max(rep.values) == 8
    assert rep.notes and "level 5" in rep.notes[0]


def test_numeric_and_exact_paths_agree():
    ex = t_constants(pi_params(Fraction(3, 10)), 8, method="exact").values
    nu = t_constants(pi_params(Fraction(3, 10)), 8, method="numeric").values
    for k in ex:
        assert abs(M(ex[k].numerator) / ex[k].denominator - nu[k]) < M(10) ** -45


def test_beta_two_pi_is_identity():
    rep = t_constants(LayeringParams(Fraction(3, 10), Angle.pi(2), Angle.pi(2)), 7)
    assert rep.value(0) == 1 and all(rep.value(k) == 0 for k in range(1, 8))


betas = st.integers(min_value=-300, max_value=300).map(lambda k: M(k) / 100)


@given(st.integers(min_value=5, max_value=45).map(lambda k: M(k) / 100), betas, betas)
def test_t_constants_symmetric(lam, b1, b2):
    a = t_constants(LayeringParams(lam, Angle.of(b1), Angle.of(b2)), 4).values
    b = t_constants(LayeringParams(lam, Angle.of(b2), Angle.of(b1)), 4).values
    assert all(abs(a[k] - b[k]) < M(10) ** -40 for k in a)


def test_verify_vanishing_passes_and_flags_evidence():
    rows = verify_vanishing([Fraction(1, 10), Fraction(1, 2)], kmax=9)
    statuses = {(r.lam, r.k): r.status for r in rows}
    assert statuses[(Fraction(1, 10), 9)] == "evidence"
    assert statuses[(Fraction(1, 2), 9)] == "unavailable"
    assert all(r.ok for r in rows if r.status in ("asserted", "compared"))


def test_verify_vanishing_detects_nonzero(monkeypatch):
    import loopblocks.decomposer as dec
    monkeypatch.setattr(dec, "VANISHING_K", (1, 2, 3, 4, 5, 7))
    with pytest.raises(CheckFailed) as err:
        dec.verify_vanishing([Fraction(1, 10)])
    assert "k=4" in str(err.value)


def test_ope_constants_and_gamma_identity():
    assert mpmath.nstr(c_hat_1(Fraction(1, 2)), 4) == "-0.4497"
    assert mpmath.nstr(r_one(Fraction(1, 2)), 5) == "1.9665"
    assert abs(c_hat_1("0.5") - oracles.c_hat_1("0.5")) < M(10) ** -55
    assert gamma_identity_residual() < M(10) ** -55
    rows = ope_consistency(Fraction(1, 2), 9)
    assert len(rows) == 7  # capped at k = 6


def test_rational_form_d4_d6():
    assert rational_form(("t", 4, PI, MPI)) == RationalFunc.from_expr(oracles.D4_EXPR)
    f6 = rational_form(("t", 6, PI, MPI))
    assert f6 == RationalFunc.from_expr(oracles.D6_EXPR)
    assert f6.degrees == (4, 3)
    assert rational_form(("t", 0, PI, MPI)) == RationalFunc((Fraction(1),))


def test_rational_form_needs_samples():
    with pytest.raises(ValueError):
        rational_form(("t", 4, PI, MPI), [Fraction(1, k) for k in range(2, 8)])


def test_spectrum_labels():
    sp = spectrum(pi_params(Fraction(1, 2)), 7)
    by = {(e.dimension, e.label): e for e in sp}
    assert by[(0, "identity")].present
    t = by[(2, "stress-tensor-in-identity-module")]
    assert not t.primary and t.coupling == Fraction(1, 50)
    assert not by[(2, "Y")].present
    assert [e.label for e in sp if e.primary and e.present] == ["identity", "e(4)", "e(6)"]
    generic = spectrum(LayeringParams(M("0.3"), Angle.of(1), Angle.of(M("0.7"))), 4)
    assert any(e.label == "Y" and e.present for e in generic)
    trivial = spectrum(LayeringParams(Fraction(1, 3), Angle.pi(0), Angle.pi(0)), 5)
    assert [e.label for e in trivial if e.present] == ["identity"]
