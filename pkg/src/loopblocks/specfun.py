"""High-precision special functions and the series built from them.

Gamma values come from mpmath; everything else (hypergeometric Taylor
ladders, the unit-argument connection, the 3F2 exponent series, theta
series and the elliptic nome) is assembled here as truncated series.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

from .errors import IntegerExponentGap, ParameterPole, PoleAtNonpositiveInteger
from .numerics import PuiseuxSeries, is_exact, series_mul, series_pow, series_revert, to_mpf

# parameters of the 3F2 in the layering two-point function
A3F2 = (Fraction(1), Fraction(1), Fraction(4, 3))
B3F2 = (Fraction(2), Fraction(5, 3))


def _is_nonpositive_integer(x) -> bool:
    if is_exact(x):
        x = Fraction(x)
        return x.denominator == 1 and x <= 0
    x = to_mpf(x)
    return x <= 0 and mpmath.isint(x)


def gamma(x):
    """Gamma function at working precision (reflection is handled by mpmath)."""
    if _is_nonpositive_integer(x):
        raise PoleAtNonpositiveInteger(f"Gamma has a pole at {x}")
    return mpmath.gamma(to_mpf(x))


def _poch_ratio_coeffs(a, b, c, order):
    """Taylor coefficients (a)_n (b)_n / ((c)_n n!) for n = 0..order."""
    exact = all(is_exact(v) for v in (a, b, c))
    one = Fraction(1) if exact else mpmath.mpf(1)
    if not exact:
        a, b, c = to_mpf(a), to_mpf(b), to_mpf(c)
    out = [one]
    for n in range(order):
        out.append(out[-1] * (a + n) * (b + n) / ((c + n) * (n + 1)))
    return out


def hyp2f1_series(a, b, c, order: int, variable: str = "sigma") -> PuiseuxSeries:
    """Taylor series of 2F1(a, b; c; x) through ``x**order``."""
    if _is_nonpositive_integer(c):
        raise ParameterPole(f"2F1 with c = {c}")
    return PuiseuxSeries(tuple(_poch_ratio_coeffs(a, b, c, order)), Fraction(0), 1, variable)


@dataclass(frozen=True)
class ConnectionExpansion:
    """2F1(a, b; c; 1 - x) = analytic_const*analytic(x) + singular_const*x**e*singular(x)."""

    analytic: PuiseuxSeries
    singular_exponent: Fraction
    singular: PuiseuxSeries
    analytic_const: object
    singular_const: object

    def __call__(self, x):
        x = to_mpf(x)
        return (self.analytic_const * self.analytic(x)
                + self.singular_const * x ** to_mpf(self.singular_exponent) * self.singular(x))


def hyp2f1_unit_connection(a, b, c, order: int) -> ConnectionExpansion:
    """Expand 2F1(a, b; c; 1 - x) around x = 0 for non-integer c - a - b."""
    a, b, c = Fraction(a), Fraction(b), Fraction(c)
    e = c - a - b
    if e.denominator == 1:
        raise IntegerExponentGap(f"c - a - b = {e} is an integer (logarithmic case)")
    analytic = hyp2f1_series(a, b, a + b - c + 1, order)
    singular = hyp2f1_series(c - a, c - b, e + 1, order)
    ka = gamma(c) * gamma(e) / (gamma(c - a) * gamma(c - b))
    ks = gamma(c) * gamma(-e) / (gamma(a) * gamma(b))
    return ConnectionExpansion(analytic, e, singular, ka, ks)


def threeF2_at_one():
    """3F2(1, 1, 4/3; 2, 5/3; 1), i.e. the integral of 2F1(1, 4/3; 5/3; t) over [0, 1].

    Uses the Euler integral: for 2F1(1, b; c; t) the t-integral gives
    Gamma(c)/(Gamma(b)Gamma(c-b)) * B(b-1, c-b) * (psi(c-1) - psi(c-b)).
    """
    b, c = Fraction(4, 3), Fraction(5, 3)
    pref = gamma(c) / (gamma(b) * gamma(c - b))
    beta = gamma(b - 1) * gamma(c - b) / gamma(c - 1)
    return pref * beta * (mpmath.digamma(to_mpf(c - 1)) - mpmath.digamma(to_mpf(c - b)))


@dataclass(frozen=True)
class ExponentSeries:
    """L(x) = (1-x)*3F2(1,1,4/3;2,5/3;1-x) = value_at_zero + series(x) + log_coefficient*log(x)."""

    value_at_zero: object
    series: PuiseuxSeries
    log_coefficient: Fraction

    def __call__(self, x):
        x = to_mpf(x)
        out = self.value_at_zero + self.series(x)
        if self.log_coefficient:
            out += to_mpf(self.log_coefficient) * mpmath.log(x)
        return out


def threeF2_exponent_series(order: int) -> ExponentSeries:
    """Expansion of L(sigma) = (1 - sigma) 3F2(1, 1, 4/3; 2, 5/3; 1 - sigma) at sigma = 0.

    ``order`` counts powers of sigma; the ramification-3 ladder carries
    ``3*order`` terms beyond the constant. L is the integral of
    f(t) = 2F1(1, 4/3; 5/3; t) from 0 to 1 - sigma, so
    L(sigma) = L(0) - int_0^sigma f(1 - s) ds, with f(1 - s) from the unit
    connection. Neither branch has an s**-1 term, so no log(sigma) appears.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    conn = hyp2f1_unit_connection(1, Fraction(4, 3), Fraction(5, 3), order + 1)
    analytic = conn.analytic.to_real() * conn.analytic_const
    singular = conn.singular.to_real().shift(conn.singular_exponent) * conn.singular_const
    integrand = analytic.with_ramification(3) + singular.with_ramification(3)
    tail = -integrand.integrate()
    # integrand starts at s**(-2/3); keep sigma**(1/3)..sigma**(order)
    ladder = _rebase(tail, 3 * order + 1)
    return ExponentSeries(threeF2_at_one(), ladder, Fraction(0))


def _rebase(s: PuiseuxSeries, terms: int) -> PuiseuxSeries:
    """Pad a series down to exponent 0 and cut it to ``terms`` ladder entries."""
    k = int(s.exponent * s.ramification)
    zero = s._zero()
    coeffs = (zero,) * k + s.coeffs
    if len(coeffs) < terms:
        raise ValueError("series too short for the requested order")
    return PuiseuxSeries(coeffs[:terms], Fraction(0), s.ramification, s.variable, s.ring)


def threeF2_taylor(order: int, variable: str = "w") -> PuiseuxSeries:
    """Taylor series of 3F2(1, 1, 4/3; 2, 5/3; x): coefficients (4/3)_n / ((5/3)_n (n+1))."""
    out = [Fraction(1)]
    r = Fraction(1)
    for n in range(1, order + 1):
        r = r * (Fraction(4, 3) + n - 1) / (Fraction(5, 3) + n - 1)
        out.append(r / (n + 1))
    return PuiseuxSeries(tuple(out), Fraction(0), 1, variable)


@lru_cache(maxsize=None)
def _theta_coeffs(which: int, order: int) -> tuple:
    c = [Fraction(0)] * (order + 1)
    if which == 3:
        n = 0
        while n * n <= order:
            c[n * n] += 1 if n == 0 else 2
            n += 1
    else:
        # theta_2 / (2 q**(1/4)) = sum_{n>=0} q**(n(n+1))
        n = 0
        while n * (n + 1) <= order:
            c[n * (n + 1)] += 1
            n += 1
    return tuple(c)


def theta_series(which: int, order: int) -> PuiseuxSeries:
    """theta_3(q) = sum q**(n**2), or theta_2(q)/(2 q**(1/4)) = sum_{n>=0} q**(n(n+1)).

    The quarter power of theta_2 is tracked by the caller:
    theta_2**4 = 16 q * (returned series)**4.
    """
    if which not in (2, 3):
        raise ValueError("which must be 2 or 3")
    if order < 0:
        raise ValueError("order must be >= 0")
    return PuiseuxSeries(_theta_coeffs(which, order), Fraction(0), 1, "q")


@lru_cache(maxsize=None)
def _nome_exact(order: int):
    t2 = theta_series(2, order)
    t3 = theta_series(3, order)
    ratio = series_mul(series_pow(t2, 4), series_pow(t3, -4))  # sigma/(16 q)
    sigma_of_q = PuiseuxSeries(tuple(16 * c for c in ratio.coeffs), Fraction(1), 1, "q")
    q = series_revert(sigma_of_q)
    return PuiseuxSeries(q.coeffs, q.exponent, 1, "sigma", "rational")


@dataclass(frozen=True)
class NomeSeries:
    q: PuiseuxSeries            # q(sigma) = sigma/16 + ..., exact rationals
    log16q_over_sigma: PuiseuxSeries   # log(16 q / sigma), integer powers


def nome_series(order: int) -> NomeSeries:
    """Elliptic nome q(sigma) through sigma**order, by reverting sigma = theta_2^4/theta_3^4."""
    if order < 1:
        raise ValueError("order must be >= 1")
    q = _nome_exact(order)
    ratio = PuiseuxSeries(tuple(16 * c for c in q.coeffs), Fraction(0), 1, "sigma")
    return NomeSeries(q, ratio.log())


def nome_direct(sigma):
    """q = exp(-pi 2F1(1/2,1/2;1;1-sigma)/2F1(1/2,1/2;1;sigma)) by direct evaluation."""
    s = to_mpf(sigma)
    h = mpmath.mpf(1) / 2
    return mpmath.exp(-mpmath.pi * mpmath.hyp2f1(h, h, 1, 1 - s) / mpmath.hyp2f1(h, h, 1, s))
