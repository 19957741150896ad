"""Coefficient rings and truncated Puiseux-series arithmetic.

Two coefficient rings are supported:

``"rational"``
    exact :class:`fractions.Fraction` coefficients,
``"real"``
    :class:`mpmath.mpf` coefficients at the ambient mpmath precision.

Working precision follows ``mpmath.mp.dps``; use :func:`precision` to scope it.
"""

from __future__ import annotations

import math
import re
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import mpmath
import sympy

from .errors import (
    ExponentMismatch,
    NegativeLeadingExponent,
    RankDeficient,
    RingMismatch,
    ValidationFailed,
    VariableMismatch,
    ZeroLeadingCoefficient,
)

DEFAULT_DPS = 60
VARIABLES = ("sigma", "w", "q")

mpf = mpmath.mpf


@contextmanager
def precision(dps: int):
    """Scope the mpmath working precision to ``dps`` decimal digits."""
    with mpmath.workdps(dps):
        yield


def to_mpf(x):
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    return mpmath.mpmathify(x)


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, Rational):
        return Fraction(x)
    raise TypeError(f"not an exact rational: {x!r}")


def is_zero(x, tol) -> bool:
    """Compare against zero with a caller-supplied tolerance."""
    return abs(x) <= tol


def is_exact(x) -> bool:
    return isinstance(x, Rational)


def ring_of(values: Iterable) -> str:
    return "rational" if all(is_exact(v) for v in values) else "real"


def _coerce(values: Iterable, ring: str) -> tuple:
    if ring == "rational":
        return tuple(to_fraction(v) for v in values)
    return tuple(to_mpf(v) for v in values)


# ---------------------------------------------------------------------------
# linear algebra over an arbitrary field


def solve_linear(matrix: Sequence[Sequence], rhs: Sequence) -> list:
    """Gaussian elimination with partial pivoting; works for Fraction or mpf.

    Raises RankDeficient when a pivot is exactly zero (or below the mpmath
    epsilon scaled by the matrix norm for floating entries).
    """
    n = len(matrix)
    a = [list(row) + [rhs[i]] for i, row in enumerate(matrix)]
    exact = all(is_exact(v) for row in a for v in row)
    if exact:
        a = [[Fraction(v) for v in row] for row in a]
    scale = max((abs(v) for row in matrix for v in row), default=1) or 1
    tiny = 0 if exact else scale * mpmath.mpf(10) ** (-(mpmath.mp.dps - 5))
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if abs(a[piv][col]) <= tiny:
            raise RankDeficient(f"singular system at column {col}")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] / p
            if f:
                row_r, row_c = a[r], a[col]
                for k in range(col, n + 1):
                    row_r[k] -= f * row_c[k]
    x = [0] * n
    for i in range(n - 1, -1, -1):
        s = a[i][n] - sum(a[i][k] * x[k] for k in range(i + 1, n))
        x[i] = s / a[i][i]
    return x


def determinant(matrix: Sequence[Sequence]):
    n = len(matrix)
    a = [list(row) for row in matrix]
    if all(is_exact(v) for row in a for v in row):
        a = [[Fraction(v) for v in row] for row in a]
    det = 1
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(a[r][col]))
        if a[piv][col] == 0:
            return 0 * det
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        p = a[col][col]
        det *= p
        for r in range(col + 1, n):
            f = a[r][col] / p
            for k in range(col, n):
                a[r][k] -= f * a[col][k]
    return det


# ---------------------------------------------------------------------------
# truncated Puiseux series


@dataclass(frozen=True)
class PuiseuxSeries:
    """Truncated series ``sum_j coeffs[j] * x**(exponent + j/ramification)``.

    ``len(coeffs)`` terms are known; everything from exponent
    ``exponent + len(coeffs)/ramification`` on is unknown (the O-term).
    """

    coeffs: tuple
    exponent: object = Fraction(0)
    ramification: int = 1
    variable: str = "sigma"
    ring: str = ""

    def __post_init__(self):
        if self.ramification not in (1, 3):
            raise ValueError("ramification must be 1 or 3")
        if self.variable not in VARIABLES:
            raise ValueError(f"unknown variable tag {self.variable!r}")
        ring = self.ring or ring_of(self.coeffs)
        if ring not in ("rational", "real"):
            raise ValueError(f"unknown ring {ring!r}")
        object.__setattr__(self, "ring", ring)
        object.__setattr__(self, "coeffs", _coerce(self.coeffs, ring))
        e = self.exponent
        object.__setattr__(self, "exponent", Fraction(e) if is_exact(e) else to_mpf(e))

    # -- construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, value, terms, variable="sigma", ring=None):
        ring = ring or ring_of([value])
        zero = Fraction(0) if ring == "rational" else mpf(0)
        return cls((value,) + (zero,) * (terms - 1), Fraction(0), 1, variable, ring)

    @classmethod
    def monomial(cls, terms, variable="sigma", ring="rational"):
        """The series for the variable itself, ``x + O(x**(1+terms))``."""
        one = Fraction(1) if ring == "rational" else mpf(1)
        zero = one - one
        return cls((one,) + (zero,) * (terms - 1), Fraction(1), 1, variable, ring)

    # -- basic properties -----------------------------------------------------
    @property
    def terms(self) -> int:
        return len(self.coeffs)

    @property
    def truncation(self):
        """First exponent that is not known."""
        return self.exponent + Fraction(self.terms, self.ramification)

    def _zero(self):
        return Fraction(0) if self.ring == "rational" else mpf(0)

    def exponents(self) -> list:
        return [self.exponent + Fraction(j, self.ramification) for j in range(self.terms)]

    def coefficient(self, exponent):
        """Coefficient of ``x**exponent``; zero if off-ladder below truncation."""
        j = (exponent - self.exponent) * self.ramification
        jr = round(j) if not is_exact(j) else j
        if is_exact(j) and Fraction(j).denominator != 1:
            return self._zero()
        jr = int(jr)
        if jr < 0:
            return self._zero()
        if jr >= self.terms:
            raise IndexError(f"exponent {exponent} beyond truncation {self.truncation}")
        return self.coeffs[jr]

    def to_real(self) -> "PuiseuxSeries":
        return PuiseuxSeries(self.coeffs, self.exponent, self.ramification, self.variable, "real")

    def with_ramification(self, r: int) -> "PuiseuxSeries":
        if r == self.ramification:
            return self
        if r % self.ramification:
            raise ValueError("can only refine the ramification")
        step = r // self.ramification
        z = self._zero()
        out = []
        for c in self.coeffs:
            out.append(c)
            out.extend([z] * (step - 1))
        return PuiseuxSeries(tuple(out), self.exponent, r, self.variable, self.ring)

    def truncate(self, terms: int) -> "PuiseuxSeries":
        return PuiseuxSeries(self.coeffs[:terms], self.exponent, self.ramification, self.variable, self.ring)

    def shift(self, alpha) -> "PuiseuxSeries":
        """Multiply by ``x**alpha``; the truncation moves with the series."""
        return PuiseuxSeries(self.coeffs, self.exponent + alpha, self.ramification, self.variable, self.ring)

    def normalized(self) -> "PuiseuxSeries":
        """Drop exactly-zero leading coefficients, raising the base exponent."""
        k = 0
        while k < self.terms and self.coeffs[k] == 0:
            k += 1
        if k == 0 or k == self.terms:
            return self
        return PuiseuxSeries(self.coeffs[k:], self.exponent + Fraction(k, self.ramification),
                             self.ramification, self.variable, self.ring)

    def _check(self, other: "PuiseuxSeries"):
        if self.variable != other.variable:
            raise VariableMismatch(f"{self.variable} vs {other.variable}")
        if self.ring != other.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")

    # -- arithmetic -----------------------------------------------------------
    def __neg__(self):
        return PuiseuxSeries(tuple(-c for c in self.coeffs), self.exponent,
                             self.ramification, self.variable, self.ring)

    def __add__(self, other):
        if not isinstance(other, PuiseuxSeries):
            return self._add_scalar(other)
        self._check(other)
        r = max(self.ramification, other.ramification)
        a, b = self.with_ramification(r), other.with_ramification(r)
        if b.exponent < a.exponent:
            a, b = b, a
        gap = (b.exponent - a.exponent) * r
        if is_exact(gap):
            if Fraction(gap).denominator != 1:
                raise ExponentMismatch(f"exponents {a.exponent}, {b.exponent} not on a common ladder")
            gap = int(gap)
        else:
            g = int(mpmath.nint(gap))
            if abs(gap - g) > mpmath.mpf(10) ** (-(mpmath.mp.dps // 2)):
                raise ExponentMismatch(f"exponents {a.exponent}, {b.exponent} not on a common ladder")
            gap = g
        n = min(a.terms, gap + b.terms)
        out = list(a.coeffs[:n])
        for j in range(gap, n):
            out[j] = out[j] + b.coeffs[j - gap]
        return PuiseuxSeries(tuple(out), a.exponent, r, self.variable, self.ring)

    __radd__ = __add__

    def _add_scalar(self, c):
        T = self.truncation * self.ramification
        if T <= 0:
            return self
        n = math.ceil(T) if is_exact(T) else int(mpmath.ceil(T))
        if self.ring == "rational" and not is_exact(c):
            raise RingMismatch("real scalar added to rational series")
        const = PuiseuxSeries((c,) + (self._zero(),) * (n - 1), Fraction(0), self.ramification,
                              self.variable, self.ring)
        return self + const

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PuiseuxSeries):
            if self.ring == "rational" and not is_exact(other):
                raise RingMismatch("real scalar times rational series")
            return PuiseuxSeries(tuple(c * other for c in self.coeffs), self.exponent,
                                 self.ramification, self.variable, self.ring)
        return series_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PuiseuxSeries):
            return self * series_pow(other, -1)
        return self * (Fraction(1, 1) / other if is_exact(other) else 1 / to_mpf(other))

    def __pow__(self, alpha):
        return series_pow(self, alpha)

    def exp(self):
        return series_exp(self)

    def log(self):
        return series_log(self)

    # -- evaluation and calculus ----------------------------------------------
    def __call__(self, x):
        """Sum the known terms at a positive numeric argument."""
        x = to_mpf(x)
        t = x ** (mpf(1) / self.ramification)
        acc = mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * t + to_mpf(c)
        return acc * x ** to_mpf(self.exponent)

    def integrate(self) -> "PuiseuxSeries":
        """Termwise antiderivative vanishing at zero (requires exponents > -1)."""
        out = []
        for e, c in zip(self.exponents(), self.coeffs):
            if e + 1 == 0:
                raise ValueError("logarithmic term in integral")
            out.append(c / (e + 1) if self.ring == "rational" else c / to_mpf(e + 1))
        return PuiseuxSeries(tuple(out), self.exponent + 1, self.ramification, self.variable, self.ring)

    def compose(self, inner: "PuiseuxSeries") -> "PuiseuxSeries":
        """Substitute ``inner`` (integer ladder, positive order) for the variable.

        ``self`` must be an integer power series (ramification 1, exponent 0).
        The result lives in ``inner``'s variable.
        """
        if self.ramification != 1 or self.exponent != 0:
            raise ValueError("outer series must be a power series")
        if self.ring != inner.ring:
            raise RingMismatch(f"{self.ring} vs {inner.ring}")
        inner = inner.normalized()
        if inner.exponent <= 0 or inner.ramification != 1 or not is_exact(inner.exponent):
            raise ValueError("inner series must be an integer ladder with positive order")
        g = int(inner.exponent)
        # known through min(terms*g, g + inner.terms) exclusive
        n = min(self.terms * g, g + inner.terms)
        base = PuiseuxSeries(inner.coeffs, inner.exponent, 1, inner.variable, inner.ring)
        acc = PuiseuxSeries.constant(self.coeffs[-1], n, inner.variable, self.ring)
        for c in reversed(self.coeffs[:-1]):
            acc = acc * base
            acc = _pad(acc, n) + PuiseuxSeries.constant(c, n, inner.variable, self.ring)
        return _pad(acc, n).truncate(n)


def _pad(s: PuiseuxSeries, n: int) -> PuiseuxSeries:
    """Re-express ``s`` with exponent 0 (zeros below), keeping its truncation."""
    if s.exponent == 0:
        return s
    k = int(s.exponent * s.ramification)
    z = s._zero()
    return PuiseuxSeries((z,) * k + s.coeffs, Fraction(0), s.ramification, s.variable, s.ring)


def _ladder(a: PuiseuxSeries) -> tuple:
    """Coefficients from exponent 0 upward (requires exponent in (1/r)N)."""
    j = a.exponent * a.ramification
    if not is_exact(j) or Fraction(j).denominator != 1:
        raise ExponentMismatch(f"exponent {a.exponent} not on the 1/{a.ramification} ladder")
    if j < 0:
        raise NegativeLeadingExponent(f"leading exponent {a.exponent} < 0")
    return (a._zero(),) * int(j) + a.coeffs


def series_mul(a: PuiseuxSeries, b: PuiseuxSeries) -> PuiseuxSeries:
    """Cauchy product; the result keeps ``min`` of the two relative truncations."""
    a._check(b)
    r = max(a.ramification, b.ramification)
    a, b = a.with_ramification(r), b.with_ramification(r)
    n = min(a.terms, b.terms)
    ac, bc = a.coeffs, b.coeffs
    z = a._zero()
    out = []
    for k in range(n):
        s = z
        for i in range(k + 1):
            if ac[i] and bc[k - i]:
                s += ac[i] * bc[k - i]
        out.append(s)
    return PuiseuxSeries(tuple(out), a.exponent + b.exponent, r, a.variable, a.ring)


def series_exp(a: PuiseuxSeries) -> PuiseuxSeries:
    """exp of a series with non-negative leading exponent on its ladder."""
    f = list(_ladder(a))
    n = len(f)
    c0 = f[0]
    if c0 != 0:
        if a.ring == "rational":
            raise RingMismatch("constant term in exp requires the real ring")
        scale = mpmath.exp(c0)
        f[0] = mpf(0)
    else:
        scale = 1
    g = [Fraction(1) if a.ring == "rational" else mpf(1)]
    for m in range(1, n):
        s = a._zero()
        for k in range(1, m + 1):
            if f[k]:
                s += k * f[k] * g[m - k]
        g.append(s / m)
    out = tuple(scale * c for c in g) if c0 != 0 else tuple(g)
    return PuiseuxSeries(out, Fraction(0), a.ramification, a.variable, a.ring)


def series_log(a: PuiseuxSeries) -> PuiseuxSeries:
    """log of a series with exponent 0 and non-zero constant term."""
    if a.exponent != 0:
        raise ExponentMismatch("log needs exponent 0 (a log of the variable is not a series)")
    c0 = a.coeffs[0]
    if c0 == 0:
        raise ZeroLeadingCoefficient("log of series with zero constant term")
    if a.ring == "rational" and c0 != 1:
        raise RingMismatch("log of a rational series needs constant term 1")
    f = [c / c0 for c in a.coeffs]
    n = len(f)
    g = [mpmath.log(c0) if a.ring == "real" else Fraction(0)]
    for m in range(1, n):
        s = m * f[m]
        for k in range(1, m):
            s -= k * g[k] * f[m - k]
        g.append(s / m)
    return PuiseuxSeries(tuple(g), Fraction(0), a.ramification, a.variable, a.ring)


def series_pow(a: PuiseuxSeries, alpha) -> PuiseuxSeries:
    """``a**alpha`` via the J.C.P. Miller recurrence on ``(1 + tail/c0)**alpha``."""
    a = a.normalized()
    c0 = a.coeffs[0]
    if c0 == 0:
        raise ZeroLeadingCoefficient("power of a series with zero leading coefficient")
    exact = a.ring == "rational" and is_exact(alpha)
    if a.ring == "rational" and not exact:
        raise RingMismatch("non-rational power of a rational series")
    if exact:
        alpha = Fraction(alpha)
        if alpha.denominator == 1:
            lead = c0 ** alpha.numerator
        elif c0 == 1:
            lead = Fraction(1)
        else:
            raise RingMismatch("fractional power of a non-unit rational constant")
    else:
        alpha = to_mpf(alpha) if not isinstance(alpha, mpmath.mpf) else alpha
        lead = to_mpf(c0) ** alpha
    f = [c / c0 for c in a.coeffs]
    n = len(f)
    g = [Fraction(1) if exact else mpf(1)]
    for m in range(1, n):
        s = Fraction(0) if exact else mpf(0)
        for k in range(1, m + 1):
            if f[k]:
                s += ((alpha + 1) * k - m) * f[k] * g[m - k]
        g.append(s / m)
    new_exp = a.exponent * alpha
    if not is_exact(new_exp):
        new_exp = to_mpf(new_exp)
    return PuiseuxSeries(tuple(lead * c for c in g), new_exp, a.ramification, a.variable, a.ring)


def series_revert(s: PuiseuxSeries) -> PuiseuxSeries:
    """Compositional inverse of ``s = c1 x + c2 x**2 + ...`` (Lagrange inversion)."""
    from .errors import ReversionFailure

    s = s.normalized()
    if s.exponent != 1 or s.ramification != 1:
        raise ReversionFailure("reversion needs a series starting at x**1")
    if s.coeffs[0] == 0:
        raise ReversionFailure("zero linear coefficient")
    n = s.terms
    u = PuiseuxSeries(s.coeffs, Fraction(0), 1, s.variable, s.ring)  # s = x*u(x)
    uinv = series_pow(u, -1)
    out = []
    power = PuiseuxSeries.constant(Fraction(1) if s.ring == "rational" else mpf(1), n, s.variable, s.ring)
    for k in range(1, n + 1):
        power = series_mul(power, uinv)  # u**(-k)
        c = power.coeffs[k - 1]
        out.append(c / k)
    return PuiseuxSeries(tuple(out), Fraction(1), 1, s.variable, s.ring)


def binomial_series(alpha, terms: int, variable="sigma", sign=-1, ring=None) -> PuiseuxSeries:
    """``(1 + sign*x)**alpha`` through ``terms`` coefficients."""
    ring = ring or ("rational" if is_exact(alpha) else "real")
    one = Fraction(1) if ring == "rational" else mpf(1)
    out = [one]
    for k in range(1, terms):
        out.append(out[-1] * (alpha - k + 1) / k * sign)
    return PuiseuxSeries(tuple(out), Fraction(0), 1, variable, ring)


# ---------------------------------------------------------------------------
# rational functions of the formal parameter lambda

_LAM = sympy.Symbol("lambda")


def _trim(coeffs):
    c = list(coeffs)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


@dataclass(frozen=True)
class RationalFunc:
    """``numerator(lambda)/denominator(lambda)`` with exact rational coefficients.

    Coefficient tuples are in ascending powers. After construction the pair is
    coprime and the denominator is monic.
    """

    numerator: tuple
    denominator: tuple = (Fraction(1),)

    def __post_init__(self):
        num = _trim(Fraction(c) for c in self.numerator)
        den = _trim(Fraction(c) for c in self.denominator)
        if all(c == 0 for c in den):
            raise ZeroDivisionError("zero denominator")
        if all(c == 0 for c in num):
            num, den = (Fraction(0),), (Fraction(1),)
        else:
            pn = sympy.Poly(list(reversed([sympy.Rational(c.numerator, c.denominator) for c in num])), _LAM, domain="QQ")
            pd = sympy.Poly(list(reversed([sympy.Rational(c.numerator, c.denominator) for c in den])), _LAM, domain="QQ")
            g = sympy.gcd(pn, pd)
            pn, pd = pn.quo(g), pd.quo(g)
            lc = pd.LC()
            pn, pd = pn.quo_ground(lc), pd.quo_ground(lc)
            num = tuple(Fraction(int(c.p), int(c.q)) for c in reversed(pn.all_coeffs()))
            den = tuple(Fraction(int(c.p), int(c.q)) for c in reversed(pd.all_coeffs()))
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    @classmethod
    def from_expr(cls, expr, symbol=_LAM) -> "RationalFunc":
        if isinstance(expr, str):
            # "lambda" is a Python keyword, so the parser needs a stand-in name
            expr = sympy.sympify(re.sub(r"\blambda\b", "lam_", expr), locals={"lam_": symbol})
        n, d = sympy.fraction(sympy.together(sympy.sympify(expr)))
        pn, pd = sympy.Poly(n, symbol, domain="QQ"), sympy.Poly(d, symbol, domain="QQ")
        conv = lambda p: tuple(Fraction(int(c.p), int(c.q)) for c in reversed(p.all_coeffs()))
        return cls(conv(pn), conv(pd))

    @property
    def degrees(self):
        return len(self.numerator) - 1, len(self.denominator) - 1

    def __call__(self, lam):
        if is_exact(lam):
            lam = Fraction(lam)
            ev = lambda cs: sum((c * lam ** k for k, c in enumerate(cs)), Fraction(0))
            return ev(self.numerator) / ev(self.denominator)
        lam = to_mpf(lam)
        ev = lambda cs: mpmath.polyval([to_mpf(c) for c in reversed(cs)], lam)
        return ev(self.numerator) / ev(self.denominator)

    def to_sympy(self):
        n = sum(sympy.Rational(c.numerator, c.denominator) * _LAM ** k for k, c in enumerate(self.numerator))
        d = sum(sympy.Rational(c.numerator, c.denominator) * _LAM ** k for k, c in enumerate(self.denominator))
        return n / d

    def __str__(self):
        def poly(cs):
            terms = []
            for k in range(len(cs) - 1, -1, -1):
                c = cs[k]
                if c == 0:
                    continue
                mono = "" if k == 0 else ("lambda" if k == 1 else f"lambda^{k}")
                if mono and c == 1:
                    terms.append(mono)
                elif mono:
                    terms.append(f"({c})*{mono}")
                else:
                    terms.append(f"({c})")
            return " + ".join(terms) if terms else "0"

        if self.denominator == (Fraction(1),):
            return poly(self.numerator)
        return f"[{poly(self.numerator)}] / [{poly(self.denominator)}]"

    def factored(self) -> str:
        return str(sympy.factor(self.to_sympy()))


@dataclass(frozen=True)
class Reconstruction:
    func: RationalFunc
    fit_residuals: tuple
    holdout_residuals: tuple


def rational_reconstruct(samples, num_deg: int, den_deg: int, holdout=None, tol=None) -> Reconstruction:
    """Fit ``P(lambda)/Q(lambda)`` with ``deg P <= num_deg``, ``deg Q <= den_deg``.

    ``samples`` is a sequence of ``(lambda, value)`` pairs with exact rational
    ``lambda``. Exact values are solved over Q; floating values are solved in
    mpmath and the coefficients recovered as rationals. The first
    ``num_deg + den_deg + 2`` samples are fitted, the remainder (plus
    ``holdout``) validate.
    """
    samples = [(Fraction(l), v) for l, v in samples]
    holdout = [(Fraction(l), v) for l, v in (holdout or [])]
    need = num_deg + den_deg + 2
    if len({l for l, _ in samples}) != len(samples):
        raise RankDeficient("repeated sample points")
    if len(samples) < need:
        raise RankDeficient(f"need {need} samples, got {len(samples)}")
    fit, extra = samples[:need], samples[need:]
    holdout = extra + holdout
    if not holdout:
        raise RankDeficient("no holdout samples supplied")
    exact = all(is_exact(v) for _, v in samples + holdout)

    # unknowns p_0..p_n, q_0..q_d; equations p(l) - v q(l) = 0
    rows = []
    for l, v in fit:
        if exact:
            v = Fraction(v)
            rows.append([l ** j for j in range(num_deg + 1)] + [-v * l ** j for j in range(den_deg + 1)])
        else:
            L, V = to_mpf(l), to_mpf(v)
            rows.append([L ** j for j in range(num_deg + 1)] + [-V * L ** j for j in range(den_deg + 1)])
    if exact:
        m = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r] for r in rows])
        null = m.nullspace()
        if not null:
            raise ValidationFailed("no rational function with these degree bounds fits the samples")
        vec = [Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in null[0]]
    else:
        A = mpmath.matrix(rows)
        _, S, V = mpmath.svd_r(A)
        vec = [V[V.rows - 1, j] for j in range(V.cols)]
        big = max(abs(x) for x in vec)
        vec = [x / big for x in vec]
        # rationalize relative to the largest denominator coefficient
        lead = next(x for x in reversed(vec[num_deg + 1:]) if abs(x) > mpmath.mpf(10) ** (-mpmath.mp.dps // 3))
        limit = 10 ** (mpmath.mp.dps // 3)
        vec = [Fraction(mpmath.nstr(x / lead, mpmath.mp.dps)).limit_denominator(limit) for x in vec]
    num, den = vec[: num_deg + 1], vec[num_deg + 1:]
    if all(c == 0 for c in den):
        raise RankDeficient("degenerate sample set (zero denominator)")
    func = RationalFunc(tuple(num), tuple(den))

    def resid(pairs):
        out = []
        for l, v in pairs:
            if exact:
                out.append(abs(func(l) - Fraction(v)))
            else:
                out.append(abs(func(to_mpf(l)) - to_mpf(v)))
        return tuple(out)

    tol = tol if tol is not None else (0 if exact else mpmath.mpf(10) ** (-(mpmath.mp.dps // 2)))
    fit_res, hold_res = resid(fit), resid(holdout)
    bad = [r for r in fit_res + hold_res if r > tol]
    if bad:
        raise ValidationFailed(f"holdout mismatch {max(bad)}; degree bounds too small?")
    return Reconstruction(func, fit_res, hold_res)
