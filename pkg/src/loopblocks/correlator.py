"""Two-point function of layering operators on the upper half-plane.

The two-point function is

    <O_b1(z1) O_b2(z2)> = |z1 - conj(z2)|**(-4 D1) |z2 - conj(z2)|**(2 D1 - 2 D2) G(sigma),
    G(sigma) = sigma**k (1 - sigma)**(-2 D1) exp{k (1 - sigma) 3F2(1,1,4/3; 2,5/3; 1 - sigma)},

with ``k = D12 - D1 - D2``, ``D = lambda/10 (1 - cos beta)`` and
``sigma = |z1 - z2|**2 / |z1 - conj(z2)|**2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Union

import mpmath

from .errors import ExtrapolationUnstable, SlowConvergence
from .numerics import (
    PuiseuxSeries,
    binomial_series,
    is_exact,
    series_exp,
    series_mul,
    to_mpf,
)
from .specfun import threeF2_exponent_series, threeF2_taylor


@dataclass(frozen=True)
class Angle:
    """An angle, kept exact when it is a rational multiple of pi."""

    pi_multiple: Optional[Fraction] = None
    radians: Optional[object] = None

    def __post_init__(self):
        if (self.pi_multiple is None) == (self.radians is None):
            raise ValueError("give exactly one of pi_multiple, radians")
        if self.pi_multiple is not None:
            object.__setattr__(self, "pi_multiple", Fraction(self.pi_multiple))

    @classmethod
    def of(cls, value) -> "Angle":
        if isinstance(value, Angle):
            return value
        return cls(radians=to_mpf(value))

    @classmethod
    def pi(cls, mult=1) -> "Angle":
        return cls(pi_multiple=Fraction(mult))

    @property
    def value(self):
        if self.pi_multiple is not None:
            return to_mpf(self.pi_multiple) * mpmath.pi
        return to_mpf(self.radians)

    def __add__(self, other: "Angle") -> "Angle":
        other = Angle.of(other)
        if self.pi_multiple is not None and other.pi_multiple is not None:
            return Angle(pi_multiple=self.pi_multiple + other.pi_multiple)
        return Angle(radians=self.value + other.value)

    def __neg__(self):
        if self.pi_multiple is not None:
            return Angle(pi_multiple=-self.pi_multiple)
        return Angle(radians=-self.radians)

    @property
    def is_pi_multiple(self) -> bool:
        return self.pi_multiple is not None and self.pi_multiple.denominator == 1

    def exact_cos(self):
        """cos as a Fraction when it is rational, else None."""
        if self.pi_multiple is None:
            return None
        f = self.pi_multiple % 2
        table = {Fraction(0): 1, Fraction(1): -1, Fraction(1, 2): 0, Fraction(3, 2): 0,
                 Fraction(1, 3): Fraction(1, 2), Fraction(5, 3): Fraction(1, 2),
                 Fraction(2, 3): Fraction(-1, 2), Fraction(4, 3): Fraction(-1, 2)}
        v = table.get(f)
        return None if v is None else Fraction(v)

    def cos(self):
        e = self.exact_cos()
        return e if e is not None else mpmath.cos(self.value)

    def __str__(self):
        if self.pi_multiple is not None:
            m = self.pi_multiple
            if m in (1, -1):
                return "pi" if m == 1 else "-pi"
            if m.numerator in (1, -1):
                return f"{'-' if m < 0 else ''}pi/{m.denominator}"
            return f"{m}*pi"
        return mpmath.nstr(self.radians, 15)


def layering_dim(lam, beta):
    """Delta_beta = lambda/10 (1 - cos beta)."""
    cb = Angle.of(beta).cos()
    if is_exact(lam) and is_exact(cb):
        return Fraction(lam) / 10 * (1 - cb)
    return to_mpf(lam) / 10 * (1 - to_mpf(cb))


def dims(lam, beta1, beta2):
    """(c, D_beta1, D_beta2, D_12) with c = 2 lambda and D_12 from beta1 + beta2."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    b1, b2 = Angle.of(beta1), Angle.of(beta2)
    c = 2 * lam
    return c, layering_dim(lam, b1), layering_dim(lam, b2), layering_dim(lam, b1 + b2)


@dataclass(frozen=True)
class LayeringParams:
    lam: object
    beta1: Angle
    beta2: Angle

    def __post_init__(self):
        lam = self.lam
        object.__setattr__(self, "lam", Fraction(lam) if is_exact(lam) else to_mpf(lam))
        object.__setattr__(self, "beta1", Angle.of(self.beta1))
        object.__setattr__(self, "beta2", Angle.of(self.beta2))

    @property
    def c(self):
        return 2 * self.lam

    @property
    def d1(self):
        return layering_dim(self.lam, self.beta1)

    @property
    def d2(self):
        return layering_dim(self.lam, self.beta2)

    @property
    def d12(self):
        return layering_dim(self.lam, self.beta1 + self.beta2)

    @property
    def kappa(self):
        return self.d12 - self.d1 - self.d2

    @property
    def exact(self) -> bool:
        return all(is_exact(x) for x in (self.lam, self.d1, self.d2, self.d12))

    def key(self):
        return (self.lam, self.beta1, self.beta2, mpmath.mp.dps)

    def __str__(self):
        return f"lambda={self.lam}, beta1={self.beta1}, beta2={self.beta2}"


# ---------------------------------------------------------------------------
# channel expansions


def g_s_expansion(params: LayeringParams, order: int) -> PuiseuxSeries:
    """G(sigma) = sigma**k * sum_{j} A_{j/3} sigma**(j/3), j = 0..3*order."""
    return _g_s_cached(params.key(), order)


@lru_cache(maxsize=64)
def _g_s_cached(key, order):
    lam, b1, b2, _ = key
    params = LayeringParams(lam, b1, b2)
    kappa = to_mpf(params.kappa)
    L = threeF2_exponent_series(order)
    pref = mpmath.exp(kappa * L.value_at_zero)
    e = series_exp(L.series * kappa)
    binom = binomial_series(-2 * to_mpf(params.d1), order + 1, "sigma", ring="real").with_ramification(3)
    out = series_mul(e, binom) * pref
    # log(sigma) coefficient of L contributes sigma**(kappa*log_coefficient)
    return out.shift(kappa + kappa * L.log_coefficient if L.log_coefficient else kappa)


def g_t_expansion(params: LayeringParams, order: int) -> PuiseuxSeries:
    """G(sigma) * w**(2 D1) = sum_k B_k w**k with w = 1 - sigma; exact for rational inputs."""
    return _g_t_cached(params.key(), order)


@lru_cache(maxsize=64)
def _g_t_cached(key, order):
    lam, b1, b2, _ = key
    params = LayeringParams(lam, b1, b2)
    kappa = params.kappa
    ring = "rational" if is_exact(kappa) else "real"
    F = threeF2_taylor(order - 1 if order else 0, "w")
    wF = PuiseuxSeries(F.coeffs, Fraction(1), 1, "w", "rational")
    if ring == "real":
        wF = wF.to_real()
    arg = wF * kappa
    e = series_exp(arg)
    binom = binomial_series(kappa, order + 1, "w", ring=ring)
    out = series_mul(binom, e).truncate(order + 1)
    return out


# ---------------------------------------------------------------------------
# numeric evaluation


def _as_point(z):
    z = mpmath.mpmathify(z)
    if not isinstance(z, mpmath.mpc):
        z = mpmath.mpc(z, 0)
    return z


@dataclass(frozen=True)
class HalfPlanePoint:
    x: object
    y: object

    @property
    def z(self):
        return mpmath.mpc(to_mpf(self.x), to_mpf(self.y))


def cross_ratio(z1, z2):
    z1, z2 = _point(z1), _point(z2)
    return abs(z1 - z2) ** 2 / abs(z1 - mpmath.conj(z2)) ** 2


def _point(z):
    return z.z if isinstance(z, HalfPlanePoint) else _as_point(z)


def _auto_order(rho, terms_per_unit, dps):
    # terms needed so that rho**N < 10**(-dps - 5)
    n = int(mpmath.ceil((dps + 5) / -mpmath.log10(rho))) + 4
    return max(4, -(-n // terms_per_unit))


def g_value(params: LayeringParams, sigma, channel: Optional[str] = None, order: Optional[int] = None):
    """G(sigma) summed from one channel's series (default: the faster one)."""
    sigma = to_mpf(sigma)
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    channel = channel or ("s" if sigma < mpmath.mpf(1) / 2 else "t")
    dps = mpmath.mp.dps
    if channel == "s":
        rho = sigma ** (mpmath.mpf(1) / 3)
        n = order if order is not None else _auto_order(rho, 3, dps)
        series = g_s_expansion(params, n)
        coeffs = series.coeffs
    else:
        rho = 1 - sigma
        n = order if order is not None else _auto_order(rho, 1, dps)
        series = g_t_expansion(params, n)
        coeffs = series.coeffs
    tail = max(abs(to_mpf(c)) for c in coeffs[-5:]) * rho ** len(coeffs) / (1 - rho)
    if tail > mpmath.mpf(10) ** (-(dps - 10)) * max(1, abs(to_mpf(coeffs[0]))):
        raise SlowConvergence(f"{channel}-channel tail ~ {mpmath.nstr(tail, 3)} at order {n}")
    if channel == "s":
        return series(sigma)
    w = 1 - sigma
    acc = mpmath.mpf(0)
    for c in reversed(coeffs):
        acc = acc * w + to_mpf(c)
    return acc * w ** (-2 * to_mpf(params.d1))


def g_direct(params: LayeringParams, sigma):
    """Closed-form G(sigma) through mpmath's 3F2 (independent of the series)."""
    s = to_mpf(sigma)
    k = to_mpf(params.kappa)
    f = mpmath.hyp3f2(1, 1, mpmath.mpf(4) / 3, 2, mpmath.mpf(5) / 3, 1 - s)
    return s ** k * (1 - s) ** (-2 * to_mpf(params.d1)) * mpmath.exp(k * (1 - s) * f)


def two_point(params: LayeringParams, z1, z2, channel: Optional[str] = None, order: Optional[int] = None):
    """<O_beta1(z1) O_beta2(z2)> on the upper half-plane."""
    z1, z2 = _point(z1), _point(z2)
    if z1.imag <= 0 or z2.imag <= 0:
        raise ValueError("points must lie in the upper half-plane")
    if z1 == z2:
        raise ValueError("coincident points")
    d1, d2 = to_mpf(params.d1), to_mpf(params.d2)
    sigma = cross_ratio(z1, z2)
    pref = abs(z1 - mpmath.conj(z2)) ** (-4 * d1) * abs(z2 - mpmath.conj(z2)) ** (2 * d1 - 2 * d2)
    return pref * g_value(params, sigma, channel, order)


def one_point(lam, beta, z):
    """<O_beta(z)> = |z - conj(z)|**(-2 D_beta)."""
    z = _point(z)
    return abs(z - mpmath.conj(z)) ** (-2 * to_mpf(layering_dim(lam, beta)))


REFERENCE = (Fraction(1, 2), Angle.pi())


def mu_loop(z1, z2, lam=None, beta=None):
    """Loop measure of loops winding around both points, extracted from the two-point function.

    mu = log[<O_-b(z1) O_b(z2)> / (<O_-b(z1)><O_b(z2)>)] / (2 lambda (1 - cos b)),
    evaluated at a reference (lambda, beta); the result does not depend on it.
    """
    lam = REFERENCE[0] if lam is None else lam
    beta = REFERENCE[1] if beta is None else Angle.of(beta)
    params = LayeringParams(lam, -beta, beta)
    ratio = two_point(params, z1, z2) / (one_point(lam, -beta, z1) * one_point(lam, beta, z2))
    return mpmath.log(ratio) / (2 * to_mpf(lam) * (1 - to_mpf(Angle.of(beta).cos())))


@dataclass(frozen=True)
class BubbleEstimate:
    value: object
    error: object
    ladder: tuple


def richardson(values, ratio=2, order=3):
    """Richardson table for f(h) = f0 + c1 h + c2 h**2 + ... sampled at h/ratio**k.

    Returns the final estimate and the difference to the previous one.
    """
    table = [list(values)]
    for j in range(1, order + 1):
        prev = table[-1]
        f = mpmath.mpf(ratio) ** j
        table.append([(f * prev[i + 1] - prev[i]) / (f - 1) for i in range(len(prev) - 1)])
    last = table[-1]
    return last[-1], abs(last[-1] - last[-2]) if len(last) > 1 else mpmath.inf


def mu_bubble(z1, x2, levels: int = 11, order: int = 3, tol=None) -> BubbleEstimate:
    """Bubble measure as the limit of 2 mu_loop(z1, x2 + i eps)/eps**2 (Richardson in eps)."""
    z1 = _point(z1)
    x2 = to_mpf(x2)
    eps0 = z1.imag / 8
    eps = [eps0 / mpmath.mpf(2) ** k for k in range(levels)]
    vals = [2 * mu_loop(z1, mpmath.mpc(x2, e)) / e ** 2 for e in eps]
    value, err = richardson(vals, 2, order)
    tol = tol if tol is not None else mpmath.mpf("1e-10") * abs(value)
    if not err < tol:
        raise ExtrapolationUnstable(f"Richardson error {mpmath.nstr(err, 3)} exceeds {mpmath.nstr(tol, 3)}")
    return BubbleEstimate(value, err, tuple(eps))
