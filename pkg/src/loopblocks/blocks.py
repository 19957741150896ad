"""Virasoro four-point blocks: the q-recursion and a Gram-matrix oracle.

Conventions. ``c = 1 - 6 (b - 1/b)**2``, ``Delta(P) = (c - 1)/24 + P**2``,
``P_(r,s) = (r b - s/b)/2``. A block with externals ``(D1, D2, D3, D4)`` is
the one whose sigma-expansion starts

    sigma**(D - D1 - D2) * (1 + (D1 - D2 + D)(D + D4 - D3)/(2 D) sigma + ...)

so D1 sits at sigma, D2 at 0, D4 at 1 and D3 at infinity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional, Sequence

import mpmath

from .errors import NearPole, SingularGram
from .numerics import (
    PuiseuxSeries,
    RankDeficient,
    binomial_series,
    determinant,
    is_exact,
    series_mul,
    series_pow,
    solve_linear,
    to_mpf,
)
from .specfun import nome_series, theta_series

POLE_THRESHOLD = mpmath.mpf("1e-10")


def b_from_c(c):
    """The root b >= 1 of c = 1 - 6 (b - 1/b)**2 (complex of unit modulus for c > 1)."""
    c = to_mpf(c)
    t = mpmath.sqrt((1 - c) / 6)
    return (t + mpmath.sqrt(t * t + 4)) / 2


def c_from_b(b):
    return 1 - 6 * (b - 1 / b) ** 2


def momentum(c, delta):
    """P = +sqrt(delta - (c-1)/24), principal branch."""
    return mpmath.sqrt(to_mpf(delta) - (to_mpf(c) - 1) / 24)


def delta_from_momentum(c, p):
    return (to_mpf(c) - 1) / 24 + p * p


def p_rs(r, s, b):
    return (r * b - s / b) / 2


def degenerate_dim(m: int, n: int, b):
    """Kac dimension Delta_(m,n) = Delta(P_(m,n))."""
    if m < 1 or n < 1:
        raise ValueError("m, n must be positive")
    c = c_from_b(b)
    return (c - 1) / 24 + p_rs(m, n, b) ** 2


@dataclass(frozen=True)
class BlockParams:
    c: object
    delta: object
    externals: tuple
    b: Optional[object] = None

    def __post_init__(self):
        if len(self.externals) != 4:
            raise ValueError("four external dimensions required")
        object.__setattr__(self, "externals", tuple(self.externals))

    @classmethod
    def from_lambda(cls, lam, delta, externals, b=None):
        return cls(2 * lam, delta, tuple(externals), b)

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for v in (self.c, self.delta) + self.externals)

    @property
    def bval(self):
        return self.b if self.b is not None else b_from_c(self.c)

    @property
    def momentum(self):
        return momentum(self.c, self.delta)

    @property
    def ext_momenta(self):
        return tuple(momentum(self.c, d) for d in self.externals)

    def with_delta(self, delta) -> "BlockParams":
        return BlockParams(self.c, delta, self.externals, self.b)


@dataclass(frozen=True)
class BlockSeries:
    """Normalized block ``x**exponent * sum_k coeffs[k] x**k`` with coeffs[0] = 1."""

    params: BlockParams
    variable: str
    coeffs: tuple
    exponent: object

    def as_series(self) -> PuiseuxSeries:
        return PuiseuxSeries(self.coeffs, Fraction(0), 1, self.variable)


# ---------------------------------------------------------------------------
# q-recursion


def rmn(m: int, n: int, p_ext: Sequence, b):
    """Residue coefficient R_{m,n} of the q-recursion.

    R = -P_(m,n) * prod_{r,s step 2} prod_+- (P2 +- P1 + P_rs)(P3 +- P4 + P_rs)
        / prod_{r=1-m..m, s=1-n..n, (r,s) != (0,0)} 2 P_(r,s)

    Returns an exact 0 when a numerator factor vanishes identically.
    """
    if m < 1 or n < 1:
        raise ValueError("m, n must be positive")
    p1, p2, p3, p4 = p_ext
    num = -p_rs(m, n, b)
    for r in range(1 - m, m, 2):
        for s in range(1 - n, n, 2):
            prs = 0 if (r == 0 and s == 0) else p_rs(r, s, b)
            for sgn in (1, -1):
                f = (p2 + sgn * p1 + prs) * (p3 + sgn * p4 + prs)
                if f == 0:
                    return 0
                num *= f
    den = 1
    for r in range(1 - m, m + 1):
        for s in range(1 - n, n + 1):
            if r == 0 and s == 0:
                continue
            den *= 2 * p_rs(r, s, b)
    if den == 0:
        raise NearPole(m, n, 0)
    return num / den


class _Recursion:
    """Memoized H-coefficients for one (c, externals) context."""

    def __init__(self, params: BlockParams, q_order: int, pole_threshold):
        self.b = params.bval
        self.c = c_from_b(self.b)
        self.order = q_order
        self.thr = pole_threshold
        p_ext = params.ext_momenta
        self.pairs = [(m, n) for m in range(1, q_order + 1) for n in range(1, q_order // m + 1)]
        self.R = {}
        self.dmn = {}
        for m, n in self.pairs:
            self.dmn[m, n] = degenerate_dim(m, n, self.b)
            try:
                self.R[m, n] = rmn(m, n, p_ext, self.b)
            except NearPole as exc:
                raise NearPole(m, n, exc.distance) from None
        self.inner = {}  # (m, n) -> list of q-coefficients of H at Delta_(m,-n)

    def _inner(self, m, n, k):
        coeffs = self.inner.setdefault((m, n), [1])
        while len(coeffs) <= k:
            coeffs.append(self._coeff(self.dmn[m, n] + m * n, len(coeffs)))
        return coeffs[k]

    def _coeff(self, delta, k):
        total = 0
        for (m, n) in self.pairs:
            mn = m * n
            if mn > k:
                continue
            R = self.R[m, n]
            if R == 0:
                continue
            dist = delta - self.dmn[m, n]
            if abs(dist) < self.thr:
                raise NearPole(m, n, abs(dist))
            total += 16 ** mn * R / dist * self._inner(m, n, k - mn)
        return total

    def h(self, delta):
        return [1] + [self._coeff(delta, k) for k in range(1, self.order + 1)]


def _real(x):
    if isinstance(x, mpmath.mpc):
        return x.real
    return to_mpf(x)


def h_series(params: BlockParams, q_order: int, pole_threshold=POLE_THRESHOLD) -> PuiseuxSeries:
    """H_Delta(q) through q**q_order."""
    rec = _Recursion(params, q_order, pole_threshold)
    coeffs = rec.h(to_mpf(params.delta))
    return PuiseuxSeries(tuple(_real(c) for c in coeffs), Fraction(0), 1, "q", "real")


def _assemble(params: BlockParams, order: int, pole_threshold) -> tuple:
    c = to_mpf(params.c)
    d1, d2, d3, d4 = (to_mpf(x) for x in params.externals)
    delta = to_mpf(params.delta)
    nome = nome_series(order + 1)
    q = nome.q.truncate(order).to_real()
    ratio = PuiseuxSeries(tuple(16 * x for x in nome.q.coeffs), Fraction(0), 1, "sigma").to_real()
    h = h_series(params, order, pole_threshold).compose(PuiseuxSeries(q.coeffs, q.exponent, 1, "q", "real"))
    h = PuiseuxSeries(h.coeffs, Fraction(0), 1, "sigma", "real")
    theta = theta_series(3, order).to_real().compose(PuiseuxSeries(q.coeffs, q.exponent, 1, "q", "real"))
    theta = PuiseuxSeries(theta.coeffs, Fraction(0), 1, "sigma", "real")
    shift = (c - 1) / 24
    parts = [
        series_pow(ratio, delta - shift),
        binomial_series(shift - d1 - d4, order + 1, "sigma", ring="real"),
        series_pow(theta, (c - 1) / 2 - 4 * (d1 + d2 + d3 + d4)),
        h,
    ]
    out = parts[0]
    for p in parts[1:]:
        out = series_mul(out, p)
    return out.coeffs[: order + 1]


def block_s(params: BlockParams, order: int, pole_threshold=POLE_THRESHOLD, method: str = "recursion") -> BlockSeries:
    """s-channel block as a sigma-series, normalized to a_0 = 1.

    ``method`` is ``"recursion"``, ``"gram"`` or ``"auto"`` (recursion, falling
    back to the Gram oracle when the recursion meets a pole, e.g. at c = 1).
    """
    d1, d2 = params.externals[0], params.externals[1]
    exponent = params.delta - d1 - d2
    if method == "gram" or params.exact and method == "auto":
        coeffs = (1,) + tuple(gram_block(params, order)) if order else (1,)
    else:
        try:
            coeffs = _assemble(params, order, pole_threshold)
        except NearPole:
            if method != "auto":
                raise
            coeffs = (1,) + tuple(gram_block(params, order)) if order else (1,)
    return BlockSeries(params, "sigma", tuple(coeffs), exponent)


def block_t(params: BlockParams, order: int, pole_threshold=POLE_THRESHOLD, method: str = "recursion") -> BlockSeries:
    """t-channel block in w = 1 - sigma: the s-block with externals (D1, D4, D3, D2)."""
    d1, d2, d3, d4 = params.externals
    swapped = BlockParams(params.c, params.delta, (d1, d4, d3, d2), params.b)
    s = block_s(swapped, order, pole_threshold, method)
    return BlockSeries(params, "w", s.coeffs, s.exponent)


# ---------------------------------------------------------------------------
# Gram-matrix oracle


def partitions(n: int, min_part: int = 1):
    """Partitions of n as non-increasing tuples, in reverse lexicographic order."""
    def gen(n, maxp):
        if n == 0:
            yield ()
            return
        for k in range(min(n, maxp), min_part - 1, -1):
            for rest in gen(n - k, k):
                yield (k,) + rest
    return list(gen(n, n))


class VermaModule:
    """Verma module of highest weight ``delta`` at central charge ``c``.

    States are dicts mapping monomials ``(k1, k2, ...)`` (meaning
    L_{-k1} L_{-k2} ... |delta>) to coefficients; monomials need not be ordered.
    """

    def __init__(self, c, delta):
        self.c = c
        self.delta = delta
        self._memo = {}

    def lower(self, n: int, mono: tuple) -> dict:
        """L_n (n > 0) applied to a monomial."""
        key = (n, mono)
        if key in self._memo:
            return self._memo[key]
        out = {}
        if mono:
            k, rest = mono[0], mono[1:]
            # L_{-k} (L_n rest)
            for m, v in self.lower(n, rest).items():
                _acc(out, (k,) + m, v)
            # [L_n, L_{-k}] rest = (n + k) L_{n-k} rest + central term
            j = n - k
            if j > 0:
                for m, v in self.lower(j, rest).items():
                    _acc(out, m, (n + k) * v)
            elif j == 0:
                _acc(out, rest, (n + k) * (self.delta + sum(rest)))
                _acc(out, rest, self.c * Fraction(n * (n * n - 1), 12))
            else:
                _acc(out, (-j,) + rest, n + k)
        self._memo[key] = out
        return out

    def inner(self, left: tuple, right: tuple):
        """<L_{-left} delta | L_{-right} delta> for monomials at equal level."""
        state = {right: 1}
        for k in left:  # bra is <delta| L_{kr} ... L_{k1}; L_{k1} acts first
            nxt = {}
            for m, v in state.items():
                for m2, v2 in self.lower(k, m).items():
                    _acc(nxt, m2, v * v2)
            state = nxt
        return state.get((), 0)


def _acc(d, k, v):
    if v == 0:
        return
    nv = d.get(k, 0) + v
    if nv == 0:
        d.pop(k, None)
    else:
        d[k] = nv


def gram_matrix(c, delta, level: int, basis=None):
    basis = basis if basis is not None else partitions(level)
    v = VermaModule(c, delta)
    return [[v.inner(y, z) for z in basis] for y in basis]


def _rho(mono, delta, d_near, d_far):
    out = 1
    tail = sum(mono)
    for k in mono:
        tail -= k
        out *= delta + k * d_near - d_far + tail
    return out


def gram_block(params: BlockParams, level: int, quotient: Optional[bool] = None) -> list:
    """Block coefficients a_1..a_level from Gram matrices of descendants.

    a_N = sum_{Y,Y'} rho_12(Y) [G_N^-1]_{YY'} rho_43(Y'). Exact when all inputs
    are exact rationals. ``quotient`` (default: automatic for delta == 0 with
    pairwise-equal externals) drops the null descendants of L_{-1}|0>.
    """
    c, delta = params.c, params.delta
    d1, d2, d3, d4 = params.externals
    if quotient is None:
        quotient = delta == 0 and d1 == d2 and d3 == d4
    if not params.exact:
        c, delta = to_mpf(c), to_mpf(delta)
        d1, d2, d3, d4 = (to_mpf(x) for x in (d1, d2, d3, d4))
    v = VermaModule(c, delta)
    out = []
    for n in range(1, level + 1):
        basis = partitions(n, 2 if quotient else 1)
        if not basis:
            out.append(0 * c)
            continue
        g = [[v.inner(y, z) for z in basis] for y in basis]
        left = [_rho(y, delta, d1, d2) for y in basis]
        right = [_rho(y, delta, d4, d3) for y in basis]
        try:
            x = solve_linear(g, right)
        except RankDeficient:
            raise SingularGram(n) from None
        out.append(sum(l * xi for l, xi in zip(left, x)))
    return out


def kac_determinant(c, delta, level: int):
    return determinant(gram_matrix(c, delta, level))
