"""Conformal-block decompositions of the layering two-point function.

s-channel: G(sigma) = sum_k d_{D12 + k/3} F_{D12 + k/3}(sigma), bulk operators
E^(k) of dimension D12 + k/3.
t-channel: G = sum_k D_k F^(t)_k(w), boundary operators of integer dimension k.
Both are triangular solves against the series of ``correlator``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import sympy

from .blocks import BlockParams, block_s, block_t, POLE_THRESHOLD
from .correlator import Angle, LayeringParams, g_s_expansion, g_t_expansion
from .errors import CheckFailed, RankDeficient, ResidualTooLarge, SingularGram, ValidationFailed
from .numerics import RationalFunc, is_exact, rational_reconstruct, to_mpf
from .specfun import gamma


@dataclass(frozen=True)
class Entry:
    k: int
    dimension: object
    value: object
    residual: object
    label: str


@dataclass(frozen=True)
class DecompositionReport:
    channel: str
    params: Optional[LayeringParams]
    entries: tuple
    order: int
    precision: int
    notes: tuple = ()

    def value(self, k):
        for e in self.entries:
            if e.k == k:
                return e.value
        raise KeyError(k)

    @property
    def values(self) -> dict:
        return {e.k: e.value for e in self.entries}


def default_tolerance():
    return mpmath.mpf(10) ** (35 - mpmath.mp.dps)


def _residual_bound():
    return mpmath.mpf(10) ** (20 - mpmath.mp.dps)


# ---------------------------------------------------------------------------
# s-channel


def s_block_params(params: LayeringParams, k: int) -> BlockParams:
    d1, d2 = params.d1, params.d2
    return BlockParams(params.c, params.d12 + Fraction(k, 3), (d1, d2, d2, d1))


def s_constants(params: LayeringParams, kmax: int, pole_threshold=POLE_THRESHOLD,
                method: str = "auto") -> DecompositionReport:
    """d_{D12 + k/3} for k = 0..kmax.

    With G = sigma**kappa sum_j A_{j/3} sigma**(j/3) and each block
    sigma**(kappa + k/3) sum_m a_m sigma**m, the j-th ladder coefficient gives
    A_{j/3} = sum_{k + 3m = j} d_k a^(k)_m, so the three residues j mod 3
    form separate triangular systems.
    """
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    order = kmax // 3 + 1
    A = g_s_expansion(params, order).coeffs
    blocks = {}
    d = []
    for j in range(kmax + 1):
        acc = A[j]
        for m in range(1, j // 3 + 1):
            k = j - 3 * m
            acc -= d[k] * blocks[k][m]
        d.append(acc)
        levels = (kmax - j) // 3
        blocks[j] = block_s(s_block_params(params, j), levels, pole_threshold, method).coeffs
    entries = []
    for j in range(kmax + 1):
        resum = sum((d[j - 3 * m] * blocks[j - 3 * m][m] for m in range(0, j // 3 + 1)), 0)
        res = abs(to_mpf(resum) - to_mpf(A[j]))
        if res > _residual_bound() * max(1, abs(to_mpf(A[j]))):
            raise ResidualTooLarge(f"s-channel k={j}: residual {mpmath.nstr(res, 3)}")
        entries.append(Entry(j, params.d12 + Fraction(j, 3), d[j], res, f"E({j})"))
    return DecompositionReport("s", params, tuple(entries), order, mpmath.mp.dps)


# ---------------------------------------------------------------------------
# t-channel


def t_block_params(params: LayeringParams, k: int) -> BlockParams:
    d1, d2 = params.d1, params.d2
    return BlockParams(params.c, k, (d1, d2, d2, d1))


def numeric_params(params: LayeringParams) -> LayeringParams:
    """Same point with lambda as an mpf, so that every quantity is floating."""
    return LayeringParams(to_mpf(params.lam), params.beta1, params.beta2)


def t_label(k: int) -> str:
    if k == 0:
        return "identity"
    if k == 1:
        return "absent"
    if k == 2:
        return "Y"
    return f"e({k})"


def t_constants(params: LayeringParams, kmax: int, pole_threshold=POLE_THRESHOLD,
                method: str = "auto") -> DecompositionReport:
    """D_k for k = 0..kmax from sum_k D_k w**k sum_j a^(k)_j w**j = sum_k B_k w**k.

    ``method``: ``"exact"`` (Gram blocks over Q; needs rational dimensions),
    ``"numeric"`` (Zamolodchikov recursion in mpf) or ``"auto"``.
    Blocks whose constant is exactly zero are never built. When a needed block
    is unavailable (singular Gram matrix at c = 1), the report stops at the
    last determined k and says so in ``notes``.
    """
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    if method == "auto":
        method = "exact" if params.exact else "numeric"
    if method == "exact" and not params.exact:
        raise ValueError("exact method needs rational lambda and rational cos(beta)")
    if method == "numeric":
        params = numeric_params(params)
    B = g_t_expansion(params, kmax).coeffs
    zero_tol = 0 if method == "exact" else mpmath.mpf(10) ** (10 - mpmath.mp.dps)
    blocks = {}
    D = []
    notes = []
    limit = kmax
    for k in range(kmax + 1):
        if k > limit:
            break
        acc = B[k]
        for j in blocks:
            if j < k:
                acc -= D[j] * blocks[j][k - j]
        D.append(acc)
        if k == limit or abs(acc) <= zero_tol:
            continue
        bp = t_block_params(params, k)
        try:
            coeffs = block_t(bp, limit - k, pole_threshold, "gram" if method == "exact" else "auto").coeffs
        except SingularGram as exc:
            limit = k + exc.level - 1
            notes.append(f"block {k} singular at level {exc.level}; D_k for k > {limit} unavailable")
            coeffs = block_t(bp, exc.level - 1, pole_threshold, "gram").coeffs
        blocks[k] = coeffs
    entries = []
    for k in range(len(D)):
        resum = sum((D[j] * blocks[j][k - j] for j in blocks if j < k), 0) + D[k]
        res = abs(to_mpf(resum) - to_mpf(B[k]))
        if res > _residual_bound():
            raise ResidualTooLarge(f"t-channel k={k}: residual {mpmath.nstr(res, 3)}")
        entries.append(Entry(k, k, D[k], res, t_label(k)))
    return DecompositionReport("t", params, tuple(entries), len(D) - 1, mpmath.mp.dps, tuple(notes))


# ---------------------------------------------------------------------------
# closed forms for the (pi, -pi) t-channel constants

_LAM = sympy.Symbol("lambda")
D4_CLOSED = RationalFunc.from_expr(18 * _LAM**2 / (6875 * (5 * _LAM + 11)))
D6_CLOSED = RationalFunc.from_expr(
    _LAM**2 * (_LAM * (15599 * _LAM - 4362) - 200)
    / (5843750 * (_LAM + 12) * (4 * _LAM - 1) * (7 * _LAM + 34)))
CLOSED_FORMS = {4: D4_CLOSED, 6: D6_CLOSED}

VANISHING_K = (1, 2, 3, 5, 7)


@dataclass(frozen=True)
class VanishingRow:
    lam: object
    k: int
    value: object
    expected: object
    status: str     # "asserted", "compared", "evidence", "unavailable"
    ok: bool


def _pi_params(lam):
    return LayeringParams(lam, Angle.pi(1), Angle.pi(-1))


def verify_vanishing(lambdas: Sequence, kmax: int = 7, tol=None, method: str = "auto",
                     raise_on_failure: bool = True) -> list:
    """Check D_k(pi, -pi) = 0 for k in {1, 2, 3, 5, 7} and D_4, D_6 against their closed forms.

    Odd k > 7 are reported as evidence only.
    """
    if kmax < 7:
        raise ValueError("kmax must be >= 7")
    tol = tol if tol is not None else default_tolerance()
    rows = []
    for lam in lambdas:
        rep = t_constants(_pi_params(lam), kmax, method=method)
        vals = rep.values
        for k in range(1, kmax + 1):
            if k not in vals:
                rows.append(VanishingRow(lam, k, None, None, "unavailable", True))
                continue
            v = vals[k]
            if k in VANISHING_K:
                rows.append(VanishingRow(lam, k, v, 0, "asserted", bool(abs(to_mpf(v)) < tol)))
            elif k in CLOSED_FORMS:
                e = CLOSED_FORMS[k](lam)
                ok = v == e if is_exact(v) and is_exact(e) else bool(abs(to_mpf(v) - to_mpf(e)) < tol)
                rows.append(VanishingRow(lam, k, v, e, "compared", ok))
            elif k % 2 == 1:
                rows.append(VanishingRow(lam, k, v, 0, "evidence", bool(abs(to_mpf(v)) < mpmath.mpf("1e-20"))))
    if raise_on_failure:
        bad = [r for r in rows if r.status in ("asserted", "compared") and not r.ok]
        if bad:
            r = bad[0]
            raise CheckFailed("D_k vanishing" if r.status == "asserted" else "D_k closed form",
                              f"lambda={r.lam}, k={r.k}, value={_fmt(r.value)}")
    return rows


def _fmt(v, digits=20):
    if v is None:
        return "n/a"
    if isinstance(v, Fraction):
        return str(v)
    return mpmath.nstr(to_mpf(v), digits)


# ---------------------------------------------------------------------------
# OPE consistency at (pi, -pi)


def c_hat_1(lam):
    """OPE coefficient of O_pi O_-pi into the first edge operator."""
    lam = to_mpf(lam)
    return mpmath.mpf(3) ** (mpmath.mpf(3) / 4) * mpmath.sqrt(2 * mpmath.pi / 5) * mpmath.sqrt(lam) / gamma(Fraction(-2, 3))


def r_one(lam):
    """One-point coefficient of the first edge operator (total charge zero)."""
    lam = to_mpf(lam)
    return -mpmath.exp(-4 * mpmath.pi * lam / (5 * mpmath.sqrt(3))) * gamma(Fraction(-1, 3))


def gamma_identity_residual():
    """4 pi/(sqrt 3 Gamma(1/3)**2) - 2**(2/3) Gamma(5/6)/sqrt(pi)."""
    lhs = 4 * mpmath.pi / (mpmath.sqrt(3) * gamma(Fraction(1, 3)) ** 2)
    rhs = mpmath.mpf(2) ** (mpmath.mpf(2) / 3) * gamma(Fraction(5, 6)) / mpmath.sqrt(mpmath.pi)
    return abs(lhs - rhs)


@dataclass(frozen=True)
class OpeRow:
    k: int
    solved: object
    predicted: object
    literal: object
    residual: object
    ok: bool


def ope_consistency(lam, kmax: int = 6, tol=None, raise_on_failure: bool = True) -> list:
    """Compare d_{k/3}(pi, -pi) to the OPE prediction for k <= 6.

    The prediction is A_0 (C1**2 R1 / A_0)**k / k!: one factor of A_0, the
    s-channel normalization, and the k-th power of C1**2 R1/A_0 = A_{1/3}/A_0.
    ``literal`` holds (C1**2 R1)**k / k!, which differs by A_0**(k-1).
    The range is capped at k = 6.
    """
    kmax = min(kmax, 6)
    tol = tol if tol is not None else default_tolerance()
    rep = s_constants(_pi_params(lam), kmax)
    a0 = to_mpf(rep.value(0))
    x = c_hat_1(lam) ** 2 * r_one(lam)
    rows = []
    for k in range(kmax + 1):
        d = to_mpf(rep.value(k))
        pred = a0 * (x / a0) ** k / mpmath.factorial(k)
        lit = x ** k / mpmath.factorial(k)
        res = abs(d - pred)
        rows.append(OpeRow(k, d, pred, lit, res, bool(res < tol)))
    if raise_on_failure:
        bad = [r for r in rows if not r.ok]
        if bad:
            raise CheckFailed("OPE coefficient product", f"lambda={lam}, k={bad[0].k}, residual={_fmt(bad[0].residual, 5)}")
    return rows


# ---------------------------------------------------------------------------
# rational reconstruction in lambda

DEFAULT_SAMPLES = tuple(Fraction(n, 40) for n in (1, 2, 3, 4, 5, 6, 7, 9, 11, 13, 14, 15, 17, 18))


def _exact_value(selector, lam):
    channel, k, b1, b2 = selector
    p = LayeringParams(Fraction(lam), Angle.of(b1), Angle.of(b2))
    if channel == "t":
        return t_constants(p, k, method="exact").value(k)
    if channel == "B":
        return g_t_expansion(p, k).coeffs[k]
    raise ValueError("rational forms exist for the t channel (D_k) and for B_k only")


def rational_form(selector, lambdas: Sequence = DEFAULT_SAMPLES, max_degree: int = 10) -> RationalFunc:
    """Reconstruct D_k(lambda) (selector ``("t", k, beta1, beta2)``) or B_k(lambda) (``("B", ...)``).

    Degree bounds are searched in increasing total degree; the first fit that
    also reproduces the held-out samples exactly wins.
    """
    lambdas = [Fraction(l) for l in lambdas]
    if len(lambdas) < 12:
        raise ValueError("at least 12 lambda samples are required")
    samples = [(l, _exact_value(selector, l)) for l in lambdas]
    if not all(is_exact(v) for _, v in samples):
        raise ValueError("selector does not give rational values (beta must be a multiple of pi/3 or pi/2)")
    for total in range(0, max_degree + 1):
        for nd in range(total, -1, -1):
            dd = total - nd
            if nd + dd + 3 > len(samples):
                continue
            try:
                return rational_reconstruct(samples, nd, dd).func
            except (ValidationFailed, RankDeficient):
                continue
    raise ValidationFailed(f"no rational function of total degree <= {max_degree} fits")


# ---------------------------------------------------------------------------
# boundary spectrum


@dataclass(frozen=True)
class BoundarySpectrumEntry:
    dimension: int
    label: str
    coupling: object
    primary: bool = True
    present: bool = True


def spectrum(params: LayeringParams, kmax: int = 7, tol=None, report: Optional[DecompositionReport] = None) -> list:
    """Boundary operators seen in the t channel.

    T is listed as a level-2 state of the identity module (coupling
    D1 D2/lambda), never as a primary. For beta multiples of pi, vanishing
    couplings mark absent operators.
    """
    rep = report or t_constants(params, kmax)
    tol = tol if tol is not None else default_tolerance()
    lam = params.lam
    out = [BoundarySpectrumEntry(0, "identity", 1)]
    t_coupling = params.d1 * params.d2 / lam
    out.append(BoundarySpectrumEntry(2, "stress-tensor-in-identity-module", t_coupling, primary=False,
                                     present=t_coupling != 0))
    for e in rep.entries:
        if e.k < 2:
            continue
        present = bool(abs(to_mpf(e.value)) > tol)
        out.append(BoundarySpectrumEntry(e.k, e.label, e.value, True, present))
    return out
