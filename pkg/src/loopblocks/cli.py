"""Command-line interface: ``loopblocks <command> [options]``.

Exit codes: 0 success, 1 failed assertion or computation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import random
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from typing import Optional

import mpmath

from . import __version__
from .blocks import BlockParams, block_s, gram_block
from .correlator import Angle, LayeringParams, dims as layering_dims, g_s_expansion, g_t_expansion, mu_bubble, mu_loop
from .decomposer import (
    gamma_identity_residual,
    ope_consistency,
    rational_form,
    s_constants,
    t_constants,
    verify_vanishing,
)
from .errors import CheckFailed, LoopBlocksError
from .numerics import RationalFunc, is_exact, to_mpf

CONFIG_SCHEMA = 1
PRECISION_ENV = "LOOPBLOCKS_PRECISION"
COMMANDS = ("dims", "expand", "blocks", "decompose", "verify", "rational-fit", "bubble")
SUITES = ("vanishing", "ope", "oracle", "mu")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing of exact inputs

_PI_RE = re.compile(r"^\s*([+-]?)\s*(\d*)\s*\*?\s*pi\s*(?:/\s*(\d+))?\s*$")


def parse_angle(text: str) -> Angle:
    """'pi', '-pi', 'pi/2', '2pi/3', '2*pi/3' are exact; anything else is radians."""
    m = _PI_RE.match(text.lower())
    if m:
        sign, num, den = m.groups()
        mult = Fraction(int(num) if num else 1, int(den) if den else 1)
        return Angle.pi(-mult if sign == "-" else mult)
    try:
        v = mpmath.mpf(text)
        return Angle.pi(0) if v == 0 else Angle.of(v)
    except (ValueError, TypeError):
        raise UsageError(f"cannot parse angle {text!r}") from None


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"cannot parse number {text!r}") from None


def parse_point(text: str):
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"point must be 'x,y', got {text!r}")
    x, y = (mpmath.mpf(p) for p in parts)
    if y <= 0:
        raise UsageError("point must lie in the upper half-plane")
    return mpmath.mpc(x, y)


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    command: str
    lam: Optional[str] = None
    lambda_grid: Optional[str] = None
    beta1: str = "0"
    beta2: str = "0"
    order: int = 6
    kmax: int = 7
    precision: int = 60
    tolerance: Optional[str] = None
    format: str = "table"
    output: Optional[str] = None
    pole_threshold: str = "1e-10"
    jobs: int = 1
    channel: str = "t"
    suite: Optional[str] = None
    method: str = "auto"
    delta: Optional[str] = None
    externals: Optional[str] = None
    central_charge: Optional[str] = None
    samples: Optional[str] = None
    point: Optional[str] = None
    x: Optional[str] = None

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.precision < 30:
            raise UsageError("precision must be >= 30")
        if self.order < 1:
            raise UsageError("order must be >= 1")
        if self.kmax < 0:
            raise UsageError("kmax must be >= 0")
        if self.format not in ("table", "json", "csv"):
            raise UsageError("format must be table, json or csv")
        if self.jobs < 1:
            raise UsageError("jobs must be >= 1")
        if self.tolerance is not None and mpmath.mpf(self.tolerance) < mpmath.mpf(10) ** (10 - self.precision):
            raise UsageError("tolerance must be >= 10**(10 - precision)")

    def to_json(self) -> str:
        return json.dumps({"schema": CONFIG_SCHEMA, **asdict(self)}, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        data = json.loads(text)
        schema = data.pop("schema", None)
        if schema != CONFIG_SCHEMA:
            raise UsageError(f"unsupported config schema {schema!r}")
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise UsageError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    @property
    def tol(self):
        if self.tolerance is not None:
            return mpmath.mpf(self.tolerance)
        return mpmath.mpf(10) ** (35 - self.precision)

    def lambdas(self) -> list:
        if self.lambda_grid:
            return [parse_rational(t) for t in self.lambda_grid.split(",")]
        if self.lam is not None:
            return [parse_rational(self.lam)]
        raise UsageError("--lambda or --lambda-grid is required")

    def params(self, lam=None) -> LayeringParams:
        lam = lam if lam is not None else self.lambdas()[0]
        if lam <= 0:
            raise UsageError("lambda must be positive")
        return LayeringParams(lam, parse_angle(self.beta1), parse_angle(self.beta2))


# ---------------------------------------------------------------------------
# reports


@dataclass
class Row:
    k: object
    dimension: object
    value: object
    residual: object = None
    label: str = ""


@dataclass
class Report:
    meta: dict
    entries: list = field(default_factory=list)
    ok: bool = True
    messages: list = field(default_factory=list)


def fmt_value(v, digits: int) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, Fraction)):
        return str(v)
    if isinstance(v, RationalFunc):
        return v.factored()
    if isinstance(v, str):
        return v
    return mpmath.nstr(to_mpf(v), digits, min_fixed=-4, max_fixed=6)


def emit_report(report: Report, fmt: str, digits: int) -> bytes:
    cols = ("k", "dimension", "value", "residual", "label")
    rows = [[fmt_value(getattr(r, c), digits if c != "residual" else 3) for c in cols] for r in report.entries]
    if fmt == "json":
        doc = {"meta": report.meta, "entries": [dict(zip(cols, r)) for r in rows]}
        return (json.dumps(doc, indent=2) + "\n").encode()
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        w.writerows(rows)
        return buf.getvalue().encode()
    widths = [max([len(c)] + [len(r[i]) for r in rows]) for i, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())
    head = [f"# {k}: {v}" for k, v in report.meta.items() if k != "params"]
    head += [f"# {k}: {v}" for k, v in report.meta.get("params", {}).items()]
    tail = [f"# {m}" for m in report.messages]
    return ("\n".join(head + lines + tail) + "\n").encode()


def _meta(cfg: RunConfig, **params) -> dict:
    return {"version": __version__, "precision": cfg.precision, "order": cfg.order,
            "params": {k: str(v) for k, v in params.items()}}


def _pmeta(cfg, p: LayeringParams, **extra):
    return _meta(cfg, command=cfg.command, lam=p.lam, beta1=p.beta1, beta2=p.beta2, **extra)


# ---------------------------------------------------------------------------
# commands


def cmd_dims(cfg: RunConfig) -> Report:
    rep = Report({})
    for lam in cfg.lambdas():
        p = cfg.params(lam)
        c, d1, d2, d12 = layering_dims(p.lam, p.beta1, p.beta2)
        for i, (name, v) in enumerate([("c", c), ("Delta_beta1", d1), ("Delta_beta2", d2),
                                       ("Delta_12", d12), ("kappa", d12 - d1 - d2)]):
            rep.entries.append(Row(i, "", v, None, f"{name} (lambda={lam})"))
    rep.meta = _meta(cfg, command="dims", lam=",".join(str(l) for l in cfg.lambdas()),
                     beta1=cfg.beta1, beta2=cfg.beta2)
    return rep


def cmd_expand(cfg: RunConfig) -> Report:
    p = cfg.params()
    rep = Report(_pmeta(cfg, p, channel=cfg.channel))
    if cfg.channel == "s":
        s = g_s_expansion(p, cfg.order)
        for j, c in enumerate(s.coeffs):
            e = Fraction(j, 3)
            rep.entries.append(Row(str(e), p.kappa + e, c, None, f"A_{e}"))
    elif cfg.channel == "t":
        s = g_t_expansion(p, cfg.order)
        for j, c in enumerate(s.coeffs):
            rep.entries.append(Row(j, j - 2 * p.d1, c, None, f"B_{j}"))
    else:
        raise UsageError("channel must be s or t")
    return rep


def _floats(text, what):
    try:
        return [parse_rational(t) for t in text.split(",")]
    except UsageError:
        raise UsageError(f"cannot parse {what} {text!r}") from None


def cmd_blocks(cfg: RunConfig) -> Report:
    if cfg.delta is None or cfg.externals is None:
        raise UsageError("blocks needs --delta and --externals d1,d2,d3,d4")
    ext = _floats(cfg.externals, "externals")
    if len(ext) != 4:
        raise UsageError("four external dimensions required")
    if cfg.central_charge is not None:
        c = parse_rational(cfg.central_charge)
    else:
        c = 2 * cfg.lambdas()[0]
    delta = parse_rational(cfg.delta)
    bp = BlockParams(c, delta, tuple(ext))
    if cfg.method != "gram":
        bp = BlockParams(to_mpf(c), to_mpf(delta), tuple(to_mpf(x) for x in ext))
    bs = block_s(bp, cfg.order, mpmath.mpf(cfg.pole_threshold), cfg.method)
    rep = Report(_meta(cfg, command="blocks", c=c, delta=delta, externals=cfg.externals, method=cfg.method))
    for k, a in enumerate(bs.coeffs):
        rep.entries.append(Row(k, delta + k, a, None, f"a_{k}"))
    return rep


def cmd_decompose(cfg: RunConfig) -> Report:
    p = cfg.params()
    thr = mpmath.mpf(cfg.pole_threshold)
    if cfg.channel == "s":
        dr = s_constants(p, cfg.kmax, thr)
    elif cfg.channel == "t":
        dr = t_constants(p, cfg.kmax, thr, cfg.method)
    else:
        raise UsageError("channel must be s or t")
    rep = Report(_pmeta(cfg, p, channel=cfg.channel, kmax=cfg.kmax))
    for e in dr.entries:
        rep.entries.append(Row(e.k, e.dimension, e.value, e.residual, e.label))
    rep.messages.extend(dr.notes)
    return rep


def _vanishing_one(args):
    lam, kmax, tol, prec = args
    with mpmath.workdps(prec):
        return verify_vanishing([lam], kmax, tol, raise_on_failure=False)


def suite_vanishing(cfg: RunConfig, rep: Report):
    lams = cfg.lambdas()
    jobs = [(lam, max(cfg.kmax, 7), cfg.tol, cfg.precision) for lam in lams]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            results = list(ex.map(_vanishing_one, jobs))
    else:
        results = [_vanishing_one(j) for j in jobs]
    for rows in results:
        for r in rows:
            rep.entries.append(Row(r.k, r.k, r.value, None if r.value is None else abs(to_mpf(r.value) - to_mpf(r.expected or 0)),
                                   f"lambda={r.lam} {r.status} {'ok' if r.ok else 'FAIL'}"))
            if r.status in ("asserted", "compared") and not r.ok:
                rep.ok = False
                rep.messages.append(f"FAIL [D_k vanishing / closed form] lambda={r.lam}, k={r.k}")


def suite_ope(cfg: RunConfig, rep: Report):
    g = gamma_identity_residual()
    ok = g < mpmath.mpf(10) ** (30 - cfg.precision + 0) or g < mpmath.mpf("1e-30")
    rep.entries.append(Row("gamma", "", g, g, "Gamma identity " + ("ok" if ok else "FAIL")))
    rep.ok &= bool(ok)
    for lam in cfg.lambdas():
        for r in ope_consistency(lam, min(cfg.kmax, 6), cfg.tol, raise_on_failure=False):
            rep.entries.append(Row(r.k, Fraction(r.k, 3), r.solved, r.residual,
                                   f"lambda={lam} OPE {'ok' if r.ok else 'FAIL'}"))
            if not r.ok:
                rep.ok = False
                rep.messages.append(f"FAIL [OPE coefficient product] lambda={lam}, k={r.k}")


def suite_oracle(cfg: RunConfig, rep: Report, sets: int = 10, levels: int = 6):
    rng = random.Random(20240611)
    tol = mpmath.mpf(10) ** (30 - cfg.precision) if cfg.tolerance is None else cfg.tol
    for i in range(sets):
        c = mpmath.mpf(rng.uniform(0.05, 0.95))
        delta = mpmath.mpf(rng.uniform(0.3, 2.0))
        ext = tuple(mpmath.mpf(rng.uniform(0.01, 0.6)) for _ in range(4))
        bp = BlockParams(c, delta, ext)
        rec = block_s(bp, levels, method="recursion").coeffs
        gram = [1] + gram_block(bp, levels)
        err = max(abs(a - b) for a, b in zip(rec, gram))
        ok = err < tol
        rep.ok &= bool(ok)
        rep.entries.append(Row(i, delta, err, err, f"recursion vs Gram {'ok' if ok else 'FAIL'}"))
    lam = cfg.lambdas()[0] if (cfg.lam or cfg.lambda_grid) else Fraction(3, 10)
    p = LayeringParams(lam, parse_angle(cfg.beta1), parse_angle(cfg.beta2))
    d1, d2 = p.d1, p.d2
    if is_exact(d1) and is_exact(d2):
        vac = gram_block(BlockParams(p.c, 0, (d1, d1, d2, d2)), 2)
        expected = 2 * d1 * d2 / p.c
        ok = vac[1] == expected
        rep.ok &= ok
        rep.entries.append(Row("vac2", 2, vac[1], abs(vac[1] - expected), f"vacuum level 2 = 2 D1 D2 / c {'ok' if ok else 'FAIL'}"))


def suite_mu(cfg: RunConfig, rep: Report):
    z1, z2 = mpmath.mpc("0.3", "1.1"), mpmath.mpc("-0.4", "0.7")
    refs = [(Fraction(1, 10), Angle.of(1)), (Fraction(3, 10), Angle.pi(Fraction(1, 2))), (Fraction(1, 2), Angle.pi()),
            (Fraction(1, 4), Angle.of(2)), (Fraction(2, 5), Angle.pi(Fraction(2, 3))), (Fraction(9, 20), Angle.of("2.5"))]
    base = mu_loop(z1, z2)
    for i, (lam, b) in enumerate(refs):
        v = mu_loop(z1, z2, lam, b)
        ok = abs(v - base) < cfg.tol
        rep.ok &= bool(ok)
        rep.entries.append(Row(i, "", v, abs(v - base), f"mu_loop at lambda={lam}, beta={b} {'ok' if ok else 'FAIL'}"))
    m1 = mu_bubble(mpmath.mpc(0, 1), 1).value
    m2 = mu_bubble(mpmath.mpc(0, 1), -1).value  # image under z -> -1/z, |f'(1)| = 1
    ok = abs(m1 - m2) < mpmath.mpf("1e-8") * abs(m1)
    rep.ok &= bool(ok)
    rep.entries.append(Row("mobius", "", m1, abs(m1 - m2), f"bubble covariance under -1/z {'ok' if ok else 'FAIL'}"))


def cmd_verify(cfg: RunConfig) -> Report:
    if cfg.suite not in SUITES:
        raise UsageError(f"--suite must be one of {', '.join(SUITES)}")
    rep = Report(_meta(cfg, command="verify", suite=cfg.suite, lambdas=cfg.lambda_grid or cfg.lam,
                       kmax=cfg.kmax, tolerance=mpmath.nstr(cfg.tol, 3)))
    {"vanishing": suite_vanishing, "ope": suite_ope, "oracle": suite_oracle, "mu": suite_mu}[cfg.suite](cfg, rep)
    return rep


def cmd_rational_fit(cfg: RunConfig) -> Report:
    samples = [parse_rational(t) for t in cfg.samples.split(",")] if cfg.samples else None
    sel = ("t" if cfg.channel == "t" else "B", cfg.kmax, parse_angle(cfg.beta1), parse_angle(cfg.beta2))
    func = rational_form(sel, samples) if samples else rational_form(sel)
    name = "D" if sel[0] == "t" else "B"
    rep = Report(_meta(cfg, command="rational-fit", channel=cfg.channel, k=cfg.kmax, beta1=cfg.beta1, beta2=cfg.beta2))
    rep.entries.append(Row(cfg.kmax, cfg.kmax, func, 0, f"{name}_{cfg.kmax}(lambda)"))
    return rep


def cmd_bubble(cfg: RunConfig) -> Report:
    if cfg.point is None or cfg.x is None:
        raise UsageError("bubble needs --point x,y and --x")
    z = parse_point(cfg.point)
    x = mpmath.mpf(cfg.x)
    est = mu_bubble(z, x)
    const = est.value * abs(x - z) ** 4 / (4 * z.imag ** 2)
    rep = Report(_meta(cfg, command="bubble", point=cfg.point, x=cfg.x))
    rep.entries.append(Row(0, "", est.value, est.error, "mu_bubble"))
    rep.entries.append(Row(1, "", const, None, "mu_bubble |x-z|^4/(4 Im(z)^2)"))
    return rep


HANDLERS = {"dims": cmd_dims, "expand": cmd_expand, "blocks": cmd_blocks, "decompose": cmd_decompose,
            "verify": cmd_verify, "rational-fit": cmd_rational_fit, "bubble": cmd_bubble}


def run(cfg: RunConfig, out=None) -> int:
    """Run one command; writes the report and returns the exit code."""
    cfg.validate()
    with mpmath.workdps(cfg.precision):
        rep = HANDLERS[cfg.command](cfg)
        data = emit_report(rep, cfg.format, max(15, cfg.precision - 25))
    if cfg.output:
        with open(cfg.output, "wb") as fh:
            fh.write(data)
    else:
        stream = out or sys.stdout
        stream.write(data.decode())
    return 0 if rep.ok else 1


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--lambda", dest="lam", default=None, help="loop-soup intensity (exact rational, e.g. 1/2)")
    a("--lambda-grid", default=None, help="comma-separated lambdas")
    a("--beta1", default=None, help="angle: pi, -pi, pi/2, 2pi/3 or radians")
    a("--beta2", default=None)
    a("--order", type=int, default=None)
    a("--kmax", type=int, default=None)
    a("--precision", type=int, default=None, help=f"decimal digits (default ${PRECISION_ENV} or 60)")
    a("--tolerance", default=None)
    a("--format", choices=("table", "json", "csv"), default=None)
    a("--output", default=None)
    a("--pole-threshold", default=None)
    a("--jobs", type=int, default=None)
    a("--config", default=None, help="JSON config file; command-line flags override it")
    a("--channel", choices=("s", "t", "B"), default=None)
    a("--method", choices=("auto", "recursion", "gram", "exact", "numeric"), default=None)

    p = argparse.ArgumentParser(prog="loopblocks", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("dims", parents=[common], help="central charge and operator dimensions")
    sub.add_parser("expand", parents=[common], help="A_k (s) or B_k (t) coefficients")
    b = sub.add_parser("blocks", parents=[common], help="conformal block coefficients")
    b.add_argument("--delta")
    b.add_argument("--externals", help="d1,d2,d3,d4")
    b.add_argument("--central-charge", help="c (default 2*lambda)")
    sub.add_parser("decompose", parents=[common], help="d (s channel) or D (t channel) constants")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", choices=SUITES, required=True)
    r = sub.add_parser("rational-fit", parents=[common], help="reconstruct D_k(lambda) as a rational function")
    r.add_argument("--samples", help="comma-separated rational lambdas (at least 12)")
    bb = sub.add_parser("bubble", parents=[common], help="bubble measure by extrapolation")
    bb.add_argument("--point", help="z as x,y")
    bb.add_argument("--x", help="boundary point")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    if ns.config:
        try:
            with open(ns.config) as fh:
                cfg = RunConfig.from_json(fh.read())
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"bad config JSON: {exc}") from None
        cfg.command = ns.command
    else:
        env = os.environ.get(PRECISION_ENV)
        try:
            cfg = RunConfig(ns.command, precision=int(env) if env else 60)
        except ValueError:
            raise UsageError(f"${PRECISION_ENV} must be an integer") from None
    for f in fields(RunConfig):
        if f.name == "command":
            continue
        val = getattr(ns, f.name, None)
        if val is not None:
            setattr(cfg, f.name, val)
    return cfg


ANGLE_FLAGS = ("--beta1", "--beta2")


def _join_negative_values(argv):
    # let "--beta2 -pi" through argparse, which would read "-pi" as a flag
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in ANGLE_FLAGS + ("--x", "--point") and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    ns = parser.parse_args(_join_negative_values(argv))
    try:
        cfg = config_from_args(ns)
        return run(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except CheckFailed as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return 1
    except LoopBlocksError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
