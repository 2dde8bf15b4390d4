"""Command-line front end: evaluation, grids, sign certificates, scans.

Every command writes CSV with a header row to ``--out`` (atomically) or to
standard output. Exit codes: 0 success, 1 certificate hypotheses failed
(``certify`` only), 2 input or config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .eisenstein import EisensteinSeries
from .exceptions import DomainError, EisenlabError, ParseError
from .lfun import MOMENT_COLUMNS, moment_scan
from .littlewood import BUDGET_COLUMNS, CERTIFICATE_COLUMNS, certify, exponent_budget
from .maass import MaassForm, load_maass_record
from .restriction import (
    GeodesicSegment,
    count_sign_changes,
    default_base_grid,
    j_functional,
    m_p_norm,
    sample_segment,
    write_samples_csv,
)

EXIT_OK, EXIT_NO_CERTIFICATE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _float_list(text):
    items = [item.strip() for item in str(text).split(",") if item.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(item) for item in items)


@dataclass(frozen=True)
class RunConfig:
    """Run parameters; field names map to dotted config keys (``a__b`` -> ``a.b``)."""

    precision__base_bits: int = 64
    eisenstein__tol: float = 1e-10
    segment__x0_num: int = 0
    segment__x0_den: int = 1
    segment__a: float = 1.0
    segment__b: float = 2.0
    segment__margin: float | None = None
    grid__base: int | None = None
    grid__depth: int = 30
    scan__t_min: float = 20.0
    scan__t_max: float = 120.0
    scan__t_step: float = 10.0
    moments__k: int = 2
    moments__T_grid: tuple = (250.0, 500.0, 1000.0, 2000.0)
    moments__resolution: float = 0.05
    output__path: str | None = None
    _set: frozenset = field(default=frozenset(), repr=False, compare=False)

    @staticmethod
    def keys():
        return tuple(f.name.replace("__", ".") for f in fields(RunConfig) if not f.name.startswith("_"))

    def updated(self, mapping):
        """Return a copy with ``mapping`` (dotted key -> raw value) applied."""
        changes = {}
        for key, raw in mapping.items():
            name = key.replace(".", "__")
            if key not in self.keys():
                raise ParseError(f"unknown config key {key!r}")
            changes[name] = _convert(name, raw)
        new = replace(self, **changes, _set=self._set | set(mapping))
        new.validate()
        return new

    def is_set(self, key):
        return key in self._set

    def validate(self):
        if self.precision__base_bits < 64:
            raise DomainError("precision.base_bits must be >= 64")
        if not 0 < self.eisenstein__tol < 1:
            raise DomainError("eisenstein.tol must lie in (0, 1)")
        if self.segment__x0_den < 1:
            raise DomainError("segment.x0_den must be >= 1")
        x0 = Fraction(self.segment__x0_num, self.segment__x0_den)
        if not 0 <= x0 < 1:
            raise DomainError("segment x0 must lie in [0, 1)")
        if not 0 < self.segment__a < self.segment__b:
            raise DomainError("segment needs 0 < a < b")
        if self.segment__margin is not None and self.segment__margin < 0:
            raise DomainError("segment.margin must be >= 0")
        if self.grid__base is not None and self.grid__base < 8:
            raise DomainError("grid.base must be >= 8")
        if self.grid__depth < 0:
            raise DomainError("grid.depth must be >= 0")
        if not (0 < self.scan__t_min <= self.scan__t_max and self.scan__t_step > 0):
            raise DomainError("scan needs 0 < t_min <= t_max and t_step > 0")
        if self.moments__k not in (1, 2):
            raise DomainError("moments.k must be 1 or 2")
        if any(T <= 0 for T in self.moments__T_grid):
            raise DomainError("moments.T_grid entries must be positive")
        if not 0 < self.moments__resolution <= 0.25:
            raise DomainError("moments.resolution must lie in (0, 0.25]")

    def segment(self, margin=0.0):
        x0 = Fraction(self.segment__x0_num, self.segment__x0_den)
        if self.segment__margin is not None:
            if self.segment__margin < margin * (1 - 1e-12):
                raise DomainError(f"segment.margin={self.segment__margin} is below the required {margin:.6g}")
            margin = self.segment__margin
        return GeodesicSegment(x0, self.segment__a, self.segment__b, margin)


_CONVERTERS = {
    "precision__base_bits": int,
    "segment__x0_num": int,
    "segment__x0_den": int,
    "grid__base": int,
    "grid__depth": int,
    "moments__k": int,
    "moments__T_grid": _float_list,
    "output__path": str,
}


def _convert(name, raw):
    conv = _CONVERTERS.get(name, float)
    try:
        value = conv(raw)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad value {raw!r} for {name.replace('__', '.')}: {exc}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ParseError(f"{name.replace('__', '.')} must be finite")
    return value


def parse_config(text):
    """Parse ``key = value`` lines (``#`` comments) into a dict of strings."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ParseError(f"config line {lineno}: expected 'key = value'")
        if key in out:
            raise ParseError(f"config line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path=None):
    config = RunConfig()
    if path is not None:
        try:
            text = Path(path).read_text(encoding="ascii")
        except (OSError, UnicodeDecodeError) as exc:
            raise ParseError(f"cannot read config {path}: {exc}") from None
        config = config.updated(parse_config(text))
    return config


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(value, spec=".15g"):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, spec)
    return str(value)


class CsvOutput:
    def __init__(self, columns, spec=".15g"):
        self.buffer = io.StringIO()
        self.writer = csv.writer(self.buffer, lineterminator="\n")
        self.writer.writerow(columns)
        self.spec = spec

    def row(self, values):
        self.writer.writerow([_fmt(v, self.spec) for v in values])

    def text(self):
        return self.buffer.getvalue()


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _eisenstein(t, config, y_floor=0.05):
    return EisensteinSeries(t=t, tol=config.eisenstein__tol, base_bits=config.precision__base_bits,
                            y_floor=y_floor).fit()


def _source(args, config, y_floor=0.05):
    """Return ``(form, label)`` for ``--t`` or ``--maass-file``."""
    if (args.t is None) == (args.maass_file is None):
        raise DomainError("give exactly one of --t and --maass-file")
    if args.t is not None:
        if not args.t > 0:
            raise DomainError("--t must be positive")
        return _eisenstein(args.t, config, y_floor), f"E_t={_fmt(args.t)}"
    record = load_maass_record(args.maass_file)
    return MaassForm(record, tol=config.eisenstein__tol).fit(), record.source_id or str(args.maass_file)


def _base_grid(form, config):
    return config.grid__base if config.grid__base is not None else default_base_grid(form)


def cmd_eval(args, config):
    if not args.y > 0:
        raise DomainError("--y must be positive")
    form = _eisenstein(args.t, config, y_floor=min(0.05, args.y))
    values, errors = form.evaluate(np.array([args.x]), np.array([args.y]))
    out = CsvOutput(["value", "abs_error"])
    out.row([values[0], errors[0]])
    return out.text(), EXIT_OK


def cmd_grid(args, config):
    if args.nx < 1 or args.ny < 1:
        raise DomainError("--nx and --ny must be >= 1")
    if args.x_min > args.x_max or not 0 < args.y_min <= args.y_max:
        raise DomainError("need x_min <= x_max and 0 < y_min <= y_max")
    xs = np.linspace(args.x_min, args.x_max, args.nx)
    if args.x_min == -args.x_max:
        # exact mirror pairs so that symmetric grids stay symmetric bit for bit
        xs = 0.5 * (xs - xs[::-1])
    ys = np.linspace(args.y_min, args.y_max, args.ny)
    form = _eisenstein(args.t, config, y_floor=min(0.05, args.y_min))
    gx, gy = np.meshgrid(xs, ys)  # row-major: outer y, inner x
    values, errors = form.evaluate(gx.ravel(), gy.ravel())
    signs = np.where(np.abs(values) > errors, np.sign(values), 0.0).astype(int)
    out = CsvOutput(["x", "y", "sign", "value"])
    for x, y, s, v in zip(gx.ravel(), gy.ravel(), signs, values):
        out.row([x, y, int(s), v])
    return out.text(), EXIT_OK


def cmd_signs(args, config):
    form, label = _source(args, config)
    segment = config.segment()
    base = _base_grid(form, config)
    cert = count_sign_changes(form, segment, base_grid=base, max_depth=config.grid__depth)
    out = CsvOutput(["source", "x0", "a", "b", "base_grid", "max_depth", "count", "undecided", "min_gap"])
    out.row([label, str(segment.x0), segment.a, segment.b, base, config.grid__depth,
             cert.count, cert.undecided, cert.min_gap])
    if args.brackets_out:
        brackets = CsvOutput(["y_lo", "y_hi", "sign_lo", "sign_hi"])
        for row in cert.brackets:
            brackets.row(row)
        _emit(brackets.text(), args.brackets_out)
    return out.text(), EXIT_OK


def cmd_norms(args, config):
    form, label = _source(args, config)
    segment = config.segment()
    base = _base_grid(form, config)
    out = CsvOutput(["source", "x0", "a", "b", "p", "measure", "value", "quad_error"])
    for p in args.p:
        rep = m_p_norm(form, segment, p, args.measure, base_grid=base)
        out.row([label, str(segment.x0), segment.a, segment.b, p, args.measure, rep.value, rep.quad_error])
    return out.text(), EXIT_OK


def cmd_jfun(args, config):
    if not args.eta > 0:
        raise DomainError("--eta must be positive")
    form, label = _source(args, config)
    segment = config.segment(margin=args.eta)
    rep = j_functional(form, segment, args.eta, base_grid=_base_grid(form, config))
    out = CsvOutput(["source", "x0", "a", "b", "eta", "value", "quad_error"])
    out.row([label, str(segment.x0), segment.a, segment.b, args.eta, rep.value, rep.quad_error])
    return out.text(), EXIT_OK


def cmd_certify(args, config):
    if args.N < 2:
        raise DomainError("--N must be >= 2")
    form, _ = _source(args, config)
    eta = (config.segment__b - config.segment__a) / args.N
    segment = config.segment(margin=eta)
    cert = certify(form, segment, args.N, c_policy=args.c_policy, eps_c=args.eps_c,
                   base_grid=_base_grid(form, config))
    out = CsvOutput(CERTIFICATE_COLUMNS)
    out.row([cert.a, cert.b, cert.N, cert.eta, cert.M1, cert.M2, cert.c, cert.J, cert.threshold,
             cert.hypotheses_hold, cert.lower_bound])
    return out.text(), EXIT_OK if cert.hypotheses_hold else EXIT_NO_CERTIFICATE


def scan_rows(config, measure="hyperbolic"):
    """One row ``(t, K, M1, M2, J)`` per ``t`` of the configured scan."""
    n = int(math.floor((config.scan__t_max - config.scan__t_min) / config.scan__t_step + 1e-9)) + 1
    ts = config.scan__t_min + config.scan__t_step * np.arange(n)
    length = config.segment__b - config.segment__a
    rows = []
    for t in ts:
        eta = length / max(1, math.floor(t))
        segment = config.segment(margin=eta)
        form = _eisenstein(float(t), config)
        base = _base_grid(form, config)
        cert = count_sign_changes(form, segment, base_grid=base, max_depth=config.grid__depth)
        m1 = m_p_norm(form, segment, 1.0, measure, restricted=False, base_grid=base)
        m2 = m_p_norm(form, segment, 2.0, measure, restricted=False, base_grid=base)
        jr = j_functional(form, segment, eta, base_grid=base)
        rows.append((float(t), cert.count, m1.value, m2.value, jr.value))
    return rows


def cmd_scan(args, config):
    overrides = {k: v for k, v in (("scan.t_min", args.t_min), ("scan.t_max", args.t_max),
                                   ("scan.t_step", args.t_step)) if v is not None}
    config = config.updated(overrides) if overrides else config
    out = CsvOutput(["t", "K", "M1", "M2", "J"])
    for row in scan_rows(config, args.measure):
        out.row(row)
    return out.text(), EXIT_OK


def cmd_moments(args, config):
    scan = moment_scan(config.moments__k, config.moments__T_grid, config.moments__resolution)
    out = CsvOutput(MOMENT_COLUMNS)
    for row in scan.rows():
        out.row(row)
    return out.text(), EXIT_OK


def cmd_budget(args, config):
    budget = exponent_budget(args.epsilon, args.p, args.kappa, args.regime)
    out = CsvOutput(BUDGET_COLUMNS, spec=".12g")
    out.row(budget.as_row())
    return out.text(), EXIT_OK


def cmd_samples(args, config):
    form, _ = _source(args, config)
    samples = sample_segment(form, config.segment(), args.n_points, args.spacing)
    buf = io.StringIO()
    write_samples_csv(samples, buf)
    return buf.getvalue(), EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _positive_list(text):
    try:
        return _float_list(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_source(parser):
    parser.add_argument("--t", type=float, default=None, help="spectral parameter of E_t")
    parser.add_argument("--maass-file", default=None, metavar="PATH", help="Maass coefficient file")


def _add_segment(parser):
    parser.add_argument("--x0", default=None, help="rational x0 such as 0 or 1/2")
    parser.add_argument("--a", type=float, default=None)
    parser.add_argument("--b", type=float, default=None)
    parser.add_argument("--margin", type=float, default=None)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, metavar="FILE", help="key = value config file")
    common.add_argument("--out", default=None, metavar="PATH", help="write CSV here instead of stdout")
    common.add_argument("--base-bits", type=int, default=None)
    common.add_argument("--tol", type=float, default=None)

    parser = argparse.ArgumentParser(prog="eisenlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", parents=[common], help="evaluate E_t at one point")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("grid", parents=[common], help="certified sign field of E_t on a box")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--x-min", type=float, default=-0.5)
    p.add_argument("--x-max", type=float, default=0.5)
    p.add_argument("--y-min", type=float, default=0.8)
    p.add_argument("--y-max", type=float, default=2.5)
    p.add_argument("--nx", type=int, default=200)
    p.add_argument("--ny", type=int, default=200)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("signs", parents=[common], help="certified sign changes on a segment")
    _add_source(p)
    _add_segment(p)
    p.add_argument("--base-grid", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--brackets-out", default=None, metavar="PATH")
    p.set_defaults(func=cmd_signs)

    p = sub.add_parser("norms", parents=[common], help="M_p norms on a segment")
    _add_source(p)
    _add_segment(p)
    p.add_argument("--p", type=_positive_list, default=(1.0, 2.0))
    p.add_argument("--measure", choices=("lebesgue", "hyperbolic"), default="lebesgue")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("jfun", parents=[common], help="the J(f, eta) window functional")
    _add_source(p)
    _add_segment(p)
    p.add_argument("--eta", type=float, required=True)
    p.set_defaults(func=cmd_jfun)

    p = sub.add_parser("certify", parents=[common], help="sign-change certificate for N windows")
    _add_source(p)
    _add_segment(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--c-policy", choices=("ratio", "clamped"), default="clamped")
    p.add_argument("--eps-c", type=float, default=1e-3)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("scan", parents=[common], help="K, M1, M2, J over a range of t")
    _add_segment(p)
    p.add_argument("--t-min", type=float, default=None)
    p.add_argument("--t-max", type=float, default=None)
    p.add_argument("--t-step", type=float, default=None)
    p.add_argument("--measure", choices=("lebesgue", "hyperbolic"), default="hyperbolic",
                   help="measure for M1 and M2")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("moments", parents=[common], help="moments of zeta on the critical line")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--T-grid", dest="T_grid", default=None)
    p.add_argument("--resolution", type=float, default=None)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("budget", parents=[common], help="exponent bookkeeping")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--regime", choices=("eisenstein", "cusp"), default="eisenstein")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("samples", parents=[common], help="dump restricted values on a segment")
    _add_source(p)
    _add_segment(p)
    p.add_argument("--n-points", type=int, default=101)
    p.add_argument("--spacing", choices=("uniform-y", "uniform-log-y"), default="uniform-y")
    p.set_defaults(func=cmd_samples)
    return parser


_FLAG_KEYS = {
    "base_bits": "precision.base_bits",
    "tol": "eisenstein.tol",
    "a": "segment.a",
    "b": "segment.b",
    "margin": "segment.margin",
    "base_grid": "grid.base",
    "max_depth": "grid.depth",
    "k": "moments.k",
    "T_grid": "moments.T_grid",
    "resolution": "moments.resolution",
    "out": "output.path",
}


def _resolve_config(args):
    config = load_config(args.config)
    overrides = {}
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    x0 = getattr(args, "x0", None)
    if x0 is not None:
        try:
            frac = Fraction(x0)
        except (ValueError, ZeroDivisionError):
            raise ParseError(f"--x0 must be a rational number, got {x0!r}") from None
        overrides["segment.x0_num"] = frac.numerator
        overrides["segment.x0_den"] = frac.denominator
    return config.updated(overrides) if overrides else config


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        config = _resolve_config(args)
        text, code = args.func(args, config)
        _emit(text, config.output__path)
        return code
    except (ValueError, OSError) as exc:
        print(f"eisenlab: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, EisenlabError) as exc:
        print(f"eisenlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
