"""Restrictions of forms to vertical geodesic segments.

A *form* here is anything with an ``along(x0, ys, restricted=True)`` method
returning ``(values, abs_errors)`` for ``y^(-1/2) F(x0 + iy)`` (or ``F``
itself when ``restricted=False``): :class:`~eisenlab.EisensteinSeries`,
:class:`~eisenlab.MaassForm`, or a plain callable wrapped by
:class:`FunctionForm`.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from ._validation import check_scalar
from .exceptions import DomainError, QuadratureError
from .special import EPS

__all__ = [
    "GeodesicSegment",
    "Interval",
    "as_segment",
    "FunctionForm",
    "as_form",
    "RestrictionSamples",
    "SignChangeCertificate",
    "NormReport",
    "JReport",
    "sample_segment",
    "write_samples_csv",
    "count_sign_changes",
    "m_p_norm",
    "j_functional",
    "default_base_grid",
]

MEASURES = ("lebesgue", "hyperbolic")


@dataclass(frozen=True)
class GeodesicSegment:
    """The segment ``x0 + i[a, b]`` with rational ``x0`` in [0, 1).

    ``eval_margin`` is the extra room above ``b`` that window integrals
    (``J``) need.
    """

    x0: Fraction
    a: float
    b: float
    eval_margin: float = 0.0

    def __post_init__(self):
        x0 = self.x0
        if isinstance(x0, str):
            x0 = Fraction(x0)
        elif isinstance(x0, float):
            x0 = Fraction(x0).limit_denominator(10**6)
        else:
            x0 = Fraction(x0)
        if not (0 <= x0 < 1):
            raise DomainError(f"x0 must lie in [0, 1), got {x0}")
        object.__setattr__(self, "x0", x0)
        a = check_scalar(self.a, "a", min_val=0.0, include_min=False)
        b = check_scalar(self.b, "b")
        if not a < b:
            raise DomainError(f"need 0 < a < b, got a={a}, b={b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "eval_margin", check_scalar(self.eval_margin, "eval_margin", min_val=0.0))

    @classmethod
    def imaginary_axis(cls, a, b, eval_margin=0.0):
        return cls(Fraction(0), a, b, eval_margin)

    @classmethod
    def half_line(cls, a, b, eval_margin=0.0):
        return cls(Fraction(1, 2), a, b, eval_margin)

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def top(self) -> float:
        return self.b + self.eval_margin

    def with_margin(self, eval_margin: float) -> "GeodesicSegment":
        return GeodesicSegment(self.x0, self.a, self.b, eval_margin)


@dataclass(frozen=True)
class Interval:
    """A real interval ``[a, b]`` for plain functions of ``y`` (``a`` may be <= 0)."""

    a: float
    b: float
    eval_margin: float = 0.0
    x0 = Fraction(0)

    def __post_init__(self):
        a = check_scalar(self.a, "a")
        b = check_scalar(self.b, "b")
        if not a < b:
            raise DomainError(f"need a < b, got a={a}, b={b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "eval_margin", check_scalar(self.eval_margin, "eval_margin", min_val=0.0))

    length = GeodesicSegment.length
    top = GeodesicSegment.top

    def with_margin(self, eval_margin: float) -> "Interval":
        return Interval(self.a, self.b, eval_margin)


def as_segment(segment):
    """Accept a segment object or an ``(a, b[, eval_margin])`` tuple."""
    if isinstance(segment, (GeodesicSegment, Interval)):
        return segment
    if isinstance(segment, (tuple, list)) and len(segment) in (2, 3):
        return Interval(*segment)
    raise DomainError(f"expected a segment or an (a, b) pair, got {segment!r}")


class FunctionForm:
    """Wrap a real callable ``f(y)`` as a form with a fixed error model.

    The callable receives an array of ``y`` and is treated as the already
    restricted function; ``x0`` and ``restricted`` are ignored.
    """

    spectral_parameter = None

    def __init__(self, func, abs_error=0.0, rel_error=0.0):
        self.func = func
        self.abs_error = float(abs_error)
        self.rel_error = float(rel_error)

    def along(self, x0, ys, restricted=True):
        ys = np.asarray(ys, dtype=float)
        values = np.asarray(self.func(ys), dtype=float) * np.ones_like(ys)
        errors = self.abs_error + self.rel_error * np.abs(values)
        return values, np.broadcast_to(errors, values.shape).astype(float)


class _Unrestricted:
    def __init__(self, form):
        self.form = form
        self.spectral_parameter = getattr(form, "spectral_parameter", None)

    def along(self, x0, ys, restricted=True):
        return self.form.along(x0, ys, restricted=False)


def as_form(obj, restricted=True):
    """Return an object with the ``along`` protocol."""
    form = obj if hasattr(obj, "along") else FunctionForm(obj)
    return form if restricted else _Unrestricted(form)


def default_base_grid(form) -> int:
    t = getattr(form, "spectral_parameter", None)
    return max(64, 16 * math.ceil(t)) if t else 256


def _evaluate(form, segment, ys):
    values, errors = form.along(segment.x0, np.asarray(ys, dtype=float))
    return np.asarray(values, dtype=float), np.asarray(errors, dtype=float)


def _check_measure(measure):
    if measure not in MEASURES:
        raise DomainError(f"measure must be one of {MEASURES}, got {measure!r}")


@dataclass(frozen=True)
class RestrictionSamples:
    segment: GeodesicSegment
    ys: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    measure: str = "lebesgue"

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_samples_csv(self, buf)
        return buf.getvalue()


def sample_segment(form, segment: GeodesicSegment, n_points: int, spacing="uniform-y",
                   measure="lebesgue", restricted=True) -> RestrictionSamples:
    """Sample the form on ``[a, b + eval_margin]`` including both endpoints."""
    segment = as_segment(segment)
    n_points = check_scalar(n_points, "n_points", min_val=2, integer=True)
    _check_measure(measure)
    lo, hi = segment.a, segment.top
    if spacing == "uniform-y":
        ys = np.linspace(lo, hi, n_points)
    elif spacing == "uniform-log-y":
        ys = np.geomspace(lo, hi, n_points)
    else:
        raise DomainError(f"unknown spacing {spacing!r}")
    ys[0], ys[-1] = lo, hi
    values, errors = _evaluate(as_form(form, restricted), segment, ys)
    return RestrictionSamples(segment, ys, values, errors, measure)


def write_samples_csv(samples: RestrictionSamples, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["y", "value", "abs_error"])
    for y, v, e in zip(samples.ys, samples.values, samples.errors):
        writer.writerow([repr(float(y)), repr(float(v)), repr(float(e))])


# ---------------------------------------------------------------------------
# certified sign changes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignChangeCertificate:
    """Certified lower bound on the number of sign changes.

    Each bracket ``(y_lo, y_hi, sign_lo, sign_hi)`` joins two consecutive
    points whose signs are certified (``|value| > abs_error``) and differ.
    """

    count: int
    brackets: tuple
    min_gap: float
    undecided: int
    evaluations: int = 0


def _certified_signs(values, errors):
    return np.where(np.abs(values) > errors, np.sign(values), 0.0)


def count_sign_changes(form, segment: GeodesicSegment, base_grid=None, max_depth=30,
                       max_evaluations=None) -> SignChangeCertificate:
    """Count certified sign alternations of the restricted form on ``[a, b]``.

    A uniform grid of ``base_grid`` points is evaluated; every adjacent pair
    with an uncertified endpoint is bisected, level by level, up to
    ``max_depth`` times. Alternations between consecutive certified points
    are counted. Points whose sign stays uncertified are reported through
    ``undecided`` and never counted, so ``count`` is a lower bound for the
    number of sign changes whenever the error bounds are correct.
    """
    form = as_form(form)
    segment = as_segment(segment)
    if base_grid is None:
        base_grid = default_base_grid(form)
    base_grid = check_scalar(base_grid, "base_grid", min_val=8, integer=True)
    max_depth = check_scalar(max_depth, "max_depth", min_val=0, integer=True)
    if max_evaluations is None:
        max_evaluations = 64 * base_grid
    ys = np.linspace(segment.a, segment.b, base_grid)
    values, errors = _evaluate(form, segment, ys)
    signs = _certified_signs(values, errors)
    pts_y = [ys]
    pts_s = [signs]
    n_evals = ys.size
    # intervals (lo, hi, sign_lo, sign_hi) that still need a certified sign
    need = (signs[:-1] == 0) | (signs[1:] == 0)
    lo, hi = ys[:-1][need], ys[1:][need]
    s_lo, s_hi = signs[:-1][need], signs[1:][need]
    for _ in range(max_depth):
        if lo.size == 0 or n_evals + lo.size > max_evaluations:
            break
        mid = 0.5 * (lo + hi)
        mv, me = _evaluate(form, segment, mid)
        ms = _certified_signs(mv, me)
        n_evals += mid.size
        pts_y.append(mid)
        pts_s.append(ms)
        left = (s_lo == 0) | (ms == 0)
        right = (ms == 0) | (s_hi == 0)
        lo, hi, s_lo, s_hi = (
            np.concatenate([lo[left], mid[right]]),
            np.concatenate([mid[left], hi[right]]),
            np.concatenate([s_lo[left], ms[right]]),
            np.concatenate([ms[left], s_hi[right]]),
        )
    all_y = np.concatenate(pts_y)
    all_s = np.concatenate(pts_s)
    order = np.argsort(all_y, kind="stable")
    all_y, all_s = all_y[order], all_s[order]
    certified = all_s != 0
    cy, cs = all_y[certified], all_s[certified]
    flips = np.nonzero(cs[1:] != cs[:-1])[0]
    brackets = tuple(
        (float(cy[i]), float(cy[i + 1]), "+" if cs[i] > 0 else "-", "+" if cs[i + 1] > 0 else "-")
        for i in flips
    )
    # maximal runs of uncertified points
    unc = (~certified).astype(np.int8)
    undecided = int(np.sum(np.diff(np.concatenate([[0], unc])) == 1))
    min_gap = float(np.min(cy[flips + 1] - cy[flips])) if flips.size else math.inf
    return SignChangeCertificate(len(brackets), brackets, min_gap, undecided, n_evals)


# ---------------------------------------------------------------------------
# quadrature helpers
# ---------------------------------------------------------------------------

_GL_ORDER = 8


def _gl_nodes(breaks, n_panels, order=_GL_ORDER):
    """Composite Gauss-Legendre nodes/weights over consecutive ``breaks``.

    Panels are distributed proportionally to sub-interval length, with at
    least one panel per sub-interval.
    """
    xg, wg = np.polynomial.legendre.leggauss(order)
    breaks = np.asarray(breaks, dtype=float)
    widths = np.diff(breaks)
    total = breaks[-1] - breaks[0]
    counts = np.maximum(1, np.ceil(n_panels * widths / total).astype(int))
    edges = np.concatenate(
        [np.linspace(breaks[i], breaks[i + 1], counts[i] + 1)[:-1] for i in range(widths.size)]
        + [breaks[-1:]]
    )
    left, right = edges[:-1], edges[1:]
    half = 0.5 * (right - left)
    mid = 0.5 * (right + left)
    nodes = (mid[:, None] + half[:, None] * xg).ravel()
    weights = (half[:, None] * wg).ravel()
    return nodes, weights


def _zero_breakpoints(func, lo, hi, grid_y, grid_v):
    """Roots of ``func`` in each sign-change interval of the sampled grid."""
    roots = []
    s = np.sign(grid_v)
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        y0, y1 = grid_y[i], grid_y[i + 1]
        f0, f1 = func(y0), func(y1)
        if f0 * f1 < 0:
            roots.append(brentq(func, y0, y1, xtol=1e-14 * (hi - lo), rtol=1e-15))
        else:
            # scalar and vector evaluation disagree near a zero at a grid node
            roots.append(y0 if abs(f0) <= abs(f1) else y1)
    return np.array(sorted(r for r in roots if lo < r < hi))


@dataclass(frozen=True)
class NormReport:
    p: float
    value: float
    quad_error: float
    measure: str = "lebesgue"
    panels: int = 0


def _measure_length(a, b, measure):
    if measure == "hyperbolic" and a <= 0:
        raise DomainError("the hyperbolic measure needs a > 0")
    return b - a if measure == "lebesgue" else math.log(b / a)


def _norm_from_samples(samples: RestrictionSamples, p, measure):
    ys, f = samples.ys, np.abs(samples.values)
    if ys.size < 3 or ys.size % 2 == 0:
        raise DomainError("sample-based norms need an odd number (>= 3) of samples")
    weight = np.ones_like(ys) if measure == "lebesgue" else 1.0 / ys
    g = f**p * weight
    fine = np.trapezoid(g, ys)
    coarse = np.trapezoid(g[::2], ys[::2])
    integral = fine + (fine - coarse) / 3.0
    err = abs(fine - coarse) / 3.0
    dg = p * f ** (p - 1) * samples.errors * weight
    err += float(np.trapezoid(dg, ys))
    length = _measure_length(ys[0], ys[-1], measure)
    return integral / length, err / length


def m_p_norm(source, segment=None, p=2.0, measure="lebesgue", *, restricted=True,
             panels=None, rtol=1e-7, max_panels=1 << 14, base_grid=None) -> NormReport:
    """Normalised ``L^p`` norm ``(|I|^-1 int_I |f|^p dmu)^(1/p)`` on ``[a, b]``.

    ``source`` is either :class:`RestrictionSamples` (composite Simpson from
    the samples) or a form together with ``segment`` (composite
    Gauss-Legendre, split at the zeros of ``f``, with panel doubling until
    two resolutions agree to ``rtol``). The reported ``quad_error`` bounds
    the norm's uncertainty from quadrature and from the evaluation errors.
    """
    p = check_scalar(p, "p", min_val=1.0)
    _check_measure(measure)
    if isinstance(source, RestrictionSamples):
        mean, err = _norm_from_samples(source, p, measure)
        value = mean ** (1.0 / p)
        return NormReport(p, value, _root_error(mean, err, p), measure)
    if segment is None:
        raise DomainError("a segment is required when integrating a form")
    form = as_form(source, restricted)
    segment = as_segment(segment)
    a, b = segment.a, segment.b
    if base_grid is None:
        base_grid = default_base_grid(form)
    grid_y = np.linspace(a, b, base_grid)
    grid_v, _ = _evaluate(form, segment, grid_y)

    def scalar(y):
        return float(_evaluate(form, segment, np.array([y]))[0][0])

    breaks = np.concatenate([[a], _zero_breakpoints(scalar, a, b, grid_y, grid_v), [b]])
    n_panels = panels or max(8, base_grid // 4)
    length = _measure_length(a, b, measure)

    def integrate(n):
        nodes, weights = _gl_nodes(breaks, n)
        v, e = _evaluate(form, segment, nodes)
        w = weights if measure == "lebesgue" else weights / nodes
        av = np.abs(v)
        return float(np.dot(w, av**p)), float(np.dot(w, p * (av + e) ** (p - 1) * e))

    coarse, _ = integrate(n_panels)
    while True:
        fine, eval_err = integrate(2 * n_panels)
        diff = abs(fine - coarse)
        if diff <= rtol * abs(fine) + 1e-300:
            break
        if 2 * n_panels >= max_panels:
            raise QuadratureError(
                f"M_{p:g}: resolutions disagree by {diff:.3g} (relative {diff / max(fine, 1e-300):.3g})"
            )
        n_panels *= 2
        coarse = fine
    mean = fine / length
    err = (diff + eval_err) / length
    return NormReport(p, mean ** (1.0 / p), _root_error(mean, err, p), measure, 2 * n_panels)


def _root_error(mean, err, p):
    """Error of ``mean^(1/p)`` given an absolute error of ``mean``."""
    hi = (mean + err) ** (1.0 / p)
    lo = max(mean - err, 0.0) ** (1.0 / p)
    return max(hi - mean ** (1.0 / p), mean ** (1.0 / p) - lo)


_INTERP_ORDER = 16


class _PiecewiseAntiderivative:
    """Antiderivative of ``f`` on ``[lo, hi]`` from per-panel Legendre fits.

    ``f`` is sampled at ``_INTERP_ORDER`` Gauss-Legendre nodes on each of
    ``n_panels`` equal panels; on each panel it is replaced by its degree-15
    interpolant, which is integrated exactly.
    """

    def __init__(self, form, segment, lo, hi, n_panels):
        xg, wg = np.polynomial.legendre.leggauss(_INTERP_ORDER)
        self.lo, self.n_panels = lo, n_panels
        self.h = (hi - lo) / n_panels
        left = lo + self.h * np.arange(n_panels)
        nodes = (left[:, None] + 0.5 * self.h * (xg + 1.0)).ravel()
        values, errors = _evaluate(form, segment, nodes)
        values = values.reshape(n_panels, _INTERP_ORDER)
        # interpolant coefficients via the discrete Legendre transform at GL nodes
        vander = np.polynomial.legendre.legvander(xg, _INTERP_ORDER - 1)
        norms = 2.0 / (2.0 * np.arange(_INTERP_ORDER) + 1.0)
        coeffs = (values * wg) @ vander / norms
        # antiderivative in the panel variable x in [-1, 1], zero at x = -1
        self.int_coeffs = np.polynomial.legendre.legint(coeffs, lbnd=-1, axis=1) * (0.5 * self.h)
        panel_totals = values @ wg * (0.5 * self.h)
        self.edges = np.concatenate([[0.0], np.cumsum(panel_totals)])
        self.max_error = float(np.max(errors)) if errors.size else 0.0
        self.max_abs = float(np.max(np.abs(values))) if values.size else 0.0
        self.evaluations = nodes.size

    def __call__(self, ys):
        ys = np.asarray(ys, dtype=float)
        pos = (ys - self.lo) / self.h
        k = np.clip(np.floor(pos).astype(int), 0, self.n_panels - 1)
        x = 2.0 * (pos - k) - 1.0
        basis = np.polynomial.legendre.legvander(x, _INTERP_ORDER)
        return self.edges[k] + np.einsum("ij,ij->i", basis, self.int_coeffs[k])


@dataclass(frozen=True)
class JReport:
    eta: float
    value: float
    quad_error: float


def j_functional(form, segment: GeodesicSegment, eta, *, panels=None, rtol=1e-9,
                 max_panels=1 << 14, base_grid=None, restricted=True) -> JReport:
    """``J(f, eta) = |I|^-1 int_a^b | int_0^eta f(y + v) dv | dy``.

    ``f`` is sampled once on ``[a, b + eta]`` and replaced by a piecewise
    degree-15 interpolant ``p``; the window integrals are then
    ``F(y) = A(y + eta) - A(y)`` with ``A`` the exact antiderivative of ``p``.
    The outer integral of ``|F|`` uses composite Gauss-Legendre split at the
    zeros of ``F``. Panels are doubled until two consecutive resolutions agree
    to ``rtol``; ``quad_error`` adds that difference to the propagated
    evaluation error ``eta * max|err|``.
    """
    segment = as_segment(segment)
    eta = check_scalar(eta, "eta", min_val=0.0, include_min=False)
    if eta > segment.eval_margin * (1 + 1e-12):
        raise DomainError(
            f"eta={eta} exceeds the segment's evaluation margin {segment.eval_margin}; "
            "f must be defined on [a, b + eta]"
        )
    form = as_form(form, restricted)
    a, b = segment.a, segment.b
    top = b + eta
    if base_grid is None:
        base_grid = default_base_grid(form)
    n_panels = panels or max(8, math.ceil(base_grid * (top - a) / (b - a) / 16))

    def integrate(n):
        anti = _PiecewiseAntiderivative(form, segment, a, top, n)

        def window(ys):
            ys = np.asarray(ys, dtype=float)
            return anti(ys + eta) - anti(ys)

        grid_y = np.linspace(a, b, 4 * n + 1)
        grid_f = window(grid_y)
        roots = _zero_breakpoints(lambda y: float(window(np.array([y]))[0]), a, b, grid_y, grid_f)
        breaks = np.concatenate([[a], roots, [b]])
        nodes, weights = _gl_nodes(breaks, 2 * n, order=_INTERP_ORDER)
        total = float(np.dot(weights, np.abs(window(nodes))))
        return total, eta * anti.max_error, eta * (b - a) * anti.max_abs

    coarse, _, _ = integrate(n_panels)
    while True:
        fine, eval_err, scale = integrate(2 * n_panels)
        diff = abs(fine - coarse)
        # the absolute floor lets J = 0 (exact cancellation) converge
        if diff <= rtol * abs(fine) + 64 * EPS * scale + 1e-300:
            break
        if 2 * n_panels >= max_panels:
            raise QuadratureError(f"J: resolutions disagree by {diff:.3g}")
        n_panels *= 2
        coarse = fine
    length = b - a
    return JReport(eta, fine / length, diff / length + eval_err)
