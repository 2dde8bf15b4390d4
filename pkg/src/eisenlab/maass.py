"""Even Hecke-Maass cusp forms from precomputed coefficient files.

Coefficient files are line oriented::

    # comment
    t_phi = 13.779751351891
    parity = even
    coeff_tol = 1e-12
    n_max = 200
    1 1.0
    2 -1.0683...
    ...

The form is normalised by its first Fourier coefficient, ``rho(1) = 1``.
Sign changes, norm ratios and the sign-change certificate are invariant
under positive rescaling, so this loses nothing at the level the package
works at; absolute norms of Maass forms should be read as relative values.
"""

from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points, check_scalar
from .exceptions import DomainError, HeckeValidationError, ParseError, TruncationError
from .special import EPS, bessel_k_scaled_array, bessel_k_scaled_bound

__all__ = [
    "MaassFormRecord",
    "MaassForm",
    "MaassEvaluator",
    "load_maass_record",
    "write_maass_record",
    "parse_maass_record",
    "hecke_record_from_primes",
    "validate_hecke",
    "maass_eval",
    "l_phi_truncated",
]

_HEADER_KEYS = ("t_phi", "parity", "coeff_tol", "n_max")
# Kim-Sarnak: |lambda(p)| <= p^(7/64) + p^(-7/64), so |lambda(n)| <= d(n) n^(7/64)
_KIM_SARNAK = 7.0 / 64.0


@dataclass(frozen=True)
class MaassFormRecord:
    """Spectral parameter and Hecke eigenvalues of an even Maass cusp form.

    ``hecke[n]`` holds ``lambda(n)`` for ``1 <= n <= n_max``; ``hecke[0]``
    is unused and set to zero.
    """

    t_phi: float
    hecke: np.ndarray = field(repr=False)
    coeff_tol: float = 1e-12
    parity: str = "even"
    source_id: str = ""

    @property
    def n_max(self) -> int:
        return int(self.hecke.size - 1)

    def scaled(self, factor: float) -> "MaassFormRecord":
        # not a Hecke-normalised record any more; used for scaling checks only
        return MaassFormRecord(
            self.t_phi, self.hecke * factor, self.coeff_tol * abs(factor), self.parity, self.source_id
        )


def _hecke_tolerance(record: MaassFormRecord, *values) -> float:
    scale = sum(abs(v) for v in values) + 1.0
    return 8.0 * record.coeff_tol * scale + 64 * EPS * scale


def validate_hecke(record: MaassFormRecord, limit: int = 20) -> None:
    """Check lambda(1) = 1 and the Hecke relations for m, n <= limit, mn <= n_max.

    Raises :class:`HeckeValidationError` naming the first violated triple.
    """
    lam = record.hecke
    if abs(lam[1] - 1.0) > max(record.coeff_tol, 64 * EPS):
        raise HeckeValidationError(f"lambda(1) = {lam[1]!r}, expected 1")
    for m in range(2, limit + 1):
        for n in range(m, limit + 1):
            if m * n > record.n_max:
                break
            g = math.gcd(m, n)
            rhs = sum(lam[m * n // (d * d)] for d in range(1, g + 1) if g % d == 0)
            lhs = lam[m] * lam[n]
            if abs(lhs - rhs) > _hecke_tolerance(record, lam[m], lam[n], rhs):
                raise HeckeValidationError(
                    f"Hecke relation fails for (m, n) = ({m}, {n}): "
                    f"lambda(m) lambda(n) = {lhs:.12g} but sum over d | gcd = {rhs:.12g}"
                )


def parse_maass_record(text: str, source_id: str = "<string>") -> MaassFormRecord:
    header = {}
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = (part.strip() for part in line.partition("="))
            if key not in _HEADER_KEYS:
                raise ParseError(f"{source_id}:{lineno}: unknown header key {key!r}")
            if rows:
                raise ParseError(f"{source_id}:{lineno}: header line after coefficient data")
            header[key] = value
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{source_id}:{lineno}: expected '<n> <lambda_n>', got {raw!r}")
        try:
            n = int(parts[0])
            value = float(parts[1])
        except ValueError as exc:
            raise ParseError(f"{source_id}:{lineno}: {exc}") from None
        if n != len(rows) + 1:
            raise ParseError(f"{source_id}:{lineno}: expected n={len(rows) + 1}, got n={n}")
        rows.append(value)
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise ParseError(f"{source_id}: missing header keys {missing}")
    try:
        t_phi = float(header["t_phi"])
        coeff_tol = float(header["coeff_tol"])
        n_max = int(header["n_max"])
    except ValueError as exc:
        raise ParseError(f"{source_id}: bad header value: {exc}") from None
    if header["parity"] != "even":
        raise DomainError(
            f"{source_id}: parity={header['parity']!r}; only even forms are supported "
            "(odd forms vanish identically on x0 = 0)"
        )
    if n_max < 10:
        raise DomainError(f"{source_id}: n_max={n_max} < 10")
    if len(rows) != n_max:
        raise ParseError(f"{source_id}: header says n_max={n_max} but {len(rows)} coefficients given")
    if not (t_phi > 0 and math.isfinite(t_phi)):
        raise ParseError(f"{source_id}: t_phi must be positive")
    hecke = np.concatenate([[0.0], np.asarray(rows, dtype=float)])
    return MaassFormRecord(t_phi=t_phi, hecke=hecke, coeff_tol=coeff_tol, source_id=source_id)


def load_maass_record(path, validate_limit: int = 20) -> MaassFormRecord:
    """Read and validate a coefficient file."""
    path = Path(path)
    record = parse_maass_record(path.read_text(encoding="ascii"), source_id=str(path))
    validate_hecke(record, validate_limit)
    return record


def write_maass_record(record: MaassFormRecord, path) -> None:
    lines = [
        f"# {record.source_id}" if record.source_id else "# Maass form coefficients",
        f"t_phi = {float(record.t_phi)!r}",
        f"parity = {record.parity}",
        f"coeff_tol = {float(record.coeff_tol)!r}",
        f"n_max = {record.n_max}",
    ]
    lines += [f"{n} {float(record.hecke[n])!r}" for n in range(1, record.n_max + 1)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def _primes_up_to(n: int) -> list[int]:
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(n**0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return [int(p) for p in np.nonzero(sieve)[0]]


def hecke_record_from_primes(t_phi, prime_values, n_max, coeff_tol=1e-12, source_id="synthetic"):
    """Hecke-consistent coefficients from chosen values at primes.

    ``prime_values`` maps a prime to ``lambda(p)`` (dict or callable); prime
    powers follow ``lambda(p^(k+1)) = lambda(p) lambda(p^k) - lambda(p^(k-1))``
    and the sequence is extended multiplicatively.
    """
    n_max = int(n_max)
    lookup = prime_values if callable(prime_values) else prime_values.__getitem__
    lam = np.zeros(n_max + 1)
    lam[1] = 1.0
    # smallest prime factor sieve
    spf = np.zeros(n_max + 1, dtype=np.int64)
    for p in _primes_up_to(n_max):
        block = spf[p::p]
        block[block == 0] = p
    prime_power = {}
    for p in _primes_up_to(n_max):
        lp = float(lookup(p))
        prev, cur = 1.0, lp
        q = p
        while q <= n_max:
            prime_power[q] = cur
            prev, cur = cur, lp * cur - prev
            q *= p
    for n in range(2, n_max + 1):
        p = int(spf[n])
        q = p
        while n % (q * p) == 0:
            q *= p
        lam[n] = prime_power[q] * lam[n // q]
    return MaassFormRecord(t_phi=float(t_phi), hecke=lam, coeff_tol=coeff_tol, source_id=source_id)


class MaassForm(BaseEstimator):
    """Evaluator for an even Maass cusp form with ``rho(1) = rho1``.

    ``phi(x + iy) = sum_{n >= 1} 2 rho1 lambda(n) sqrt(y) Khat(t_phi, 2 pi n y) cos(2 pi n x)``,
    with the ``exp(pi t_phi / 2)`` scale absorbed into ``Khat``.
    """

    def __init__(self, record=None, tol=1e-10, rho1=1.0):
        self.record = record
        self.tol = tol
        self.rho1 = rho1

    def fit(self, X=None, y=None):
        if not isinstance(self.record, MaassFormRecord):
            raise DomainError("record must be a MaassFormRecord")
        check_scalar(self.tol, "tol", min_val=0.0, include_min=False)
        check_scalar(self.rho1, "rho1", min_val=0.0, include_min=False)
        rec = self.record
        self.t_phi_ = rec.t_phi
        self.abs_hecke_ = np.abs(rec.hecke[1:]) + rec.coeff_tol
        self.n_max_ = rec.n_max
        self._tail_cache = {}
        return self

    def _tail_profile(self, y_min):
        """``suffix[N] >= sum_{n > N} 2 |lambda(n)| Khat(2 pi n y_min)`` for N <= n_max."""
        key = math.floor(8 * math.log2(y_min))
        cached = self._tail_cache.get(key)
        if cached is not None:
            return cached
        yq = 2.0 ** (key / 8)
        t = self.t_phi_
        n_in = np.arange(1, self.n_max_ + 1)
        inside = 2 * self.abs_hecke_ * bessel_k_scaled_bound(t, 2 * math.pi * n_in * yq)
        # beyond n_max only the Kim-Sarnak bound is available
        start = self.n_max_ + 1
        grow = math.pi * t / 2
        stop = start + int(math.ceil((grow + 80.0) / (2 * math.pi * yq))) + 8
        n_out = np.arange(start, stop + 1, dtype=float)
        outside = 2 * np.sum(
            2 * np.sqrt(n_out) * n_out**_KIM_SARNAK * bessel_k_scaled_bound(t, 2 * math.pi * n_out * yq)
        )
        q = math.exp(-2 * math.pi * yq)
        outside += 4 * math.exp(grow - 2 * math.pi * (stop + 1) * yq) * (stop + 1) ** (1 + _KIM_SARNAK) / (1 - q) ** 2
        suffix = np.concatenate([np.cumsum(inside[::-1])[::-1], [0.0]]) + outside
        self._tail_cache[key] = suffix
        return suffix

    def _required_terms(self, y_min):
        suffix = self.rho1 * self._tail_profile(y_min)
        ok = np.nonzero(suffix[1:] < self.tol)[0]
        if ok.size == 0:
            raise TruncationError(
                f"tolerance {self.tol:g} needs more than n_max={self.n_max_} coefficients at y={y_min:g}"
            )
        n_terms = int(ok[0]) + 1
        return n_terms, float(suffix[n_terms])

    def truncation_length(self, y_min):
        check_is_fitted(self, "abs_hecke_")
        return self._required_terms(float(y_min))[0]

    def evaluate(self, Z, y=None):
        """Values of ``phi`` and absolute error bounds at the points ``Z``."""
        check_is_fitted(self, "abs_hecke_")
        x, yy = check_points(Z, y)
        if np.any(yy <= 0):
            raise DomainError("Im z must be positive")
        if x.size == 0:
            return np.empty(0), np.empty(0)
        n_terms, tail = self._required_terms(float(yy.min()))
        n = np.arange(1, n_terms + 1, dtype=float)
        arg = 2 * math.pi * np.outer(yy, n)
        kv, kerr = bessel_k_scaled_array(self.t_phi_, arg.ravel())
        kv = kv.reshape(arg.shape)
        kerr = kerr.reshape(arg.shape)
        lam = self.record.hecke[1 : n_terms + 1]
        cosines = np.cos(2 * math.pi * np.outer(np.abs(x - np.rint(x)), n))  # even and 1-periodic in x
        series = (lam * kv * cosines).sum(axis=1)
        lam_err = self.record.coeff_tol
        err = (
            (np.abs(lam) * kerr).sum(axis=1)
            + lam_err * np.abs(kv).sum(axis=1)
            + 4 * n_terms * EPS * (np.abs(lam * kv)).sum(axis=1)
        )
        sqrt_y = np.sqrt(yy)
        scale = 2.0 * self.rho1 * sqrt_y
        return scale * series, scale * err + self.rho1 * sqrt_y * tail

    def predict(self, Z, y=None):
        return self.evaluate(Z, y)[0]

    def along(self, x0, ys, restricted=True):
        ys = np.asarray(ys, dtype=float).ravel()
        values, errors = self.evaluate(np.full(ys.shape, float(x0)), ys)
        if restricted:
            root = np.sqrt(ys)
            return values / root, errors / root
        return values, errors

    @property
    def spectral_parameter(self):
        return self.record.t_phi


MaassEvaluator = MaassForm


def maass_eval(ev: MaassForm, segment, y: float):
    """``y^(-1/2) phi(x0 + iy)`` on a geodesic segment with its error bound."""
    y = check_scalar(y, "y", min_val=0.0, include_min=False)
    if not (segment.a <= y <= segment.b + segment.eval_margin):
        raise DomainError(f"y={y} outside [{segment.a}, {segment.b + segment.eval_margin}]")
    values, errors = ev.along(float(segment.x0), np.array([y]))
    return float(values[0]), float(errors[0])


def l_phi_truncated(record: MaassFormRecord, s, n_terms: int):
    """Partial sum of ``L_phi(s) = sum lambda(n) n^-s`` and a residual indicator.

    ``tail_note`` is ``sum_{n_terms < n <= n_max} |lambda(n)| n^-Re(s)``, a
    heuristic size for what was dropped, not a bound.
    """
    n_terms = check_scalar(n_terms, "n_terms", min_val=1, integer=True)
    if n_terms > record.n_max:
        raise DomainError(f"n_terms={n_terms} exceeds n_max={record.n_max}")
    s = complex(s) if isinstance(s, numbers.Number) else complex(s)
    n = np.arange(1, n_terms + 1, dtype=float)
    value = np.sum(record.hecke[1 : n_terms + 1] * np.exp(-s * np.log(n)))
    rest = np.arange(n_terms + 1, record.n_max + 1, dtype=float)
    tail_note = float(np.sum(np.abs(record.hecke[n_terms + 1 :]) * rest ** (-s.real)))
    return complex(value), tail_note
