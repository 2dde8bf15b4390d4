"""The real-analytic Eisenstein series for SL2(Z) via its Fourier expansion.

For ``s = 1/2 + it`` all quantities carrying ``exp(+-pi t/2)`` are held in
scaled form: ``theta_hat = exp(pi t/2) theta(s)`` and
``Khat = exp(pi t/2) K_{it}``, so the exponentials cancel symbolically in

    E(z, s) = y^s + phi(s) y^(1-s)
              + 4 sqrt(y) / theta_hat * sum_n eta_it(n) Khat(t, 2 pi n y) cos(2 pi n x).

On the critical line ``E(z, s) = phi(s) * conj(E(z, s))``, so ``E`` is real
only up to the unimodular constant ``theta(s)/|theta(s)|``. Real values are
reported for the phase-normalised series ``theta(s) E(z, s) / |theta(s)|``,
which has the same modulus, zeros and sign changes.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.special import kve
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points, check_scalar
from .exceptions import DomainError, PoleError, TruncationError
from .special import (
    EPS,
    PrecisionPolicy,
    bessel_k_scaled_array,
    bessel_k_scaled_bound,
    gamma_complex,
    zeta_complex,
)

__all__ = [
    "SpectralPoint",
    "TruncationReport",
    "EisensteinSeries",
    "EisensteinContext",
    "theta_factor",
    "theta_scaled",
    "scattering_phi",
    "divisor_eta",
    "divisor_eta_table",
    "divisor_count_table",
    "truncation_length",
    "eisenstein_eval",
    "restricted_eval",
]


@dataclass(frozen=True)
class SpectralPoint:
    t: float

    def __post_init__(self):
        check_scalar(self.t, "t", min_val=0.0)

    @property
    def s(self) -> complex:
        return complex(0.5, self.t)

    @property
    def eigenvalue(self) -> float:
        return 0.25 + self.t * self.t


@dataclass(frozen=True)
class TruncationReport:
    n_terms: int
    tail_bound: float


def _mpc(s):
    s = complex(s) if not isinstance(s, (mpmath.mpc, mpmath.mpf)) else s
    return mpmath.mpc(s)


def theta_factor(s, prec: PrecisionPolicy = PrecisionPolicy()) -> mpmath.mpc:
    """theta(s) = pi^(-s) Gamma(s) zeta(2s)."""
    z = _mpc(s)
    if z == mpmath.mpf(0.5):
        raise PoleError("theta has a pole at s=1/2 (zeta(2s) at 2s=1)")
    with mpmath.workprec(prec.base_bits + 16):
        return mpmath.power(mpmath.pi, -z) * gamma_complex(z, prec) * zeta_complex(2 * z, prec)


def _completed_zeta(w, prec: PrecisionPolicy) -> mpmath.mpc:
    """Lambda(w) = pi^(-w/2) Gamma(w/2) zeta(w), with Lambda(w) = Lambda(1-w)."""
    w = _mpc(w)
    if w == 0 or w == 1:
        raise PoleError(f"completed zeta has a pole at w={complex(w)}")
    with mpmath.workprec(prec.base_bits + 16):
        if w.real < 0.5:
            w = 1 - w
        return (
            mpmath.power(mpmath.pi, -w / 2)
            * mpmath.exp(mpmath.loggamma(w / 2))
            * zeta_complex(w, prec)
        )


def theta_scaled(t: float, prec: PrecisionPolicy = PrecisionPolicy()) -> mpmath.mpc:
    """exp(pi t/2) * theta(1/2 + it), finite and O(polylog t) in size."""
    t = check_scalar(t, "t", min_val=0.0)
    if t == 0:
        raise PoleError("theta has a pole at s=1/2")
    with mpmath.workprec(prec.effective_bits(t) + 16):
        s = mpmath.mpc(0.5, t)
        log_gamma = mpmath.loggamma(s) + mpmath.pi * t / 2
        return mpmath.power(mpmath.pi, -s) * mpmath.exp(log_gamma) * zeta_complex(2 * s, prec)


def scattering_phi(s, prec: PrecisionPolicy = PrecisionPolicy()) -> mpmath.mpc:
    """phi(s) = theta(1-s) / theta(s).

    Both factors are evaluated through the completed zeta function, which is
    regular at the Gamma poles that cancel against trivial zeta zeros. At
    ``s = 1/2`` both factors have simple poles with opposite residues and the
    limit ``-1`` is returned.
    """
    z = _mpc(s)
    if z == mpmath.mpf(0.5):
        return mpmath.mpc(-1)
    with mpmath.workprec(prec.base_bits + 16):
        num = _completed_zeta(2 * (1 - z), prec)
        den = _completed_zeta(2 * z, prec)
        if abs(den) <= abs(num) * mpmath.mpf(2) ** (-prec.base_bits + 8):
            raise PoleError(f"theta(s) vanishes to working precision at s={complex(z)}")
        return num / den


def divisor_eta_table(exponent: complex, n_max: int) -> np.ndarray:
    """Array ``a`` with ``a[n] = sum_{ab=n} (a/b)^exponent`` for 1 <= n <= n_max.

    Filled by a divisor sieve; ``a[0]`` is unused. For purely imaginary
    exponents the values are real and the real part is returned.
    """
    n_max = int(n_max)
    exponent = complex(exponent)
    out = np.zeros(n_max + 1, dtype=complex)
    logs = np.log(np.arange(1, n_max + 1, dtype=float))
    for a in range(1, n_max + 1):
        nb = n_max // a
        # (a/b)^w over b = 1..nb
        out[a : a * nb + 1 : a] += np.exp(exponent * (logs[a - 1] - logs[:nb]))
    if exponent.real == 0:
        return out.real.copy()
    if exponent.imag == 0:
        return out.real.copy()
    return out


def divisor_count_table(n_max: int) -> np.ndarray:
    d = np.zeros(int(n_max) + 1, dtype=np.int64)
    for a in range(1, int(n_max) + 1):
        d[a::a] += 1
    return d


def divisor_eta(t: float, n: int) -> float:
    """eta_it(n) = sum_{ab=n} (a/b)^(it) = sum_{a|n} cos(t log(a^2/n))."""
    n = check_scalar(n, "n", min_val=1, integer=True)
    t = float(t)
    total = 0.0
    log_n = math.log(n)
    a = 1
    while a * a <= n:
        if n % a == 0:
            b = n // a
            term = math.cos(t * (2 * math.log(a) - log_n))
            total += term if a == b else 2 * term
        a += 1
    return total


class EisensteinSeries(BaseEstimator):
    """Evaluator for ``E(z, s)`` at a fixed spectral point.

    Exactly one of ``t`` (critical line, ``s = 1/2 + it``) or ``s`` (real
    ``s > 1``, used for cross-checks against lattice sums) must be given.
    ``fit`` caches the scaled constants and the divisor-sum coefficients;
    after that the estimator is read-only and safe to share between threads.

    Parameters
    ----------
    t : float, optional
        Spectral parameter, ``t > 0``.
    s : float, optional
        Real point ``s > 1``.
    tol : float
        Target absolute accuracy of the truncated Fourier series.
    base_bits : int
        Working precision for the cached constants.
    y_floor : float
        Smallest admissible ``Im z``.
    n_cap : int
        Largest admissible number of Fourier terms.
    """

    def __init__(self, t=None, s=None, tol=1e-10, base_bits=64, y_floor=0.05, n_cap=20000):
        self.t = t
        self.s = s
        self.tol = tol
        self.base_bits = base_bits
        self.y_floor = y_floor
        self.n_cap = n_cap

    # -- construction ------------------------------------------------------

    def fit(self, X=None, y=None):
        if (self.t is None) == (self.s is None):
            raise DomainError("give exactly one of t (critical line) or s (real s > 1)")
        check_scalar(self.tol, "tol", min_val=0.0, include_min=False)
        check_scalar(self.y_floor, "y_floor", min_val=0.0, include_min=False)
        check_scalar(self.n_cap, "n_cap", min_val=1, integer=True)
        self.precision_ = PrecisionPolicy(int(self.base_bits))
        self._tail_cache = {}
        self._lock = threading.Lock()
        if self.t is not None:
            t = check_scalar(self.t, "t", min_val=0.0, include_min=False)
            if t > 500:
                raise DomainError("t > 500 is outside the supported range")
            self.spectral_ = SpectralPoint(t)
            self.critical_ = True
            self.order_ = t
            th = theta_scaled(t, self.precision_)
            self.theta_scaled_ = complex(th)
            self.theta_abs_ = float(abs(th))
            self.phase_ = complex(th / abs(th))
            self.phi_ = complex(scattering_phi(self.spectral_.s, self.precision_))
        else:
            s = check_scalar(self.s, "s", min_val=1.0, include_min=False)
            self.spectral_ = None
            self.critical_ = False
            self.order_ = s - 0.5
            th = theta_factor(s, self.precision_)
            self.theta_scaled_ = complex(th)
            self.theta_abs_ = float(abs(th))
            self.phase_ = 1.0 + 0.0j
            self.phi_ = complex(scattering_phi(s, self.precision_))
        self.n_max_ = self._required_terms(self.y_floor, self.y_floor).n_terms
        if self.critical_:
            self.coefficients_ = divisor_eta_table(1j * self.order_, self.n_max_)
        else:
            self.coefficients_ = divisor_eta_table(self.order_, self.n_max_)
        self.divisor_counts_ = divisor_count_table(self.n_max_)
        return self

    # -- truncation --------------------------------------------------------

    def _kernel_bound(self, x):
        if self.critical_:
            return bessel_k_scaled_bound(self.order_, x)
        return kve(self.order_, x) * np.exp(-x)

    def _coefficient_bound(self, n):
        d = divisor_count_table(int(n.max()))[n].astype(float)
        if self.critical_:
            return d
        # eta_nu(n) = n^-nu sigma_2nu(n) <= d(n) n^nu
        return d * n**self.order_

    def _tail_profile(self, y_min):
        """Suffix sums ``T[N] >= sum_{n>N} |eta(n)| Kbound(2 pi n y_min)``."""
        key = math.floor(8 * math.log2(y_min))
        with self._lock:
            cached = self._tail_cache.get(key)
        if cached is not None:
            return cached
        yq = 2.0 ** (key / 8)  # yq <= y_min keeps the bound valid
        # far tail: |Kbound(x)| <= exp(pi*order/2) K_0(x) style decay; stop when negligible
        grow = math.pi * self.order_ / 2 if self.critical_ else 0.0
        n_end = int(math.ceil((grow + 80.0 + 2 * math.log1p(self.order_)) / (2 * math.pi * yq))) + 8
        n_end = max(n_end, 16)
        n = np.arange(1, n_end + 1)
        terms = self._coefficient_bound(n) * self._kernel_bound(2 * math.pi * n * yq)
        # beyond n_end: d(n) <= 2 sqrt(n) and Khat <= exp(pi t/2) sqrt(pi/(2x)) exp(-x)
        q = math.exp(-2 * math.pi * yq)
        if self.critical_:
            remainder = math.exp(grow - 2 * math.pi * (n_end + 1) * yq) / math.sqrt(yq) / (1 - q)
        else:
            remainder = float(terms[-1]) * 4 * q / (1 - q)
        suffix = np.concatenate([np.cumsum(terms[::-1])[::-1], [0.0]]) + remainder
        # suffix[N] = sum_{n > N} terms
        profile = (yq, suffix)
        with self._lock:
            self._tail_cache[key] = profile
        return profile

    def _required_terms(self, y_min, y_max, tol=None):
        tol = self.tol if tol is None else tol
        _, suffix = self._tail_profile(y_min)
        scale = 4.0 * math.sqrt(y_max) / self.theta_abs_
        ok = np.nonzero(scale * suffix < tol)[0]
        if ok.size == 0 or ok[0] > self.n_cap:
            raise TruncationError(
                f"no series length <= {self.n_cap} meets tol={tol:g} at y={y_min:g}"
            )
        n_terms = max(int(ok[0]), 1)
        return TruncationReport(n_terms=n_terms, tail_bound=float(scale * suffix[n_terms]))

    def truncation_length(self, y_min) -> TruncationReport:
        check_is_fitted(self, "coefficients_")
        y_min = check_scalar(y_min, "y_min", min_val=0.0, include_min=False)
        if y_min < self.y_floor:
            raise DomainError(f"y_min={y_min} is below y_floor={self.y_floor}")
        return self._required_terms(y_min, y_min)

    # -- evaluation ----------------------------------------------------------

    def evaluate(self, Z, y=None, *, complex_output=False):
        """Values and absolute error bounds at the points ``Z``.

        Returns ``(values, errors)``. Values are real unless
        ``complex_output`` is set, in which case the complex value (whose
        imaginary part should lie below the error bound) is returned.
        """
        check_is_fitted(self, "coefficients_")
        x, yy = check_points(Z, y)
        if np.any(yy < self.y_floor):
            raise DomainError(f"Im z must be >= y_floor={self.y_floor}")
        values = np.empty(x.shape, dtype=complex)
        errors = np.empty(x.shape)
        chunk = 4096
        for lo in range(0, x.size, chunk):
            sl = slice(lo, lo + chunk)
            values[sl], errors[sl] = self._evaluate_block(x[sl], yy[sl])
        if complex_output:
            return values, errors
        return values.real.copy(), errors

    def _evaluate_block(self, x, y):
        if x.size == 0:
            return np.empty(0, complex), np.empty(0)
        report = self._required_terms(float(y.min()), float(y.max()))
        n_terms = report.n_terms
        n = np.arange(1, n_terms + 1, dtype=float)
        arg = 2 * math.pi * np.outer(y, n)
        if self.critical_:
            kv, kerr = bessel_k_scaled_array(self.order_, arg.ravel())
            kv = kv.reshape(arg.shape)
            kerr = kerr.reshape(arg.shape)
        else:
            kv = kve(self.order_, arg) * np.exp(-arg)
            kerr = 1e-14 * np.abs(kv)
        eta = self.coefficients_[1 : n_terms + 1]
        cosines = np.cos(2 * math.pi * np.outer(np.abs(x - np.rint(x)), n))  # even and 1-periodic in x
        weighted = eta * kv * cosines
        series = weighted.sum(axis=1)
        sqrt_y = np.sqrt(y)
        prefactor = 4.0 * sqrt_y / self.theta_abs_
        if self.critical_:
            s = self.spectral_.s
        else:
            s = float(self.s)
        log_y = np.log(y)
        main = np.exp(s * log_y) + self.phi_ * np.exp((1 - s) * log_y)
        value = self.phase_ * main + prefactor * series
        abs_eta = np.abs(eta)
        series_err = (abs_eta * kerr).sum(axis=1) + 4 * n_terms * EPS * (abs_eta * np.abs(kv)).sum(axis=1)
        tail = report.tail_bound * sqrt_y / math.sqrt(y.max())
        main_err = 8 * EPS * (np.abs(main) + 1.0) * (1.0 + np.abs(s) * np.abs(log_y))
        err = prefactor * series_err + tail + main_err
        return value, err

    def predict(self, Z, y=None):
        return self.evaluate(Z, y)[0]

    def along(self, x0, ys, restricted=True):
        """Values on the vertical line ``Re z = x0``; divided by sqrt(y) if restricted."""
        ys = np.asarray(ys, dtype=float)
        values, errors = self.evaluate(np.full(ys.shape, float(x0)), ys)
        if restricted:
            root = np.sqrt(ys.ravel())
            return values / root, errors / root
        return values, errors

    @property
    def spectral_parameter(self):
        return self.order_ if self.critical_ else None


# the evaluator built once per spectral point
EisensteinContext = EisensteinSeries


def truncation_length(ctx: EisensteinSeries, y_min: float) -> TruncationReport:
    return ctx.truncation_length(y_min)


def eisenstein_eval(ctx: EisensteinSeries, z: complex, *, complex_output=False):
    """Scalar ``(value, abs_error)`` of the series at ``z``."""
    values, errors = ctx.evaluate(np.array([complex(z)]), complex_output=complex_output)
    value = complex(values[0]) if complex_output else float(values[0])
    return value, float(errors[0])


def restricted_eval(ctx: EisensteinSeries, segment, y: float):
    """``f(y) = y^(-1/2) E(x0 + iy)`` on a geodesic segment."""
    y = check_scalar(y, "y", min_val=0.0, include_min=False)
    if not (segment.a <= y <= segment.b + segment.eval_margin):
        raise DomainError(f"y={y} outside [{segment.a}, {segment.b + segment.eval_margin}]")
    values, errors = ctx.along(float(segment.x0), np.array([y]))
    return float(values[0]), float(errors[0])
