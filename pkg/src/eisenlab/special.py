"""Complex Gamma, complex zeta and the scaled imaginary-order K-Bessel function.

Two families of routines live here:

* extended-precision scalar routines built on :mod:`mpmath` numbers
  (``gamma_complex``, ``zeta_complex``, ``bessel_k_scaled``), used for
  cached constants and as references;
* vectorised float64 routines (``bessel_k_scaled_array``, ``zeta_array``)
  that carry an explicit absolute error bound per entry and do the bulk
  work of grid scans.

The Bessel function is always handled in the scaled form
``Khat(tau, x) = exp(pi*tau/2) * K_{i tau}(x)``, which is O(1) where the
unscaled function is of size ``exp(-pi*tau/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.special import bernoulli, k0e, k1e

from .exceptions import DomainError, PoleError, PrecisionError

__all__ = [
    "PrecisionPolicy",
    "ScaledBesselValue",
    "gamma_complex",
    "zeta_complex",
    "bessel_k_scaled",
    "bessel_k_scaled_array",
    "bessel_k_scaled_bound",
    "zeta_array",
]

EPS = np.finfo(float).eps
ZETA_MAX_HEIGHT = 1.0e5
BESSEL_MAX_ORDER = 500.0


@dataclass(frozen=True)
class PrecisionPolicy:
    """Working-precision rule for extended-precision evaluations.

    With ``spectral_scaling`` the working precision grows with the spectral
    parameter so that cancellation of size ``exp(pi*t/2)`` is absorbed.
    """

    base_bits: int = 64
    spectral_scaling: bool = True

    def __post_init__(self):
        if int(self.base_bits) != self.base_bits or self.base_bits < 64:
            raise DomainError(f"base_bits must be an integer >= 64, got {self.base_bits!r}")

    def effective_bits(self, t: float = 0.0) -> int:
        bits = int(self.base_bits)
        if self.spectral_scaling and t:
            bits += math.ceil(math.pi * abs(float(t)) / (2.0 * math.log(2.0)))
        return bits


DEFAULT_POLICY = PrecisionPolicy()


@dataclass(frozen=True)
class ScaledBesselValue:
    tau: float
    x: float
    value: float
    abs_error: float


def _as_mpc(s) -> mpmath.mpc:
    if isinstance(s, (mpmath.mpc, mpmath.mpf)):
        return mpmath.mpc(s)
    s = complex(s)
    return mpmath.mpc(s.real, s.imag)


def _is_nonpositive_integer(s: mpmath.mpc) -> bool:
    return s.imag == 0 and s.real <= 0 and s.real == mpmath.floor(s.real)


def gamma_complex(s, prec: PrecisionPolicy = DEFAULT_POLICY) -> mpmath.mpc:
    """Gamma(s) at ``prec.base_bits + 8`` bits."""
    with mpmath.workprec(prec.base_bits + 8):
        z = _as_mpc(s)
        if _is_nonpositive_integer(z):
            raise PoleError(f"Gamma has a pole at s={complex(z)}")
        return mpmath.gamma(z)


@lru_cache(maxsize=8)
def _bernoulli_even(bits: int, count: int) -> tuple:
    # B_2, B_4, ..., B_{2*count} divided by their factorials
    with mpmath.workprec(bits):
        return tuple(mpmath.bernoulli(2 * k) / mpmath.factorial(2 * k) for k in range(1, count + 1))


def _zeta_euler_maclaurin(s: mpmath.mpc, bits: int) -> mpmath.mpc:
    sigma = s.real
    n_terms = int(mpmath.ceil(abs(s) / mpmath.pi)) + 10 + bits // 8
    target = mpmath.mpf(2) ** (-bits)
    max_corr = 250
    bern = _bernoulli_even(bits + 32, max_corr + 1)
    for _ in range(8):
        head = mpmath.fsum(mpmath.power(n, -s) for n in range(1, n_terms))
        big_n = mpmath.mpf(n_terms)
        n_pow = mpmath.power(big_n, -s)
        approx = head + big_n * n_pow / (s - 1) + n_pow / 2
        rising = s  # s (s+1) ... (s + 2k - 2)
        power = n_pow / big_n
        done = False
        for k in range(1, max_corr + 1):
            approx += bern[k - 1] * rising * power
            rising *= (s + 2 * k - 1) * (s + 2 * k)
            power /= big_n * big_n
            if sigma + 2 * k + 1 > 0:
                remainder = (
                    abs(rising * (s + 2 * k + 1))
                    * abs(bern[k])
                    * abs(power)
                    / (sigma + 2 * k + 1)
                )
                if remainder <= target * max(abs(approx), target):
                    done = True
                    break
        if done:
            return approx
        n_terms *= 2
    raise PrecisionError(f"Euler-Maclaurin did not converge at s={complex(s)}")


def zeta_complex(s, prec: PrecisionPolicy = DEFAULT_POLICY) -> mpmath.mpc:
    """Riemann zeta(s) by Euler-Maclaurin summation with a Bernoulli tail bound.

    The series length is chosen from ``|s|`` and the working precision; the
    number of correction terms grows until the remainder bound falls below
    ``2**-bits`` relative to the partial result.
    """
    z = _as_mpc(s)
    if z == 1:
        raise PoleError("zeta has a pole at s=1")
    if abs(z.imag) > ZETA_MAX_HEIGHT:
        raise DomainError(f"|Im s| = {float(abs(z.imag)):.6g} exceeds {ZETA_MAX_HEIGHT:g}")
    bits = prec.base_bits + 16
    with mpmath.workprec(bits + 16):
        z = _as_mpc(s)
        if z.real < -20:
            # reflection keeps the summation in the region where it is cheap
            one_minus = 1 - z
            return (
                mpmath.power(2, z)
                * mpmath.power(mpmath.pi, z - 1)
                * mpmath.sin(mpmath.pi * z / 2)
                * mpmath.gamma(one_minus)
                * _zeta_euler_maclaurin(one_minus, bits)
            )
        return _zeta_euler_maclaurin(z, bits)


# ---------------------------------------------------------------------------
# Scaled K-Bessel function of imaginary order
# ---------------------------------------------------------------------------


def _check_bessel_args(tau: float, x) -> None:
    if tau < 0:
        raise DomainError(f"tau must be >= 0, got {tau}")
    if tau > BESSEL_MAX_ORDER:
        raise DomainError(f"tau={tau} exceeds the supported range tau <= {BESSEL_MAX_ORDER:g}")
    if np.any(np.asarray(x) <= 0):
        raise DomainError("x must be positive")


def bessel_k_scaled(tau: float, x: float, prec: PrecisionPolicy = DEFAULT_POLICY) -> ScaledBesselValue:
    """exp(pi*tau/2) * K_{i tau}(x) by extended-precision tanh-sinh quadrature.

    Integrates ``exp(-x cosh u) cos(tau u)`` over ``[0, u_max]`` split at
    every oscillation period, at ``prec.effective_bits(tau)`` bits so that the
    ``exp(-pi*tau/2)`` cancellation in the integral is resolved.
    """
    tau = float(tau)
    x = float(x)
    _check_bessel_args(tau, x)
    eff = prec.effective_bits(tau) if prec.spectral_scaling else prec.base_bits
    target = 2.0 ** (-prec.base_bits / 2)
    with mpmath.workprec(eff + 32):
        mx = mpmath.mpf(x)
        mt = mpmath.mpf(tau)
        log_tol = (eff + 16) * mpmath.log(2)
        u_max = mpmath.acosh(max((log_tol + mpmath.log(1 / min(x, 1.0)) + 2) / mx, mpmath.mpf(2)))
        piece = mpmath.mpf(1) if tau == 0 else min(mpmath.mpf(1), 2 * mpmath.pi / mt)
        n_pieces = int(mpmath.ceil(u_max / piece))
        nodes = [piece * k for k in range(n_pieces)] + [u_max]

        def integrand(u):
            return mpmath.exp(-mx * mpmath.cosh(u)) * mpmath.cos(mt * u)

        integral, quad_err = mpmath.quad(integrand, nodes, error=True)
        tail = mpmath.exp(-mx * mpmath.cosh(u_max)) / (mx * mpmath.sinh(u_max))
        scale = mpmath.exp(mpmath.pi * mt / 2)
        value = scale * integral
        abs_error = scale * (quad_err + tail) + abs(value) * mpmath.mpf(2) ** (-prec.base_bits)
        value_f = float(value)
        err_f = float(abs_error)
    if not math.isfinite(err_f) or err_f > target * max(1.0, abs(value_f)):
        raise PrecisionError(
            f"K_(i{tau})({x}): error estimate {err_f:.3g} misses the target; raise base_bits"
        )
    return ScaledBesselValue(tau=tau, x=x, value=value_f, abs_error=err_f)


_CANCEL_EXP = 8.0  # accepted cancellation exp(tau*alpha) on the shifted contour
_TRAP_DIGITS = 36.0
_CHUNK_ELEMS = 1 << 18


def _log_mass(tau: float, alpha: float, x):
    """log of exp(tau*alpha) * K_0(x sin(alpha)), the L1 mass on the contour."""
    z = np.asarray(x, float) * math.sin(alpha)
    return tau * alpha - z + np.log(k0e(z))


def bessel_k_scaled_array(tau: float, x) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised float64 ``exp(pi*tau/2) * K_{i tau}(x)`` with error bounds.

    The defining integral is moved onto the line ``Im u = -theta`` with
    ``theta = pi/2 - alpha``; there the integrand is
    ``exp(-x sin(alpha) cosh u) cos(x cos(alpha) sinh u - tau u)`` times
    ``exp(tau*alpha)``, so choosing ``alpha ~ 8/tau`` bounds the cancellation
    by ``e**8`` instead of ``exp(pi*tau/2)``. The trapezoid rule on this
    analytic integrand converges geometrically; the returned bound adds the
    strip-width discretisation estimate, the truncation tail and rounding.
    """
    tau = float(tau)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_bessel_args(tau, x)
    values = np.empty_like(x)
    errors = np.empty_like(x)
    if x.size == 0:
        return values, errors

    alpha = math.pi / 2 if tau <= 2 * _CANCEL_EXP / math.pi else _CANCEL_EXP / tau
    theta = math.pi / 2 - alpha
    delta = alpha / 2
    sa, ca = math.sin(alpha), math.cos(alpha)
    order = np.argsort(x, kind="stable")
    xs = x[order]

    start = 0
    while start < xs.size:
        xmin = xs[start]
        # strip bound: mass on the two boundary lines of the analyticity strip
        log_m = max(
            float(_log_mass(tau, alpha + delta, xmin)),
            float(_log_mass(tau, alpha - delta, xmin)),
        )
        h = 2 * math.pi * delta / (max(log_m, 0.0) + _TRAP_DIGITS)
        reach = (tau * alpha + 40.0) / (xmin * sa)
        u_max = math.acosh(max(reach, 1.5))
        u = np.arange(0.0, u_max + h, h)
        weights = np.full(u.shape, h)
        weights[0] = h / 2
        n_nodes = u.size
        stop = min(xs.size, start + max(1, _CHUNK_ELEMS // n_nodes))
        block = xs[start:stop, None]
        integrand = np.exp(-block * sa * np.cosh(u)) * np.cos(block * ca * np.sinh(u) - tau * u)
        val = math.exp(tau * alpha) * (integrand @ weights)

        xb = xs[start:stop]
        disc = 2.0 * math.exp(log_m) / math.expm1(2 * math.pi * delta / h)
        u_end = u[-1]
        tail = np.exp(tau * alpha - xb * sa * math.cosh(u_end)) / (xb * sa * math.sinh(u_end))
        # rounding: each node carries eps * |phase(u)| * |f(u)| with
        # |phase| <= (x + tau) cosh u, and int cosh(u) exp(-z cosh u) du = K_1(z)
        z = xb * sa
        mass = np.exp(_log_mass(tau, alpha, xb))
        phase_mass = np.exp(tau * alpha - z) * k1e(z) * (xb + tau)
        rounding = 16 * EPS * (mass * (1.0 + math.sqrt(n_nodes)) + phase_mass)
        values[order[start:stop]] = val
        errors[order[start:stop]] = disc + tail + rounding + 4 * EPS * np.abs(val)
        start = stop
    return values, errors


def bessel_k_scaled_bound(tau: float, x) -> np.ndarray:
    """Rigorous upper bound on ``|exp(pi*tau/2) K_{i tau}(x)|``, decreasing in x.

    For every ``alpha`` in (0, pi/2] the shifted-contour representation gives
    ``|Khat| <= exp(tau*alpha) K_0(x sin(alpha))``; the minimum over a grid of
    ``alpha`` (including the saddle ``arccos(tau/x)`` when ``x > tau``) is
    returned. Each candidate is decreasing in ``x``, hence so is the minimum.
    """
    tau = float(tau)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    alphas = np.linspace(math.pi / 2, 1e-3, 400)
    if tau > 0:
        alphas = np.concatenate([alphas, np.geomspace(1e-3, 1e-6, 40) * min(1.0, 10.0 / tau)])
    best = np.full(x.shape, np.inf)
    for a in alphas:
        best = np.minimum(best, _log_mass(tau, a, x))
    saddle = x > tau
    if np.any(saddle) and tau > 0:
        a = np.arccos(tau / x[saddle])
        a = np.maximum(a, 1e-12)
        z = x[saddle] * np.sin(a)
        best[saddle] = np.minimum(best[saddle], tau * a - z + np.log(k0e(z)))
    return np.exp(best)


# ---------------------------------------------------------------------------
# Vectorised zeta for moment scans
# ---------------------------------------------------------------------------

_ZETA_CORR = 20


@lru_cache(maxsize=1)
def _bernoulli_over_factorial() -> np.ndarray:
    b = bernoulli(2 * _ZETA_CORR + 2)
    return np.array([b[2 * k] / math.factorial(2 * k) for k in range(1, _ZETA_CORR + 2)])


def _zeta_block(s: np.ndarray, n_terms: int) -> tuple[np.ndarray, np.ndarray]:
    n = np.arange(1, n_terms, dtype=float)
    log_n = np.log(n)
    head_terms = np.exp(-np.outer(s, log_n))
    head = head_terms.sum(axis=1)
    big_n = float(n_terms)
    n_pow = np.exp(-s * math.log(big_n))
    approx = head + big_n * n_pow / (s - 1) + n_pow / 2
    coeff = _bernoulli_over_factorial()
    rising = s.copy()
    power = n_pow / big_n
    for k in range(1, _ZETA_CORR + 1):
        approx = approx + coeff[k - 1] * rising * power
        rising = rising * (s + 2 * k - 1) * (s + 2 * k)
        power = power / (big_n * big_n)
    k = _ZETA_CORR
    sigma = s.real
    remainder = np.abs(rising * (s + 2 * k + 1)) * abs(coeff[k]) * np.abs(power) / (sigma + 2 * k + 1)
    sum_mod = np.exp(-np.outer(sigma, log_n)).sum(axis=1)
    rounding = 8 * EPS * (np.abs(s.imag) * math.log(big_n) + 1.0) * (sum_mod + 1.0)
    return approx, remainder + rounding + 4 * EPS * np.abs(approx)


def zeta_array(s) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised float64 zeta(s) with an absolute error bound per entry.

    Euler-Maclaurin with ``N = ceil(|s|/pi) + 20`` head terms and 20
    Bernoulli corrections. Intended for ``-10 < Re s < 10`` and moderate
    heights (moment scans); the bound includes the remainder and rounding.
    """
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    if np.any(s == 1):
        raise PoleError("zeta has a pole at s=1")
    if np.any(np.abs(s.imag) > ZETA_MAX_HEIGHT):
        raise DomainError(f"|Im s| exceeds {ZETA_MAX_HEIGHT:g}")
    if np.any(s.real <= -2 * _ZETA_CORR):
        raise DomainError("Re s too negative for the vectorised path")
    values = np.empty_like(s)
    errors = np.empty(s.shape)
    order = np.argsort(np.abs(s), kind="stable")
    ss = s[order]
    start = 0
    while start < ss.size:
        n_terms = int(math.ceil(abs(ss[start]) / math.pi)) + 20
        stop = start + max(1, (1 << 18) // n_terms)
        # every entry in the block gets the length required by its largest member
        stop = min(stop, ss.size)
        n_terms = int(math.ceil(abs(ss[stop - 1]) / math.pi)) + 20
        val, err = _zeta_block(ss[start:stop], n_terms)
        values[order[start:stop]] = val
        errors[order[start:stop]] = err
        start = stop
    return values, errors
