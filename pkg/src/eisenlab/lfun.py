"""L-functions attached to E_t and mean values of zeta on the critical line.

``L(t, nu) = zeta(nu + it) zeta(nu - it)`` is the Rankin-type L-function of
the Eisenstein series; its Dirichlet coefficients are the divisor sums
``eta_it(n)``. The gamma factor and the window kernel ``I(eta, y; nu)`` are
the remaining pieces of the Mellin-side bound for ``J``; they are exposed
here so that the size of each piece can be inspected numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.special import loggamma

from ._validation import check_scalar
from .eisenstein import divisor_count_table, divisor_eta_table, theta_scaled
from .exceptions import DomainError, PoleError, QuadratureError
from .maass import MaassFormRecord
from .special import DEFAULT_POLICY, PrecisionPolicy, zeta_array, zeta_complex

__all__ = [
    "CriticalPoint",
    "GammaFactor",
    "MomentScan",
    "MOMENT_COLUMNS",
    "eisenstein_l",
    "dirichlet_l_truncated",
    "divisor_tail_bound",
    "gamma_factor",
    "i_kernel",
    "j_integrand_profile",
    "zeta_moment",
    "zeta_moment_integral",
    "moment_scan",
    "second_moment_main_term",
    "maass_l_second_moment",
]

MOMENT_COLUMNS = ("T", "k", "value", "quad_error")
REGIONS = ("low", "middle", "high")


@dataclass(frozen=True)
class CriticalPoint:
    r: float

    @property
    def nu(self) -> complex:
        return complex(0.5, self.r)


def eisenstein_l(t, nu, prec: PrecisionPolicy = DEFAULT_POLICY) -> mpmath.mpc:
    """``zeta(nu + it) * zeta(nu - it)``."""
    t = check_scalar(t, "t")
    nu = mpmath.mpc(nu)
    return zeta_complex(nu + 1j * t, prec) * zeta_complex(nu - 1j * t, prec)


def divisor_tail_bound(sigma, n_terms, n_exact=None) -> float:
    """Upper bound for ``sum_{n > n_terms} d(n) n^-sigma`` (``sigma > 1``).

    Terms up to ``n_exact`` (default ``16 n_terms``) are summed directly;
    beyond that partial summation with ``sum_{n<=x} d(n) <= x (log x + 1)``
    gives ``sigma M^(1-sigma) ((log M + 1)/(sigma-1) + 1/(sigma-1)^2)``.
    """
    sigma = check_scalar(sigma, "sigma", min_val=1.0, include_min=False)
    n_terms = check_scalar(n_terms, "n_terms", min_val=1, integer=True)
    m = n_exact or 16 * n_terms
    d = divisor_count_table(m)
    n = np.arange(n_terms + 1, m + 1, dtype=float)
    head = float(np.sum(d[n_terms + 1:] * n**-sigma))
    s1 = sigma - 1.0
    tail = sigma * m ** (-s1) * ((math.log(m) + 1.0) / s1 + 1.0 / s1**2)
    return head + tail


def dirichlet_l_truncated(t, nu, n_terms=10_000):
    """``sum_{n <= n_terms} eta_it(n) n^-nu`` and the divisor tail bound.

    The bound is rigorous when ``Re nu > 1``; otherwise it is ``inf``.
    """
    t = check_scalar(t, "t")
    n_terms = check_scalar(n_terms, "n_terms", min_val=1, integer=True)
    nu = complex(nu)
    coeffs = divisor_eta_table(1j * t, n_terms)[1:]
    n = np.arange(1, n_terms + 1, dtype=float)
    value = complex(np.sum(coeffs * np.exp(-nu * np.log(n))))
    bound = divisor_tail_bound(nu.real, n_terms) if nu.real > 1 else math.inf
    return value, bound


@dataclass(frozen=True)
class GammaFactor:
    """``gamma(nu, t) = mantissa * exp(log_scale)``.

    ``ledger`` holds the real log-size of each factor; its values sum to
    ``log_scale``. ``mantissa`` is unimodular.
    """

    mantissa: complex
    log_scale: float
    ledger: dict = field(default_factory=dict)

    @property
    def value(self) -> complex:
        return self.mantissa * math.exp(self.log_scale)

    @property
    def log_abs(self) -> float:
        return self.log_scale


def gamma_factor(nu, t, prec: PrecisionPolicy = DEFAULT_POLICY) -> GammaFactor:
    """``Gamma((nu+it)/2) Gamma((nu-it)/2) pi^-nu / theta(1/2+it)`` in scaled form.

    ``theta(1/2+it)`` is carried as ``theta_hat * exp(-pi t/2)`` so that no
    factor is formed at its natural (exponentially small) size.
    """
    t = check_scalar(t, "t")
    if t == 0:
        raise PoleError("theta(1/2 + it) has a pole at t = 0")
    nu = mpmath.mpc(nu)
    bits = prec.effective_bits(abs(t) + abs(nu.imag)) + 16
    with mpmath.workprec(bits):
        a_plus = (nu + 1j * t) / 2
        a_minus = (nu - 1j * t) / 2
        for arg in (a_plus, a_minus):
            if arg.imag == 0 and arg.real <= 0 and arg.real == int(arg.real):
                raise PoleError(f"Gamma pole at {complex(arg)}")
        lg_plus = mpmath.loggamma(a_plus)
        lg_minus = mpmath.loggamma(a_minus)
        theta_hat = theta_scaled(abs(t), prec)
        if theta_hat == 0:
            raise PoleError("theta(1/2 + it) vanishes")
        log_theta = mpmath.log(theta_hat) - mpmath.pi * abs(t) / 2
        log_pi = -nu * mpmath.log(mpmath.pi)
        total = lg_plus + lg_minus - log_theta + log_pi
        ledger = {
            "gamma_plus": float(lg_plus.real),
            "gamma_minus": float(lg_minus.real),
            "theta": float(-log_theta.real),
            "pi": float(log_pi.real),
        }
        # theta(1/2 - it) = conj(theta(1/2 + it)), so negative t flips the phase
        phase = total.imag if t > 0 else total.imag + 2 * mpmath.im(log_theta)
        mantissa = complex(mpmath.expj(phase))
    return GammaFactor(mantissa, float(total.real), ledger)


def i_kernel(eta, y, nu):
    """``int_0^eta (y + v)^-nu dv`` in closed form, vectorised over ``nu``.

    Written as ``y^(1-nu) L (e^w - 1)/w`` with ``L = log(1 + eta/y)`` and
    ``w = (1 - nu) L`` so that ``nu -> 1`` (value ``L``) is handled without
    cancellation.
    """
    eta = check_scalar(eta, "eta", min_val=0.0, include_min=False)
    y = check_scalar(y, "y", min_val=0.0, include_min=False)
    nu = np.asarray(nu, dtype=complex)
    log_ratio = math.log1p(eta / y)
    w = (1.0 - nu) * log_ratio
    small = np.abs(w) < 1e-3
    safe_w = np.where(small, 1.0, w)
    series = 1 + w / 2 + w**2 / 6 + w**3 / 24 + w**4 / 120
    half = 0.5 * safe_w.imag
    # e^w - 1 = expm1(Re w) e^(i Im w) + 2i sin(Im w / 2) e^(i Im w / 2)
    numer = np.expm1(safe_w.real) * np.exp(2j * half) + 2j * np.sin(half) * np.exp(1j * half)
    ratio = np.where(small, series, numer / safe_w)
    out = np.exp((1.0 - nu) * math.log(y)) * log_ratio * ratio
    return out[()] if out.ndim == 0 else out


def _log_abs_gamma_factor(nu, t):
    """Vectorised float64 ``log |gamma(nu, t)|`` (same pieces as the ledger)."""
    log_theta = math.log(abs(complex(theta_scaled(abs(t))))) - math.pi * abs(t) / 2
    lg = loggamma((nu + 1j * t) / 2).real + loggamma((nu - 1j * t) / 2).real
    return lg - log_theta - nu.real * math.log(math.pi)


@dataclass(frozen=True)
class JIntegrandProfile:
    t: float
    eta: float
    y: float
    r: np.ndarray
    log_value: np.ndarray
    region: np.ndarray

    @property
    def value(self) -> np.ndarray:
        with np.errstate(under="ignore", over="ignore"):
            return np.exp(self.log_value)


def j_integrand_profile(t, eta, r_grid, y) -> JIntegrandProfile:
    """``|I(eta, y; 1/2+ir) gamma(1/2+ir, t) L(t, 1/2+ir)|^2`` over ``r_grid``.

    Values are carried as natural logs. Regions are tagged ``low``
    (``|r| < 1/eta``), ``middle`` (``1/eta <= |r| <= t``) and ``high``
    (``|r| > t``).
    """
    t = check_scalar(t, "t", min_val=0.0, include_min=False)
    eta = check_scalar(eta, "eta", max_val=1.0)
    if not (2.0 / t < eta < 1.0):
        raise DomainError(f"need 2/t < eta < 1, got eta={eta}, t={t}")
    y = check_scalar(y, "y", min_val=0.0, include_min=False)
    r = np.atleast_1d(np.asarray(r_grid, dtype=float))
    if not np.all(np.isfinite(r)):
        raise DomainError("r_grid must be finite")
    nu = 0.5 + 1j * r
    log_i = np.log(np.abs(i_kernel(eta, y, nu)))
    log_gamma = _log_abs_gamma_factor(nu, t)
    z_plus, _ = zeta_array(nu + 1j * t)
    z_minus, _ = zeta_array(nu - 1j * t)
    with np.errstate(divide="ignore"):
        log_l = np.log(np.abs(z_plus)) + np.log(np.abs(z_minus))
    log_value = 2.0 * (log_i + log_gamma + log_l)
    ar = np.abs(r)
    region = np.where(ar < 1.0 / eta, "low", np.where(ar <= t, "middle", "high"))
    return JIntegrandProfile(t, eta, y, r, log_value, region)


# ---------------------------------------------------------------------------
# moments of zeta
# ---------------------------------------------------------------------------


def _simpson(values, h):
    return h / 3.0 * (values[0] + values[-1] + 4.0 * values[1:-1:2].sum() + 2.0 * values[2:-1:2].sum())


def zeta_moment_integral(t0, t1, k, resolution=0.05):
    """``int_{t0}^{t1} |zeta(1/2+it)|^(2k) dt`` with an error estimate.

    Composite Simpson with step ``h <= resolution`` (interval count a
    multiple of 4), compared against the same rule at ``2h``. The error is
    the Richardson estimate ``|S_h - S_2h| / 15`` plus the propagated zeta
    error.
    """
    if k not in (1, 2):
        raise DomainError(f"k must be 1 or 2, got {k!r}")
    resolution = check_scalar(resolution, "resolution", min_val=0.0, max_val=0.25, include_min=False)
    if not t1 > t0:
        raise DomainError(f"need t1 > t0, got [{t0}, {t1}]")
    n = 4 * math.ceil((t1 - t0) / (4 * resolution))
    ts = np.linspace(t0, t1, n + 1)
    h = (t1 - t0) / n
    z, zerr = zeta_array(0.5 + 1j * ts)
    az = np.abs(z)
    f = az ** (2 * k)
    df = 2 * k * (az + zerr) ** (2 * k - 1) * zerr
    fine = _simpson(f, h)
    coarse = _simpson(f[::2], 2 * h)
    return fine, abs(fine - coarse) / 15.0 + _simpson(df, h), abs(fine - coarse)


def zeta_moment(T, k, resolution=0.05, rtol=1e-2):
    """``(1/T) int_0^T |zeta(1/2+it)|^(2k) dt`` and its error estimate.

    Raises :class:`QuadratureError` when the two Simpson resolutions differ
    by more than ``rtol`` relative.
    """
    T = check_scalar(T, "T", min_val=0.0, include_min=False)
    value, err, diff = zeta_moment_integral(0.0, T, k, resolution)
    if diff > rtol * abs(value):
        raise QuadratureError(f"moment resolutions disagree by {diff / abs(value):.3g} (relative)")
    return value / T, err / T


@dataclass(frozen=True)
class MomentScan:
    k: int
    T_grid: np.ndarray
    values: np.ndarray
    quad_errors: np.ndarray

    def rows(self):
        return [(float(T), self.k, float(v), float(e)) for T, v, e in zip(self.T_grid, self.values, self.quad_errors)]


def moment_scan(k, T_grid, resolution=0.05, rtol=1e-2) -> MomentScan:
    """Moments at every ``T`` in ``T_grid`` from one pass over ``[0, max T]``.

    The integral is accumulated over consecutive pieces ``[T_(i-1), T_i]``;
    each piece is checked for two-resolution agreement.
    """
    grid = np.asarray(T_grid, dtype=float).ravel()
    if grid.size == 0 or np.any(~np.isfinite(grid)) or np.any(grid <= 0):
        raise DomainError("T_grid must be a nonempty list of positive numbers")
    order = np.argsort(grid, kind="stable")
    values = np.empty(grid.size)
    errors = np.empty(grid.size)
    total, total_err, left = 0.0, 0.0, 0.0
    for i in order:
        T = grid[i]
        if T > left:
            piece, err, diff = zeta_moment_integral(left, T, k, resolution)
            if diff > rtol * abs(piece):
                raise QuadratureError(f"moment resolutions disagree on [{left:g}, {T:g}]")
            total, total_err, left = total + piece, total_err + err, T
        values[i] = total / T
        errors[i] = total_err / T
    return MomentScan(int(k), grid, values, errors)


def second_moment_main_term(T) -> float:
    """``log T + 2 gamma_E - 1 - log 2 pi``."""
    return math.log(T) + 2 * float(mpmath.euler) - 1.0 - math.log(2 * math.pi)


_MAASS_CAVEAT = (
    "exploratory: raw Dirichlet-series truncation on the critical line, "
    "no approximate functional equation; not an estimate of the true moment"
)


def maass_l_second_moment(record: MaassFormRecord, T, n_terms, window=None, resolution=0.05):
    """``(1/T) int_window |sum_{n<=n_terms} lambda(n) n^(-1/2-it)|^2 dt``.

    ``window`` defaults to ``(T, 2T)``. Returns ``(value, caveat)``.
    """
    T = check_scalar(T, "T", min_val=0.0, include_min=False)
    n_terms = check_scalar(n_terms, "n_terms", min_val=1, integer=True)
    if n_terms > record.n_max:
        raise DomainError(f"n_terms={n_terms} exceeds n_max={record.n_max}")
    lo, hi = window if window is not None else (T, 2 * T)
    if not hi > lo:
        raise DomainError(f"empty window {window!r}")
    resolution = check_scalar(resolution, "resolution", min_val=0.0, max_val=0.25, include_min=False)
    n = 2 * math.ceil((hi - lo) / (2 * resolution))
    ts = np.linspace(lo, hi, n + 1)
    coeffs = record.hecke[1:n_terms + 1] / np.sqrt(np.arange(1, n_terms + 1))
    logs = np.log(np.arange(1, n_terms + 1, dtype=float))
    f = np.empty(ts.size)
    step = max(1, (1 << 20) // n_terms)
    for i in range(0, ts.size, step):
        partial = np.exp(-1j * np.outer(ts[i:i + step], logs)) @ coeffs
        f[i:i + step] = np.abs(partial) ** 2
    value = _simpson(f, (hi - lo) / n) / (hi - lo)
    return float(value), _MAASS_CAVEAT
