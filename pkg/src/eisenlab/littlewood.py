"""Littlewood-type sign-change certificates and exponent bookkeeping.

The certificate turns three numbers, ``M1``, ``M2`` (normalised ``L^1`` and
``L^2`` norms on ``I = [a, b]``) and the window functional
``J(f, eta)`` with ``eta = |I| / N``, into a lower bound on the number of sign
changes: if ``M1 >= c M2`` and ``J < c^3 eta M2 / 16`` for some ``c`` in
(0, 1), then ``f`` changes sign at least ``c^2 N / 8`` times on ``I``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

from ._validation import check_scalar
from .exceptions import DegenerateError, DomainError
from .restriction import as_form, as_segment, j_functional, m_p_norm

__all__ = [
    "LittlewoodCertificate",
    "ExponentBudget",
    "CERTIFICATE_COLUMNS",
    "BUDGET_COLUMNS",
    "certify",
    "exponent_budget",
]

CERTIFICATE_COLUMNS = ("a", "b", "N", "eta", "M1", "M2", "c", "J", "threshold", "hypotheses_hold", "lower_bound")
BUDGET_COLUMNS = ("epsilon", "p", "kappa", "delta_min", "final_exponent")

C_POLICIES = ("ratio", "clamped", "ratio-clamped")


@dataclass(frozen=True)
class LittlewoodCertificate:
    a: float
    b: float
    N: int
    eta: float
    M1: float
    M2: float
    c: float
    J: float
    threshold: float
    hypotheses_hold: bool
    lower_bound: int
    clamp_applied: bool
    M1_error: float = 0.0
    M2_error: float = 0.0
    J_error: float = 0.0
    measure: str = "lebesgue"

    @property
    def interval(self):
        return (self.a, self.b)

    @property
    def eta_exact(self) -> Fraction:
        """``(b - a) / N`` as an exact rational of the float inputs."""
        return (Fraction(self.b) - Fraction(self.a)) / self.N

    def as_row(self):
        return (self.a, self.b, self.N, self.eta, self.M1, self.M2, self.c, self.J,
                self.threshold, int(self.hypotheses_hold), self.lower_bound)


def _ceil_conservative(x):
    # never round an almost-integer up by floating noise
    return math.ceil(x * (1.0 - 8 * 2.0**-52))


def certify(form, segment, N, c_policy="clamped", eps_c=1e-3, *, measure="lebesgue",
            restricted=True, base_grid=None) -> LittlewoodCertificate:
    """Test the certificate hypotheses for ``f`` on ``[a, b]`` with ``eta = |I|/N``.

    ``c`` is taken from the data as ``(M1 - dM1) / (M2 + dM2)``, the largest
    value for which ``M1 >= c M2`` holds for every pair of norms consistent
    with their error bounds. The ``"clamped"`` policy caps it at
    ``1 - eps_c`` so that sign-definite inputs with ``M1 == M2`` get a
    well-defined (failing) test instead of ``c = 1``. The ``J`` hypothesis is
    tested as ``J + dJ < c^3 eta (M2 - dM2) / 16``.

    The segment must extend at least ``eta`` above ``b`` (``eval_margin``).
    """
    segment = as_segment(segment)
    N = check_scalar(N, "N", min_val=2, integer=True)
    if c_policy not in C_POLICIES:
        raise DomainError(f"c_policy must be one of {C_POLICIES}, got {c_policy!r}")
    eps_c = check_scalar(eps_c, "eps_c", min_val=0.0, max_val=1.0, include_min=False)
    if measure != "lebesgue":
        warnings.warn("the certificate is stated for the Lebesgue measure dy; "
                      f"using {measure!r} is exploratory", stacklevel=2)
    a, b = segment.a, segment.b
    eta = float((Fraction(b) - Fraction(a)) / N)
    if segment.eval_margin < eta * (1 - 1e-12):
        raise DomainError(
            f"f must be defined on [a, b + eta] with eta={eta:.6g}; the segment's margin is {segment.eval_margin:.6g}"
        )
    form = as_form(form, restricted)
    n1 = m_p_norm(form, segment, 1.0, measure, base_grid=base_grid)
    n2 = m_p_norm(form, segment, 2.0, measure, base_grid=base_grid)
    if n2.value <= n2.quad_error:
        raise DegenerateError(f"M2 = {n2.value:.3g} does not exceed its error {n2.quad_error:.3g}")
    c = (n1.value - n1.quad_error) / (n2.value + n2.quad_error)
    clamp_applied = False
    if c_policy != "ratio" and c > 1.0 - eps_c:
        c, clamp_applied = 1.0 - eps_c, True
    jr = j_functional(form, segment, eta, base_grid=base_grid)
    threshold = c**3 * eta * n2.value / 16.0
    hold = bool(0.0 < c < 1.0 and jr.value + jr.quad_error < c**3 * eta * (n2.value - n2.quad_error) / 16.0)
    lower = min(N, _ceil_conservative(c * c * N / 8.0)) if hold else 0
    return LittlewoodCertificate(
        a=a, b=b, N=N, eta=eta, M1=n1.value, M2=n2.value, c=c, J=jr.value,
        threshold=threshold, hypotheses_hold=hold, lower_bound=lower,
        clamp_applied=clamp_applied, M1_error=n1.quad_error, M2_error=n2.quad_error,
        J_error=jr.quad_error, measure=measure,
    )


@dataclass(frozen=True)
class ExponentBudget:
    """Admissible window exponents and the resulting sign-change exponent.

    With ``eta = t^(delta - 1)`` the argument needs ``delta > delta_min``; the
    final count is ``>> t^final_exponent``.
    """

    epsilon: float
    p: float
    kappa: float
    regime: str
    delta_min_eisenstein: float
    delta_min_cusp: float
    final_exponent_eisenstein: float
    final_exponent_cusp: float

    @property
    def delta_min(self) -> float:
        return self.delta_min_eisenstein if self.regime == "eisenstein" else self.delta_min_cusp

    @property
    def final_exponent(self) -> float:
        return self.final_exponent_eisenstein if self.regime == "eisenstein" else self.final_exponent_cusp

    def as_row(self):
        return (self.epsilon, self.p, self.kappa, self.delta_min, self.final_exponent)


_KAPPA_FLOOR = {"eisenstein": 8.0, "cusp": 9.0}


def exponent_budget(epsilon, p, kappa, regime="eisenstein") -> ExponentBudget:
    epsilon = check_scalar(epsilon, "epsilon", min_val=0.0, include_min=False)
    p = check_scalar(p, "p", min_val=2.0, include_min=False)
    kappa = check_scalar(kappa, "kappa")
    if regime not in _KAPPA_FLOOR:
        raise DomainError(f"regime must be 'eisenstein' or 'cusp', got {regime!r}")
    if kappa <= _KAPPA_FLOOR[regime]:
        raise DomainError(f"kappa must exceed {_KAPPA_FLOOR[regime]:g} in the {regime} regime, got {kappa}")
    ratio = epsilon / (p - 2.0)
    final = 1.0 - kappa * p * ratio
    return ExponentBudget(
        epsilon=epsilon, p=p, kappa=kappa, regime=regime,
        delta_min_eisenstein=6.0 * p * ratio,
        delta_min_cusp=(7.0 * p - 2.0) * ratio,
        final_exponent_eisenstein=final,
        final_exponent_cusp=final,
    )
