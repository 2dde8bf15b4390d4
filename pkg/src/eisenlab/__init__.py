"""Certified numerics for sign changes of Eisenstein series and Maass forms
along vertical geodesics of the modular surface."""

from .eisenstein import EisensteinSeries, SpectralPoint, eisenstein_eval, scattering_phi, theta_factor
from .exceptions import (
    DegenerateError,
    DomainError,
    EisenlabError,
    HeckeValidationError,
    ParseError,
    PoleError,
    PrecisionError,
    QuadratureError,
    TruncationError,
)
from .lfun import eisenstein_l, gamma_factor, i_kernel, j_integrand_profile, moment_scan, zeta_moment
from .littlewood import certify, exponent_budget
from .maass import MaassForm, MaassFormRecord, hecke_record_from_primes, load_maass_record
from .restriction import (
    FunctionForm,
    GeodesicSegment,
    Interval,
    count_sign_changes,
    j_functional,
    m_p_norm,
    sample_segment,
)
from .special import PrecisionPolicy, bessel_k_scaled, zeta_complex

__version__ = "0.1.0"

__all__ = [
    "EisensteinSeries",
    "SpectralPoint",
    "eisenstein_eval",
    "scattering_phi",
    "theta_factor",
    "MaassForm",
    "MaassFormRecord",
    "hecke_record_from_primes",
    "load_maass_record",
    "FunctionForm",
    "GeodesicSegment",
    "Interval",
    "count_sign_changes",
    "j_functional",
    "m_p_norm",
    "sample_segment",
    "certify",
    "exponent_budget",
    "eisenstein_l",
    "gamma_factor",
    "i_kernel",
    "j_integrand_profile",
    "moment_scan",
    "zeta_moment",
    "PrecisionPolicy",
    "bessel_k_scaled",
    "zeta_complex",
    "EisenlabError",
    "PoleError",
    "DomainError",
    "PrecisionError",
    "TruncationError",
    "QuadratureError",
    "DegenerateError",
    "HeckeValidationError",
    "ParseError",
]
