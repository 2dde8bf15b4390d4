import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eisenlab.exceptions import DegenerateError, DomainError
from eisenlab.littlewood import CERTIFICATE_COLUMNS, certify, exponent_budget
from eisenlab.restriction import Interval, count_sign_changes
from oracles import TrigPoly


def _aligned_poly(rng, n_window):
    """Trig polynomial whose frequencies are multiples of N, so J(f, 1/N) = 0 on [0, 1]."""
    m = int(rng.integers(1, 4))
    freqs = n_window * rng.choice(np.arange(1, 4), size=m, replace=False)
    return TrigPoly(freqs, rng.uniform(-1, 1, m), rng.uniform(-1, 1, m))


class TestCertify:
    def test_constant_fails(self):
        cert = certify(lambda y: 1.0 + 0 * y, Interval(0.0, 1.0, 0.1), 10)
        assert cert.clamp_applied and abs(cert.c - 0.999) < 1e-12
        assert abs(cert.J - 0.1) < 1e-12
        assert not cert.hypotheses_hold and cert.lower_bound == 0

    def test_sin40(self):
        cert = certify(lambda y: np.sin(40 * np.pi * y), Interval(0.0, 1.0, 1 / 40), 40)
        assert abs(cert.M1 / cert.M2 - 2 * math.sqrt(2) / math.pi) < 1e-9
        # window = one half period: J is not small, so the hypothesis cannot hold
        assert cert.J > cert.threshold
        assert not cert.hypotheses_hold

    def test_aligned_window_issues(self):
        cert = certify(lambda y: np.sin(2 * np.pi * 40 * y), Interval(0.0, 1.0, 1 / 40), 40, c_policy="ratio")
        assert cert.hypotheses_hold
        assert cert.lower_bound == math.ceil(cert.c**2 * 40 / 8) == 5
        assert cert.lower_bound <= count_sign_changes(lambda y: np.sin(80 * np.pi * y), Interval(0.0, 1.0)).count

    def test_margin_required(self):
        with pytest.raises(DomainError):
            certify(np.sin, Interval(0.0, 1.0, 0.01), 10)

    def test_degenerate(self):
        with pytest.raises(DegenerateError):
            certify(lambda y: 0 * y, Interval(0.0, 1.0, 0.5), 4)

    def test_bad_policy(self):
        with pytest.raises(DomainError):
            certify(np.sin, Interval(0.0, 1.0, 0.5), 4, c_policy="guess")

    def test_exact_eta(self):
        cert = certify(np.cos, Interval(0.1, 0.7, 0.2), 3)
        assert cert.eta_exact * 3 == Fraction(0.7) - Fraction(0.1)
        assert cert.eta == float(cert.eta_exact)

    def test_row(self):
        cert = certify(np.cos, Interval(0.0, 1.0, 0.5), 2)
        assert len(cert.as_row()) == len(CERTIFICATE_COLUMNS)

    def test_hyperbolic_warns(self):
        with pytest.warns(UserWarning):
            certify(np.cos, Interval(0.5, 1.0, 0.5), 2, measure="hyperbolic")

    @settings(max_examples=8, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
    def test_scale_invariance(self, seed, lam):
        rng = np.random.default_rng(seed)
        poly = _aligned_poly(rng, 12)
        seg = Interval(0.0, 1.0, 1 / 12)
        a = certify(poly, seg, 12, c_policy="ratio")
        b = certify(lambda y: lam * poly(y), seg, 12, c_policy="ratio")
        assert abs(a.c - b.c) < 1e-9
        assert a.hypotheses_hold == b.hypotheses_hold
        assert a.lower_bound == b.lower_bound

    def test_threshold_linear_in_eta(self):
        f = lambda y: np.sin(2 * np.pi * 24 * y) + 0.2 * np.cos(2 * np.pi * 48 * y)  # noqa: E731
        ratios = []
        for n in (4, 8, 12, 24):
            cert = certify(f, Interval(0.0, 1.0, 0.25), n)
            ratios.append(cert.threshold / cert.eta)
        assert np.ptp(ratios) < 1e-9 * max(ratios)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from([8, 10, 16, 24]))
    def test_soundness_on_aligned_polys(self, seed, n_window):
        rng = np.random.default_rng(seed)
        poly = _aligned_poly(rng, n_window)
        cert = certify(poly, Interval(0.0, 1.0, 1 / n_window), n_window, base_grid=16 * int(poly.freqs.max()))
        if cert.hypotheses_hold:
            assert cert.lower_bound <= poly.crossings(0.0, 1.0)
            assert cert.lower_bound <= n_window


class TestBudget:
    def test_eisenstein(self):
        b = exponent_budget(0.01, 4, 8.5, "eisenstein")
        assert abs(b.delta_min - 0.12) < 1e-15
        assert abs(b.final_exponent - 0.83) < 1e-15

    def test_cusp(self):
        b = exponent_budget(0.01, 4, 9.5, "cusp")
        assert abs(b.delta_min - 0.13) < 1e-15

    @pytest.mark.parametrize("kappa,regime", [(8.0, "eisenstein"), (7.0, "eisenstein"), (9.0, "cusp")])
    def test_kappa_floor(self, kappa, regime):
        with pytest.raises(DomainError):
            exponent_budget(0.01, 4, kappa, regime)

    def test_p_must_exceed_two(self):
        with pytest.raises(DomainError):
            exponent_budget(0.01, 2, 9)

    @settings(max_examples=50)
    @given(st.floats(1e-6, 1.0), st.floats(2.01, 50), st.floats(9.01, 100))
    def test_invariants(self, eps, p, kappa):
        b = exponent_budget(eps, p, kappa, "cusp")
        assert b.final_exponent < 1
        assert b.delta_min_cusp > b.delta_min_eisenstein
        assert all(math.isfinite(v) for v in b.as_row())
