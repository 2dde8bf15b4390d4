import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from eisenlab.eisenstein import (
    EisensteinSeries,
    SpectralPoint,
    divisor_eta,
    divisor_eta_table,
    eisenstein_eval,
    restricted_eval,
    scattering_phi,
    theta_factor,
    theta_scaled,
    truncation_length,
)
from eisenlab.exceptions import DomainError, PoleError
from eisenlab.restriction import GeodesicSegment
from oracles import lattice_sum


def test_spectral_point():
    sp = SpectralPoint(14.0)
    assert sp.s == 0.5 + 14j
    assert sp.eigenvalue == 0.25 + 196.0


class TestTheta:
    def test_closed_forms(self):
        assert abs(theta_factor(1) - mpmath.pi / 6) < 1e-15
        assert abs(theta_factor(2) - mpmath.pi**2 / 90) < 1e-15

    def test_modulus_by_independent_factors(self):
        t = 14.0
        th = theta_factor(0.5 + 1j * t)
        expected = (mpmath.pi ** -0.5 * mpmath.sqrt(mpmath.pi / mpmath.cosh(mpmath.pi * t))
                    * abs(mpmath.zeta(1 + 2j * t)))
        assert abs(abs(th) / expected - 1) < 1e-12
        scaled = theta_scaled(t)
        assert 0 < abs(scaled) < math.inf
        assert abs(abs(scaled) / (expected * mpmath.exp(mpmath.pi * t / 2)) - 1) < 1e-12

    def test_poles(self):
        with pytest.raises(PoleError):
            theta_factor(0.5)
        with pytest.raises(PoleError):
            theta_factor(-2)


class TestScattering:
    def test_half(self):
        v = scattering_phi(0.5)
        assert abs(abs(v) - 1) < 1e-15 and abs(v.imag) < 1e-15

    @pytest.mark.parametrize("t", [0.3, 14.0, 77.7, 300.0])
    def test_unit_modulus(self, t):
        assert abs(abs(scattering_phi(0.5 + 1j * t)) - 1) < 1e-10

    def test_product(self):
        s = mpmath.mpc(0.7, 3)
        assert abs(scattering_phi(s) * scattering_phi(1 - s) - 1) < 1e-10


class TestDivisorEta:
    def test_one(self):
        assert divisor_eta(5.0, 1) == 1.0

    @pytest.mark.parametrize("p", [2, 3, 7, 101])
    def test_prime(self, p):
        assert abs(divisor_eta(3.3, p) - 2 * math.cos(3.3 * math.log(p))) < 1e-14

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0, 100), st.integers(1, 300), st.integers(1, 300))
    def test_multiplicative(self, t, m, n):
        if math.gcd(m, n) != 1:
            return
        assert abs(divisor_eta(t, m * n) - divisor_eta(t, m) * divisor_eta(t, n)) < 1e-11

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0, 100), st.integers(1, 2000))
    def test_bounded_by_divisor_count(self, t, n):
        d = sum(1 for a in range(1, n + 1) if n % a == 0)
        assert abs(divisor_eta(t, n)) <= d + 1e-12

    def test_table_matches_scalar(self):
        t = 14.0
        table = divisor_eta_table(1j * t, 500)
        for n in (1, 2, 12, 97, 360, 500):
            assert abs(table[n] - divisor_eta(t, n)) < 1e-12


class TestEstimatorShape:
    def test_requires_one_parameter(self):
        with pytest.raises(DomainError):
            EisensteinSeries().fit()
        with pytest.raises(DomainError):
            EisensteinSeries(t=1.0, s=2.0).fit()

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            EisensteinSeries(t=3.0).predict([1j])

    def test_clone_and_params(self):
        est = EisensteinSeries(t=7.0, tol=1e-9)
        assert clone(est).get_params()["tol"] == 1e-9
        assert est.fit() is est

    def test_y_floor(self, e14):
        with pytest.raises(DomainError):
            e14.predict([0.01j])


class TestTruncation:
    def test_large_y_needs_few_terms(self):
        ctx = EisensteinSeries(t=0.5).fit()
        assert truncation_length(ctx, 10.0).n_terms <= 5

    def test_bound_below_tol(self, e14):
        rep = truncation_length(e14, 1.0)
        assert rep.tail_bound <= e14.tol

    @pytest.mark.parametrize("y_min", [0.2, 0.7, 1.5, 4.0])
    def test_monotone_in_y(self, e14, y_min):
        assert truncation_length(e14, 2 * y_min).n_terms <= truncation_length(e14, y_min).n_terms

    def test_doubling(self, e14):
        from eisenlab.special import bessel_k_scaled_array

        rep = truncation_length(e14, 1.0)
        coeffs = divisor_eta_table(14j, 2 * rep.n_terms)

        def series(n_terms, y):
            n = np.arange(1, n_terms + 1)
            k, _ = bessel_k_scaled_array(14.0, 2 * math.pi * n * y)
            return 4 * math.sqrt(y) / e14.theta_abs_ * np.sum(coeffs[1 : n_terms + 1] * k)

        for y in (1.0, 1.4, 2.0):
            assert abs(series(rep.n_terms, y) - series(2 * rep.n_terms, y)) < e14.tol

    def test_tighter_tol_is_consistent(self):
        a = EisensteinSeries(t=14.0, tol=1e-10).fit()
        b = EisensteinSeries(t=14.0, tol=1e-14).fit()
        zs = 0.1 + 1j * np.linspace(1.0, 2.0, 9)
        va, ea = a.evaluate(zs)
        vb, eb = b.evaluate(zs)
        assert np.all(np.abs(va - vb) <= ea + eb)


class TestEvaluation:
    @pytest.mark.parametrize("z", [1j, 0.5 + 1j, 0.3 + 0.9j])
    def test_lattice_sum(self, z):
        ctx = EisensteinSeries(s=2.0).fit()
        v, _ = eisenstein_eval(ctx, z)
        assert abs(v / lattice_sum(z, 2.0) - 1) < 1e-6

    def test_real_on_critical_line(self, e14):
        rng = np.random.default_rng(1)
        zs = rng.uniform(-0.5, 0.5, 10) + 1j * rng.uniform(0.3, 3, 10)
        vals, errs = e14.evaluate(zs, complex_output=True)
        assert np.all(np.abs(vals.imag) <= errs)

    def test_modular_inversion(self, e14):
        z = 0.3 + 1.1j
        v1, e1 = eisenstein_eval(e14, z)
        v2, e2 = eisenstein_eval(e14, -1 / z)
        assert abs(v1 - v2) <= 2 * (e1 + e2)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-3, 3), st.floats(0.3, 3))
    def test_translation_and_reflection(self, x, y):
        ctx = _ctx(14.0)
        v, e = ctx.evaluate(np.array([x + 1j * y, x + 1 + 1j * y, -x + 1j * y]))
        assert abs(v[0] - v[1]) <= e[0] + e[1]
        assert abs(v[0] - v[2]) <= e[0] + e[2]

    def test_independent_bessel_evaluation(self):
        # E_t at z = iy from the expansion with mpmath's K of complex order
        t, y = 14.0, 1.3
        ctx = _ctx(t)
        v, e = eisenstein_eval(ctx, 1j * y)
        with mpmath.workdps(40):
            s = mpmath.mpc(0.5, t)
            th = mpmath.pi ** (-s) * mpmath.gamma(s) * mpmath.zeta(2 * s)
            phi = (mpmath.pi ** (-(1 - s)) * mpmath.gamma(1 - s) * mpmath.zeta(2 - 2 * s)) / th
            total = y**s + phi * y ** (1 - s)
            for n in range(1, 30):
                eta = sum((mpmath.mpf(a) / (n // a)) ** (1j * t) for a in range(1, n + 1) if n % a == 0)
                total += 4 * mpmath.sqrt(y) / th * eta * mpmath.besselk(1j * t, 2 * mpmath.pi * n * y)
            phase = th / abs(th)
            ref = float(mpmath.re(total * phase))
        assert abs(v - ref) <= e + 1e-12

    def test_restricted_consistency(self, e14):
        seg = GeodesicSegment.imaginary_axis(1.0, 2.0, eval_margin=0.5)
        for y in (1.0, 1.7, 2.5):
            f, ef = restricted_eval(e14, seg, y)
            v, ev = eisenstein_eval(e14, 1j * y)
            assert abs(f * math.sqrt(y) - v) <= ef * math.sqrt(y) + ev
        with pytest.raises(DomainError):
            restricted_eval(e14, seg, 2.6)

    def test_determinism(self):
        seg = GeodesicSegment.imaginary_axis(0.5, 2.0)
        a = restricted_eval(EisensteinSeries(t=14.0).fit(), seg, 1.0)
        b = restricted_eval(EisensteinSeries(t=14.0).fit(), seg, 1.0)
        assert a == b

    def test_half_line(self, e14):
        seg = GeodesicSegment.half_line(1.0, 2.0)
        v, e = restricted_eval(e14, seg, 1.2)
        assert math.isfinite(v) and e < 1e-8

    def test_along_matches_evaluate(self, e14):
        ys = np.linspace(0.5, 2, 7)
        f, ef = e14.along(0.0, ys)
        v, ev = e14.evaluate(1j * ys)
        np.testing.assert_allclose(f * np.sqrt(ys), v, rtol=0, atol=1e-12)


_CACHE = {}


def _ctx(t):
    if t not in _CACHE:
        _CACHE[t] = EisensteinSeries(t=t).fit()
    return _CACHE[t]
