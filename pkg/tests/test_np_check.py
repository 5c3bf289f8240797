import math

import numpy as np
import pytest
from scipy.stats import norm

from khintchine.moments import gaussian_norm, shifted_gaussian_moment
from khintchine.np_check import (
    compute_C,
    count_sign_changes,
    h_function,
    h_moment_integral,
    log_cosh,
    logcosh_concavity_check,
    normal_mass,
    normal_tail,
    phi_s,
    x_gauss_check,
)

YS = [0.1, 0.5, 1.0, 2.0, 5.0]


def h_reference(y, C, t):
    # straight CDF differences, fine where no cancellation bites
    return norm.cdf(t - y) - norm.cdf(-t - y) - (2 * norm.cdf(t / C) - 1)


class TestNormal:
    def test_tail(self):
        z = np.array([-3.0, 0.0, 1.5, 10.0])
        np.testing.assert_allclose(normal_tail(z), norm.sf(z), rtol=1e-15)
        assert normal_tail(40.0) == 0.0 and normal_tail(-40.0) == 1.0

    def test_mass(self):
        for a, b in [(-1, 2), (0.5, 3), (-4, -1)]:
            assert normal_mass(a, b) == pytest.approx(norm.cdf(b) - norm.cdf(a), rel=1e-13)
        # far tail: cdf differences cancel to 0, survival differences do not
        assert normal_mass(20, 21) == pytest.approx(norm.sf(20) - norm.sf(21), rel=1e-13)
        assert normal_mass(20, 21) > 0


class TestC:
    def test_trivial(self):
        assert compute_C(0.0, 4) == 1.0

    @pytest.mark.parametrize("y", [0.2, 1.0, 3.0])
    def test_q2(self, y):
        assert compute_C(y, 2) == pytest.approx(math.sqrt(1 + y * y), rel=1e-13)

    def test_q4(self):
        assert compute_C(1.0, 4) == pytest.approx((10 / 3) ** 0.25, rel=1e-13)

    @pytest.mark.parametrize("y", YS)
    def test_greater_than_one(self, y):
        assert compute_C(y, 3.3) > 1

    def test_bad_q(self):
        with pytest.raises(ValueError):
            compute_C(1.0, 0)


class TestH:
    @pytest.mark.parametrize("y", YS)
    def test_matches_cdf_formula(self, y):
        C = compute_C(y, 4)
        t = np.linspace(0.05, 3 * y + 3, 40)
        np.testing.assert_allclose(h_function(y, C, t), h_reference(y, C, t), atol=1e-14)

    def test_limits(self):
        C = compute_C(1.0, 4)
        assert abs(h_function(1.0, C, 1e-9)) < 1e-9
        assert abs(h_function(1.0, C, 60.0)) < 1e-15

    @pytest.mark.parametrize("y", YS)
    def test_non_negative_beyond_t0(self, y):
        C = compute_C(y, 4)
        t0 = C * y / (C - 1)
        t = np.linspace(t0, 4 * t0, 200)
        assert np.all(h_function(y, C, t) >= -1e-15)

    def test_range(self):
        C = compute_C(2.0, 2)
        v = h_function(2.0, C, np.geomspace(1e-3, 50, 100))
        assert np.all(np.abs(v) <= 1)

    def test_positive_t(self):
        with pytest.raises(ValueError):
            h_function(1.0, 1.2, 0.0)


class TestSignChange:
    @pytest.mark.parametrize("y", YS)
    @pytest.mark.parametrize("q", [2.0, 4.0])
    def test_single_crossing(self, y, q):
        rep = count_sign_changes(y, q, 10_000)
        assert rep.count == 1
        assert rep.negative_to_positive
        assert 0 < rep.y0 < rep.t0
        lo, hi = rep.crossings[0]
        assert lo <= rep.y0 <= hi
        assert abs(h_function(y, rep.C, rep.y0)) < 1e-10
        assert np.all(rep.h_values[rep.grid >= rep.t0] >= -1e-14)
        assert abs(rep.h_values[0]) < 1e-6 and abs(rep.h_values[-1]) <= 1e-14

    @pytest.mark.parametrize("y,q", [(1.0, 4.0), (0.1, 4.0), (5.0, 2.0)])
    def test_examples(self, y, q):
        assert count_sign_changes(y, q, 10_000).count == 1

    def test_other_exponents(self):
        for q in (1.0, 3.0, 6.0):
            assert count_sign_changes(0.7, q).count == 1

    def test_bad_y(self):
        with pytest.raises(ValueError):
            count_sign_changes(0.0, 4)


class TestPhi:
    @pytest.mark.parametrize("y", YS)
    @pytest.mark.parametrize("q", [2.0, 4.0])
    def test_monotone(self, y, q):
        y0 = count_sign_changes(y, q).y0
        s = np.linspace(q, q + 8, 33)
        phi = np.array([phi_s(y, q, x, y0) for x in s])
        assert abs(phi[0]) <= 1e-10
        assert np.all(np.diff(phi) >= -1e-12 * np.max(np.abs(phi)))
        assert np.all(phi[1:] > 0)

    def test_norm_comparison(self):
        y, q = 1.5, 4.0
        C = compute_C(y, q)
        for s in (5.0, 7.0, 10.0):
            assert shifted_gaussian_moment(y, s).norm(s) <= C * gaussian_norm(s) * (1 + 1e-13)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            phi_s(1.0, 4.0, 5.0, 0.0)


class TestIntegralIdentity:
    @pytest.mark.parametrize("y", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("q", [2.0, 4.0])
    def test_vanishes(self, y, q):
        total, scale = h_moment_integral(y, q)
        assert abs(total) <= 1e-10 * scale


class TestXGauss:
    @pytest.mark.parametrize("p,q", [(5, 4), (6, 4), (8, 4), (6, 2)])
    def test_grid(self, p, q):
        rows = x_gauss_check([0, 0.1, 0.5, 1, 2, 5], p, q)
        assert all(r.passed for r in rows)
        assert rows[0].ratio == pytest.approx(rows[0].bound, rel=1e-13)

    def test_example(self):
        r = x_gauss_check([1.0], 6, 4)[0]
        lhs = shifted_gaussian_moment(1.0, 6).value ** (1 / 6) / 10 ** 0.25
        assert r.ratio == pytest.approx(lhs, rel=1e-13)
        assert r.bound == pytest.approx(15 ** (1 / 6) / 3 ** 0.25, rel=1e-14)

    def test_even(self):
        a, b = x_gauss_check([-2.0, 2.0], 6, 4)
        assert a.ratio == b.ratio

    def test_order(self):
        with pytest.raises(ValueError):
            x_gauss_check([1.0], 4, 6)


class TestLogCosh:
    def test_stable(self):
        x = np.array([0.0, 0.3, 5.0, 800.0])
        np.testing.assert_allclose(log_cosh(x[:3]), np.log(np.cosh(x[:3])), rtol=1e-14, atol=1e-16)
        assert log_cosh(800.0) == pytest.approx(800 - math.log(2), rel=1e-15)

    def test_examples(self):
        assert logcosh_concavity_check(1.0, [0.5, 1.0, 1.5])
        f = np.log(np.cosh(np.sqrt([0.5, 1.0, 1.5])))
        assert f[0] - 2 * f[1] + f[2] < 0
        assert logcosh_concavity_check(3.0, np.linspace(0.01, 10, 1000))

    def test_hadamard_factor(self):
        # log(1 + a t) is concave; a single factor of the product for cosh
        t = np.linspace(0.1, 5, 50)
        f = np.log1p(4 * 1.0 / math.pi**2 * t)
        assert np.all(f[:-2] - 2 * f[1:-1] + f[2:] < 0)

    @pytest.mark.parametrize("y", [-2.0, 0.1, 7.0])
    def test_various(self, y):
        assert logcosh_concavity_check(y, np.geomspace(1e-3, 50, 400))

    def test_bad_input(self):
        with pytest.raises(ValueError):
            logcosh_concavity_check(0.0, [1, 2, 3])
        with pytest.raises(ValueError):
            logcosh_concavity_check(1.0, [1, 2])
