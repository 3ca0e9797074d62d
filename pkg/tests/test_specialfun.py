import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from volcorr.errors import DomainError
from volcorr.specialfun import (
    MgfPoint,
    cpair,
    dcpair_dz,
    dF_dz,
    eval_F,
    eval_S,
    eval_T,
    eval_T_prime,
)

import oracles

betas = st.floats(0.0, 20.0, allow_nan=False)
corr = st.floats(-1.0, 1.0, allow_nan=False)


class TestS:
    def test_origin(self):
        assert eval_S(0.0) == 1.0

    def test_one(self):
        assert eval_S(1.0) == pytest.approx(oracles.S_1, rel=1e-15)

    def test_large_argument_log_form(self):
        naive = math.sqrt(50 / math.sinh(50))
        assert eval_S(50.0) == pytest.approx(naive, rel=1e-14)
        assert eval_S(50.0) == pytest.approx(oracles.S_50, rel=1e-14)
        assert 0 < eval_S(800.0) < 1e-170

    @pytest.mark.parametrize("bad", [-1.0, -1e-300, math.nan, math.inf])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            eval_S(bad)

    def test_range_and_monotone(self):
        u = np.concatenate([[0.0], np.geomspace(1e-8, 100, 2000)])
        s = eval_S(u)
        assert np.all(s > 0) and np.all(s <= 1)
        # near 0 consecutive grid values differ by less than an ulp of 1
        assert np.all(np.diff(s) <= 0)
        assert np.all(np.diff(s[u > 1e-6]) < 0)

    def test_vector_matches_scalar(self):
        u = np.array([0.0, 1e-4, 0.5, 31.0])
        assert np.array_equal(eval_S(u), [eval_S(x) for x in u])


class TestT:
    def test_origin(self):
        assert eval_T(0.0) == -1.0 / 6.0

    def test_values(self):
        assert eval_T(1.0) == pytest.approx(oracles.T_1, rel=1e-14)
        assert eval_T(2.0) == pytest.approx(oracles.T_2, rel=1e-14)

    def test_tiny_argument_matches_series(self):
        c = 1e-6
        assert eval_T(c) == pytest.approx(-1 / 6 + c * c / 90, rel=1e-12)

    def test_range_and_monotone(self):
        c = np.concatenate([[0.0], np.geomspace(1e-6, 200, 2000)])
        t = eval_T(c)
        assert np.all(t >= -1 / 6) and np.all(t < 0)
        assert np.all(np.diff(t) > 0)

    def test_derivative(self):
        assert eval_T_prime(0.0) == 0.0
        assert eval_T_prime(1.0) == pytest.approx(oracles.T_PRIME_1, rel=1e-13)
        c = np.linspace(0.05, 20, 50)
        fd = oracles.five_point_derivative(eval_T, c)
        assert np.allclose(eval_T_prime(c), fd, rtol=1e-7)

    @pytest.mark.parametrize("bad", [-0.5, math.nan])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            eval_T(bad)


def test_branch_consistency():
    for name, err in oracles.branch_consistency().items():
        assert err <= 1e-12, name


class TestCPair:
    def test_equal_betas(self):
        c = cpair(MgfPoint(1, 1, 0))
        assert (c.c_plus, c.c_minus) == pytest.approx((1.0, 1.0), abs=1e-15)

    @pytest.mark.parametrize("a", [-1.0, -0.3, 0.0, 0.7, 1.0])
    def test_one_beta_zero(self, a):
        c = cpair(MgfPoint(1, 0, a))
        assert c.c_plus == 1.0 and c.c_minus == 0.0

    def test_three_four(self):
        c = cpair(MgfPoint(3, 4, 0.5))
        root = math.sqrt(193)
        assert c.c_plus**2 == pytest.approx((25 + root) / 2, rel=1e-14)
        assert c.c_minus**2 == pytest.approx((25 - root) / 2, rel=1e-14)
        assert c.c_plus**2 * c.c_minus**2 == pytest.approx(108, rel=1e-14)

    def test_random_invariants(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            b1, b2 = rng.uniform(0, 10, 2) * rng.choice([1e-3, 1, 10], 2)
            a = rng.uniform(-1, 1)
            c = cpair(MgfPoint(b1, b2, a))
            s = b1**2 + b2**2
            prod = b1**2 * b2**2 * (1 - a * a)
            assert abs(c.c_plus**2 + c.c_minus**2 - s) <= 1e-12 * s
            assert abs(c.c_plus**2 * c.c_minus**2 - prod) <= 1e-12 * max(prod, 1e-300) + 1e-300
            assert c.c_plus >= c.c_minus >= 0

    @given(st.floats(1e-6, 1e6))
    def test_ordered_on_the_ridge(self, b):
        c = cpair(MgfPoint(b, b, 0.0))
        assert c.c_plus >= c.c_minus

    @pytest.mark.parametrize("scale", [1e-80, 1e-140, 1e100])
    def test_extreme_scales(self, scale):
        c = cpair(MgfPoint(3 * scale, 4 * scale, 0.5))
        ref = cpair(MgfPoint(3, 4, 0.5))
        assert c.c_plus == pytest.approx(ref.c_plus * scale, rel=1e-14)
        assert c.c_minus == pytest.approx(ref.c_minus * scale, rel=1e-14)

    @given(betas, betas, corr)
    def test_symmetries(self, b1, b2, a):
        c = cpair(MgfPoint(b1, b2, a))
        assert cpair(MgfPoint(b2, b1, a)) == c
        assert cpair(MgfPoint(b1, b2, -a)) == c


class TestF:
    def test_origin(self):
        assert eval_F(MgfPoint(0, 0, 0.7)) == 1.0

    def test_one_beta(self):
        assert eval_F(MgfPoint(1, 0, 0.3)) == pytest.approx(oracles.S_1, rel=1e-15)

    def test_full_correlation(self):
        assert eval_F(MgfPoint(1, 1, 1)) == pytest.approx(oracles.S_SQRT2, rel=1e-14)

    @given(betas, betas, corr)
    @settings(max_examples=300)
    def test_symmetry_and_range(self, b1, b2, a):
        f = eval_F(MgfPoint(b1, b2, a))
        assert 0 < f <= 1
        assert eval_F(MgfPoint(b2, b1, a)) == f
        assert eval_F(MgfPoint(b1, b2, -a)) == f

    @pytest.mark.parametrize("kw", [dict(beta1=-1, beta2=1, a=0), dict(beta1=1, beta2=1, a=1.01),
                                    dict(beta1=math.nan, beta2=1, a=0)])
    def test_point_validation(self, kw):
        with pytest.raises(DomainError):
            MgfPoint(**kw)


class TestDerivative:
    def test_zero_at_origin(self):
        assert dF_dz(MgfPoint(1, 2, 0)) == 0.0

    def test_against_reference(self):
        assert dF_dz(MgfPoint(1, 2, 0.3)) == pytest.approx(oracles.DF_DZ_1_2_03, rel=1e-12)
        assert dF_dz(MgfPoint(3, 4, 0.5)) == pytest.approx(oracles.DF_DZ_3_4_05, rel=1e-12)

    def test_sign(self):
        assert dF_dz(MgfPoint(3, 4, 0.5)) > 0

    def test_finite_differences(self):
        assert oracles.dF_dz_fd_errors(100, seed=3).max() <= 1e-6

    def test_odd(self):
        p, q = MgfPoint(1.5, 0.7, 0.4), MgfPoint(1.5, 0.7, -0.4)
        assert dF_dz(q) == -dF_dz(p)

    def test_equal_betas_finite(self):
        fd = oracles.five_point_derivative(lambda a: eval_F(MgfPoint(2, 2, a)), 0.5)
        assert dF_dz(MgfPoint(2, 2, 0.5)) == pytest.approx(fd, rel=1e-8)

    def test_cpair_derivative(self):
        p = MgfPoint(3, 4, 0.5)
        dp, dm = dcpair_dz(p)
        fp = oracles.five_point_derivative(lambda a: cpair(MgfPoint(3, 4, a)).c_plus, 0.5)
        fm = oracles.five_point_derivative(lambda a: cpair(MgfPoint(3, 4, a)).c_minus, 0.5)
        assert dp == pytest.approx(fp, rel=1e-9)
        assert dm == pytest.approx(fm, rel=1e-9)

    @pytest.mark.parametrize("p", [MgfPoint(1, 1, 0), MgfPoint(1, 2, 1), MgfPoint(0, 2, 0.5)])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            dF_dz(p)
