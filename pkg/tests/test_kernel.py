import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from volcorr.errors import ConfigurationError, DomainError
from volcorr.kernel import (
    EigenPair,
    GridSpec,
    PathPair,
    apply_TM,
    centered_cross_moment,
    fredholm_det_truncated,
    kernel_M,
    mercer_partial_sum,
    quadratic_form_X,
    tk_spectrum,
)
from volcorr.montecarlo import SimConfig, gen_walk, quadratic_forms
from volcorr.specialfun import MgfPoint, eval_F

unit = st.floats(0.0, 1.0, allow_nan=False)


class TestKernelM:
    @pytest.mark.parametrize("s1,s2,want", [(0, 0.7, 0.0), (0.5, 0.5, 0.25), (0.25, 0.75, 0.0625)])
    def test_values(self, s1, s2, want):
        assert kernel_M(s1, s2) == want

    @given(unit, unit)
    def test_symmetric_bounded(self, s, t):
        m = kernel_M(s, t)
        assert m == kernel_M(t, s)
        assert 0 <= m <= 0.25

    @pytest.mark.parametrize("bad", [-0.1, 1.1, math.nan])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            kernel_M(bad, 0.5)


class TestApplyTM:
    grid = GridSpec(4096)

    @pytest.mark.parametrize("n", [1, 2])
    def test_eigenfunctions(self, n):
        e = EigenPair(n)
        psi = e.psi(self.grid.nodes)
        out = apply_TM(psi, self.grid)
        assert np.max(np.abs(out - e.lam * psi)) <= 1e-6
        assert out[0] == 0.0 and abs(out[-1]) < 1e-15

    def test_zero(self):
        assert not apply_TM(np.zeros(4097), self.grid).any()

    def test_linear(self):
        rng = np.random.default_rng(0)
        g = GridSpec(64)
        x, y = rng.standard_normal((2, 65))
        assert np.allclose(apply_TM(2 * x - y, g), 2 * apply_TM(x, g) - apply_TM(y, g), atol=1e-14)

    def test_odd_grid(self):
        with pytest.raises(ConfigurationError):
            apply_TM(np.zeros(8), GridSpec(7))

    def test_eigenvalue_exact(self):
        assert EigenPair(3).lam == 1.0 / (math.pi**2 * 9)


def test_mercer_partial_sum():
    s = np.linspace(0, 1, 33)
    S, T = np.meshgrid(s, s)
    assert np.max(np.abs(mercer_partial_sum(S, T, 1000) - kernel_M(S, T))) <= 2e-3


class TestSpectrum:
    def test_double_root(self):
        g = tk_spectrum(MgfPoint(1, 1, 0), 1).gammas[0]
        assert g == pytest.approx([-1 / math.pi**2] * 2, rel=1e-15)

    def test_one_beta_zero(self):
        g = tk_spectrum(MgfPoint(1, 0, 0.4), 1).gammas[0]
        assert g[0] == 0.0 and g[1] == pytest.approx(-1 / math.pi**2, rel=1e-15)

    @given(st.floats(0.0, 10.0), st.floats(0.0, 10.0), st.floats(-1.0, 1.0))
    def test_sum_product(self, b1, b2, a):
        spec = tk_spectrum(MgfPoint(b1, b2, a), 20)
        lam = 1 / (math.pi**2 * np.arange(1, 21) ** 2)
        gp, gm = spec.gammas.T
        s = lam * (b1**2 + b2**2)
        assert np.all(np.abs(gp + gm + s) <= 1e-14 * s + 1e-300)
        prod = lam**2 * b1**2 * b2**2 * (1 - a * a)
        assert np.all(np.abs(gp * gm - prod) <= 1e-14 * np.max(s) ** 2 + 1e-300)
        assert np.all(gm <= gp) and np.all(gm <= 0)


class TestFredholm:
    def test_trivial(self):
        assert fredholm_det_truncated(MgfPoint(0, 0, 0.3), 50).value == 1.0

    @pytest.mark.parametrize("p", [MgfPoint(1, 1, 0.5), MgfPoint(3, 4, 0.5), MgfPoint(1, 0, 0.9)])
    def test_converges_like_one_over_n(self, p):
        closed = eval_F(p) ** -2
        errs = [abs(fredholm_det_truncated(p, n).value - closed) / closed for n in (500, 1000, 2000)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[1] / errs[2] == pytest.approx(2.0, rel=0.05)
        res = fredholm_det_truncated(p, 2000)
        assert errs[2] == pytest.approx(res.tail_estimate, rel=0.05)


class TestQuadraticForm:
    def pair(self, m=256, i=0, seed=5):
        return gen_walk(SimConfig(n=m, paths=1, seed=seed), i)

    def test_zero_path(self):
        g = GridSpec(16)
        pp = PathPair(g, np.zeros(17), np.cumsum(np.r_[0, np.ones(16)]))
        assert quadratic_form_X(pp, 1, 2) == 0.0
        assert quadratic_form_X(pp, 1, 1) == 0.0

    def test_symmetric_bits(self):
        pp = self.pair()
        assert quadratic_form_X(pp, 1, 2) == quadratic_form_X(pp, 2, 1)

    def test_psd_and_cauchy_schwarz(self):
        for i in range(20):
            pp = self.pair(i=i)
            x11, x22 = quadratic_form_X(pp, 1, 1), quadratic_form_X(pp, 2, 2)
            x12 = quadratic_form_X(pp, 1, 2)
            assert x11 >= 0 and x22 >= 0
            assert -1 <= x12 / math.sqrt(x11 * x22) <= 1

    def test_linear_time_form_agrees(self):
        pp = self.pair(m=512)
        fast = quadratic_forms(pp)
        slow = [quadratic_form_X(pp, i, j) for i, j in ((1, 1), (1, 2), (2, 2))]
        assert np.allclose(fast, slow, rtol=1e-11, atol=1e-15)

    def test_matches_centered_moment(self):
        rel = []
        for i in range(20):
            pp = self.pair(m=2048, i=i, seed=11)
            y = centered_cross_moment(pp, 1, 2)
            rel.append(abs(quadratic_form_X(pp, 1, 2) - y) / abs(y))
        assert np.median(rel) <= 1e-2

    def test_bad_lengths(self):
        with pytest.raises(ConfigurationError):
            PathPair(GridSpec(4), np.zeros(5), np.zeros(4))

    def test_bad_index(self):
        with pytest.raises(DomainError):
            quadratic_form_X(self.pair(m=8), 1, 3)
