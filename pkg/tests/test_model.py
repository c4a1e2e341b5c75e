"""Tests for the scalar constitutive functions (mobility, entropies, kernel)."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracthin.model import (
    C_alpha,
    F_kernel,
    ModelParams,
    entropy_alpha,
    entropy_alpha_deriv,
    entropy_alpha_reg,
    entropy_alpha_reg_deriv,
    entropy_classical,
    mobility,
    mobility_deriv,
)


def fd2(f, z, h=None):
    """Central second difference with step scaled to z."""
    if h is None:
        h = 1e-4 * max(abs(z), 1.0)
    return (f(z + h) - 2 * f(z) + f(z - h)) / h**2


def fd1(f, z, h=1e-6):
    return (f(z + h) - f(z - h)) / (2 * h)


class TestModelParams:
    def test_defaults(self):
        p = ModelParams()
        assert p.beta == pytest.approx(3.0)
        assert p.A == 1.0  # alpha = 0 = n - 1

    def test_anchor_switch(self):
        assert ModelParams(n=1.0, alpha=0.5).A == 0.0
        assert ModelParams(n=1.5, alpha=0.25).A == 1.0

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            ModelParams(d=3)
        with pytest.raises(ValueError):
            ModelParams(n=-1.0)
        with pytest.raises(ValueError):
            ModelParams(s=1.0)
        with pytest.raises(ValueError):
            ModelParams(alpha=-1.0)
        with pytest.raises(ValueError):
            ModelParams(n=1.0, alpha=0.5, beta=2.0)
        with pytest.raises(ValueError):
            ModelParams(eps=-1e-3)

    def test_q_exponent(self):
        # d = 1, s = 0.5: (d - 2s)_+ = 0, so q = 2d = ... 4d/(2d) = 2
        assert ModelParams(d=1, n=1.0, s=0.5).q == pytest.approx(2.0)
        # d = 2, s = 0.5, n = 1: q = 8 / (4 - 1) = 8/3
        assert ModelParams(d=2, n=1.0, s=0.5).q == pytest.approx(8.0 / 3.0)

    def test_admissibility_warnings(self):
        assert ModelParams(d=1, n=1.0, s=0.5).admissibility_warnings() == []
        msgs = ModelParams(d=2, n=8.0, s=0.25, alpha=1.0).admissibility_warnings()
        assert any("existence" in m for m in msgs)
        assert any("propagation" in m for m in msgs)
        msgs = ModelParams(d=1, n=1.0, s=0.5, alpha=-0.9).admissibility_warnings()
        assert any("entropy" in m for m in msgs)


class TestMobility:
    def test_unregularized_is_pure_power(self):
        p = ModelParams(n=1.5)
        z = np.linspace(0.01, 5.0, 100)
        assert np.allclose(mobility(z, p), z**1.5, rtol=1e-12)

    def test_nonpositive_branch(self):
        p = ModelParams(n=1.0, gamma=1e-3)
        assert mobility(-2.0, p) == pytest.approx(1e-3)
        assert mobility(0.0, p) == pytest.approx(1e-3)
        assert mobility_deriv(-2.0, p) == 0.0

    def test_sandwich_bounds(self):
        rng = np.random.default_rng(7)
        p = ModelParams(n=1.2, alpha=0.5, beta=4.0, eps=1e-2, delta=1e-3, gamma=1e-4)
        z = rng.uniform(1e-6, 50.0, 10_000)
        m = mobility(z, p)
        assert np.all(m >= p.gamma)
        assert np.all(m <= z**p.n + p.gamma + 1e-15)
        assert np.all(m <= 1.0 / p.delta + p.gamma)

    def test_derivative_matches_finite_difference(self):
        p = ModelParams(n=1.3, beta=4.0, eps=0.05, delta=0.01)
        for z in [0.1, 0.7, 1.0, 3.0, 10.0]:
            fd = fd1(lambda x: mobility(x, p), z)
            assert mobility_deriv(z, p) == pytest.approx(fd, rel=1e-6)

    def test_derivative_bound(self):
        # m'(z) <= beta m(z) / z <= beta z^{n-1}
        rng = np.random.default_rng(11)
        p = ModelParams(n=0.8, beta=3.5, eps=1e-2, delta=1e-4)
        z = rng.uniform(1e-6, 100.0, 10_000)
        mp = mobility_deriv(z, p)
        m = mobility(z, p)
        assert np.all(mp <= p.beta * m / z * (1 + 1e-12))
        assert np.all(p.beta * m / z <= p.beta * z ** (p.n - 1) * (1 + 1e-12))

    @given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
    @settings(max_examples=200, deadline=None)
    def test_monotone(self, a, b):
        p = ModelParams(n=1.5, beta=4.0, eps=1e-2, delta=1e-3)
        lo, hi = min(a, b), max(a, b)
        assert mobility(lo, p) <= mobility(hi, p) + 1e-15


class TestEntropyClassical:
    @pytest.mark.parametrize("n", [0.5, 1.0, 1.5, 2.0, 2.5])
    def test_anchor_and_convexity(self, n):
        assert entropy_classical(1.0, n) == pytest.approx(0.0, abs=1e-14)
        assert fd1(lambda u: entropy_classical(u, n), 1.0) == pytest.approx(
            0.0, abs=1e-8
        )
        for u in [0.3, 0.9, 1.4, 5.0]:
            assert fd2(lambda v: entropy_classical(v, n), u) == pytest.approx(
                u**-n, rel=1e-3
            )

    def test_nonnegative(self):
        u = np.linspace(0.0, 10.0, 500)
        for n in [0.5, 1.0, 1.5, 2.0, 2.5]:
            assert np.all(np.asarray(entropy_classical(u, n)) >= -1e-14)

    def test_infinite_branches(self):
        assert entropy_classical(-0.5, 1.0) == np.inf
        assert entropy_classical(0.0, 2.0) == np.inf
        assert entropy_classical(0.0, 2.5) == np.inf
        assert entropy_classical(0.0, 1.0) == pytest.approx(1.0)
        assert entropy_classical(0.0, 1.5) == pytest.approx(2.0)


class TestEntropyAlpha:
    CASES = [
        ModelParams(n=1.0, alpha=0.5),  # generic, A = 0
        ModelParams(n=1.5, alpha=0.25),  # generic, A = 1
        ModelParams(n=1.0, alpha=0.0),  # alpha = n - 1 log branch
        ModelParams(n=1.8, alpha=-0.2),  # alpha = n - 2 log branch
        ModelParams(n=0.5, alpha=1.0),  # generic, A = 0
    ]

    @pytest.mark.parametrize("p", CASES)
    def test_second_derivative(self, p):
        for z in [0.2, 0.8, 1.0, 2.5, 7.0]:
            assert fd2(lambda v: entropy_alpha(v, p), z) == pytest.approx(
                z ** (p.alpha - p.n), rel=1e-3
            )

    @pytest.mark.parametrize("p", CASES)
    def test_first_derivative(self, p):
        for z in [0.2, 0.8, 1.0, 2.5, 7.0]:
            assert fd1(lambda v: entropy_alpha(v, p), z) == pytest.approx(
                entropy_alpha_deriv(z, p), rel=1e-6, abs=1e-9
            )

    @pytest.mark.parametrize("p", CASES)
    def test_nonnegative_and_anchored(self, p):
        z = np.linspace(0.0, 10.0, 2000)
        vals = np.asarray(entropy_alpha(z, p))
        assert np.all(vals >= -1e-13)
        A = p.A if p.A > 0 else 1e-300
        if p.A > 0:
            assert entropy_alpha(p.A, p) == pytest.approx(0.0, abs=1e-14)
            assert entropy_alpha_deriv(p.A, p) == pytest.approx(0.0, abs=1e-14)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            entropy_alpha(-0.1, ModelParams())

    def test_value_at_zero(self):
        # A = 0, e2 = alpha - n + 2 > 0: limit is 0
        assert entropy_alpha(0.0, ModelParams(n=1.0, alpha=0.5)) == pytest.approx(0.0)
        # log branch alpha = n - 1, A = 1: limit is A = 1
        assert entropy_alpha(0.0, ModelParams(n=1.0, alpha=0.0)) == pytest.approx(1.0)
        # alpha = n - 2 branch diverges at 0
        assert entropy_alpha(0.0, ModelParams(n=1.8, alpha=-0.2)) == np.inf


class TestEntropyAlphaReg:
    @pytest.mark.parametrize(
        "p",
        [
            ModelParams(n=1.0, alpha=0.5, beta=3.0, eps=0.05, delta=0.02),
            ModelParams(n=1.5, alpha=0.25, beta=4.0, eps=1e-3, delta=1e-3),
            ModelParams(n=1.0, alpha=0.0, beta=3.2, eps=0.1, delta=0.0),
        ],
    )
    def test_pairing_identity(self, p):
        """(G_reg)''(z) m(z) = z^alpha for z > 0 (gamma = 0)."""
        for z in [0.3, 0.9, 1.7, 4.0]:
            g2 = fd2(lambda v: entropy_alpha_reg(v, p), z, h=1e-4 * z)
            assert g2 * mobility(z, p) == pytest.approx(z**p.alpha, rel=1e-5)

    def test_derivative_matches(self):
        p = ModelParams(n=1.2, alpha=0.4, beta=3.5, eps=0.02, delta=0.01)
        for z in [0.3, 1.0, 3.0]:
            assert fd1(lambda v: entropy_alpha_reg(v, p), z) == pytest.approx(
                entropy_alpha_reg_deriv(z, p), rel=1e-6
            )

    def test_reduces_to_plain(self):
        p = ModelParams(n=1.0, alpha=0.5)
        z = np.linspace(0.1, 5.0, 50)
        assert np.allclose(entropy_alpha_reg(z, p), entropy_alpha(z, p))

    def test_divergence_at_zero_with_eps(self):
        p = ModelParams(n=1.0, alpha=0.5, beta=3.0, eps=0.1)
        assert entropy_alpha_reg(0.0, p) == np.inf


class TestFKernel:
    def test_diagonal_and_example(self):
        assert F_kernel(1.0, 1.0, 1.0) == pytest.approx(0.0, abs=1e-14)
        assert F_kernel(2.3, 2.3, 0.5) == pytest.approx(0.0, abs=1e-12)
        assert F_kernel(1.0, 4.0, 1.0) == pytest.approx(34.0)

    def test_homogeneity(self):
        rng = np.random.default_rng(3)
        for alpha in [-0.5, 0.5, 1.0]:
            r, w = rng.uniform(0.1, 5.0, (2, 100))
            lam = 3.7
            assert np.allclose(
                F_kernel(lam * r, lam * w, alpha),
                lam ** (alpha + 2) * F_kernel(r, w, alpha),
                rtol=1e-12,
            )

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            F_kernel(1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            F_kernel(1.0, 1.0, 1.5)
        with pytest.raises(ValueError):
            F_kernel(-1.0, 1.0, 0.5)

    @pytest.mark.parametrize("alpha", [-0.5, 0.25, 0.5, 0.75, 1.0])
    def test_uniform_bound(self, alpha):
        """|F(r, w)| <= C(alpha) |r - w|^{alpha+2} on 1e5 random pairs."""
        rng = np.random.default_rng(42)
        C = C_alpha(alpha)
        r = rng.uniform(0.0, 10.0, 100_000)
        w = rng.uniform(0.0, 10.0, 100_000)
        lhs = np.abs(F_kernel(r, w, alpha))
        rhs = C * np.abs(r - w) ** (alpha + 2)
        assert np.all(lhs <= rhs * (1 + 1e-9) + 1e-12)


class TestCAlpha:
    def test_endpoint_lower_bounds(self):
        for alpha in [-0.5, 0.5, 1.0]:
            assert C_alpha(alpha) >= alpha + 1 - 1e-10
            assert C_alpha(alpha) >= 1.0 - 1e-10

    def test_alpha_one_origin_limit(self):
        assert C_alpha(1.0) >= 1.5 - 1e-10

    def test_finite(self):
        for alpha in [-0.9, -0.5, 0.25, 0.5, 0.75, 1.0]:
            assert np.isfinite(C_alpha(alpha))
