"""Tests for the nonlocal chain rule remainders and square identities."""

import numpy as np
import pytest

from fracthin.chainrule import (
    RemainderReport,
    ScalarFunction,
    default_remainder_quad,
    grad_square,
    heat_kernel_row,
    remainder_I,
    remainder_J,
    scalar_fractional_power,
    verify_chain_rule,
    verify_square_identities,
)
from fracthin.spectral import (
    QuadratureSpec,
    SpectralField,
    build_grid,
    frac_laplacian,
)


def band_limited_bump(grid, floor=0.5, frac=1 / 3):
    """Smooth strictly positive bump band-limited to frac * N modes."""
    x = grid.axes[0]
    vals = 30.0 * np.maximum(0.16 - (x - 0.5) ** 2, 0.0) ** 2 + floor
    f = SpectralField.from_values(grid, vals)
    c = f.coeffs.copy()
    cut = int(frac * grid.sizes[0])
    c[cut:] = 0.0
    return SpectralField(grid, coeffs=c)


def random_band_limited(grid, rng, frac=1 / 3, amp=1.0):
    c = np.zeros(grid.shape)
    cut = tuple(int(frac * n) for n in grid.sizes)
    c[tuple(slice(0, m) for m in cut)] = rng.standard_normal(cut) * amp
    return SpectralField(grid, coeffs=c)


def smooth_random(grid, rng, modes=16, amp=0.3):
    """Random field with 1/k^2 spectral decay; smooth enough for the
    absolute residual tolerances of the identity checks."""
    c = np.zeros(grid.shape)
    if grid.dim == 1:
        c[:modes] = rng.standard_normal(modes) * amp / (1 + np.arange(modes)) ** 2
    else:
        ksq = np.add.outer(np.arange(modes) ** 2, np.arange(modes) ** 2)
        c[:modes, :modes] = rng.standard_normal((modes, modes)) * amp / (1 + ksq)
    return SpectralField(grid, coeffs=c)


def square_remainder_oracle(u, mu):
    """Exact remainder via the spectral route, valid for phi(v) = v^2.

    For band-limited u the product u^2 is exactly representable, so
    2u(-Delta)^mu u - (-Delta)^mu(u^2) is the remainder to machine
    accuracy up to the multiplier roundoff.
    """
    usq = SpectralField.from_values(u.grid, u.values**2)
    return (
        2.0 * u.values * frac_laplacian(u, mu).values
        - frac_laplacian(usq, mu).values
    )


class TestScalarFunction:
    def test_square(self):
        phi = ScalarFunction.square()
        v = np.array([1.0, 2.0, -3.0])
        assert np.allclose(phi.f(v), v**2)
        assert np.allclose(phi.df(v), 2 * v)
        assert np.allclose(phi.d2f(v), 2.0)

    def test_power(self):
        phi = ScalarFunction.power(1.5)
        assert phi.f(4.0) == pytest.approx(8.0)
        assert phi.df(4.0) == pytest.approx(3.0)
        assert phi.d2f(4.0) == pytest.approx(0.375)


class TestRemainderTrivial:
    def test_linear_phi_gives_zero(self):
        grid = build_grid(1, (1.0,), (64,))
        rng = np.random.default_rng(0)
        u = random_band_limited(grid, rng)
        phi = ScalarFunction.linear(2.0, -1.0)
        assert np.max(np.abs(remainder_I(u, phi, 0.5))) < 1e-9
        assert np.max(np.abs(remainder_J(u, phi, 1.5))) < 1e-6

    def test_constant_u_gives_zero(self):
        grid = build_grid(1, (1.0,), (64,))
        u = SpectralField.from_values(grid, np.full(64, 2.5))
        phi = ScalarFunction.square()
        assert np.max(np.abs(remainder_I(u, phi, 0.5))) < 1e-10
        assert np.max(np.abs(remainder_J(u, phi, 1.5))) < 1e-10

    def test_rejects_out_of_range_mu(self):
        grid = build_grid(1, (1.0,), (64,))
        u = band_limited_bump(grid)
        phi = ScalarFunction.square()
        with pytest.raises(ValueError):
            remainder_I(u, phi, 1.0)
        with pytest.raises(ValueError):
            remainder_J(u, phi, 0.9)
        with pytest.raises(ValueError):
            verify_chain_rule(u, phi, 2.0)


class TestRemainderI:
    def test_matches_square_oracle(self):
        grid = build_grid(1, (1.0,), (256,))
        u = band_limited_bump(grid)
        phi = ScalarFunction.square()
        for mu in (0.25, 0.5, 0.75):
            rem = remainder_I(u, phi, mu, default_remainder_quad(1024))
            oracle = square_remainder_oracle(u, mu)
            assert np.max(np.abs(rem - oracle)) < 1e-5

    def test_positivity_for_convex_phi(self):
        grid = build_grid(1, (1.0,), (128,))
        rng = np.random.default_rng(21)
        phi = ScalarFunction.square()
        for _ in range(20):
            u = random_band_limited(grid, rng, amp=0.2)
            u = SpectralField.from_values(
                grid, u.values - u.values.min() + 0.2
            )
            rem = remainder_I(u, phi, 0.5)
            assert rem.min() > -1e-6

    def test_refinement_converges(self):
        grid = build_grid(1, (1.0,), (128,))
        u = band_limited_bump(grid)
        phi = ScalarFunction.square()
        oracle = square_remainder_oracle(u, 0.5)
        errs = [
            np.max(np.abs(remainder_I(u, phi, 0.5, default_remainder_quad(p)) - oracle))
            for p in (128, 256, 512)
        ]
        assert errs[2] < errs[1] < errs[0]


class TestRemainderJ:
    def test_matches_square_oracle(self):
        grid = build_grid(1, (1.0,), (256,))
        u = band_limited_bump(grid)
        phi = ScalarFunction.square()
        for mu in (1.25, 1.5, 1.75):
            rem = remainder_J(u, phi, mu, default_remainder_quad(2048))
            oracle = square_remainder_oracle(u, mu)
            assert np.max(np.abs(rem - oracle)) < 1e-3

    def test_sign_indefinite_on_generic_bump(self):
        grid = build_grid(1, (1.0,), (256,))
        u = band_limited_bump(grid)
        rem = remainder_J(u, ScalarFunction.square(), 1.5)
        assert rem.min() < -1e-3 and rem.max() > 1e-3

    def test_second_order_in_panels(self):
        grid = build_grid(1, (1.0,), (256,))
        u = band_limited_bump(grid)
        phi = ScalarFunction.square()
        oracle = square_remainder_oracle(u, 1.5)
        errs = [
            np.max(np.abs(remainder_J(u, phi, 1.5, default_remainder_quad(p)) - oracle))
            for p in (512, 1024, 2048)
        ]
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders > 1.0)


class TestVerifyChainRule:
    def test_mu_one_is_exact_calculus(self):
        grid = build_grid(1, (1.0,), (256,))
        u = band_limited_bump(grid)
        rep = verify_chain_rule(u, ScalarFunction.square(), 1.0)
        assert rep.max_residual < 1e-8

    def test_branch_i_residual(self):
        grid = build_grid(1, (1.0,), (256,))
        u = band_limited_bump(grid)
        rep = verify_chain_rule(
            u, ScalarFunction.square(), 0.5, default_remainder_quad(1024)
        )
        assert rep.max_residual < 1e-4
        assert rep.sign_violations == 0

    def test_branch_iii_residual_positive_power(self):
        grid = build_grid(1, (1.0,), (256,))
        u = band_limited_bump(grid)
        assert u.values.min() > 0.1
        rep = verify_chain_rule(
            u, ScalarFunction.power(1.5), 1.5, default_remainder_quad(1024)
        )
        assert rep.max_residual < 1e-3

    def test_residual_decays_with_order_at_least_one(self):
        phi = ScalarFunction.square()
        errs = []
        for N, panels in ((64, 256), (128, 512), (256, 1024)):
            grid = build_grid(1, (1.0,), (N,))
            u = band_limited_bump(grid)
            rep = verify_chain_rule(u, phi, 1.5, default_remainder_quad(panels))
            errs.append(rep.max_residual)
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders >= 1.0)

    def test_report_fields(self):
        grid = build_grid(1, (1.0,), (64,))
        u = band_limited_bump(grid)
        rep = verify_chain_rule(u, ScalarFunction.square(), 0.5)
        assert isinstance(rep, RemainderReport)
        assert rep.mu == 0.5
        assert rep.phi_name == "square"
        assert np.isfinite(rep.max_residual)
        assert rep.mean_residual <= rep.max_residual


class TestSquareIdentities:
    def test_constant_field(self):
        grid = build_grid(1, (1.0,), (64,))
        v = SpectralField.from_values(grid, np.full(64, 3.0))
        rep = verify_square_identities(v, 1.5)
        assert rep.max_residual < 1e-9
        assert rep.extras["energy_identity_residual"] < 1e-9

    def test_first_eigenfunction_energy(self):
        grid = build_grid(1, (1.0,), (128,))
        v = SpectralField.from_values(grid, grid.eigenfunction((1,)))
        lam1 = grid.eigenvalue((1,))
        rep = verify_square_identities(v, 1.4, default_remainder_quad(1024))
        assert rep.extras["energy_lhs"] == pytest.approx(lam1**1.4, rel=1e-10)
        assert rep.extras["energy_identity_residual"] < 1e-4

    def test_random_band_limited(self):
        grid = build_grid(1, (1.0,), (256,))
        rng = np.random.default_rng(5)
        v = smooth_random(grid, rng)
        rep = verify_square_identities(v, 1.4, default_remainder_quad(1024))
        assert rep.max_residual < 1e-3
        assert rep.extras["mean_zero_residual"] < 1e-10

    def test_two_dimensional(self):
        grid = build_grid(2, (1.0, 1.0), (32, 32))
        rng = np.random.default_rng(9)
        v = smooth_random(grid, rng, modes=8)
        rep = verify_square_identities(v, 1.4, default_remainder_quad(512))
        assert rep.max_residual < 1e-3
        assert rep.extras["mean_zero_residual"] < 1e-10


class TestHeatKernelRow:
    def test_unit_mass_all_t(self):
        grid = build_grid(1, (1.0,), (128,))
        h = grid.spacings[0]
        for t in (1e-6, 1e-3, 0.1, 10.0):
            row = heat_kernel_row(grid, 64, t)
            assert np.sum(row) * h == pytest.approx(1.0, abs=1e-12)

    def test_positive_part_unit_mass_beyond_t_safe(self):
        grid = build_grid(1, (1.0,), (128,))
        h = grid.spacings[0]
        t_safe = 4.0 * h * h
        for t in (t_safe, 4 * t_safe, 100 * t_safe):
            row = heat_kernel_row(grid, 30, t)
            pos = np.clip(row, 0.0, None)
            assert abs(np.sum(pos) * h - 1.0) < 1e-8

    def test_two_dimensional_mass(self):
        grid = build_grid(2, (1.0, 2.0), (16, 32))
        row = heat_kernel_row(grid, (3, 7), 0.05)
        assert np.sum(row) * grid.cell_volume == pytest.approx(1.0, abs=1e-12)


class TestScalarFractionalPower:
    def test_grid_eigenvalues(self):
        grid = build_grid(1, (1.0,), (64,))
        etas = [grid.eigenvalue((k,)) for k in (1, 5, 17)]
        for mu in (0.5, 1.5):
            for eta in etas:
                assert abs(scalar_fractional_power(eta, mu) - eta**mu) < 1e-8 * eta**mu

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            scalar_fractional_power(-1.0, 0.5)
        with pytest.raises(ValueError):
            scalar_fractional_power(1.0, 1.0)


class TestGradSquare:
    def test_cosine_mode(self):
        grid = build_grid(1, (1.0,), (128,))
        v = SpectralField.from_values(grid, np.cos(3 * np.pi * grid.axes[0]))
        expected = (3 * np.pi * np.sin(3 * np.pi * grid.axes[0])) ** 2
        assert np.max(np.abs(grad_square(v) - expected)) < 1e-9
