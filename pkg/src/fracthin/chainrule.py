"""Numerical certification of the nonlocal chain rule.

For the Neumann heat kernel K(x,y,t) = sum_k e^{-lambda_k t} phi_k(x)
phi_k(y) the Taylor remainder of a composition phi(u) can be pushed
through the semigroup:

    int K(x,y,t) [phi(u(y)) - phi(u(x)) - phi'(u(x))(u(y)-u(x))] dy
        = (e^{tDelta} phi(u))(x) - phi(u(x))
          - phi'(u(x)) ((e^{tDelta} u)(x) - u(x))
        =: A(t, x),

so the remainder fields below are built from semigroup applications to
phi(u) and u alone; no kernel matrix is ever formed.

With a Neumann (mass-conserving) kernel the subtracted t-integral in the
mu in (1,2) branch is divergent if written literally: int K dy = 1 makes
int_0 t^{-mu} dt blow up at 0.  Both written integrals are realized here
in the analytic-continuation (finite-part) sense, which per eigenvalue
matches

    eta^mu = 1/Gamma(-mu) int_0^inf (e^{-eta t} - 1 + eta t) t^{-1-mu} dt,

i.e. the linear-in-t growth t phi''(u)|grad u|^2 is subtracted inside
the remainder integrand and the pure-power integral multiplying
|grad u|^2 has finite part zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad as _scipy_quad

from .spectral import (
    Grid,
    QuadratureSpec,
    SpectralField,
    frac_laplacian,
    gamma_reflect,
    gradient,
    heat_semigroup,
    seminorm,
)


@dataclass
class ScalarFunction:
    """A C^2 scalar function with its first two derivatives."""

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]
    d2f: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def square(cls):
        return cls(
            "square",
            lambda v: v**2,
            lambda v: 2.0 * v,
            lambda v: np.full_like(np.asarray(v, float), 2.0),
        )

    @classmethod
    def power(cls, p: float):
        """v -> v^p; requires strictly positive arguments when p < 2."""
        return cls(
            f"power({p})",
            lambda v: v**p,
            lambda v: p * v ** (p - 1),
            lambda v: p * (p - 1) * v ** (p - 2),
        )

    @classmethod
    def linear(cls, a: float = 1.0, b: float = 0.0):
        return cls(
            "linear",
            lambda v: a * v + b,
            lambda v: np.full_like(np.asarray(v, float), a),
            lambda v: np.zeros_like(np.asarray(v, float)),
        )


def default_remainder_quad(panels: int = 512) -> QuadratureSpec:
    """Quadrature tuned for the remainder integrals.

    The t^{-1-mu} weight with mu up to 2 amplifies rounding noise from
    the smallest t nodes, so the remainder integrals start at a larger
    t_min than the fractional-power multiplier and absorb [0, t_min]
    into the analytic head expansion instead.
    """
    return QuadratureSpec(panels=panels, t_min_factor=1e-3)


@dataclass
class RemainderReport:
    """Residual summary for one asserted identity."""

    mu: float
    phi_name: str
    residual: np.ndarray
    max_residual: float = field(init=False)
    mean_residual: float = field(init=False)
    sign_violations: int = 0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.residual)):
            raise ValueError("residual field contains non-finite values")
        self.max_residual = float(np.max(np.abs(self.residual)))
        self.mean_residual = float(np.mean(np.abs(self.residual)))


def grad_square(u: SpectralField) -> np.ndarray:
    """Nodal |grad u|^2."""
    comps = gradient(u)
    out = comps[0] ** 2
    for g in comps[1:]:
        out = out + g**2
    return out


def _taylor_remainder_pieces(u: SpectralField, phi: ScalarFunction):
    """Precompute the fields entering A(t, x) and its asymptotics."""
    grid = u.grid
    uv = u.values
    pu = SpectralField.from_values(grid, phi.f(uv))
    dphi = phi.df(uv)
    # A'(0) = Laplacian phi(u) - phi'(u) Laplacian u = phi''(u)|grad u|^2
    g = phi.d2f(uv) * grad_square(u)
    # A''(0) = Delta^2 phi(u) - phi'(u) Delta^2 u
    lam = grid.eigenvalues
    bilap_pu = SpectralField(grid, coeffs=lam**2 * pu.coeffs).values
    bilap_u = SpectralField(grid, coeffs=lam**2 * u.coeffs).values
    a2 = bilap_pu - dphi * bilap_u
    # t -> inf limit: semigroups relax to the means
    a_inf = pu.mean() - pu.values + dphi * (uv - u.mean())
    return pu, dphi, g, a2, a_inf


def _remainder_field(
    u: SpectralField,
    phi: ScalarFunction,
    mu: float,
    quad: QuadratureSpec,
    subtract_linear: bool,
) -> np.ndarray:
    grid = u.grid
    pu, dphi, g, a2, a_inf = _taylor_remainder_pieces(u, phi)
    lam = grid.eigenvalues
    t_nodes, w = quad.nodes_weights(grid)
    acc = np.zeros(grid.shape)
    from .spectral import synthesize

    for ti, wi in zip(t_nodes, w):
        # expm1 keeps the O(t) semigroup increments at full relative
        # accuracy; forming e^{tDelta}f - f nodally would cancel
        # catastrophically under the t^{-1-mu} weight
        factor = np.expm1(-lam * ti)
        a = synthesize(factor * pu.coeffs, grid) - dphi * synthesize(
            factor * u.coeffs, grid
        )
        if subtract_linear:
            a = a - ti * g
        acc += wi * a * ti ** (-1.0 - mu)
    t_min, t_max = t_nodes[0], t_nodes[-1]
    if subtract_linear:
        # head: A - t g = t^2/2 A''(0) + O(t^3)
        acc += 0.5 * a2 * t_min ** (2.0 - mu) / (2.0 - mu)
        # tail: A -> A_inf while the subtracted -t g keeps integrating
        acc += a_inf * t_max ** (-mu) / mu - g * t_max ** (1.0 - mu) / (mu - 1.0)
    else:
        # head: A = t g + t^2/2 A''(0) + O(t^3)
        acc += g * t_min ** (1.0 - mu) / (1.0 - mu)
        acc += 0.5 * a2 * t_min ** (2.0 - mu) / (2.0 - mu)
        acc += a_inf * t_max ** (-mu) / mu
    return -acc / gamma_reflect(-mu)


def remainder_I(
    u: SpectralField,
    phi: ScalarFunction,
    mu: float,
    quad: QuadratureSpec | None = None,
) -> np.ndarray:
    """Taylor-remainder field of order mu in (0,1); >= 0 for convex phi."""
    if not 0 < mu < 1:
        raise ValueError(f"mu must lie in (0,1), got {mu}")
    return _remainder_field(u, phi, mu, quad or default_remainder_quad(), False)


def remainder_J(
    u: SpectralField,
    phi: ScalarFunction,
    mu: float,
    quad: QuadratureSpec | None = None,
) -> np.ndarray:
    """Taylor-remainder field of order mu in (1,2); sign-indefinite."""
    if not 1 < mu < 2:
        raise ValueError(f"mu must lie in (1,2), got {mu}")
    return _remainder_field(u, phi, mu, quad or default_remainder_quad(), True)


def verify_chain_rule(
    u: SpectralField,
    phi: ScalarFunction,
    mu: float,
    quad: QuadratureSpec | None = None,
) -> RemainderReport:
    """Residual of (-Delta)^mu phi(u) = phi'(u)(-Delta)^mu u - remainder.

    The left side goes through the spectral multiplier on phi(u); the
    right side assembles the semigroup-quadrature remainder, so the two
    routes are independent.
    """
    if not 0 < mu < 2:
        raise ValueError(f"mu must lie in (0,2), got {mu}")
    grid = u.grid
    uv = u.values
    pu = SpectralField.from_values(grid, phi.f(uv))
    lhs = frac_laplacian(pu, mu).values
    dphi_lap = phi.df(uv) * frac_laplacian(u, mu).values
    if mu == 1.0:
        rem = phi.d2f(uv) * grad_square(u)
    elif mu < 1.0:
        rem = remainder_I(u, phi, mu, quad)
    else:
        rem = remainder_J(u, phi, mu, quad)
    residual = lhs - (dphi_lap - rem)
    violations = int(np.sum(rem < 0)) if mu < 1.0 else 0
    return RemainderReport(
        mu=mu,
        phi_name=phi.name,
        residual=residual,
        sign_violations=violations,
        extras={"remainder_min": float(np.min(rem)), "remainder_max": float(np.max(rem))},
    )


def verify_square_identities(
    v: SpectralField,
    mu: float,
    quad: QuadratureSpec | None = None,
) -> RemainderReport:
    """Residuals of the phi(v) = v^2 corollary identities for mu in (1,2).

    Pointwise: (-Delta)^mu v^2 = 2 v (-Delta)^mu v - J_mu[v].  Integrated
    (the Parseval form): int |(-Delta)^{mu/2} v|^2 dx = (1/2) int J_mu[v] dx,
    which follows by integrating the pointwise identity and using
    int (-Delta)^mu v^2 dx = 0; that vanishing integral is cross-checked
    too and reported under ``extras``.
    """
    if not 1 < mu < 2:
        raise ValueError(f"mu must lie in (1,2), got {mu}")
    grid = v.grid
    phi = ScalarFunction.square()
    vsq = SpectralField.from_values(grid, phi.f(v.values))
    rem = remainder_J(v, phi, mu, quad)
    lhs = frac_laplacian(vsq, mu).values
    residual = lhs - (2.0 * v.values * frac_laplacian(v, mu).values - rem)

    cell = grid.cell_volume
    energy = seminorm(v, mu) ** 2
    half_integral = 0.5 * float(np.sum(rem)) * cell
    mean_zero = float(np.sum(lhs)) * cell
    return RemainderReport(
        mu=mu,
        phi_name=phi.name,
        residual=residual,
        extras={
            "energy_identity_residual": abs(energy - half_integral),
            "energy_lhs": energy,
            "energy_rhs": half_integral,
            "mean_zero_residual": abs(mean_zero),
        },
    )


def heat_kernel_row(grid: Grid, index: tuple | int, t: float) -> np.ndarray:
    """Nodal values of y -> K(x_j, y, t) for the node at ``index``.

    Realized by pushing a unit-mass nodal delta through the semigroup;
    exact for the bandwidth-truncated kernel.  Integrates to 1 in y for
    every t; the positive part alone integrates to 1 once t is a few
    squared grid spacings.
    """
    if np.isscalar(index):
        index = (int(index),)
    delta = np.zeros(grid.shape)
    delta[tuple(index)] = 1.0 / grid.cell_volume
    return heat_semigroup(SpectralField.from_values(grid, delta), t).values


def scalar_fractional_power(eta: float, mu: float) -> float:
    """eta^mu through the branch-appropriate Gamma-weighted t-integral.

    mu in (0,1): eta^mu = 1/Gamma(-mu) int (e^{-eta t} - 1) t^{-1-mu} dt;
    mu in (1,2): the integrand gains the +eta t subtraction.  Adaptive
    scalar quadrature with the tail beyond T handled analytically.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if not 0 < mu < 2 or mu == 1.0:
        raise ValueError("mu must lie in (0,1) or (1,2)")
    T = 60.0 / eta
    a = 1e-9 / eta  # below this the integrand underflows; expand analytically
    if mu < 1:
        head = -eta * a ** (1.0 - mu) / (1.0 - mu) + eta**2 * a ** (2.0 - mu) / (
            2.0 * (2.0 - mu)
        )
        tail = -(T ** (-mu)) / mu  # the -1 piece continues; e^{-eta t} is dead

        def integrand(tau):  # substitution t = e^tau smooths the power weight
            t = np.exp(tau)
            return np.expm1(-eta * t) * t ** (-mu)

    else:
        head = eta**2 * a ** (2.0 - mu) / (2.0 * (2.0 - mu))
        tail = -(T ** (-mu)) / mu + eta * T ** (1.0 - mu) / (mu - 1.0)

        def integrand(tau):
            t = np.exp(tau)
            return (np.expm1(-eta * t) + eta * t) * t ** (-mu)

    body = _scipy_quad(
        integrand, np.log(a), np.log(T), limit=800, epsabs=1e-13, epsrel=1e-12
    )[0]
    return (head + body + tail) / gamma_reflect(-mu)
