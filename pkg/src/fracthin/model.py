"""Scalar constitutive functions of the regularized thin film model.

Mobility, classical and alpha-indexed entropies, their regularized
variants, and the two-point kernel controlling the global alpha-entropy
estimate.  Everything here is a pure scalar (or vectorized numpy)
function of the state value z and the parameter tuple.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass
class ModelParams:
    """Parameter tuple (d, n, s, alpha, beta, eps, delta, gamma, A).

    The anchor A in the alpha-entropy is fixed to 0 when alpha > n - 1
    and to 1 otherwise (killing the offsets of the log branches); beta
    must exceed max(n, alpha + 2) for the regularized entropy to pair
    with the mobility.
    """

    d: int = 1
    n: float = 1.0
    s: float = 0.5
    alpha: float = 0.0
    beta: float | None = None
    eps: float = 0.0
    delta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        if self.n < 0:
            raise ValueError("mobility exponent n must be nonnegative")
        if not 0 < self.s < 1:
            raise ValueError("fractional order s must lie in (0,1)")
        if self.alpha <= -1:
            raise ValueError("entropy index alpha must exceed -1")
        if self.beta is None:
            self.beta = max(self.n, self.alpha + 2) + 1.0
        if self.beta <= max(self.n, self.alpha + 2):
            raise ValueError("beta must exceed max(n, alpha + 2)")
        if min(self.eps, self.delta, self.gamma) < 0:
            raise ValueError("regularization parameters must be >= 0")

    @property
    def A(self) -> float:
        return 0.0 if self.alpha > self.n - 1 else 1.0

    @property
    def q(self) -> float:
        """Dual exponent 4d / (2d - n (d - 2s)_+)."""
        pos = max(self.d - 2 * self.s, 0.0)
        return 4 * self.d / (2 * self.d - self.n * pos)

    # admissibility ranges (quantitative targets, reported as warnings)

    def n_existence_range(self) -> tuple[float, float]:
        lo = 2 * (self.s + 1) / (4 * (self.s + 1) - self.d)
        pos = max(self.d - 2 * self.s, 0.0)
        hi = np.inf if pos == 0 else (self.d + 2 * (1 - self.s)) / pos + 0.5
        return lo, hi

    def alpha_range(self) -> tuple[float, float]:
        return -1 + self.d / (4 * (self.s + 1) - self.d), 1.0

    def admissibility_warnings(self) -> list[str]:
        out = []
        lo, hi = self.n_existence_range()
        if not lo < self.n < hi:
            out.append(
                f"n={self.n} outside existence range ({lo:.4g}, {hi:.4g})"
            )
        if not self.n < 2:
            out.append(f"n={self.n} outside finite-propagation range (needs n < 2)")
        alo, ahi = self.alpha_range()
        if not alo < self.alpha <= ahi:
            out.append(
                f"alpha={self.alpha} outside entropy range ({alo:.4g}, {ahi:.4g}]"
            )
        return out

    def warn_if_inadmissible(self):
        for msg in self.admissibility_warnings():
            warnings.warn(msg, stacklevel=2)


def mobility(z, p: ModelParams):
    """Regularized mobility m(z) = z^{n+b} / (z^b + eps z^n + delta z^{n+b}) + gamma.

    Total function: the z <= 0 branch returns gamma.  Monotone
    nondecreasing, sandwiched between gamma and gamma + z^n.
    """
    z = np.asarray(z, dtype=float)
    n, b = p.n, p.beta
    if n == 0 and p.eps == 0 and p.delta == 0:
        # constant-mobility limit z^0 = 1, extended to the whole line
        out = np.full_like(z, 1.0 + p.gamma)
        return out if out.ndim else float(out)
    pos = z > 0
    zp = np.where(pos, z, 1.0)
    denom = zp**b + p.eps * zp**n + p.delta * zp ** (n + b)
    core = zp ** (n + b) / denom
    out = np.where(pos, core, 0.0) + p.gamma
    return out if out.ndim else float(out)


def mobility_deriv(z, p: ModelParams):
    """Derivative of the smooth (z > 0) mobility branch; 0 for z <= 0.

    Satisfies m'(z) <= beta m(z) / z <= beta z^{n-1}.
    """
    z = np.asarray(z, dtype=float)
    n, b = p.n, p.beta
    pos = z > 0
    zp = np.where(pos, z, 1.0)
    denom = zp**b + p.eps * zp**n + p.delta * zp ** (n + b)
    num = zp ** (n + b - 1) * (n * zp**b + p.eps * b * zp**n)
    out = np.where(pos, num / denom**2, 0.0)
    return out if out.ndim else float(out)


def entropy_classical(u, n: float):
    """Convex entropy with G''(u) = u^{-n}, G(1) = G'(1) = 0.

    Returns +inf where the formula diverges (u < 0, or u = 0 with
    n >= 2 where the limit is infinite).
    """
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if n == 1:
            val = np.where(u > 0, u * np.log(np.where(u > 0, u, 1.0)) - u + 1, 1.0)
        elif n == 2:
            val = np.where(
                u > 0, np.log(1.0 / np.where(u > 0, u, 1.0)) + u - 1, np.inf
            )
        else:
            up = np.where(u > 0, u, 1.0)
            val = np.where(
                u > 0,
                up ** (2 - n) / ((n - 2) * (n - 1)) + up / (n - 1) + 1.0 / (2 - n),
                np.inf if n > 2 else 1.0 / (2 - n),
            )
    val = np.where(u < 0, np.inf, val)
    return val if val.ndim else float(val)


def entropy_alpha(z, p: ModelParams):
    """Alpha-entropy with second derivative z^{alpha - n} on z > 0.

    Branches on alpha vs n-1, n-2 with anchor A = p.A; nonnegative on
    z >= 0 and +inf where the limit at 0 diverges.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("entropy_alpha requires z >= 0")
    a, n, A = p.alpha, p.n, p.A
    e1 = a - n + 1
    e2 = a - n + 2
    with np.errstate(divide="ignore", invalid="ignore"):
        zp = np.where(z > 0, z, 1.0)
        if np.isclose(a, n - 1):
            val = zp * np.log(zp) - zp * (np.log(A) + 1) + A
            at0 = A
        elif np.isclose(a, n - 2):
            val = np.log(A / zp) + zp / A - 1
            at0 = np.inf
        else:
            val = (zp**e2 - A**e2) / (e1 * e2) - (A**e1 / e1) * (zp - A)
            if e2 > 0:
                at0 = (0.0 - A**e2) / (e1 * e2) + A**e1 * A / e1
            else:
                at0 = np.inf
        val = np.where(z > 0, val, at0)
    return val if val.ndim else float(val)


def entropy_alpha_deriv(z, p: ModelParams):
    """First derivative of the alpha-entropy on z > 0."""
    z = np.asarray(z, dtype=float)
    a, n, A = p.alpha, p.n, p.A
    e1 = a - n + 1
    zp = np.where(z > 0, z, 1.0)
    if np.isclose(a, n - 1):
        val = np.log(zp) - np.log(A)
    elif np.isclose(a, n - 2):
        val = 1.0 / A - 1.0 / zp
    else:
        val = (zp**e1 - A**e1) / e1
    val = np.where(z > 0, val, np.nan)
    return val if val.ndim else float(val)


def entropy_alpha_reg(z, p: ModelParams):
    """Regularized alpha-entropy: adds the eps and delta power corrections.

    Built so that (G_alpha^{eps,delta})''(z) * m_{eps,delta}(z) = z^alpha;
    diverges at z = 0 when eps > 0 since alpha - beta + 2 < 0.
    """
    z = np.asarray(z, dtype=float)
    a, b = p.alpha, p.beta
    base = np.asarray(entropy_alpha(z, p))
    zp = np.where(z > 0, z, 1.0)
    eps_term = p.eps * zp ** (a - b + 2) / ((a - b + 2) * (a - b + 1))
    delta_term = p.delta * zp ** (a + 2) / ((a + 2) * (a + 1))
    val = base + np.where(z > 0, eps_term + delta_term, np.inf if p.eps > 0 else 0.0)
    return val if val.ndim else float(val)


def entropy_alpha_reg_deriv(z, p: ModelParams):
    """First derivative of the regularized alpha-entropy on z > 0."""
    z = np.asarray(z, dtype=float)
    a, b = p.alpha, p.beta
    zp = np.where(z > 0, z, 1.0)
    val = (
        np.asarray(entropy_alpha_deriv(z, p))
        + p.eps * zp ** (a - b + 1) / (a - b + 1)
        + p.delta * zp ** (a + 1) / (a + 1)
    )
    return val if val.ndim else float(val)


def F_kernel(r, w, alpha: float):
    """Two-point kernel of the global alpha-entropy estimate.

    F(r, w) = w^{a+2} - (a+1) r^{a+2} - (4(a+1)/a)(r w)^{(a+2)/2}
              + ((a+2)^2/a) r^{a+1} w

    Vanishes on the diagonal, homogeneous of degree alpha + 2, and
    bounded by C(alpha) |r - w|^{alpha+2}.
    """
    if alpha == 0:
        raise ValueError(
            "alpha = 0 has 1/alpha factors in the closed form; "
            "use the series limit (not needed by the entropy checks)"
        )
    if not -1 < alpha <= 1:
        raise ValueError("alpha must lie in (-1, 1]")
    r = np.asarray(r, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(r < 0) or np.any(w < 0):
        raise ValueError("F_kernel requires r, w >= 0")
    a = alpha
    val = (
        w ** (a + 2)
        - (a + 1) * r ** (a + 2)
        - (4 * (a + 1) / a) * (r * w) ** ((a + 2) / 2)
        + ((a + 2) ** 2 / a) * r ** (a + 1) * w
    )
    return val if val.ndim else float(val)


def C_alpha(alpha: float, tol: float = 1e-4) -> float:
    """Numeric sup of |F(1, 1+nu)| / |nu|^{alpha+2} over nu >= -1.

    Grid sup over a log-graded nu grid with the analytic endpoint values
    spliced in (alpha+1 at nu = -1; 1 as nu -> inf; 3/2 at nu -> 0 when
    alpha = 1, 0 otherwise).  The grid is doubled until the sup is
    stable to ``tol``.
    """
    if alpha == 0 or not -1 < alpha <= 1:
        raise ValueError("alpha must lie in (-1, 1], alpha != 0")

    endpoints = [alpha + 1.0, 1.0]
    if alpha == 1:
        endpoints.append(1.5)

    def grid_sup(points: int) -> float:
        # graded grid: dense near nu = 0 and nu = -1, stretching to 1e3
        small = np.concatenate(
            [
                -1 + np.geomspace(1e-10, 1.0, points // 4),
                -np.geomspace(1e-10, 1.0, points // 4)[::-1],
                np.geomspace(1e-10, 1e3, points // 2),
            ]
        )
        nu = small[(small >= -1) & (np.abs(small) > 1e-12)]
        phi = F_kernel(np.ones_like(nu), 1.0 + nu, alpha)
        vals = np.abs(phi) / np.abs(nu) ** (alpha + 2)
        return max(float(np.max(vals)), *endpoints)

    points = 10_000
    prev = grid_sup(points)
    for _ in range(8):
        points *= 2
        cur = grid_sup(points)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    return prev
