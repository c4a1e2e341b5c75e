"""Executable iteration lemmas: Stampacchia predictors and empirical
Gagliardo-Nirenberg constants.

Each predictor takes a sampled nonincreasing decay function together
with the constants of its recursive inequality and returns the
extinction point or decay envelope the lemma guarantees.  The envelopes
are checked against the sample; hypothesis violations are rejected with
a witness pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Grid, SpectralField, seminorm


@dataclass
class DecayFunction:
    """Sampled nonnegative nonincreasing function on [x0, X]."""

    xs: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.xs.ndim != 1 or self.xs.shape != self.values.shape:
            raise ValueError("xs and values must be matching 1-D arrays")
        if len(self.xs) < 2:
            raise ValueError("need at least two samples")
        if np.any(np.diff(self.xs) <= 0):
            raise ValueError("xs must be strictly increasing")
        if np.any(self.values < 0):
            raise ValueError("values must be nonnegative")
        if np.any(np.diff(self.values) > 1e-12 * (1 + self.values[0])):
            raise ValueError("values must be nonincreasing")

    @property
    def x0(self) -> float:
        return float(self.xs[0])

    @property
    def f0(self) -> float:
        return float(self.values[0])

    def check_hypothesis(self, C: float, alpha: float, beta: float):
        """Verify f(y) <= C (y-x)^{-alpha} f(x)^beta on all sample pairs.

        Returns None if satisfied, else a witness pair (x, y).
        """
        x = self.xs[None, :]
        y = self.xs[:, None]
        fy = self.values[:, None]
        fx = self.values[None, :]
        gap = y - x
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            bound = C * gap ** (-alpha) * fx**beta
        bad = (gap > 0) & (fy > bound * (1 + 1e-10) + 1e-300)
        if not np.any(bad):
            return None
        i, j = np.argwhere(bad)[0]
        return float(self.xs[j]), float(self.xs[i])


@dataclass
class ExtinctionPrediction:
    """Outcome of a Stampacchia predictor."""

    case: str  # "extinction" | "exponential" | "algebraic"
    extinction_point: float | None
    envelope: np.ndarray
    dominates: bool


def stampacchia_extinction(
    f: DecayFunction, C: float, alpha: float, beta: float
) -> ExtinctionPrediction:
    """Extinction point (beta > 1) or decay envelope (beta <= 1).

    beta > 1: f vanishes beyond x0 + d with
    d^alpha = C f(x0)^{beta-1} 2^{alpha beta/(beta-1)}.
    beta = 1: envelope e^{1 - zeta (y-x0)} f(x0), zeta = (eC)^{-1/alpha}.
    beta < 1: envelope 2^{mu/(1-beta)} [C^{1/(1-beta)} +
    (2 x0)^mu f(x0)] y^{-mu}, mu = alpha/(1-beta), requiring x0 > 0.
    """
    if min(C, alpha, beta) <= 0:
        raise ValueError("constants C, alpha, beta must be positive")
    witness = f.check_hypothesis(C, alpha, beta)
    if witness is not None:
        raise ValueError(f"recursive hypothesis violated at pair {witness}")
    f0, x0 = f.f0, f.x0
    if beta > 1:
        d = (C * f0 ** (beta - 1) * 2 ** (alpha * beta / (beta - 1))) ** (1 / alpha)
        envelope = np.where(f.xs >= x0 + d, 0.0, np.inf)
        dominates = bool(np.all(f.values <= envelope + 1e-12 * (1 + f0)))
        return ExtinctionPrediction("extinction", x0 + d, envelope, dominates)
    if beta == 1:
        zeta = (np.e * C) ** (-1.0 / alpha)
        envelope = np.exp(1.0 - zeta * (f.xs - x0)) * f0
        dominates = bool(np.all(f.values <= envelope * (1 + 1e-10)))
        return ExtinctionPrediction("exponential", None, envelope, dominates)
    if x0 <= 0:
        raise ValueError("the algebraic branch (beta < 1) requires x0 > 0")
    mu = alpha / (1.0 - beta)
    amp = 2 ** (mu / (1.0 - beta)) * (
        C ** (1.0 / (1.0 - beta)) + (2.0 * x0) ** mu * f0
    )
    envelope = amp * f.xs**-mu
    dominates = bool(np.all(f.values <= envelope * (1 + 1e-10)))
    return ExtinctionPrediction("algebraic", None, envelope, dominates)


def inhomogeneous_gate(
    c0: float, alpha: float, beta: float, S_tilde: float, R: float, f0: float
) -> bool:
    """The size condition implying f(R) = 0 in the inhomogeneous lemma."""
    lhs = R ** (alpha / (beta - 1.0))
    rhs = (2 ** (beta * (alpha + beta - 1.0) / (beta - 1.0)) * c0) ** (
        1.0 / (beta - 1.0)
    ) * (f0 + S_tilde * R ** (alpha / (beta - 1.0)))
    return bool(lhs >= rhs)


def check_inhomogeneous_hypothesis(
    f: DecayFunction,
    c0: float,
    alpha: float,
    beta: float,
    S_tilde: float,
    R: float,
):
    """Verify f(y) <= c0 (y-x)^{-alpha} (f(x) + S_tilde (R-x)^{alpha/(beta-1)})^beta
    on all sample pairs with y <= R.  Returns None or a witness pair."""
    inside = f.xs <= R
    xs = f.xs[inside]
    vals = f.values[inside]
    x = xs[None, :]
    y = xs[:, None]
    fy = vals[:, None]
    source = vals + S_tilde * (R - xs) ** (alpha / (beta - 1.0))
    gap = y - x
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        bound = c0 * gap ** (-alpha) * source[None, :] ** beta
    bad = (gap > 0) & (fy > bound * (1 + 1e-10) + 1e-300)
    if not np.any(bad):
        return None
    i, j = np.argwhere(bad)[0]
    return float(xs[j]), float(xs[i])


def stampacchia_inhomogeneous(
    f: DecayFunction,
    c0: float,
    alpha: float,
    beta: float,
    S_tilde: float,
    R: float,
) -> bool:
    """True iff the gate holds, predicting extinction at R.

    The recursive hypothesis is verified on all sampled pairs inside
    [x0, R] before any claim is made.
    """
    if beta <= 1:
        raise ValueError("the inhomogeneous lemma requires beta > 1")
    if min(c0, alpha) <= 0 or S_tilde < 0 or R <= 0:
        raise ValueError("bad constants")
    witness = check_inhomogeneous_hypothesis(f, c0, alpha, beta, S_tilde, R)
    if witness is not None:
        raise ValueError(f"recursive hypothesis violated at pair {witness}")
    return inhomogeneous_gate(c0, alpha, beta, S_tilde, R, f.f0)


def geometric_extinction(f: DecayFunction, eps: float, nu: float) -> float:
    """Extinction point d = f(0)/(1 - eps f(0)^{nu-1}) for f(s+delta) <= eps f(s)^nu."""
    if nu <= 1:
        raise ValueError("nu must exceed 1")
    f0 = f.f0
    if not 0 < eps < f0 ** (1.0 - nu):
        raise ValueError("eps must lie in (0, f(0)^{1-nu})")
    d = f0 / (1.0 - eps * f0 ** (nu - 1.0))
    tail = f.values[f.xs >= f.x0 + d]
    if tail.size and np.max(tail) > 1e-10 * (1.0 + f0):
        raise ValueError("sample does not vanish beyond the predicted point")
    return float(f.x0 + d)


def gn_theta(b: float, s: float, N: int) -> float:
    """Interpolation weight theta = (1/b - 1/2)/(1/b + (s+1)/N - 1/2)."""
    return (1.0 / b - 0.5) / (1.0 / b + (s + 1.0) / N - 0.5)


def gn_sample_norms(
    s: float,
    b: float,
    grid: Grid,
    n_samples: int,
    rng: np.random.Generator,
):
    """Norm triples (||w||_2, ||(-Delta)^{(s+1)/2} w||_2, ||w||_b) for
    random band-limited sample fields (every third field rectified to a
    definite sign)."""
    cell = grid.cell_volume
    l2s, grads, lbs = [], [], []
    for i in range(n_samples):
        c = np.zeros(grid.shape)
        cut = tuple(max(2, n // 4) for n in grid.sizes)
        c[tuple(slice(0, m) for m in cut)] = rng.standard_normal(cut)
        w = SpectralField(grid, coeffs=c)
        vals = w.values
        if i % 3 == 0:
            vals = np.abs(vals)
            w = SpectralField.from_values(grid, vals)
        l2s.append(np.sqrt(np.sum(vals**2) * cell))
        grads.append(seminorm(w, s + 1.0))
        lbs.append((np.sum(np.abs(vals) ** b) * cell) ** (1.0 / b))
    return np.asarray(l2s), np.asarray(grads), np.asarray(lbs)


def gn_empirical_constant(
    s: float,
    b: float,
    grid: Grid,
    n_samples: int = 400,
    rng: np.random.Generator | None = None,
):
    """Empirical (C1, C2) for the interpolation inequality

        ||w||_2 <= C1 ||(-Delta)^{(s+1)/2} w||_2^theta ||w||_b^{1-theta}
                   + C2 ||w||_b

    over random band-limited sample fields.  C2 runs over a grid; for
    each value the minimal feasible C1 is computed, and the pair with
    the smallest C1 + C2 is returned.  Every sample satisfies the
    inequality at the returned constants by construction.
    """
    if not 0 < b < 2:
        raise ValueError("b must lie in (0, 2)")
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    rng = rng or np.random.default_rng(0)
    theta = gn_theta(b, s, grid.dim)
    l2s, grads, lbs = gn_sample_norms(s, b, grid, n_samples, rng)

    interp = grads**theta * lbs ** (1.0 - theta)
    ratio_c2 = l2s / lbs
    c2_grid = np.linspace(0.0, float(np.max(ratio_c2)), 41)
    best = None
    for c2 in c2_grid:
        slack = l2s - c2 * lbs
        need = slack / interp
        c1 = max(0.0, float(np.max(need)))
        if not np.isfinite(c1):
            continue
        if best is None or c1 + c2 < best[0] + best[1]:
            best = (c1, c2)
    c1, c2 = best
    assert np.all(l2s <= c1 * interp + c2 * lbs + 1e-10)
    return float(c1), float(c2)
