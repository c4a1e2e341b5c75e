"""Neumann cosine eigenbasis on boxes and fractional powers of the Laplacian.

The domain is a box Omega = prod (0, L_i) discretized with midpoint
collocation nodes x_j = (j + 1/2) h.  On this layout the Laplacian
eigenfunctions with zero Neumann flux are closed-form cosines,

    phi_k(x) = prod_i  c(k_i) cos(k_i pi x_i / L_i),
    lambda_k = sum_i (k_i pi / L_i)^2,

L^2-orthonormal (c(0) = 1/sqrt(L_i), c(k) = sqrt(2/L_i)), so the forward
transform is an orthonormal DCT-II per axis and Parseval holds without
scale factors.

Fractional powers (-Delta)^r are realized by two independent routes:
the spectral multiplier lambda_k^r, and quadrature of the heat-semigroup
integral

    (-Delta)^s psi = (1/Gamma(-s)) int_0^inf (e^{t Delta} psi - psi) dt / t^{1+s}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, dst, idct, idst
from scipy.special import gamma as _gamma_fn


def gamma_reflect(x: float) -> float:
    """Gamma function on the negative axis via recurrence, sign preserved.

    Gamma(-s) < 0 for s in (0,1) and Gamma(-s-1) > 0 for s in (0,1); the
    sign matters in every semigroup formula, so no absolute values here.
    """
    if x > 0:
        return float(_gamma_fn(x))
    if x == 0 or x == int(x):
        raise ValueError(f"gamma pole at {x}")
    # Gamma(x) = Gamma(x + m) / (x (x+1) ... (x+m-1))
    m = int(np.ceil(-x))
    denom = 1.0
    for j in range(m):
        denom *= x + j
    return float(_gamma_fn(x + m)) / denom


class Grid:
    """Midpoint-collocation discretization of a box with Neumann eigenpairs.

    Parameters
    ----------
    dim : int
        Spatial dimension, 1 or 2.
    lengths : sequence of float
        Per-axis box edge L_i > 0.
    sizes : sequence of int
        Per-axis node count N_i >= 8.
    """

    def __init__(self, dim, lengths, sizes):
        if dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {dim}")
        lengths = tuple(float(L) for L in np.atleast_1d(lengths))
        sizes = tuple(int(N) for N in np.atleast_1d(sizes))
        if len(lengths) != dim or len(sizes) != dim:
            raise ValueError("lengths/sizes must have one entry per axis")
        if any(L <= 0 for L in lengths):
            raise ValueError("lengths must be positive")
        if any(N < 8 for N in sizes):
            raise ValueError("sizes must be at least 8")
        self.dim = dim
        self.lengths = lengths
        self.sizes = sizes
        self.spacings = tuple(L / N for L, N in zip(lengths, sizes))
        self.axes = tuple(
            (np.arange(N) + 0.5) * h for N, h in zip(sizes, self.spacings)
        )
        self.nodes = np.meshgrid(*self.axes, indexing="ij")
        # lambda_k on the retained band k_i = 0..N_i-1, shape == sizes
        per_axis = [
            (np.arange(N) * np.pi / L) ** 2 for N, L in zip(sizes, lengths)
        ]
        lam = per_axis[0]
        if dim == 2:
            lam = per_axis[0][:, None] + per_axis[1][None, :]
        self.eigenvalues = lam
        self.cell_volume = float(np.prod(self.spacings))
        self.volume = float(np.prod(lengths))

    @property
    def shape(self):
        return self.sizes

    def eigenvalue(self, k) -> float:
        """Closed-form lambda_k for a multi-index k."""
        k = np.atleast_1d(k)
        return float(
            sum((ki * np.pi / L) ** 2 for ki, L in zip(k, self.lengths))
        )

    def eigenfunction(self, k) -> np.ndarray:
        """Nodal samples of the L^2-normalized eigenfunction phi_k."""
        k = np.atleast_1d(k)
        out = np.ones(self.sizes)
        for axis, (ki, L) in enumerate(zip(k, self.lengths)):
            x = self.axes[axis]
            f = (
                np.full_like(x, 1 / np.sqrt(L))
                if ki == 0
                else np.sqrt(2 / L) * np.cos(ki * np.pi * x / L)
            )
            shape = [1] * self.dim
            shape[axis] = self.sizes[axis]
            out = out * f.reshape(shape)
        return out

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.dim == other.dim
            and self.lengths == other.lengths
            and self.sizes == other.sizes
        )

    def __repr__(self):
        return f"Grid(dim={self.dim}, lengths={self.lengths}, sizes={self.sizes})"


def build_grid(dim, lengths, sizes) -> Grid:
    """Build a box grid carrying closed-form Neumann eigenpairs."""
    return Grid(dim, lengths, sizes)


def analyze(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Forward Neumann-cosine transform: c_k = (u, phi_k)."""
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"values shape {values.shape} != grid {grid.shape}")
    c = values
    for axis in range(grid.dim):
        c = dct(c, type=2, norm="ortho", axis=axis)
    return c * np.sqrt(grid.cell_volume)


def synthesize(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    """Inverse Neumann-cosine transform back to nodal values."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != grid.shape:
        raise ValueError(f"coeffs shape {coeffs.shape} != grid {grid.shape}")
    v = coeffs / np.sqrt(grid.cell_volume)
    for axis in range(grid.dim):
        v = idct(v, type=2, norm="ortho", axis=axis)
    return v


class SpectralField:
    """Scalar field stored dually as nodal values and cosine coefficients.

    Either representation may be supplied; the other is computed lazily
    and cached.  Operations never mutate a field in place.
    """

    def __init__(self, grid: Grid, values=None, coeffs=None):
        if values is None and coeffs is None:
            raise ValueError("need values or coeffs")
        self.grid = grid
        self._values = None if values is None else np.asarray(values, float)
        self._coeffs = None if coeffs is None else np.asarray(coeffs, float)

    @classmethod
    def from_values(cls, grid, values):
        return cls(grid, values=values)

    @classmethod
    def from_coeffs(cls, grid, coeffs):
        return cls(grid, coeffs=coeffs)

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = synthesize(self._coeffs, self.grid)
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = analyze(self._values, self.grid)
        return self._coeffs

    def mean(self) -> float:
        return float(self.coeffs.flat[0]) / np.sqrt(self.grid.volume)

    def mass(self) -> float:
        """Integral of u over the box."""
        return float(self.coeffs.flat[0]) * np.sqrt(self.grid.volume)

    def norm_l2(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs**2)))

    def __add__(self, other):
        if isinstance(other, SpectralField):
            return SpectralField(self.grid, coeffs=self.coeffs + other.coeffs)
        return SpectralField(self.grid, values=self.values + other)

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            return SpectralField(self.grid, coeffs=self.coeffs - other.coeffs)
        return SpectralField(self.grid, values=self.values - other)

    def __mul__(self, scalar):
        return SpectralField(self.grid, coeffs=self.coeffs * scalar)

    __rmul__ = __mul__


def frac_laplacian(u: SpectralField, r: float) -> SpectralField:
    """(-Delta)^r u via the spectral multiplier lambda_k^r.

    The mean mode carries lambda_0 = 0, so it is annihilated for r > 0
    and preserved for r = 0.
    """
    if r < 0 or not np.isfinite(r):
        raise ValueError(f"fractional order must be >= 0, got {r}")
    lam = u.grid.eigenvalues
    if r == 0:
        return SpectralField(u.grid, coeffs=u.coeffs.copy())
    mult = np.where(lam > 0, lam, 1.0) ** r
    mult = np.where(lam > 0, mult, 0.0)
    return SpectralField(u.grid, coeffs=u.coeffs * mult)


def seminorm(u: SpectralField, r: float) -> float:
    """Homogeneous seminorm (sum_k lambda_k^r |c_k|^2)^{1/2}."""
    if r < 0:
        raise ValueError("seminorm order must be >= 0")
    lam = u.grid.eigenvalues
    if r == 0:
        w = np.ones_like(lam)
    else:
        w = np.where(lam > 0, np.where(lam > 0, lam, 1.0) ** r, 0.0)
    return float(np.sqrt(np.sum(w * u.coeffs**2)))


def inner(u: SpectralField, v: SpectralField) -> float:
    """L^2 inner product via Parseval."""
    return float(np.sum(u.coeffs * v.coeffs))


def heat_semigroup(u: SpectralField, t: float) -> SpectralField:
    """e^{t Delta} u: coefficients scaled by exp(-lambda_k t)."""
    if t <= 0:
        raise ValueError(f"heat time must be positive, got {t}")
    return SpectralField(u.grid, coeffs=u.coeffs * np.exp(-u.grid.eigenvalues * t))


@dataclass
class QuadratureSpec:
    """Log-spaced trapezoid rule in t for the semigroup integral.

    The substitution t = e^tau makes the integrand decay exponentially at
    both ends once the constant "-psi" tail beyond t_max is split off and
    integrated analytically: int_{t_max}^inf t^{-1-s} dt = t_max^{-s}/s.
    """

    panels: int = 256
    t_min_factor: float = 1e-8  # t_min = factor / lambda_max
    decay_target: float = 1e-14  # e^{-lambda_1 t_max} below this

    def __post_init__(self):
        if self.panels < 16:
            raise ValueError("quadrature needs at least 16 panels")

    def nodes_weights(self, grid: Grid):
        lam = grid.eigenvalues
        lam_pos = lam[lam > 0]
        t_min = self.t_min_factor / lam_pos.max()
        t_max = -np.log(self.decay_target) / lam_pos.min()
        tau = np.linspace(np.log(t_min), np.log(t_max), self.panels + 1)
        t = np.exp(tau)
        w = np.full(self.panels + 1, tau[1] - tau[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        # trapezoid in tau; dt = t dtau absorbed into the weight
        return t, w * t

    def refine(self) -> "QuadratureSpec":
        return QuadratureSpec(
            panels=2 * self.panels,
            t_min_factor=self.t_min_factor,
            decay_target=self.decay_target,
        )


@dataclass
class SemigroupResult:
    field: "SpectralField"
    truncation_estimate: float = 0.0


def frac_laplacian_semigroup(
    u: SpectralField,
    s: float,
    quad: QuadratureSpec | None = None,
    with_error=False,
):
    """(-Delta)^s u via quadrature of the heat-semigroup integral.

    Independent realization of :func:`frac_laplacian`; the two routes
    converge to each other as the quadrature is refined.  With
    ``with_error=True`` also returns a truncation estimate obtained by
    comparing against one refinement level.
    """
    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0,1), got {s}")
    quad = quad or QuadratureSpec()

    def evaluate(q):
        t, w = q.nodes_weights(u.grid)
        lam = u.grid.eigenvalues
        c = u.coeffs
        acc = np.zeros_like(c)
        for ti, wi in zip(t, w):
            acc += wi * (np.exp(-lam * ti) - 1.0) * c * ti ** (-1.0 - s)
        # analytic tail: e^{t Delta}u ~ mean for t > t_max, so the
        # integrand is (c_0-contribution - c); the mean mode cancels.
        t_max = t[-1]
        tail = -c * (t_max ** (-s) / s)
        tail.flat[0] = 0.0
        acc += tail
        # analytic head: e^{-lam t} - 1 ~ -lam t + lam^2 t^2 / 2 on [0, t_min]
        t_min = t[0]
        head = c * (
            -lam * t_min ** (1.0 - s) / (1.0 - s)
            + 0.5 * lam**2 * t_min ** (2.0 - s) / (2.0 - s)
        )
        acc += head
        return acc / gamma_reflect(-s)

    coeffs = evaluate(quad)
    result = SpectralField(u.grid, coeffs=coeffs)
    if not with_error:
        return result
    refined = evaluate(quad.refine())
    err = float(np.sqrt(np.sum((coeffs - refined) ** 2)))
    return SemigroupResult(SpectralField(u.grid, coeffs=refined), err)


# ---------------------------------------------------------------------------
# mixed cosine/sine machinery for gradients and divergences


def _sin_synthesize_axis(s: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Evaluate sum_m s[m-1] sin(m pi x / L) at midpoints along one axis.

    ``s`` indexes modes m = 1..N; the top mode m = N is resolvable at
    midpoints (it samples to (-1)^j).
    """
    N = grid.sizes[axis]
    shat = s * np.sqrt(N / 2.0)
    top = np.take(s, N - 1, axis=axis) * np.sqrt(N)
    shat = np.copy(shat)
    idx = [slice(None)] * grid.dim
    idx[axis] = N - 1
    shat[tuple(idx)] = top
    return idst(shat, type=2, norm="ortho", axis=axis)


def _sin_analyze_axis(v: np.ndarray, grid: Grid, axis: int) -> np.ndarray:
    """Expand midpoint samples in sin(m pi x / L), m = 1..N, along one axis."""
    N = grid.sizes[axis]
    shat = dst(v, type=2, norm="ortho", axis=axis)
    s = shat * np.sqrt(2.0 / N)
    idx = [slice(None)] * grid.dim
    idx[axis] = N - 1
    s[tuple(idx)] = np.take(shat, N - 1, axis=axis) / np.sqrt(N)
    return s


def _axis_wavenumbers(grid: Grid, axis: int, count: int) -> np.ndarray:
    k = np.arange(count) * np.pi / grid.lengths[axis]
    shape = [1] * grid.dim
    shape[axis] = count
    return k.reshape(shape)


def gradient(u: SpectralField) -> list[np.ndarray]:
    """Nodal gradient, one array per axis, via sine-series differentiation.

    d/dx of the cosine mode k is -(k pi / L) sin(k pi x / L); the sine
    series is evaluated exactly at the midpoints.
    """
    grid = u.grid
    out = []
    for axis in range(grid.dim):
        N = grid.sizes[axis]
        c = u.coeffs
        # sine modes m = 1..N; m = N stays empty (cos band stops at N-1)
        kfac = _axis_wavenumbers(grid, axis, N)
        s = np.roll(c * (-kfac), -1, axis=axis)
        idx = [slice(None)] * grid.dim
        idx[axis] = N - 1
        s[tuple(idx)] = 0.0
        # orthonormal phi_k carries sqrt(2/L) on its cosine; keep it on the sine
        s = s * np.sqrt(2.0 / grid.lengths[axis])
        v = _sin_synthesize_axis(s, grid, axis)
        for other in range(grid.dim):
            if other != axis:
                v = idct(v, type=2, norm="ortho", axis=other) / np.sqrt(
                    grid.spacings[other]
                )
        out.append(v)
    return out


def divergence_of_flux(flux: list[np.ndarray], grid: Grid) -> np.ndarray:
    """Cosine coefficients of div(flux) from nodal flux components.

    Each component is expanded in the sine basis along its own axis and
    differentiated there, which lands back in the cosine basis with an
    exactly zero mean mode (discrete zero-flux boundary).
    """
    total = None
    for axis, f in enumerate(flux):
        N = grid.sizes[axis]
        s = _sin_analyze_axis(np.asarray(f, float), grid, axis)
        # d/dx sin(m pi x/L) = (m pi / L) cos(m pi x/L); shift m -> cos index k = m
        m = np.arange(1, N + 1) * np.pi / grid.lengths[axis]
        shape = [1] * grid.dim
        shape[axis] = N
        c = s * m.reshape(shape) * np.sqrt(grid.lengths[axis] / 2.0)
        c = np.roll(c, 1, axis=axis)
        idx = [slice(None)] * grid.dim
        idx[axis] = 0
        c[tuple(idx)] = 0.0  # mean of a derivative vanishes identically
        # other axes are still nodal; analyze them into the cosine basis
        for other in range(grid.dim):
            if other != axis:
                c = dct(c, type=2, norm="ortho", axis=other) * np.sqrt(
                    grid.spacings[other]
                )
        total = c if total is None else total + c
    return total


def dealias_mask(grid: Grid, fraction: float = 2.0 / 3.0) -> np.ndarray:
    """Boolean mask keeping modes k_i < fraction * N_i (2/3-rule)."""
    mask = np.ones(grid.sizes, dtype=bool)
    for axis, N in enumerate(grid.sizes):
        keep = np.arange(N) < fraction * N
        shape = [1] * grid.dim
        shape[axis] = N
        mask = mask & keep.reshape(shape)
    return mask
