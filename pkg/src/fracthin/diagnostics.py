"""Measured functionals and quantitative post-processing.

Everything here consumes immutable fields or trajectories: conserved
mass, fractional Dirichlet energy, alpha-entropies, the dissipation
accumulator, support radii in the sup-norm metric, propagation-exponent
fits, waiting-time detection, annulus entropies, and the scaled
edge-entropy scan that certifies the waiting-time hypothesis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams, entropy_alpha, entropy_alpha_reg, mobility
from .spectral import Grid, SpectralField, frac_laplacian, gradient, seminorm


@dataclass
class DiagRecord:
    """One row of run diagnostics."""

    t: float
    mass: float
    energy_hs: float
    entropy_alpha: float
    dissipation_cum: float
    seminorm_hs1: float
    min_u: float
    max_u: float
    support_radius: float
    power_integral: float = 0.0  # int u^{alpha+2} dx, for the entropy bound

    def __post_init__(self):
        for name in (
            "t",
            "mass",
            "energy_hs",
            "entropy_alpha",
            "dissipation_cum",
            "seminorm_hs1",
            "min_u",
            "max_u",
            "support_radius",
        ):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite diagnostic {name}")

    CSV_FIELDS = (
        "t",
        "mass",
        "energy_hs",
        "entropy_alpha",
        "dissipation_cum",
        "seminorm_hs1",
        "min_u",
        "max_u",
        "support_radius",
    )


@dataclass
class SupportTrace:
    """Support radius d(t) along a run."""

    times: np.ndarray
    radii: np.ndarray
    threshold: float
    r0: float

    def monotone(self) -> np.ndarray:
        """Running maximum of the radii (d(t) is nondecreasing in theory)."""
        return np.maximum.accumulate(self.radii)


def default_support_threshold(params: ModelParams) -> float:
    """Numerical support cut just above the positivity lift."""
    theta1 = 1.0 / (2.0 * (params.beta - params.alpha - 2.0))
    lift = (params.eps**theta1 if params.eps > 0 else 0.0) + params.delta
    return max(1e-7, 10.0 * (lift + params.gamma))


def record(
    u: SpectralField,
    params: ModelParams,
    dissipation_cum: float,
    t: float = 0.0,
    support_center=None,
    support_threshold: float | None = None,
) -> DiagRecord:
    """Evaluate all run functionals on one field."""
    grid = u.grid
    cell = grid.cell_volume
    uv = u.values
    umin = float(np.min(uv))
    entropy_vals = np.asarray(
        entropy_alpha_reg(np.maximum(uv, 0.0), params), dtype=float
    )
    finite = entropy_vals[np.isfinite(entropy_vals)]
    entropy = float(np.sum(finite)) * cell if finite.size else np.inf
    power = params.alpha + 2.0
    w = SpectralField.from_values(grid, np.maximum(uv, 0.0) ** (power / 2.0))
    radius = 0.0
    if support_center is not None:
        thr = (
            support_threshold
            if support_threshold is not None
            else default_support_threshold(params)
        )
        radius = support_radius_of(u, thr, support_center)
    return DiagRecord(
        t=t,
        mass=u.mass(),
        energy_hs=seminorm(u, params.s) ** 2,
        entropy_alpha=entropy if np.isfinite(entropy) else float("1e300"),
        dissipation_cum=dissipation_cum,
        seminorm_hs1=seminorm(w, params.s + 1.0) ** 2,
        min_u=umin,
        max_u=float(np.max(uv)),
        support_radius=radius,
        power_integral=float(np.sum(np.maximum(uv, 0.0) ** power)) * cell,
    )


def energy_inequality_residual(traj) -> float:
    """max_t of [energy(t) + 2 * dissipation(t) - energy(0)].

    Nonpositive (up to tolerance) when the discrete run respects the
    continuum energy-dissipation law.
    """
    recs = traj.records
    e0 = recs[0].energy_hs
    worst = -np.inf
    for r in recs[1:]:
        worst = max(worst, r.energy_hs + 2.0 * r.dissipation_cum - e0)
    return float(worst) if np.isfinite(worst) else 0.0


def entropy_inequality_residual(traj, params: ModelParams) -> float:
    """Smallest C1_hat >= 0 closing the alpha-entropy inequality.

    Along the discrete trajectory the target is

        entropy(T) + 4/(alpha+2)^2 int_0^T seminorm_hs1
            <= entropy(0) + C1_hat int_0^T int u^{alpha+2}.

    The time integrals use the trapezoid rule over the record times.
    """
    recs = traj.records
    ts = np.array([r.t for r in recs])
    ent = np.array([r.entropy_alpha for r in recs])
    hs1 = np.array([r.seminorm_hs1 for r in recs])
    pw = np.array([r.power_integral for r in recs])
    pref = 4.0 / (params.alpha + 2.0) ** 2
    cum_hs1 = _cumtrapz(hs1, ts)
    cum_pw = _cumtrapz(pw, ts)
    c1 = 0.0
    for i in range(1, len(ts)):
        lhs = ent[i] + pref * cum_hs1[i] - ent[0]
        if lhs > 0 and cum_pw[i] > 0:
            c1 = max(c1, lhs / cum_pw[i])
    return float(c1)


def _cumtrapz(y, x):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def support_radius_of(u: SpectralField, threshold: float, center) -> float:
    """Smallest sup-norm radius containing all nodes with u >= threshold."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    from .solver import _sup_distance

    dist = _sup_distance(u.grid, center)
    above = u.values >= threshold
    if not np.any(above):
        return 0.0
    return float(np.max(dist[above]))


def support_trace(traj, threshold: float, center) -> SupportTrace:
    """Support radii along the snapshot cadence of a trajectory."""
    times = np.asarray(traj.times, dtype=float)
    radii = np.array(
        [support_radius_of(f, threshold, center) for f in traj.fields]
    )
    return SupportTrace(
        times=times, radii=radii, threshold=threshold, r0=float(radii[0])
    )


@dataclass
class ExponentFit:
    """Power-law fit of the support growth d(t) - r0 ~ C0 t^exponent."""

    exponent: float
    c0: float
    target: float
    n_points: int
    degenerate: bool = False


def propagation_target(params: ModelParams) -> float:
    return 1.0 / (params.n * params.d + 2.0 * (params.s + 1.0))


def fit_propagation_exponent(
    trace: SupportTrace,
    params: ModelParams,
    h: float,
    half_width: float,
    growth_cut: float | None = None,
) -> ExponentFit:
    """Least-squares slope of log(d(t) - r0) against log t.

    Window: drop times until d - r0 exceeds 3 grid cells (threshold
    noise) or the optional ``growth_cut`` (used to skip the early
    transient and the r0-subtraction bias when extracting the
    self-similar exponent), and stop once d reaches 0.8 * half-width
    (boundary interaction).
    """
    target = propagation_target(params)
    d = trace.monotone()
    growth = d - trace.r0
    cut = max(3.0 * h, growth_cut if growth_cut is not None else 0.0)
    mask = (growth > cut) & (d < 0.8 * half_width) & (trace.times > 0)
    n = int(np.sum(mask))
    if n < 2:
        return ExponentFit(np.nan, np.nan, target, n, degenerate=True)
    lt = np.log(trace.times[mask])
    lg = np.log(growth[mask])
    slope, intercept = np.polyfit(lt, lg, 1)
    return ExponentFit(float(slope), float(np.exp(intercept)), target, n)


def detect_waiting_time(trace: SupportTrace, r0: float, tol_cells: float, h: float) -> float:
    """Largest T0 with d(t) <= r0 + tol_cells * h for all t < T0."""
    limit = r0 + tol_cells * h
    beyond = trace.monotone() > limit
    if not np.any(beyond):
        return float(trace.times[-1])
    first = int(np.argmax(beyond))
    return float(trace.times[first]) if first > 0 else 0.0


def annulus_entropy(traj, S: float, params: ModelParams, center) -> float:
    """Space-time integral of u^{alpha+2} outside the sup-norm ball of radius S."""
    from .solver import _sup_distance

    grid = traj.grid
    dist = _sup_distance(grid, center)
    outside = dist > S
    power = params.alpha + 2.0
    vals = np.array(
        [
            float(np.sum(np.maximum(f.values[outside], 0.0) ** power))
            * grid.cell_volume
            for f in traj.fields
        ]
    )
    ts = np.asarray(traj.times, dtype=float)
    return float(np.trapezoid(vals, ts))


def wtp_condition_scan(
    u0: SpectralField,
    r0: float,
    gamma_exp: float,
    params: ModelParams,
    center,
) -> tuple[float, float]:
    """Sup over a dyadic delta-ladder of the scaled edge-entropy average.

    Returns (sup value, predicted waiting-time scale sup^{-n/(alpha-n+2)});
    a finite sup certifies the waiting-time hypothesis for edge exponent
    gamma_exp.
    """
    if gamma_exp <= 0:
        raise ValueError("edge exponent must be positive")
    from .solver import _sup_distance

    grid = u0.grid
    dist = _sup_distance(grid, center)
    exponent = gamma_exp * (params.alpha - params.n + 2.0)
    sup_val = 0.0
    vals = np.maximum(u0.values, 0.0)
    for j in range(1, 9):
        delta = r0 * 2.0**-j
        annulus = (dist <= r0) & (dist > r0 - delta)
        if not np.any(annulus):
            continue
        gvals = np.asarray(entropy_alpha(vals[annulus], params), dtype=float)
        gvals = gvals[np.isfinite(gvals)]
        if gvals.size == 0:
            continue
        avg = float(np.mean(gvals))
        sup_val = max(sup_val, delta**-exponent * avg)
    if sup_val == 0.0:
        return 0.0, np.inf
    predicted = sup_val ** (-params.n / (params.alpha - params.n + 2.0))
    return sup_val, float(predicted)
