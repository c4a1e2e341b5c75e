"""Time integration of the regularized nonlocal thin film equation.

The evolution du/dt = div(m(u) grad p), p = (-Delta)^s u, is advanced
with a stabilized IMEX splitting: the stiff constant-coefficient part
M_bar (-Delta)^{s+1} is treated implicitly (diagonal in the cosine
eigenbasis) and the remainder explicitly,

    (1 + dt M_bar (-Delta)^{s+1}) u^{m+1}
        = u^m + dt [rhs(u^m) + M_bar (-Delta)^{s+1} u^m].

Zero-flux boundary conditions are built into the basis, so mass is
conserved to rounding per step.  The time step adapts: it halves when a
step violates the energy-dissipation tolerance or the positivity floor,
and grows by 1.2 after ten clean steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import newton_krylov

from .model import ModelParams, mobility
from .spectral import (
    Grid,
    SpectralField,
    dealias_mask,
    divergence_of_flux,
    frac_laplacian,
    gradient,
    seminorm,
)


@dataclass
class SolverConfig:
    """Time-stepping knobs."""

    dt0: float = 1e-4
    t_end: float = 0.1
    stepper: str = "imex-rubinstein"
    m_bar: float | None = None  # None: 1.1 * max m(u), refreshed per step
    dissipation_tol: float = 1e-8  # allowed per-step energy increase
    dealias: bool | None = None  # None: on iff n >= 2
    u_min: float | None = None  # positivity floor; None disables the check
    theta: float = 1.0  # implicit weight; 1 = backward Euler, 0.5 = trapezoid
    grow_after: int = 10
    grow_factor: float = 1.2
    dt_floor_factor: float = 1e-12

    def __post_init__(self):
        if self.dt0 <= 0:
            raise ValueError("dt0 must be positive")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.stepper not in ("imex-rubinstein", "fully-implicit-newton"):
            raise ValueError(f"unknown stepper {self.stepper!r}")
        if self.m_bar is not None and self.m_bar <= 0:
            raise ValueError("stabilizer m_bar must be positive")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [1/2, 1]")


@dataclass
class State:
    """Instantaneous solver state."""

    t: float
    u: SpectralField
    step_count: int = 0
    p: SpectralField | None = None

    def pressure(self, s: float) -> SpectralField:
        if self.p is None:
            self.p = compute_pressure(self.u, s)
        return self.p


@dataclass
class Trajectory:
    """Everything a run emits, in memory.

    ``times``/``fields`` hold the snapshot cadence; diagnostics records
    are attached by the caller (the run loop) on its own cadence.
    """

    grid: Grid
    params: ModelParams
    config: SolverConfig
    times: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    records: list = field(default_factory=list)
    initial_energy: float = 0.0
    aborted: bool = False
    abort_reason: str = ""
    n_steps: int = 0
    dt_final: float = 0.0

    def snapshot(self, state: State):
        self.times.append(state.t)
        self.fields.append(state.u)


def compute_pressure(u: SpectralField, s: float) -> SpectralField:
    """p = (-Delta)^s u; zero mean by construction."""
    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0,1), got {s}")
    return frac_laplacian(u, s)


def rhs(
    u: SpectralField,
    params: ModelParams,
    dealias: bool = False,
) -> SpectralField:
    """div(m(u) grad p) evaluated pseudo-spectrally.

    Pressure and its gradient are spectral, the mobility and the flux
    product nodal, the divergence spectral again; the mean mode of the
    result is identically zero (discrete mass conservation).
    """
    grid = u.grid
    p = compute_pressure(u, params.s)
    grad_p = gradient(p)
    m = mobility(u.values, params)
    flux = [m * g for g in grad_p]
    coeffs = divergence_of_flux(flux, grid)
    if dealias:
        coeffs = coeffs * dealias_mask(grid)
    if not np.all(np.isfinite(coeffs)):
        raise FloatingPointError("non-finite values in the flux divergence")
    return SpectralField(grid, coeffs=coeffs)


def _dissipation_rate(u: SpectralField, params: ModelParams) -> float:
    """int m(u) |grad p|^2 dx, the instantaneous energy dissipation."""
    grad_p = gradient(compute_pressure(u, params.s))
    gsq = sum(g**2 for g in grad_p)
    m = mobility(u.values, params)
    return float(np.sum(m * gsq)) * u.grid.cell_volume


def _should_dealias(cfg: SolverConfig, params: ModelParams) -> bool:
    return cfg.dealias if cfg.dealias is not None else params.n >= 2


def _stabilizer(cfg: SolverConfig, u: SpectralField, params: ModelParams) -> float:
    if cfg.m_bar is not None:
        return cfg.m_bar
    return 1.1 * float(np.max(mobility(u.values, params)))


def step(state: State, cfg: SolverConfig, params: ModelParams, dt: float) -> State:
    """One time step (no adaptivity); raises on non-finite results."""
    grid = state.u.grid
    lam_s1 = grid.eigenvalues ** (params.s + 1.0)
    dealias = _should_dealias(cfg, params)
    if cfg.stepper == "imex-rubinstein":
        m_bar = _stabilizer(cfg, state.u, params)
        c = state.u.coeffs
        f = rhs(state.u, params, dealias).coeffs
        # theta = 1: (1 + dt Mb L) u+ = u + dt (rhs + Mb L u);
        # theta = 1/2 recovers the trapezoid rule in the linear limit
        th = cfg.theta
        c_new = (c + dt * (f + th * m_bar * lam_s1 * c)) / (
            1.0 + th * dt * m_bar * lam_s1
        )
    else:
        c_old = state.u.coeffs

        def residual(c_flat):
            u_new = SpectralField(grid, coeffs=c_flat.reshape(grid.shape))
            f = rhs(u_new, params, dealias).coeffs
            return (u_new.coeffs - c_old - dt * f).ravel()

        guess = step(state, replace(cfg, stepper="imex-rubinstein"), params, dt)
        c_new = newton_krylov(
            residual, guess.u.coeffs.ravel(), f_tol=1e-12, maxiter=50
        ).reshape(grid.shape)
    if not np.all(np.isfinite(c_new)):
        raise FloatingPointError("non-finite coefficients after step")
    return State(
        t=state.t + dt,
        u=SpectralField(grid, coeffs=c_new),
        step_count=state.step_count + 1,
    )


def lift_initial(u0: SpectralField, params: ModelParams) -> SpectralField:
    """Positivity lift u0 + eps^{theta1} + delta^{theta2}.

    theta1 = 1/(2(beta - alpha - 2)), theta2 = 1; the gamma mobility
    floor needs no lift.
    """
    theta1 = 1.0 / (2.0 * (params.beta - params.alpha - 2.0))
    shift = params.eps**theta1 if params.eps > 0 else 0.0
    shift += params.delta  # theta2 = 1
    if shift == 0.0:
        return u0
    return SpectralField.from_values(u0.grid, u0.values + shift)


@dataclass
class RunMeta:
    """Optional hooks the run loop threads through to diagnostics."""

    support_center: tuple | None = None
    support_threshold: float | None = None
    snapshot_stride: int = 10
    diag_stride: int = 1


def run(
    grid: Grid,
    params: ModelParams,
    cfg: SolverConfig,
    u0: SpectralField,
    meta: RunMeta | None = None,
) -> Trajectory:
    """Advance the lifted initial datum to t_end with adaptive dt.

    The datum is lifted per the regularization (eps, delta > 0 shift the
    profile up); snapshots and diagnostics records are taken on the
    configured strides and always at t = 0 and t_end.  On step-size
    underflow the partial trajectory is returned with ``aborted`` set.
    """
    from .diagnostics import record  # local import to keep layering acyclic

    meta = meta or RunMeta()
    u = lift_initial(u0, params)
    state = State(t=0.0, u=u)
    traj = Trajectory(grid=grid, params=params, config=cfg)
    traj.initial_energy = seminorm(u, params.s) ** 2

    dissipation = 0.0
    traj.snapshot(state)
    traj.records.append(
        record(
            state.u,
            params,
            dissipation,
            t=0.0,
            support_center=meta.support_center,
            support_threshold=meta.support_threshold,
        )
    )

    dt = cfg.dt0
    dt_floor = cfg.dt_floor_factor * cfg.dt0
    clean = 0
    energy = traj.initial_energy
    while state.t < cfg.t_end - 1e-14 * cfg.t_end:
        dt_step = min(dt, cfg.t_end - state.t)
        try:
            trial = step(state, cfg, params, dt_step)
            ok = np.all(np.isfinite(trial.u.coeffs))
        except FloatingPointError:
            ok = False
            trial = None
        if ok:
            new_energy = seminorm(trial.u, params.s) ** 2
            if new_energy > energy + cfg.dissipation_tol:
                ok = False
            elif cfg.u_min is not None and float(np.min(trial.u.values)) < cfg.u_min:
                ok = False
        if not ok:
            dt *= 0.5
            clean = 0
            if dt < dt_floor:
                traj.aborted = True
                traj.abort_reason = (
                    f"time step underflow at t={state.t:.6g} "
                    f"(dt={dt:.3g} < {dt_floor:.3g})"
                )
                break
            continue
        # dissipation increment int m(u)|grad p|^2 dx dt, trapezoid in t
        dissipation += 0.5 * dt_step * (
            _dissipation_rate(state.u, params) + _dissipation_rate(trial.u, params)
        )

        state = trial
        energy = new_energy
        clean += 1
        if clean >= cfg.grow_after:
            dt *= cfg.grow_factor
            clean = 0

        last = state.t >= cfg.t_end - 1e-14 * cfg.t_end
        if state.step_count % meta.diag_stride == 0 or last:
            traj.records.append(
                record(
                    state.u,
                    params,
                    dissipation,
                    t=state.t,
                    support_center=meta.support_center,
                    support_threshold=meta.support_threshold,
                )
            )
        if state.step_count % meta.snapshot_stride == 0 or last:
            traj.snapshot(state)
    traj.n_steps = state.step_count
    traj.dt_final = dt
    return traj


# ---------------------------------------------------------------------------
# initial-datum families


def initial_bump(
    grid: Grid, center, r0: float, amplitude: float = 1.0
) -> SpectralField:
    """C^1 compact bump a ((r0^2 - |x-c|^2)_+)^2 in the sup-norm radius."""
    dist = _sup_distance(grid, center)
    vals = amplitude * np.maximum(r0**2 - dist**2, 0.0) ** 2
    return SpectralField.from_values(grid, vals)


def initial_power_edge(
    grid: Grid, center, r0: float, amplitude: float, edge_exponent: float
) -> SpectralField:
    """Edge-power profile a ((r0 - |x-c|)_+)^{gamma'} for waiting-time studies."""
    if edge_exponent <= 0:
        raise ValueError("edge exponent must be positive")
    dist = _sup_distance(grid, center)
    vals = amplitude * np.maximum(r0 - dist, 0.0) ** edge_exponent
    return SpectralField.from_values(grid, vals)


def initial_eigenmode(
    grid: Grid, k, amplitude: float = 1.0, offset: float = 0.0
) -> SpectralField:
    """a phi_k + offset."""
    vals = amplitude * grid.eigenfunction(tuple(np.atleast_1d(k))) + offset
    return SpectralField.from_values(grid, vals)


def _sup_distance(grid: Grid, center) -> np.ndarray:
    center = np.atleast_1d(np.asarray(center, dtype=float))
    if center.size != grid.dim:
        raise ValueError("center dimension mismatch")
    per_axis = []
    for axis in range(grid.dim):
        d = np.abs(grid.axes[axis] - center[axis])
        shape = [1] * grid.dim
        shape[axis] = grid.sizes[axis]
        per_axis.append(d.reshape(shape))
    dist = per_axis[0]
    for d in per_axis[1:]:
        dist = np.maximum(dist, d)
    return np.broadcast_to(dist, grid.shape).copy()
