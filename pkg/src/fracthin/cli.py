"""Experiment configuration, orchestration, persistence, and the
command-line surface.

Config files are UTF-8 lines ``section.key = value`` with ``#``
comments; sections are {grid, model, init, solver, output}.  Outputs
are plain CSV plus JSON reports, listed in a sha256 manifest so reruns
can be checked byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import ModelParams
from .diagnostics import (
    DiagRecord,
    default_support_threshold,
    detect_waiting_time,
    energy_inequality_residual,
    entropy_inequality_residual,
    fit_propagation_exponent,
    propagation_target,
    record,
    support_trace,
    wtp_condition_scan,
)
from .solver import (
    RunMeta,
    SolverConfig,
    initial_bump,
    initial_eigenmode,
    initial_power_edge,
    run,
)
from .spectral import SpectralField, build_grid, frac_laplacian, seminorm


class ConfigError(ValueError):
    """Config parsing/validation failure, with the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _tuple_of(kind):
    def convert(text):
        items = [p.strip() for p in str(text).split(",") if p.strip()]
        return tuple(kind(p) for p in items)

    return convert


def _maybe(kind):
    def convert(text):
        if str(text).strip().lower() in ("none", ""):
            return None
        return kind(text)

    return convert


def _bool(text):
    t = str(text).strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# section -> key -> (converter, default)
_SCHEMA = {
    "grid": {
        "dim": (int, 1),
        "lengths": (_tuple_of(float), (1.0,)),
        "sizes": (_tuple_of(int), (256,)),
    },
    "model": {
        "n": (float, 1.0),
        "s": (float, 0.5),
        "alpha": (float, 0.0),
        "beta": (_maybe(float), None),
        "eps": (float, 0.0),
        "delta": (float, 0.0),
        "gamma": (float, 0.0),
    },
    "init": {
        "family": (str, "bump"),
        "r0": (float, 0.3),
        "center": (_tuple_of(float), (0.5,)),
        "amplitude": (float, 50.0),
        "edge_exponent": (float, 3.0),
        "mode": (_tuple_of(int), (1,)),
        "offset": (float, 0.0),
        "table": (_maybe(str), None),
    },
    "solver": {
        "dt0": (float, 1e-4),
        "t_end": (float, 0.1),
        "stepper": (str, "imex-rubinstein"),
        "m_bar": (_maybe(float), None),
        "dissipation_tol": (float, 1e-8),
        "dealias": (_maybe(_bool), None),
        "u_min": (_maybe(float), None),
        "theta": (float, 1.0),
        "grow_after": (int, 10),
        "grow_factor": (float, 1.2),
    },
    "output": {
        "snapshot_stride": (int, 10),
        "diag_stride": (int, 1),
        "outdir": (str, "out"),
        "run_id": (str, "run"),
        "seed": (int, 0),
    },
}

_FAMILIES = ("bump", "power-edge", "eigenmode", "custom-table")


@dataclass
class ExperimentConfig:
    """Flat, validated view of one experiment description."""

    values: dict
    warnings: list = field(default_factory=list)

    def __getitem__(self, dotted: str):
        return self.values[dotted]

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.values == other.values

    # --- builders -----------------------------------------------------

    def grid(self):
        return build_grid(
            self["grid.dim"], self["grid.lengths"], self["grid.sizes"]
        )

    def model_params(self) -> ModelParams:
        return ModelParams(
            d=self["grid.dim"],
            n=self["model.n"],
            s=self["model.s"],
            alpha=self["model.alpha"],
            beta=self["model.beta"],
            eps=self["model.eps"],
            delta=self["model.delta"],
            gamma=self["model.gamma"],
        )

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            dt0=self["solver.dt0"],
            t_end=self["solver.t_end"],
            stepper=self["solver.stepper"],
            m_bar=self["solver.m_bar"],
            dissipation_tol=self["solver.dissipation_tol"],
            dealias=self["solver.dealias"],
            u_min=self["solver.u_min"],
            theta=self["solver.theta"],
            grow_after=self["solver.grow_after"],
            grow_factor=self["solver.grow_factor"],
        )

    def initial_field(self, grid) -> SpectralField:
        family = self["init.family"]
        center = self["init.center"]
        if family == "bump":
            return initial_bump(grid, center, self["init.r0"], self["init.amplitude"])
        if family == "power-edge":
            return initial_power_edge(
                grid,
                center,
                self["init.r0"],
                self["init.amplitude"],
                self["init.edge_exponent"],
            )
        if family == "eigenmode":
            return initial_eigenmode(
                grid, self["init.mode"], self["init.amplitude"], self["init.offset"]
            )
        table = self["init.table"]
        if table is None:
            raise ConfigError("custom-table family requires init.table")
        vals = np.loadtxt(table, delimiter=",").reshape(grid.shape)
        return SpectralField.from_values(grid, vals)

    def run_meta(self) -> RunMeta:
        return RunMeta(
            support_center=self["init.center"],
            support_threshold=None,
            snapshot_stride=self["output.snapshot_stride"],
            diag_stride=self["output.diag_stride"],
        )


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate `section.key = value` lines.

    Unknown keys, type mismatches, and malformed lines fail with the
    line number; theorem-range warnings are attached, never clamped.
    """
    values = {
        f"{sec}.{key}": default
        for sec, keys in _SCHEMA.items()
        for key, (_, default) in keys.items()
    }
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"malformed line (expected key = value): {raw!r}", lineno)
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if "." not in key:
            raise ConfigError(f"key must be section.name, got {key!r}", lineno)
        sec, name = key.split(".", 1)
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section {sec!r}", lineno)
        if name not in _SCHEMA[sec]:
            raise ConfigError(f"unknown key {key!r}", lineno)
        converter, _ = _SCHEMA[sec][name]
        try:
            values[key] = converter(val)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from exc

    cfg = ExperimentConfig(values)
    _validate(cfg)
    cfg.warnings = cfg.model_params().admissibility_warnings()
    return cfg


def _validate(cfg: ExperimentConfig):
    dim = cfg["grid.dim"]
    if dim not in (1, 2):
        raise ConfigError("grid.dim must be 1 or 2")
    for key in ("grid.lengths", "grid.sizes", "init.center"):
        if len(cfg[key]) != dim:
            raise ConfigError(f"{key} must have {dim} entries")
    if cfg["init.family"] not in _FAMILIES:
        raise ConfigError(
            f"init.family must be one of {_FAMILIES}, got {cfg['init.family']!r}"
        )
    for key in ("output.snapshot_stride", "output.diag_stride"):
        if cfg[key] <= 0:
            raise ConfigError(f"{key} must be positive")
    if not re.fullmatch(r"[A-Za-z0-9._-]+", cfg["output.run_id"]):
        raise ConfigError("output.run_id must be filesystem safe")
    try:
        cfg.model_params()
        cfg.solver_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse(serialize(cfg)) == cfg."""
    lines = []
    for sec in _SCHEMA:
        for key in _SCHEMA[sec]:
            val = cfg[f"{sec}.{key}"]
            if val is None:
                text = "none"
            elif isinstance(val, tuple):
                text = ", ".join(repr(v) for v in val)
            elif isinstance(val, bool):
                text = "true" if val else "false"
            elif isinstance(val, float):
                text = repr(val)
            else:
                text = str(val)
            lines.append(f"{sec}.{key} = {text}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# persistence


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_snapshots_csv(traj, path: Path):
    grid = traj.grid
    with open(path, "w", newline="") as fh:
        if grid.dim == 1:
            fh.write("t,x_index,u\n")
            for t, f in zip(traj.times, traj.fields):
                ts = _fmt(t)
                for i, v in enumerate(f.values):
                    fh.write(f"{ts},{i},{_fmt(v)}\n")
        else:
            fh.write("t,x_index,y_index,u\n")
            for t, f in zip(traj.times, traj.fields):
                ts = _fmt(t)
                vals = f.values
                for i in range(vals.shape[0]):
                    for j in range(vals.shape[1]):
                        fh.write(f"{ts},{i},{j},{_fmt(vals[i, j])}\n")


def write_diagnostics_csv(records, path: Path):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(DiagRecord.CSV_FIELDS) + "\n")
        for r in records:
            fh.write(",".join(_fmt(getattr(r, f)) for f in DiagRecord.CSV_FIELDS) + "\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def write_outputs(traj, outdir, report: dict | None = None, config_text: str | None = None):
    """Write snapshots, diagnostics, optional report and config copy,
    plus a sha256 manifest; returns the manifest dict."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    entries = {}

    snap = outdir / "snapshots.csv"
    write_snapshots_csv(traj, snap)
    entries["snapshots.csv"] = {"sha256": _sha256(snap), "rows": len(traj.times)}

    diag = outdir / "diagnostics.csv"
    write_diagnostics_csv(traj.records, diag)
    entries["diagnostics.csv"] = {"sha256": _sha256(diag), "rows": len(traj.records)}

    if report is not None:
        rp = outdir / "report.json"
        rp.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        entries["report.json"] = {"sha256": _sha256(rp)}
    if config_text is not None:
        cp = outdir / "config.cfg"
        cp.write_text(config_text)
        entries["config.cfg"] = {"sha256": _sha256(cp)}

    manifest = {
        "aborted": bool(traj.aborted),
        "abort_reason": traj.abort_reason,
        "files": entries,
    }
    (outdir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )
    return manifest


def read_diagnostics_csv(path) -> list[DiagRecord]:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    fields = DiagRecord.CSV_FIELDS
    return [DiagRecord(**dict(zip(fields, row))) for row in rows]


# ---------------------------------------------------------------------------
# pipelines


def _base_report(cfg: ExperimentConfig, traj) -> dict:
    params = cfg.model_params()
    return {
        "run_id": cfg["output.run_id"],
        "aborted": bool(traj.aborted),
        "abort_reason": traj.abort_reason,
        "n_steps": traj.n_steps,
        "mass_drift": float(
            abs(traj.records[-1].mass - traj.records[0].mass)
            / max(abs(traj.records[0].mass), 1e-300)
        ),
        "energy_residual": energy_inequality_residual(traj),
        "entropy_residual_c1": entropy_inequality_residual(traj, params),
        "warnings": cfg.warnings,
    }


def _execute(cfg: ExperimentConfig):
    grid = cfg.grid()
    params = cfg.model_params()
    traj = run(grid, params, cfg.solver_config(), cfg.initial_field(grid), cfg.run_meta())
    return grid, params, traj


def cmd_run(cfg: ExperimentConfig, outdir: Path) -> int:
    grid, params, traj = _execute(cfg)
    report = _base_report(cfg, traj)
    write_outputs(traj, outdir, report, serialize_config(cfg))
    return 3 if traj.aborted else 0


def cmd_fsp(cfg: ExperimentConfig, outdir: Path) -> int:
    grid, params, traj = _execute(cfg)
    threshold = default_support_threshold(params)
    trace = support_trace(traj, threshold, cfg["init.center"])
    fit = fit_propagation_exponent(
        trace, params, max(grid.spacings), min(cfg["grid.lengths"]) / 2.0
    )
    report = _base_report(cfg, traj)
    report.update(
        {
            "support_threshold": threshold,
            "r0": trace.r0,
            "fitted_exponent": None if fit.degenerate else fit.exponent,
            "fit_prefactor": None if fit.degenerate else fit.c0,
            "target_exponent": fit.target,
            "fit_points": fit.n_points,
            "degenerate": fit.degenerate,
        }
    )
    write_outputs(traj, outdir, report, serialize_config(cfg))
    _write_trace_csv(trace, outdir / "trace.csv")
    return 3 if traj.aborted else 0


def _write_trace_csv(trace, path: Path):
    with open(path, "w", newline="") as fh:
        fh.write("t,radius\n")
        for t, r in zip(trace.times, trace.monotone()):
            fh.write(f"{_fmt(t)},{_fmt(r)}\n")


def cmd_wtp(cfg: ExperimentConfig, outdir: Path) -> int:
    grid, params, traj = _execute(cfg)
    threshold = default_support_threshold(params)
    trace = support_trace(traj, threshold, cfg["init.center"])
    h = max(grid.spacings)
    T0 = detect_waiting_time(trace, trace.r0, 2.0, h)
    u0 = cfg.initial_field(grid)
    sup_val, predicted = wtp_condition_scan(
        u0, cfg["init.r0"], cfg["init.edge_exponent"], params, cfg["init.center"]
    )
    report = _base_report(cfg, traj)
    report.update(
        {
            "support_threshold": threshold,
            "r0": trace.r0,
            "waiting_time": T0,
            "edge_entropy_sup": sup_val,
            "predicted_waiting_scale": None if not np.isfinite(predicted) else predicted,
            "hypothesis_certified": bool(np.isfinite(sup_val) and sup_val > 0.0),
        }
    )
    write_outputs(traj, outdir, report, serialize_config(cfg))
    _write_trace_csv(trace, outdir / "trace.csv")
    return 3 if traj.aborted else 0


def cmd_sweep(cfg: ExperimentConfig, outdir: Path, rungs: int = 4) -> int:
    """Regularization ladder: gamma descends 10^{-k} first, then
    eps = delta descend 10^{-k}; consecutive runs are compared in
    C([0,T]; L2) (sup over common snapshot times of the L2 difference)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = cfg.grid()
    ladder = []
    for k in range(1, rungs + 1):
        ladder.append({"gamma": 10.0**-k, "eps": 0.0, "delta": 0.0})
    for k in range(1, rungs + 1):
        ladder.append({"gamma": 0.0, "eps": 10.0**-k, "delta": 10.0**-k})

    solver_cfg = cfg.solver_config()
    # fixed step so snapshot times line up across rungs
    solver_cfg = SolverConfig(
        dt0=solver_cfg.dt0,
        t_end=solver_cfg.t_end,
        stepper=solver_cfg.stepper,
        m_bar=solver_cfg.m_bar,
        dissipation_tol=solver_cfg.dissipation_tol,
        dealias=solver_cfg.dealias,
        u_min=solver_cfg.u_min,
        theta=solver_cfg.theta,
        grow_after=solver_cfg.grow_after,
        grow_factor=1.0,
    )
    base = cfg.model_params()
    trajs = []
    rows = []
    for member in ladder:
        params = ModelParams(
            d=base.d,
            n=base.n,
            s=base.s,
            alpha=base.alpha,
            beta=base.beta,
            **member,
        )
        traj = run(grid, params, solver_cfg, cfg.initial_field(grid), cfg.run_meta())
        trajs.append((member, traj))
        rows.append(
            {
                **member,
                "aborted": bool(traj.aborted),
                "energy_residual": energy_inequality_residual(traj),
            }
        )

    cauchy = []
    for stage in (trajs[:rungs], trajs[rungs:]):
        for (m1, t1), (m2, t2) in zip(stage, stage[1:]):
            npts = min(len(t1.times), len(t2.times))
            diff = 0.0
            for a, b in zip(t1.fields[:npts], t2.fields[:npts]):
                d = a.values - b.values
                diff = max(diff, float(np.sqrt(np.sum(d**2) * grid.cell_volume)))
            cauchy.append(
                {"from": m1, "to": m2, "sup_l2_difference": diff}
            )

    report = {
        "run_id": cfg["output.run_id"],
        "ladder": rows,
        "cauchy_differences": cauchy,
        "warnings": cfg.warnings,
    }
    (outdir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )
    with open(outdir / "cauchy.csv", "w", newline="") as fh:
        fh.write("stage,rung,sup_l2_difference\n")
        for i, row in enumerate(cauchy):
            stage = "gamma" if i < rungs - 1 else "eps-delta"
            fh.write(f"{stage},{i},{_fmt(row['sup_l2_difference'])}\n")
    aborted = any(t.aborted for _, t in trajs)
    return 3 if aborted else 0


def cmd_report(outdir: Path, cfg: ExperimentConfig | None = None) -> int:
    """Recompute report.json from an existing diagnostics.csv."""
    outdir = Path(outdir)
    diag = outdir / "diagnostics.csv"
    if not diag.exists():
        raise FileNotFoundError(f"missing {diag}")
    records = read_diagnostics_csv(diag)

    class _Stub:
        pass

    stub = _Stub()
    stub.records = records
    params = cfg.model_params() if cfg is not None else ModelParams()
    report = {
        "energy_residual": energy_inequality_residual(stub),
        "entropy_residual_c1": entropy_inequality_residual(stub, params),
        "mass_drift": float(
            abs(records[-1].mass - records[0].mass)
            / max(abs(records[0].mass), 1e-300)
        ),
        "n_records": len(records),
    }
    (outdir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )
    return 0


# ---------------------------------------------------------------------------
# verification subcommands (self-tests wired to the CLI)


def verify_spectral(seed: int = 0) -> dict:
    """Fractional Laplacian oracle equivalence and basis exactness."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        grid = build_grid(1, (1.0,), (64,))
        c = np.zeros(64)
        c[:32] = rng.standard_normal(32)
        u = SpectralField(grid, coeffs=c)
        for s in (0.25, 0.5, 0.75):
            direct = frac_laplacian(u, s)
            expected = SpectralField(grid, coeffs=grid.eigenvalues**s * c)
            err = direct.coeffs - expected.coeffs
            denom = max(np.sqrt(np.sum(expected.coeffs**2)), 1e-300)
            worst = max(worst, float(np.sqrt(np.sum(err**2)) / denom))
    grid = build_grid(1, (1.0,), (32,))
    basis_err = 0.0
    for k in (0, 1, 5):
        u = SpectralField.from_values(grid, grid.eigenfunction((k,)))
        roundtrip = SpectralField(grid, coeffs=u.coeffs).values
        basis_err = max(basis_err, float(np.max(np.abs(roundtrip - u.values))))
        off_mode = np.abs(u.coeffs.copy())
        off_mode[k] = 0.0
        basis_err = max(basis_err, float(np.max(off_mode)))
    passed = worst < 1e-12 and basis_err < 1e-10
    return {"passed": bool(passed), "multiplier_error": worst, "roundtrip_error": basis_err}


def verify_chainrule(seed: int = 0) -> dict:
    from .chainrule import ScalarFunction, default_remainder_quad, verify_chain_rule

    grid = build_grid(1, (1.0,), (128,))
    x = grid.axes[0]
    vals = 30.0 * np.maximum(0.16 - (x - 0.5) ** 2, 0.0) ** 2 + 0.5
    u = SpectralField.from_values(grid, vals)
    u = SpectralField(grid, coeffs=np.where(np.arange(128) < 42, u.coeffs, 0.0))
    quad = default_remainder_quad(256)
    rep_i = verify_chain_rule(u, ScalarFunction.square(), 0.5, quad)
    rep_j = verify_chain_rule(u, ScalarFunction.power(1.5), 1.5, quad)
    passed = (
        rep_i.max_residual < 1e-2
        and rep_j.max_residual < 1e-2
        and rep_i.sign_violations == 0
    )
    return {
        "passed": bool(passed),
        "residual_mu_half": rep_i.max_residual,
        "residual_mu_three_halves": rep_j.max_residual,
        "sign_violations": rep_i.sign_violations,
    }


def verify_lemmas(seed: int = 0) -> dict:
    from .iterlemmas import DecayFunction, gn_empirical_constant, stampacchia_extinction

    xs = np.linspace(0.0, 8.0, 400)
    vals = np.where(xs < 0.9, 1.0, 0.0)
    pred = stampacchia_extinction(DecayFunction(xs, vals), 1.0, 1.0, 2.0)
    d_ok = abs(pred.extinction_point - 4.0) < 1e-12 and pred.dominates
    grid = build_grid(1, (1.0,), (32,))
    c1, c2 = gn_empirical_constant(
        0.5, 1.0, grid, n_samples=100, rng=np.random.default_rng(seed)
    )
    gn_ok = np.isfinite(c1 + c2) and c1 >= 0 and c2 >= 0
    return {
        "passed": bool(d_ok and gn_ok),
        "extinction_point": pred.extinction_point,
        "gn_c1": c1,
        "gn_c2": c2,
    }


# ---------------------------------------------------------------------------
# entry point


def _build_parser():
    parser = argparse.ArgumentParser(prog="fracthin")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep", "fsp", "wtp"):
        p = sub.add_parser(name)
        p.add_argument("config")
        p.add_argument("--outdir", default=None)
    for name in ("verify-spectral", "verify-chainrule", "verify-lemmas"):
        p = sub.add_parser(name)
        p.add_argument("--seed", type=int, default=0)
    p = sub.add_parser("report")
    p.add_argument("outdir")
    p.add_argument("--config", default=None)
    return parser


def dispatch(argv) -> int:
    """Run one subcommand; returns the process exit code.

    0 success, 2 config error, 3 solver abort, 4 verification failure;
    failures emit a machine-readable JSON object on stderr.
    """
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    try:
        if args.command in ("run", "sweep", "fsp", "wtp"):
            text = Path(args.config).read_text()
            cfg = parse_config(text)
            for w in cfg.warnings:
                print(f"warning: {w}", file=sys.stderr)
            outdir = Path(
                args.outdir
                if args.outdir is not None
                else Path(cfg["output.outdir"]) / cfg["output.run_id"]
            )
            handler = {
                "run": cmd_run,
                "sweep": cmd_sweep,
                "fsp": cmd_fsp,
                "wtp": cmd_wtp,
            }[args.command]
            return handler(cfg, outdir)
        if args.command == "report":
            cfg = None
            if args.config is not None:
                cfg = parse_config(Path(args.config).read_text())
            return cmd_report(Path(args.outdir), cfg)
        verifier = {
            "verify-spectral": verify_spectral,
            "verify-chainrule": verify_chainrule,
            "verify-lemmas": verify_lemmas,
        }[args.command]
        result = verifier(args.seed)
        print(json.dumps(result, indent=2, sort_keys=True))
        return 0 if result["passed"] else 4
    except ConfigError as exc:
        print(json.dumps({"error": str(exc), "kind": "config", "line": exc.line}), file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(json.dumps({"error": str(exc), "kind": "io"}), file=sys.stderr)
        return 2
    except Exception as exc:  # surfaced, never swallowed silently
        print(json.dumps({"error": str(exc), "kind": type(exc).__name__}), file=sys.stderr)
        return 4


def main(argv=None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
