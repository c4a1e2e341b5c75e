"""Figure and summary rendering for run directories.

Filenames are fixed so repeated invocations overwrite deterministically:
profiles.png, energy_entropy.png, support_loglog.png, sweep_cauchy.png,
summary.md, fsp_fit.png, fsp_summary.md.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (
    SchemaError,
    read_cauchy,
    read_config,
    read_diagnostics,
    read_report,
    read_snapshots,
    read_trace,
    reference_exponent,
)

FIGURE_KINDS = (
    "profiles",
    "energy-entropy-decay",
    "support-loglog",
    "sweep-cauchy",
)

_MAX_OVERLAY = 12  # snapshot curves per profile figure


@dataclass
class RunReportSpec:
    """What to render from one run directory."""

    indir: Path
    figures: tuple[str, ...] = ("profiles", "energy-entropy-decay")
    fmt: str = "png+md"

    def __post_init__(self):
        self.indir = Path(self.indir)
        self.figures = tuple(self.figures)
        for fig in self.figures:
            if fig not in FIGURE_KINDS:
                raise ValueError(f"unknown figure kind {fig!r}")
        if self.fmt != "png+md":
            raise ValueError("only the png+md output format is supported")


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _render_profiles(indir: Path, out: Path) -> None:
    times, profiles, dim = read_snapshots(indir / "snapshots.csv")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if dim == 1:
        stride = max(1, len(times) // _MAX_OVERLAY)
        for i in range(0, len(times), stride):
            x = np.arange(profiles[i].size)
            ax.plot(x, profiles[i], lw=1.0, label=f"t = {times[i]:.3g}")
        ax.set_xlabel("grid index")
        ax.set_ylabel("u")
        ax.legend(fontsize=7, ncol=2)
        ax.set_title("solution snapshots")
    else:
        n = int(round(np.sqrt(profiles[-1].size)))
        im = ax.imshow(profiles[-1].reshape(n, -1), origin="lower")
        fig.colorbar(im, ax=ax)
        ax.set_title(f"final solution, t = {times[-1]:.3g}")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def _render_energy_entropy(diag, out: Path) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(8.0, 3.4))
    axes[0].plot(diag["t"], diag["energy_hs"], color="tab:blue")
    axes[0].set_xlabel("t")
    axes[0].set_ylabel("fractional Dirichlet energy")
    axes[1].plot(diag["t"], diag["entropy_alpha"], color="tab:orange")
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("alpha-entropy")
    for ax in axes:
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def _render_support_loglog(indir: Path, out: Path) -> None:
    times, radii = read_trace(indir / "trace.csv")
    r0 = radii[0]
    growth = radii - r0
    mask = (growth > 0) & (times > 0)
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    if np.any(mask):
        ax.loglog(times[mask], growth[mask], "o", ms=3)
        ax.set_ylabel("d(t) - r0")
    else:
        ax.plot(times, radii, "-o", ms=3)
        ax.set_ylabel("d(t)")
    ax.set_xlabel("t")
    ax.set_title("support growth")
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def _render_sweep_cauchy(indir: Path, out: Path) -> None:
    stages, rungs, diffs = read_cauchy(indir / "cauchy.csv")
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    for stage in dict.fromkeys(stages):
        sel = [i for i, s in enumerate(stages) if s == stage]
        ax.semilogy(rungs[sel], diffs[sel], "-o", label=stage)
    ax.set_xlabel("ladder rung")
    ax.set_ylabel("sup-in-time L2 difference")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)


def render_run_report(spec: RunReportSpec) -> dict:
    """Render the requested figures plus summary.md.

    Returns a dict with the written file paths and the energy/entropy
    curve endpoints, which are echoed verbatim in summary.md.
    """
    indir = spec.indir
    if not indir.is_dir():
        raise SchemaError(f"missing run directory {indir}")
    diag = read_diagnostics(indir / "diagnostics.csv")
    files: list[Path] = []

    if "profiles" in spec.figures:
        out = indir / "profiles.png"
        _render_profiles(indir, out)
        files.append(out)
    if "energy-entropy-decay" in spec.figures:
        out = indir / "energy_entropy.png"
        _render_energy_entropy(diag, out)
        files.append(out)
    if "support-loglog" in spec.figures:
        out = indir / "support_loglog.png"
        _render_support_loglog(indir, out)
        files.append(out)
    if "sweep-cauchy" in spec.figures:
        out = indir / "sweep_cauchy.png"
        _render_sweep_cauchy(indir, out)
        files.append(out)

    energy_ends = (float(diag["energy_hs"][0]), float(diag["energy_hs"][-1]))
    entropy_ends = (float(diag["entropy_alpha"][0]), float(diag["entropy_alpha"][-1]))
    report_path = indir / "report.json"
    report = read_report(report_path) if report_path.exists() else {}

    lines = ["# Run report", ""]
    if report:
        lines += ["## Report values", ""]
        for key in sorted(report):
            val = report[key]
            if isinstance(val, float):
                val = _fmt(val)
            lines.append(f"- {key}: {val}")
        lines.append("")
    lines += [
        "## Diagnostics endpoints",
        "",
        f"- t range: {_fmt(diag['t'][0])} .. {_fmt(diag['t'][-1])}",
        f"- energy_hs: {_fmt(energy_ends[0])} .. {_fmt(energy_ends[1])}",
        f"- entropy_alpha: {_fmt(entropy_ends[0])} .. {_fmt(entropy_ends[1])}",
        f"- mass: {_fmt(diag['mass'][0])} .. {_fmt(diag['mass'][-1])}",
        "",
        "## Figures",
        "",
    ]
    lines += [f"- ![{p.stem}]({p.name})" for p in files]
    summary = indir / "summary.md"
    summary.write_text("\n".join(lines) + "\n")
    files.append(summary)

    return {
        "files": files,
        "energy_endpoints": energy_ends,
        "entropy_endpoints": entropy_ends,
    }


@dataclass
class FspFitResult:
    """What render_fsp_fit drew and annotated."""

    files: list[Path]
    degenerate: bool
    annotated_slope: float | None = None
    reference_slope: float | None = None
    waiting_time_marker: float | None = None
    extras: dict = field(default_factory=dict)


def render_fsp_fit(spec: RunReportSpec) -> FspFitResult:
    """Log-log support-growth figure with the fitted and target slopes.

    The annotated slope is the fitted exponent from report.json; the
    reference slope 1/(n d + 2 (s + 1)) is recomputed from config.cfg.
    A degenerate trace (no usable growth window) produces a
    waiting-time-only figure with a vertical marker at the measured T0.
    """
    indir = spec.indir
    times, radii = read_trace(indir / "trace.csv")
    report = read_report(indir / "report.json")
    config = read_config(indir / "config.cfg")
    ref_slope = reference_exponent(config)
    r0 = float(report.get("r0", radii[0]))
    fitted = report.get("fitted_exponent")
    degenerate = bool(report.get("degenerate", fitted is None))
    waiting = report.get("waiting_time")

    out = indir / "fsp_fit.png"
    md = indir / "fsp_summary.md"
    fig, ax = plt.subplots(figsize=(5.5, 4.2))

    if degenerate or fitted is None:
        ax.plot(times, radii, "-o", ms=3, label="d(t)")
        if waiting is None:
            beyond = np.flatnonzero(radii > r0)
            waiting = float(times[beyond[0]]) if beyond.size else float(times[-1])
        ax.axvline(waiting, color="tab:red", ls="--", label=f"T0 = {waiting:.6g}")
        ax.set_xlabel("t")
        ax.set_ylabel("d(t)")
        ax.set_title("waiting time (degenerate growth trace)")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out, dpi=120)
        plt.close(fig)
        md.write_text(
            "# Support growth report\n\n"
            "- degenerate trace: waiting-time-only figure\n"
            f"- waiting time T0: {_fmt(waiting)}\n"
            f"- reference slope: {_fmt(ref_slope)}\n"
        )
        return FspFitResult(
            files=[out, md],
            degenerate=True,
            reference_slope=ref_slope,
            waiting_time_marker=float(waiting),
        )

    fitted = float(fitted)
    growth = np.maximum.accumulate(radii) - r0
    mask = (growth > 0) & (times > 0)
    t_fit = times[mask]
    ax.loglog(t_fit, growth[mask], "o", ms=3, label="d(t) - r0")
    c0 = report.get("fit_prefactor")
    if c0 is None:
        # anchor the fitted line through the median data point
        mid = len(t_fit) // 2
        c0 = growth[mask][mid] / t_fit[mid] ** fitted
    c0 = float(c0)
    ax.loglog(t_fit, c0 * t_fit**fitted, "-", label=f"fitted slope {fitted:.6g}")
    anchor = np.sqrt(t_fit[0] * t_fit[-1])
    ref_c = c0 * anchor ** (fitted - ref_slope)
    ax.loglog(
        t_fit, ref_c * t_fit**ref_slope, "--", label=f"reference slope {ref_slope:.6g}"
    )
    if waiting:
        ax.axvline(waiting, color="tab:red", ls=":", label=f"T0 = {waiting:.6g}")
    ax.set_xlabel("t")
    ax.set_ylabel("d(t) - r0")
    ax.set_title("support growth, log-log")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    plt.close(fig)

    md.write_text(
        "# Support growth report\n\n"
        f"- annotated fitted slope: {_fmt(fitted)}\n"
        f"- reference slope: {_fmt(ref_slope)}\n"
        f"- fit prefactor: {_fmt(c0)}\n"
        + (f"- waiting time T0: {_fmt(waiting)}\n" if waiting else "")
    )
    return FspFitResult(
        files=[out, md],
        degenerate=False,
        annotated_slope=fitted,
        reference_slope=ref_slope,
        waiting_time_marker=float(waiting) if waiting else None,
    )
