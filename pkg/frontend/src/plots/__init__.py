"""Post-hoc report generation for simulation run directories.

Turns the diagnostics/trace CSVs and report.json written by the
``fracthin`` CLI into PNG figures and a markdown summary. Everything
here is a pure function of the files on disk; nothing imports the
simulator.
"""

from .io import (
    SchemaError,
    read_cauchy,
    read_config,
    read_diagnostics,
    read_report,
    read_snapshots,
    read_trace,
)
from .report import (
    FIGURE_KINDS,
    FspFitResult,
    RunReportSpec,
    render_fsp_fit,
    render_run_report,
)

__all__ = [
    "FIGURE_KINDS",
    "FspFitResult",
    "RunReportSpec",
    "SchemaError",
    "read_cauchy",
    "read_config",
    "read_diagnostics",
    "read_report",
    "read_snapshots",
    "read_trace",
    "render_fsp_fit",
    "render_run_report",
]
