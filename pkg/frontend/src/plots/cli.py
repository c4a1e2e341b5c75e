"""Console entry point: ``fracthin-report <dir>``.

Auto-detects which figures a run directory supports (trace.csv enables
the support plot and the fitted-slope figure, cauchy.csv enables the
ladder plot) and writes PNGs plus summary.md next to the inputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .io import SchemaError
from .report import RunReportSpec, render_fsp_fit, render_run_report


def build_spec(indir: Path, figures=None) -> RunReportSpec:
    if figures is None:
        figures = ["profiles", "energy-entropy-decay"]
        if (indir / "trace.csv").exists():
            figures.append("support-loglog")
        if (indir / "cauchy.csv").exists():
            figures.append("sweep-cauchy")
    return RunReportSpec(indir=indir, figures=tuple(figures))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracthin-report",
        description="Render figures and a markdown summary from a run directory.",
    )
    parser.add_argument("indir", type=Path, help="run output directory")
    parser.add_argument(
        "--figures",
        nargs="+",
        default=None,
        metavar="KIND",
        help="subset of: profiles energy-entropy-decay support-loglog sweep-cauchy",
    )
    args = parser.parse_args(argv)

    try:
        spec = build_spec(args.indir, args.figures)
        result = render_run_report(spec)
        written = list(result["files"])
        if (args.indir / "trace.csv").exists() and (
            args.indir / "report.json"
        ).exists():
            written += render_fsp_fit(spec).files
    except (SchemaError, ValueError, OSError) as exc:
        print(f"fracthin-report: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
