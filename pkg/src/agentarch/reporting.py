"""Deterministic report emission: CSV, markdown, and plot-data files.

Every emitted file starts with a comment header carrying the seed, the
config fingerprint, and the coefficient digest, so any output can be traced
back to the exact inputs that produced it. Formatting is fixed-width
decimal, so re-emitting the same report is byte-identical.
"""

from __future__ import annotations

from pathlib import Path

from .experiments import ExperimentReport
from .metrics import METRIC_NAMES, summaries_markdown, summary_csv_row

FORMATS = ("csv", "markdown", "plotdata")


def _header_lines(report: ExperimentReport, comment: str = "#") -> list[str]:
    return [
        f"{comment} experiment={report.experiment}",
        f"{comment} seed={report.seed}",
        f"{comment} config_fingerprint={report.fingerprint}",
        f"{comment} coefficients={report.coefficients_digest}",
    ]


def _write(path: Path, lines: list[str]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def _emit_csv(report: ExperimentReport, out_dir: Path) -> list[Path]:
    summary_lines = _header_lines(report)
    summary_lines.append("arch_id," + ",".join(METRIC_NAMES))
    for row in report.rows:
        summary_lines.append(",".join(summary_csv_row(row)))
    summary_path = _write(out_dir / f"{report.experiment}_summary.csv", summary_lines)

    verdict_lines = _header_lines(report)
    verdict_lines.append("kind,profile_id,metric,target,actual,tolerance,passed")
    for v in report.verdicts:
        verdict_lines.append(
            f"cell,{v.profile_id},{v.metric},{v.target:.4f},{v.actual:.4f},"
            f"{v.tolerance:.4f},{int(v.passed)}"
        )
    for c in report.checks:
        verdict_lines.append(
            f"check,{c.name},,{c.lower:.4f},{c.actual:.4f},{c.upper:.4f},{int(c.passed)}"
        )
    verdict_path = _write(out_dir / f"{report.experiment}_verdicts.csv", verdict_lines)
    return [summary_path, verdict_path]


def _emit_markdown(report: ExperimentReport, out_dir: Path) -> list[Path]:
    lines = [f"<!-- {line[2:]} -->" for line in _header_lines(report)]
    lines.append("")
    lines.append(f"## {report.experiment.capitalize()} results")
    lines.append("")
    lines.append(summaries_markdown(list(report.rows), report.labels))
    lines.append("")
    if report.verdicts:
        lines.append("### Target verdicts")
        lines.append("")
        for v in report.verdicts:
            status = "PASS" if v.passed else "FAIL"
            lines.append(
                f"- [{status}] {v.profile_id} {v.metric}: "
                f"{v.actual:.2f} vs {v.target:.2f} (tol {v.tolerance:.2f})"
            )
        lines.append("")
    if report.checks:
        lines.append("### Structural checks")
        lines.append("")
        for c in report.checks:
            status = "PASS" if c.passed else "FAIL"
            detail = f" ({c.detail})" if c.detail else ""
            lines.append(
                f"- [{status}] {c.name}: {c.actual:.3f} in "
                f"[{c.lower:.3f}, {c.upper:.3f}]{detail}"
            )
    return [_write(out_dir / f"{report.experiment}_table.md", lines)]


def _emit_plotdata(report: ExperimentReport, out_dir: Path) -> list[Path]:
    plot = report.extras.get("plot")
    if not plot:
        raise ValueError(f"report {report.experiment!r} carries no plot data")
    paths = []
    for figure, per_family in (
        ("safe_success", plot["safe_success"]),
        ("mean_cost", plot["mean_cost"]),
    ):
        lines = _header_lines(report)
        lines.append(f"# figure={figure}")
        for family in sorted(per_family):
            lines.append(f"# family={family}")
            for n, value in per_family[family]:
                lines.append(f"{n} {value:.4f}")
        paths.append(_write(out_dir / f"sweep_{figure}.dat", lines))
    return paths


def emit_report(report: ExperimentReport, fmt: str, out_dir: str | Path) -> list[Path]:
    """Write the report in one format; returns the created paths."""
    out_dir = Path(out_dir)
    if fmt == "csv":
        return _emit_csv(report, out_dir)
    if fmt == "markdown":
        return _emit_markdown(report, out_dir)
    if fmt == "plotdata":
        return _emit_plotdata(report, out_dir)
    raise ValueError(f"unknown report format: {fmt!r} (expected one of {FORMATS})")


def save_report_json(report: ExperimentReport, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{report.experiment}_report.json"
    path.write_text(report.to_json() + "\n")
    return path
