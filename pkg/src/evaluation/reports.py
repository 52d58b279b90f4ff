"""
Evaluation report assembly and markdown rendering.
"""

from typing import Any, Dict, List, Optional

from .evaluator import BreakdownReport, EvalSummary

REPORT_KIND = "evaluation"


def evaluation_report(
    summary: EvalSummary,
    metric: str = "fm",
    breakdown: Optional[BreakdownReport] = None,
    corrections: Optional[Dict[str, Any]] = None,
    second_run: Optional[EvalSummary] = None,
) -> Dict[str, Any]:
    """
    Build the JSON evaluation report.

    Args:
        summary: Scored run
        metric: Primary metric ("em" or "fm")
        breakdown: Two-run breakdown, when a second run was scored
        corrections: Correction details (diagnostics, flips, uncorrected rates)
        second_run: The second scored run behind ``breakdown``

    Returns:
        JSON-serializable report
    """
    report: Dict[str, Any] = {
        "kind": REPORT_KIND,
        "metric": metric,
        "run": summary.to_dict(),
    }
    if second_run is not None:
        report["second_run"] = second_run.to_dict()
    if breakdown is not None:
        report["breakdown"] = breakdown.to_dict()
    if corrections is not None:
        report["corrections"] = corrections
    return report


def _pct(rate: float) -> str:
    return f"{100 * rate:.2f}%"


def _summary_lines(title: str, run: Dict[str, Any]) -> List[str]:
    return [
        f"## {title}",
        "",
        "| Examples | EM | FM |",
        "|---:|---:|---:|",
        f"| {run['count']} | {_pct(run['em_rate'])} | {_pct(run['fm_rate'])} |",
        "",
    ]


def render_evaluation_markdown(report: Dict[str, Any]) -> str:
    """Render a JSON evaluation report as a markdown summary."""
    lines = [f"# Evaluation report (primary metric: {report['metric'].upper()})", ""]
    lines += _summary_lines("Run A" if "second_run" in report else "Run", report["run"])
    if "second_run" in report:
        lines += _summary_lines("Run B", report["second_run"])

    if "breakdown" in report:
        cells = report["breakdown"]
        lines += [
            f"## Breakdown ({cells['metric'].upper()})",
            "",
            "| | B correct | B wrong |",
            "|---|---:|---:|",
            f"| **A correct** | {cells['both_correct']} | {cells['only_a']} |",
            f"| **A wrong** | {cells['only_b']} | {cells['both_wrong']} |",
            "",
            f"Total: {cells['total']}",
            "",
        ]

    if "corrections" in report:
        corrections = report["corrections"]
        lines += [
            "## Annotation corrections",
            "",
            f"- Corrections applied: {corrections['applied']}",
            f"- EM before corrections: {_pct(corrections['em_rate_before'])}",
            f"- FM before corrections: {_pct(corrections['fm_rate_before'])}",
            f"- Gained: {', '.join(corrections['gained']) or 'none'}",
            f"- Lost: {', '.join(corrections['lost']) or 'none'}",
        ]
        for message in corrections.get("diagnostics", []):
            lines.append(f"- Warning: {message}")
        lines.append("")

    unpredicted = report["run"].get("unpredicted_ids", [])
    if unpredicted:
        lines += [f"{len(unpredicted)} gold ids had no prediction.", ""]

    return "\n".join(lines)
