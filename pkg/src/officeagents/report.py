"""Plain-text and JSON report tables for the evaluation suites.

Each builder mirrors one published table shape: query rewrite (relate_acc /
ROUGE / BLEU / ground-truth), tool recall (single- and multi-intent columns at
top3/top5), planning (per-clause ROUGE / sub_tasks_num-acc / API-acc), and
solving (strict accuracy on the business and context slices).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import metrics


@dataclass
class Report:
    title: str
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        def fmt(value) -> str:
            if isinstance(value, float):
                return f"{value:.4f}"
            return str(value)

        table = [self.columns] + [[fmt(v) for v in row] for row in self.rows]
        widths = [max(len(r[i]) for r in table) for i in range(len(self.columns))]
        lines = [self.title, "-" * len(self.title)]
        for r_no, row in enumerate(table):
            lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
            if r_no == 0:
                lines.append("  ".join("=" * w for w in widths))
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "columns": self.columns,
            "rows": self.rows,
            "notes": self.notes,
        }


def build_rewrite_report(scores: dict, backend: str = "reference", version: str = "v0") -> Report:
    return Report(
        title="Query Rewrite Evaluation",
        columns=["Backend", "Data Version", "relate_acc", "ROUGE", "BLEU", "ground-truth"],
        rows=[
            [
                backend,
                version,
                scores["relate_acc"],
                scores["rouge"],
                scores["bleu"],
                f"{scores['ground_truth_mean']:.2f}±{scores['ground_truth_spread']:.2f}",
            ]
        ],
    )


def build_recall_report(rows: dict[str, dict[str, float]], backend: str = "hash-embedder") -> Report:
    """rows: version -> {single_top3, single_top5, multi_top3, multi_top5}."""
    report = Report(
        title="Tool Recall Evaluation",
        columns=[
            "Backend",
            "Data Version",
            "Single-Intent top3",
            "Single-Intent top5",
            "Multi-intent top3",
            "Multi-intent top5",
        ],
    )
    for version, values in rows.items():
        report.rows.append(
            [
                backend,
                version,
                values["single_top3"],
                values["single_top5"],
                values["multi_top3"],
                values["multi_top5"],
            ]
        )
    return report


def planner_clause_rouge(pred_plans, gold_plans) -> float:
    """Per-clause ROUGE against the gold clause texts, averaged; unaligned
    clauses score zero."""
    scores = []
    for pred, gold in zip(pred_plans, gold_plans):
        p = list(pred.sub_tasks) if pred else []
        g = list(gold.sub_tasks) if gold else []
        if not g and not p:
            continue
        for i in range(max(len(p), len(g))):
            if i < len(p) and i < len(g):
                scores.append(metrics.rouge_l(g[i].text, p[i].text))
            else:
                scores.append(0.0)
    return sum(scores) / len(scores) if scores else 1.0


def build_planner_report(scores: dict, backend: str = "reference", version: str = "v0") -> Report:
    return Report(
        title="Planner Evaluation",
        columns=["Backend", "Data Version", "ROUGE", "sub_tasks_num-acc", "API-acc"],
        rows=[
            [
                backend,
                version,
                scores["planner_rouge"],
                scores["sub_tasks_num_acc"],
                scores["api_acc"],
            ]
        ],
    )


def build_solver_report(scores: dict, backend: str = "reference", version: str = "v0") -> Report:
    return Report(
        title="Solver Evaluation",
        columns=[
            "Backend",
            "Data Version",
            "Total Data",
            "Business Evaluation",
            "Business Test Set",
            "Context Test Set",
        ],
        rows=[
            [
                backend,
                version,
                scores.get("total", 0),
                scores["strict_accuracy"],
                scores.get("strict_business", scores["strict_accuracy"]),
                scores.get("strict_context", scores["strict_accuracy"]),
            ]
        ],
    )


def render_reports(reports: list[Report]) -> str:
    if not reports:
        raise ValueError("no metrics were computed; nothing to report")
    return "\n\n".join(r.to_text() for r in reports)


def reports_to_json(reports: list[Report]) -> str:
    if not reports:
        raise ValueError("no metrics were computed; nothing to report")
    return json.dumps([r.to_dict() for r in reports], indent=2)
