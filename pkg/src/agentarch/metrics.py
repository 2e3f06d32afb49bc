"""Aggregation of trial outcomes into the ten per-run metrics.

Means use exact summation (`math.fsum`) and the 95th percentile uses the
nearest-rank rule, so a summary is bit-identical under any permutation of
its input trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import OutcomeSet, TaskOutcome

METRIC_NAMES = (
    "functional_pct",
    "safe_pct",
    "automated_safe_pct",
    "violations_per_1k",
    "poison_per_1k",
    "escalation_pct",
    "audit_pct",
    "mean_handoffs",
    "mean_cost",
    "p95_latency",
)

# Column headers in published-table order.
METRIC_LABELS = {
    "functional_pct": "Functional success %",
    "safe_pct": "Safe success %",
    "automated_safe_pct": "Automated safe %",
    "violations_per_1k": "Violations /1k",
    "poison_per_1k": "Memory poison /1k",
    "escalation_pct": "Escalations %",
    "audit_pct": "Audit coverage %",
    "mean_handoffs": "Mean handoffs",
    "mean_cost": "Mean cost",
    "p95_latency": "P95 latency",
}

# Metrics where larger is better; used for rankings.
HIGHER_IS_BETTER = {
    "functional_pct": True,
    "safe_pct": True,
    "automated_safe_pct": True,
    "violations_per_1k": False,
    "poison_per_1k": False,
    "escalation_pct": False,
    "audit_pct": True,
    "mean_handoffs": False,
    "mean_cost": False,
    "p95_latency": False,
}


@dataclass(frozen=True)
class MetricsSummary:
    arch_id: str
    n_tasks: int
    functional_pct: float
    safe_pct: float
    automated_safe_pct: float
    violations_per_1k: float
    poison_per_1k: float
    escalation_pct: float
    audit_pct: float
    mean_handoffs: float
    mean_cost: float
    p95_latency: float

    def metric(self, name: str) -> float:
        if name not in METRIC_NAMES:
            raise ValueError(f"unknown metric: {name!r}")
        return getattr(self, name)


def nearest_rank_p95(values: Sequence[float]) -> float:
    """95th percentile by the nearest-rank rule (no interpolation)."""
    ordered = sorted(float(v) for v in values)
    if not ordered:
        raise ValueError("no values")
    rank = math.ceil(0.95 * len(ordered))
    return ordered[rank - 1]


def aggregate(outcomes: OutcomeSet | Iterable[TaskOutcome]) -> MetricsSummary:
    """Collapse one architecture's trials into a MetricsSummary."""
    if isinstance(outcomes, OutcomeSet):
        rows = None
        n = len(outcomes)
        arch_ids = {outcomes.arch_id} if n else set()
    else:
        rows = list(outcomes)
        n = len(rows)
        arch_ids = {r.arch_id for r in rows}
    if n == 0:
        raise ValueError("no trials")
    if len(arch_ids) != 1:
        raise ValueError(f"mixed arch_id in outcomes: {sorted(arch_ids)}")
    arch_id = arch_ids.pop()

    if rows is None:
        success = int(np.count_nonzero(outcomes.success))
        safe = int(np.count_nonzero(outcomes.safe))
        auto = int(np.count_nonzero(outcomes.automated_safe))
        violations = int(np.count_nonzero(outcomes.violation))
        poisoned = int(np.count_nonzero(outcomes.poisoned))
        escalated = int(np.count_nonzero(outcomes.escalated))
        audited = int(np.count_nonzero(outcomes.audit_covered))
        handoff_sum = int(outcomes.handoffs.sum())
        cost_sum = math.fsum(outcomes.cost.tolist())
        rank = math.ceil(0.95 * n)
        p95 = float(np.sort(outcomes.latency, kind="stable")[rank - 1])
    else:
        success = sum(r.success for r in rows)
        safe = sum(r.safe for r in rows)
        auto = sum(r.automated_safe for r in rows)
        violations = sum(r.violation for r in rows)
        poisoned = sum(r.poisoned for r in rows)
        escalated = sum(r.escalated for r in rows)
        audited = sum(r.audit_covered for r in rows)
        handoff_sum = sum(r.handoffs for r in rows)
        cost_sum = math.fsum(r.cost for r in rows)
        p95 = nearest_rank_p95([r.latency for r in rows])

    return MetricsSummary(
        arch_id=arch_id,
        n_tasks=n,
        functional_pct=100.0 * success / n,
        safe_pct=100.0 * safe / n,
        automated_safe_pct=100.0 * auto / n,
        violations_per_1k=1000.0 * violations / n,
        poison_per_1k=1000.0 * poisoned / n,
        escalation_pct=100.0 * escalated / n,
        audit_pct=100.0 * audited / n,
        mean_handoffs=handoff_sum / n,
        mean_cost=cost_sum / n,
        p95_latency=p95,
    )


@dataclass(frozen=True)
class RankingReport:
    """Per-metric orderings and pairwise deltas across runs."""

    rankings: dict[str, tuple[tuple[str, float], ...]]
    deltas: dict[tuple[str, str], dict[str, float]]
    safe_success_order: tuple[str, ...]
    expected_order: tuple[str, ...] | None
    order_matches: bool | None


def compare(
    runs: Sequence[MetricsSummary],
    expected_safe_order: Sequence[str] | None = None,
) -> RankingReport:
    """Rank runs per metric and check the safe-success ordering, if given."""
    if len(runs) < 2:
        raise ValueError("need at least two runs to compare")
    rankings = {}
    for name in METRIC_NAMES:
        ordered = sorted(
            ((r.arch_id, r.metric(name)) for r in runs),
            key=lambda pair: pair[1],
            reverse=HIGHER_IS_BETTER[name],
        )
        rankings[name] = tuple(ordered)

    deltas: dict[tuple[str, str], dict[str, float]] = {}
    for i, a in enumerate(runs):
        for b in runs[i + 1 :]:
            deltas[(a.arch_id, b.arch_id)] = {
                name: a.metric(name) - b.metric(name) for name in METRIC_NAMES
            }

    safe_order = tuple(arch for arch, _ in rankings["safe_pct"])
    expected = tuple(expected_safe_order) if expected_safe_order else None
    matches = (safe_order == expected) if expected else None
    return RankingReport(
        rankings=rankings,
        deltas=deltas,
        safe_success_order=safe_order,
        expected_order=expected,
        order_matches=matches,
    )


def summary_csv_row(summary: MetricsSummary) -> list[str]:
    return [summary.arch_id] + [f"{summary.metric(m):.4f}" for m in METRIC_NAMES]


def summaries_markdown(
    rows: Sequence[MetricsSummary], names: dict[str, str] | None = None
) -> str:
    """Aligned markdown table mirroring the published column order."""
    headers = ["Architecture"] + [METRIC_LABELS[m] for m in METRIC_NAMES]
    body = []
    for s in rows:
        label = names.get(s.arch_id, s.arch_id) if names else s.arch_id
        body.append([label] + [f"{s.metric(m):.2f}" for m in METRIC_NAMES])
    widths = [
        max(len(headers[c]), *(len(r[c]) for r in body)) if body else len(headers[c])
        for c in range(len(headers))
    ]
    def fmt(row):
        cells = [row[c].ljust(widths[c]) if c == 0 else row[c].rjust(widths[c]) for c in range(len(row))]
        return "| " + " | ".join(cells) + " |"

    sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    return "\n".join([fmt(headers), sep] + [fmt(r) for r in body])
