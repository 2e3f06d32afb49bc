"""The four experiment drivers and their verdict logic.

Each driver simulates its profile list over the shared task population,
aggregates per-architecture summaries, and grades every embedded target
cell as pass/fail at its stated tolerance. Structural claims that are not
single-cell comparisons (orderings, ablation ratios, monotonicity) are
graded as named checks with explicit bounds.
"""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .calibration import CalibrationTarget
from .config import ConfigError, HarnessConfig
from .metrics import MetricsSummary, aggregate, compare
from .model import (
    CoefficientSet,
    OutcomeSet,
    coefficients_digest,
    concat_outcomes,
    simulate_task_set,
)
from .profiles import (
    ABLATION_LABELS,
    AblationTag,
    ArchitectureProfile,
    SWEEP_AGENT_COUNTS,
    ablated,
    builtin_profiles,
    sweep_profile,
)
from .tasks import TaskColumns, TaskSet, generate_task_set, stress_subset

EXPECTED_SAFE_ORDER = ("a4", "a2", "a3", "a0", "a1")


@dataclass(frozen=True)
class Verdict:
    experiment: str
    profile_id: str
    metric: str
    target: float
    actual: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class StructuralCheck:
    name: str
    actual: float
    lower: float
    upper: float
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ExperimentReport:
    experiment: str
    seed: int
    fingerprint: str
    coefficients_digest: str
    rows: tuple[MetricsSummary, ...]
    verdicts: tuple[Verdict, ...]
    checks: tuple[StructuralCheck, ...] = ()
    labels: dict[str, str] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts) and all(c.passed for c in self.checks)

    def to_json(self) -> str:
        payload = {
            "experiment": self.experiment,
            "seed": self.seed,
            "fingerprint": self.fingerprint,
            "coefficients_digest": self.coefficients_digest,
            "rows": [dataclasses.asdict(r) for r in self.rows],
            "verdicts": [dataclasses.asdict(v) for v in self.verdicts],
            "checks": [dataclasses.asdict(c) for c in self.checks],
            "labels": self.labels,
            "extras": self.extras,
        }
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentReport":
        raw = json.loads(text)
        return cls(
            experiment=raw["experiment"],
            seed=raw["seed"],
            fingerprint=raw["fingerprint"],
            coefficients_digest=raw["coefficients_digest"],
            rows=tuple(MetricsSummary(**r) for r in raw["rows"]),
            verdicts=tuple(Verdict(**v) for v in raw["verdicts"]),
            checks=tuple(StructuralCheck(**c) for c in raw["checks"]),
            labels=raw.get("labels", {}),
            extras=raw.get("extras", {}),
        )


def load_experiment_targets(
    path: str | Path | None = None,
) -> dict[str, tuple[CalibrationTarget, ...]]:
    """Load the embedded target table, grouped by experiment."""
    import csv as _csv

    if path:
        fh = open(path, newline="")
    else:
        fh = resources.files("agentarch.data").joinpath("targets.csv").open()
    grouped: dict[str, list[CalibrationTarget]] = {}
    with fh:
        reader = _csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        if [h.strip() for h in header] != [
            "experiment", "profile_id", "metric", "value", "weight", "tolerance",
        ]:
            raise ConfigError("targets file must have columns: experiment, profile_id, metric, value, weight, tolerance")
        for row in reader:
            if not row:
                continue
            experiment, pid, metric, value, weight, tolerance = row[:6]
            target = CalibrationTarget(
                profile_id=pid.strip(),
                metric=metric.strip(),
                value=float(value),
                weight=float(weight),
                tolerance=float(tolerance),
                context="stress" if experiment.strip() == "stress" else "full",
            )
            target.validate()
            grouped.setdefault(experiment.strip(), []).append(target)
    return {k: tuple(v) for k, v in grouped.items()}


def calibration_targets(path: str | Path | None = None) -> tuple[CalibrationTarget, ...]:
    """Flatten the embedded target table for the calibrator."""
    grouped = load_experiment_targets(path)
    out: list[CalibrationTarget] = []
    for experiment in sorted(grouped):
        out.extend(grouped[experiment])
    return tuple(out)


def _slice_columns(cols: TaskColumns, lo: int, hi: int) -> TaskColumns:
    return TaskColumns(
        **{
            f.name: getattr(cols, f.name)[lo:hi]
            for f in dataclasses.fields(TaskColumns)
        }
    )


def _simulate_profile(
    cols: TaskColumns,
    profile: ArchitectureProfile,
    coeffs: CoefficientSet,
    seed: int,
    jobs: int,
    pool: ThreadPoolExecutor | None,
) -> OutcomeSet:
    n = len(cols.ids)
    if jobs <= 1 or pool is None or n < 2 * jobs:
        return simulate_task_set(cols, profile, coeffs, seed)
    bounds = [(i * n) // jobs for i in range(jobs + 1)]
    chunks = [
        _slice_columns(cols, lo, hi)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    futures = [pool.submit(simulate_task_set, c, profile, coeffs, seed) for c in chunks]
    return concat_outcomes([f.result() for f in futures])


def _simulate_all(
    cols: TaskColumns,
    profiles: list[ArchitectureProfile],
    coeffs: CoefficientSet,
    seed: int,
    jobs: int,
) -> list[OutcomeSet]:
    if jobs <= 1:
        return [simulate_task_set(cols, p, coeffs, seed) for p in profiles]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return [_simulate_profile(cols, p, coeffs, seed, jobs, pool) for p in profiles]


def _verdicts_for(
    experiment: str,
    targets: tuple[CalibrationTarget, ...],
    summaries: dict[str, MetricsSummary],
) -> tuple[Verdict, ...]:
    verdicts = []
    for t in targets:
        if t.profile_id not in summaries:
            raise ConfigError(
                f"target references profile {t.profile_id!r} not simulated in {experiment}"
            )
        actual = summaries[t.profile_id].metric(t.metric)
        verdicts.append(
            Verdict(
                experiment=experiment,
                profile_id=t.profile_id,
                metric=t.metric,
                target=t.value,
                actual=actual,
                tolerance=t.tolerance,
                passed=abs(actual - t.value) <= t.tolerance,
            )
        )
    return tuple(verdicts)


def _prepare(config: HarnessConfig) -> tuple[TaskSet, CoefficientSet, dict]:
    config.validate()
    if config.tasks.n_tasks <= 0:
        raise ConfigError("tasks.n_tasks: must be > 0 to run experiments")
    coeffs = config.coefficients()
    task_set = generate_task_set(config.tasks)
    targets = load_experiment_targets(config.targets_path or None)
    return task_set, coeffs, targets


def _profile_snapshot(profiles: list[ArchitectureProfile]) -> dict:
    return {
        p.id: {
            "name": p.name,
            "agent_count": p.agent_count,
            "topology": p.topology.value,
            "max_autonomy": p.max_autonomy.name,
            "handoff_base": p.handoff_base,
            "family": p.family,
            "features": p.features.as_dict(),
        }
        for p in profiles
    }


def run_comparison(config: HarnessConfig) -> ExperimentReport:
    """Five architectures over the full task population."""
    task_set, coeffs, targets = _prepare(config)
    profiles = list(builtin_profiles(config.profile_overrides.get("profiles")))
    cols = task_set.columns()
    outcomes = _simulate_all(cols, profiles, coeffs, config.master_seed, config.jobs)
    rows = tuple(aggregate(o) for o in outcomes)
    summaries = {s.arch_id: s for s in rows}
    verdicts = _verdicts_for("comparison", targets.get("comparison", ()), summaries)

    ranking = compare(list(rows), expected_safe_order=EXPECTED_SAFE_ORDER)
    order_check = StructuralCheck(
        name="safe_success_order",
        actual=1.0 if ranking.order_matches else 0.0,
        lower=1.0,
        upper=1.0,
        passed=bool(ranking.order_matches),
        detail=" > ".join(ranking.safe_success_order),
    )
    return ExperimentReport(
        experiment="comparison",
        seed=config.master_seed,
        fingerprint=config.fingerprint(),
        coefficients_digest=coefficients_digest(coeffs),
        rows=rows,
        verdicts=verdicts,
        checks=(order_check,),
        labels={p.id: p.name for p in profiles},
        extras={
            "n_tasks": len(task_set),
            "profiles": _profile_snapshot(profiles),
        },
    )


_ABLATION_ORDER = (
    AblationTag.CapabilityMapACC,
    AblationTag.RuntimePolicy,
    AblationTag.VerifierGates,
    AblationTag.LeastPrivilege,
    AblationTag.MemoryGovernance,
    AblationTag.HumanGates,
)


def run_ablation(config: HarnessConfig) -> ExperimentReport:
    """Full reference design plus one variant per removed control."""
    task_set, coeffs, targets = _prepare(config)
    base = {p.id: p for p in builtin_profiles(config.profile_overrides.get("profiles"))}["a4"]
    profiles = [base] + [ablated(base, tag) for tag in _ABLATION_ORDER]
    cols = task_set.columns()
    outcomes = _simulate_all(cols, profiles, coeffs, config.master_seed, config.jobs)
    rows = tuple(aggregate(o) for o in outcomes)
    summaries = {s.arch_id: s for s in rows}
    verdicts = _verdicts_for("ablation", targets.get("ablation", ()), summaries)

    full = summaries[base.id]
    no_policy = summaries[f"{base.id}_no_{AblationTag.RuntimePolicy.value}"]
    no_memory = summaries[f"{base.id}_no_{AblationTag.MemoryGovernance.value}"]
    no_gates = summaries[f"{base.id}_no_{AblationTag.HumanGates.value}"]
    no_verifier = summaries[f"{base.id}_no_{AblationTag.VerifierGates.value}"]

    def ratio(a: float, b: float) -> float:
        return a / b if b else math.inf

    checks = (
        StructuralCheck(
            name="policy_ablation_violation_ratio",
            actual=ratio(no_policy.violations_per_1k, full.violations_per_1k),
            lower=1.6,
            upper=2.3,
            passed=1.6 <= ratio(no_policy.violations_per_1k, full.violations_per_1k) <= 2.3,
        ),
        StructuralCheck(
            name="memory_ablation_poisoning_ratio",
            actual=ratio(no_memory.poison_per_1k, full.poison_per_1k),
            lower=1.6,
            upper=2.4,
            passed=1.6 <= ratio(no_memory.poison_per_1k, full.poison_per_1k) <= 2.4,
        ),
        StructuralCheck(
            name="gates_ablation_escalation_pct",
            actual=no_gates.escalation_pct,
            lower=0.0,
            upper=8.0,
            passed=no_gates.escalation_pct < 8.0,
        ),
        StructuralCheck(
            name="gates_ablation_audit_drop_pp",
            actual=full.audit_pct - no_gates.audit_pct,
            lower=5.0,
            upper=math.inf,
            passed=(full.audit_pct - no_gates.audit_pct) >= 5.0,
        ),
        StructuralCheck(
            name="verifier_ablation_functional_drop_pp",
            actual=full.functional_pct - no_verifier.functional_pct,
            lower=3.0,
            upper=math.inf,
            passed=(full.functional_pct - no_verifier.functional_pct) >= 3.0,
        ),
    )

    labels = {base.id: "CEAD full"}
    for tag in _ABLATION_ORDER:
        labels[f"{base.id}_no_{tag.value}"] = ABLATION_LABELS[tag]
    return ExperimentReport(
        experiment="ablation",
        seed=config.master_seed,
        fingerprint=config.fingerprint(),
        coefficients_digest=coefficients_digest(coeffs),
        rows=rows,
        verdicts=verdicts,
        checks=checks,
        labels=labels,
        extras={"n_tasks": len(task_set), "profiles": _profile_snapshot(profiles)},
    )


def run_sweep(config: HarnessConfig) -> ExperimentReport:
    """Agent-count sweep for the governed and ungoverned families."""
    task_set, coeffs, targets = _prepare(config)
    sweep_overrides = config.profile_overrides.get("sweep")
    profiles = [
        sweep_profile(family, n, sweep_overrides)
        for family in ("cead", "ungoverned")
        for n in SWEEP_AGENT_COUNTS
    ]
    cols = task_set.columns()
    outcomes = _simulate_all(cols, profiles, coeffs, config.master_seed, config.jobs)
    rows = tuple(aggregate(o) for o in outcomes)
    summaries = {s.arch_id: s for s in rows}
    verdicts = _verdicts_for("sweep", targets.get("sweep", ()), summaries)

    plot: dict[str, dict[str, list[tuple[int, float]]]] = {
        "safe_success": {},
        "mean_cost": {},
    }
    checks = []
    for family in ("cead", "ungoverned"):
        safe = [(n, summaries[f"{family}_{n}"].safe_pct) for n in SWEEP_AGENT_COUNTS]
        cost = [(n, summaries[f"{family}_{n}"].mean_cost) for n in SWEEP_AGENT_COUNTS]
        plot["safe_success"][family] = safe
        plot["mean_cost"][family] = cost

        tail = [v for n, v in safe if n >= 8]
        worst_rise = max(b - a for a, b in zip(tail, tail[1:]))
        checks.append(
            StructuralCheck(
                name=f"{family}_safe_monotone_nonincreasing_n8plus",
                actual=worst_rise,
                lower=-math.inf,
                upper=0.0,
                passed=worst_rise <= 0.0,
            )
        )
        cost_values = [v for _, v in cost]
        worst_drop = min(b - a for a, b in zip(cost_values, cost_values[1:]))
        checks.append(
            StructuralCheck(
                name=f"{family}_cost_monotone_nondecreasing",
                actual=worst_drop,
                lower=0.0,
                upper=math.inf,
                passed=worst_drop >= 0.0,
            )
        )
    drop = summaries["ungoverned_32"].safe_pct - summaries["ungoverned_64"].safe_pct
    checks.append(
        StructuralCheck(
            name="ungoverned_safe_drop_32_to_64_pp",
            actual=drop,
            lower=10.0,
            upper=math.inf,
            passed=drop > 10.0,
        )
    )

    return ExperimentReport(
        experiment="sweep",
        seed=config.master_seed,
        fingerprint=config.fingerprint(),
        coefficients_digest=coefficients_digest(coeffs),
        rows=rows,
        verdicts=verdicts,
        checks=tuple(checks),
        labels={p.id: p.name for p in profiles},
        extras={
            "n_tasks": len(task_set),
            "plot": plot,
            "profiles": _profile_snapshot(profiles),
        },
    )


def run_stress(config: HarnessConfig) -> ExperimentReport:
    """Five architectures over the high-risk/regulated/adversarial slice."""
    task_set, coeffs, targets = _prepare(config)
    profiles = list(builtin_profiles(config.profile_overrides.get("profiles")))
    subset = stress_subset(task_set)
    if len(subset) == 0:
        raise ConfigError("stress subset is empty under the configured marginals")
    sub_cols = subset.columns()
    full_cols = task_set.columns()

    outcomes = _simulate_all(sub_cols, profiles, coeffs, config.master_seed, config.jobs)
    rows = tuple(aggregate(o) for o in outcomes)
    summaries = {s.arch_id: s for s in rows}
    verdicts = _verdicts_for("stress", targets.get("stress", ()), summaries)

    full_outcomes = _simulate_all(full_cols, profiles, coeffs, config.master_seed, config.jobs)
    full_summaries = {s.arch_id: s for s in (aggregate(o) for o in full_outcomes)}

    ranking = compare(list(rows), expected_safe_order=EXPECTED_SAFE_ORDER)
    checks = [
        StructuralCheck(
            name="stress_safe_success_order",
            actual=1.0 if ranking.order_matches else 0.0,
            lower=1.0,
            upper=1.0,
            passed=bool(ranking.order_matches),
            detail=" > ".join(ranking.safe_success_order),
        )
    ]
    for pid in sorted(summaries):
        stress_s, full_s = summaries[pid], full_summaries[pid]
        checks.append(
            StructuralCheck(
                name=f"{pid}_stress_safe_below_full",
                actual=full_s.safe_pct - stress_s.safe_pct,
                lower=0.0,
                upper=math.inf,
                passed=stress_s.safe_pct < full_s.safe_pct,
            )
        )
        checks.append(
            StructuralCheck(
                name=f"{pid}_stress_violations_above_full",
                actual=stress_s.violations_per_1k - full_s.violations_per_1k,
                lower=0.0,
                upper=math.inf,
                passed=stress_s.violations_per_1k > full_s.violations_per_1k,
            )
        )

    return ExperimentReport(
        experiment="stress",
        seed=config.master_seed,
        fingerprint=config.fingerprint(),
        coefficients_digest=coefficients_digest(coeffs),
        rows=rows,
        verdicts=verdicts,
        checks=tuple(checks),
        labels={p.id: p.name for p in profiles},
        extras={
            "n_tasks": len(subset),
            "full_n_tasks": len(task_set),
            "profiles": _profile_snapshot(profiles),
        },
    )


RUNNERS = {
    "comparison": run_comparison,
    "ablation": run_ablation,
    "sweep": run_sweep,
    "stress": run_stress,
}
