"""Seeded generation of the synthetic enterprise task population.

Tasks carry the covariates consumed by the outcome model: complexity and
risk grades, a continuous ambiguity score, sensitivity/regulation/adversarial
flags, tool and dependency counts, and write/cross-functional markers. The
population deliberately over-weights high-risk and cross-functional work via
multiplicative sampling boosts, and risk is mildly coupled to the
sensitivity, regulation, and write flags so that the high-risk stress slice
is not independent of the governance flags.

Generation is a pure function of the spec (which embeds the seed): the same
spec always reproduces the same task set bit for bit.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import special

from .rng import uniform_matrix

DOMAINS: tuple[str, ...] = (
    "Finance",
    "HR",
    "Procurement",
    "IT",
    "Legal",
    "Sales",
    "CustomerOps",
)

# Frozen column layout of the per-task uniform block. Reordering these
# changes every generated population, so treat the layout as part of the
# on-disk format.
_COL_DOMAIN = 0
_COL_COMPLEXITY = 1
_COL_RISK = 2
_COL_AMBIGUITY = 3
_COL_SENSITIVE = 4
_COL_REGULATED = 5
_COL_ADVERSARIAL = 6
_COL_TOOLS = 7
_COL_DEPS = 8
_COL_WRITE = 9
_COL_CROSS = 10
TASK_DRAWS = 12  # one spare column; must stay a multiple of 4

TASK_FIELDS = (
    "id",
    "domain",
    "complexity",
    "risk",
    "ambiguity",
    "sensitive",
    "regulated",
    "adversarial",
    "tool_count",
    "dependencies",
    "write_action",
    "cross_functional",
)


class TaskSpecError(ValueError):
    """Raised when a task-set spec fails validation; names the bad field."""

    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass(frozen=True)
class Task:
    id: int
    domain: str
    complexity: int
    risk: int
    ambiguity: float
    sensitive: bool
    regulated: bool
    adversarial: bool
    tool_count: int
    dependencies: int
    write_action: bool
    cross_functional: bool


@dataclass(frozen=True)
class TaskSetSpec:
    """Marginal distributions and boosts for one task population.

    ``high_risk_boost`` multiplies the sampling weight of risk grades 4-5
    before renormalisation; ``cross_functional_boost`` does the same for the
    cross-functional flag. ``risk_coupling`` shifts the sensitive, regulated,
    and write-action probabilities by ``coupling * (risk - 3)`` per task.
    """

    n_tasks: int = 10_000
    seed: int = 7
    domain_weights: tuple[float, ...] = tuple([1.0 / 7.0] * 7)
    high_risk_boost: float = 2.0
    cross_functional_boost: float = 2.0
    complexity_weights: tuple[float, ...] = (0.2, 0.2, 0.2, 0.2, 0.2)
    risk_weights: tuple[float, ...] = (0.2, 0.2, 0.2, 0.2, 0.2)
    ambiguity_alpha: float = 2.0
    ambiguity_beta: float = 2.5
    p_sensitive: float = 0.25
    p_regulated: float = 0.20
    p_adversarial: float = 0.10
    p_write_action: float = 0.30
    p_cross_functional: float = 0.35
    tool_count_weights: tuple[float, ...] = (0.12, 0.20, 0.30, 0.22, 0.12, 0.04)
    dependency_weights: tuple[float, ...] = (0.40, 0.32, 0.19, 0.06, 0.03)
    risk_coupling: float = 0.05
    view: str = "full"

    def validate(self) -> None:
        if self.n_tasks < 0:
            raise TaskSpecError("n_tasks", "must be >= 0")
        if len(self.domain_weights) != len(DOMAINS):
            raise TaskSpecError("domain_weights", f"need {len(DOMAINS)} weights")
        if abs(sum(self.domain_weights) - 1.0) > 1e-9:
            raise TaskSpecError("domain_weights", "must sum to 1 within 1e-9")
        for name, weights in (
            ("domain_weights", self.domain_weights),
            ("complexity_weights", self.complexity_weights),
            ("risk_weights", self.risk_weights),
            ("tool_count_weights", self.tool_count_weights),
            ("dependency_weights", self.dependency_weights),
        ):
            if any(w < 0 for w in weights):
                raise TaskSpecError(name, "weights must be non-negative")
            if sum(weights) <= 0:
                raise TaskSpecError(name, "weights must have positive total")
        if len(self.complexity_weights) != 5:
            raise TaskSpecError("complexity_weights", "need 5 weights for grades 1-5")
        if len(self.risk_weights) != 5:
            raise TaskSpecError("risk_weights", "need 5 weights for grades 1-5")
        for name, p in (
            ("p_sensitive", self.p_sensitive),
            ("p_regulated", self.p_regulated),
            ("p_adversarial", self.p_adversarial),
            ("p_write_action", self.p_write_action),
            ("p_cross_functional", self.p_cross_functional),
        ):
            if not 0.0 <= p <= 1.0:
                raise TaskSpecError(name, "probability must be in [0, 1]")
        if self.high_risk_boost < 0:
            raise TaskSpecError("high_risk_boost", "must be >= 0")
        if self.cross_functional_boost < 0:
            raise TaskSpecError("cross_functional_boost", "must be >= 0")
        if self.ambiguity_alpha <= 0 or self.ambiguity_beta <= 0:
            raise TaskSpecError("ambiguity_alpha", "Beta shape parameters must be > 0")

    def boosted_risk_weights(self) -> np.ndarray:
        """Risk pmf after applying the high-risk boost to grades 4-5."""
        w = np.asarray(self.risk_weights, dtype=float).copy()
        w[3:] *= self.high_risk_boost
        return w / w.sum()

    def boosted_cross_functional_p(self) -> float:
        """Cross-functional probability after the odds boost."""
        p, b = self.p_cross_functional, self.cross_functional_boost
        if p == 0.0:
            return 0.0
        return (p * b) / (p * b + (1.0 - p))


@dataclass(frozen=True)
class TaskColumns:
    """Column-oriented view of a task set, used by the vectorised simulator."""

    ids: np.ndarray
    complexity: np.ndarray
    risk: np.ndarray
    ambiguity: np.ndarray
    sensitive: np.ndarray
    regulated: np.ndarray
    adversarial: np.ndarray
    tool_count: np.ndarray
    dependencies: np.ndarray
    write_action: np.ndarray
    cross_functional: np.ndarray


@dataclass(frozen=True)
class TaskSet:
    spec: TaskSetSpec
    tasks: tuple[Task, ...]

    def __len__(self) -> int:
        return len(self.tasks)

    def columns(self) -> TaskColumns:
        t = self.tasks
        return TaskColumns(
            ids=np.fromiter((x.id for x in t), dtype=np.int64, count=len(t)),
            complexity=np.fromiter((x.complexity for x in t), dtype=np.int64, count=len(t)),
            risk=np.fromiter((x.risk for x in t), dtype=np.int64, count=len(t)),
            ambiguity=np.fromiter((x.ambiguity for x in t), dtype=np.float64, count=len(t)),
            sensitive=np.fromiter((x.sensitive for x in t), dtype=bool, count=len(t)),
            regulated=np.fromiter((x.regulated for x in t), dtype=bool, count=len(t)),
            adversarial=np.fromiter((x.adversarial for x in t), dtype=bool, count=len(t)),
            tool_count=np.fromiter((x.tool_count for x in t), dtype=np.int64, count=len(t)),
            dependencies=np.fromiter((x.dependencies for x in t), dtype=np.int64, count=len(t)),
            write_action=np.fromiter((x.write_action for x in t), dtype=bool, count=len(t)),
            cross_functional=np.fromiter((x.cross_functional for x in t), dtype=bool, count=len(t)),
        )


def _categorical(u: np.ndarray, weights: Sequence[float]) -> np.ndarray:
    """Inverse-CDF draw from a categorical distribution, vectorised."""
    w = np.asarray(weights, dtype=float)
    cdf = np.cumsum(w / w.sum())
    cdf[-1] = 1.0  # guard against rounding shortfall
    return np.searchsorted(cdf, u, side="right").astype(np.int64)


def generate_task_set(spec: TaskSetSpec) -> TaskSet:
    """Generate the task population described by ``spec``.

    Pure function of the spec: regeneration is bit-identical.
    """
    spec.validate()
    n = spec.n_tasks
    u = uniform_matrix(spec.seed, "taskgen", n, TASK_DRAWS)

    domain_idx = _categorical(u[:, _COL_DOMAIN], spec.domain_weights)
    complexity = 1 + _categorical(u[:, _COL_COMPLEXITY], spec.complexity_weights)
    risk = 1 + _categorical(u[:, _COL_RISK], spec.boosted_risk_weights())
    ambiguity = special.betaincinv(
        spec.ambiguity_alpha, spec.ambiguity_beta, u[:, _COL_AMBIGUITY]
    )

    shift = spec.risk_coupling * (risk - 3)
    sensitive = u[:, _COL_SENSITIVE] < np.clip(spec.p_sensitive + shift, 0.0, 1.0)
    regulated = u[:, _COL_REGULATED] < np.clip(spec.p_regulated + shift, 0.0, 1.0)
    adversarial = u[:, _COL_ADVERSARIAL] < spec.p_adversarial
    write_action = u[:, _COL_WRITE] < np.clip(spec.p_write_action + shift, 0.0, 1.0)

    tool_count = _categorical(u[:, _COL_TOOLS], spec.tool_count_weights)
    dependencies = _categorical(u[:, _COL_DEPS], spec.dependency_weights)
    cross_functional = u[:, _COL_CROSS] < spec.boosted_cross_functional_p()

    tasks = tuple(
        Task(
            id=i,
            domain=DOMAINS[domain_idx[i]],
            complexity=int(complexity[i]),
            risk=int(risk[i]),
            ambiguity=float(ambiguity[i]),
            sensitive=bool(sensitive[i]),
            regulated=bool(regulated[i]),
            adversarial=bool(adversarial[i]),
            tool_count=int(tool_count[i]),
            dependencies=int(dependencies[i]),
            write_action=bool(write_action[i]),
            cross_functional=bool(cross_functional[i]),
        )
        for i in range(n)
    )
    return TaskSet(spec=spec, tasks=tasks)


def is_stress_task(task: Task) -> bool:
    """High-risk, regulated, or adversarial membership predicate."""
    return task.risk >= 4 or task.regulated or task.adversarial


def stress_subset(task_set: TaskSet) -> TaskSet:
    """Filter to the high-risk/regulated/adversarial slice, order preserved."""
    kept = tuple(t for t in task_set.tasks if is_stress_task(t))
    view_spec = dataclasses.replace(task_set.spec, n_tasks=len(kept), view="stress")
    return TaskSet(spec=view_spec, tasks=kept)


def write_tasks_csv(task_set: TaskSet, path: str | Path) -> None:
    """Export one row per task, header row first, columns in field order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TASK_FIELDS)
        for t in task_set.tasks:
            writer.writerow(
                [
                    t.id,
                    t.domain,
                    t.complexity,
                    t.risk,
                    f"{t.ambiguity:.6f}",
                    int(t.sensitive),
                    int(t.regulated),
                    int(t.adversarial),
                    t.tool_count,
                    t.dependencies,
                    int(t.write_action),
                    int(t.cross_functional),
                ]
            )


def spec_from_dict(raw: dict) -> TaskSetSpec:
    """Build a spec from a config mapping, accepting only known fields."""
    known = {f.name for f in dataclasses.fields(TaskSetSpec)}
    unknown = set(raw) - known
    if unknown:
        raise TaskSpecError(sorted(unknown)[0], "unknown task spec field")
    coerced = {
        k: tuple(v) if isinstance(v, list) else v
        for k, v in raw.items()
    }
    return TaskSetSpec(**coerced)
