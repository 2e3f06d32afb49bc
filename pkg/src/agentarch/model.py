"""Per-task stochastic outcome model.

For one task under one architecture the trial proceeds through a fixed
draw order (handoffs, escalation, success, violation, poisoning, audit,
latency), each consuming one uniform from the trial's private substream:

* handoffs ``H`` follow a Poisson law whose mean combines the profile's
  baseline intensity, a log2 agent-count term, the task's dependency
  count, and a capability-map rebate; a single agent that must use tools
  performs at least one handoff on average,
* escalation is a Bernoulli of a risk/ambiguity logistic scaled by the
  strength of the profile's human gates (plus a small floor: some work
  bounces to humans even without designed gates),
* functional success is a logistic in base competence plus route quality
  minus complexity, risk, ambiguity, handoff, and dependency penalties;
  escalated work is re-evaluated at reduced autonomy via a logit shift,
* policy violation is a logistic in risk, sensitivity, adversarial
  content, and handoffs, discounted by policy strength, least-privilege
  scope, and the applicable human gate; escalated trials have their
  violation probability multiplied by a suppression factor,
* memory poisoning is a logistic in adversarial content and handoffs,
  discounted by memory governance,
* a trial is safe when it succeeds with neither violation nor poisoning,
  and automated-safe when it is safe without escalation,
* audit coverage is a Bernoulli of instrumentation-plus-contract
  strength; escalated trials are always covered (the approval itself is
  a complete trace),
* cost is linear in tool count, handoffs, verifier strength, and
  escalation; latency is linear in handoffs and escalation plus
  lognormal noise.

Everything is a pure function of (task, profile, coefficients, substream),
so trials can run in any order and in any number of workers without
changing results. The vectorised path (`simulate_task_set`) and the
scalar path (`simulate_task`) consume identical uniforms.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy import special

from .profiles import ArchitectureProfile
from .rng import stream_key, uniform_matrix
from .tasks import Task, TaskColumns, TaskSet

# Frozen per-trial draw columns.
_COL_HANDOFF = 0
_COL_ESCALATE = 1
_COL_SUCCESS = 2
_COL_VIOLATION = 3
_COL_POISON = 4
_COL_AUDIT = 5
_COL_LATENCY = 6
TRIAL_DRAWS = 8  # one spare; must stay a multiple of 4

GATE_BASE_RELEVANCE = 0.2


# ---------------------------------------------------------------------------
# Coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuccessCoefficients:
    """Success-model terms: penalties, per-family competence, route weights."""

    gamma_c: float = 0.15
    gamma_r: float = 0.20
    gamma_u: float = 0.30
    gamma_h: float = 0.123
    gamma_d: float = 0.10
    beta: dict[str, float] = field(
        default_factory=lambda: {
            "a0": 1.427,
            "a1": 1.148,
            "a2": 1.418,
            "a3": 1.394,
            "a4": 1.490,
            "cead": 1.435,
            "ungoverned": 1.209,
        }
    )
    w_contracts: float = 0.30
    w_registry: float = 0.15
    w_specialization: float = 0.25
    w_policy: float = 0.10
    w_verifier: float = 0.35
    w_protocol: float = 0.10


@dataclass(frozen=True)
class ViolationCoefficients:
    alpha: float = -2.773
    lambda_r: float = 0.25
    lambda_s: float = 0.50
    lambda_x: float = 0.60
    lambda_h: float = 0.12
    lambda_p: float = 0.68
    lambda_l: float = 0.62
    lambda_g: float = 1.10


@dataclass(frozen=True)
class PoisoningCoefficients:
    mu_base: float = -4.25
    mu_adv: float = 2.30
    mu_h: float = 0.115
    mu_mem: float = 0.85


@dataclass(frozen=True)
class HandoffCoefficients:
    kappa_base: float = 1.0
    kappa_agents: float = 0.15
    kappa_dep: float = 0.20
    kappa_acc: float = 0.30


@dataclass(frozen=True)
class EscalationCoefficients:
    """Escalation triggers plus what escalation does to the other draws.

    ``violation_suppression`` multiplies the violation probability of
    escalated trials; ``autonomy_shift`` is added to their success logit.
    """

    eta_base: float = -1.65
    eta_risk: float = 0.33
    eta_amb: float = 0.80
    eta_gate: float = 0.842
    eta_floor: float = 0.089
    violation_suppression: float = 0.30
    autonomy_shift: float = -0.10


@dataclass(frozen=True)
class AuditCoefficients:
    audit_base: float = 0.072
    audit_gain: float = 0.751


@dataclass(frozen=True)
class CostLatencyCoefficients:
    unit_step: float = 0.75
    unit_handoff: float = 0.28
    unit_verify: float = 0.55
    unit_escalation: float = 0.90
    latency_base: float = 11.0
    latency_per_handoff: float = 0.90
    latency_escalation: float = 5.50
    latency_noise_mu: float = 0.90
    latency_noise_sigma: float = 0.55


@dataclass(frozen=True)
class CoefficientSet:
    success: SuccessCoefficients = field(default_factory=SuccessCoefficients)
    violation: ViolationCoefficients = field(default_factory=ViolationCoefficients)
    poisoning: PoisoningCoefficients = field(default_factory=PoisoningCoefficients)
    handoff: HandoffCoefficients = field(default_factory=HandoffCoefficients)
    escalation: EscalationCoefficients = field(default_factory=EscalationCoefficients)
    audit: AuditCoefficients = field(default_factory=AuditCoefficients)
    cost_latency: CostLatencyCoefficients = field(default_factory=CostLatencyCoefficients)

    def validate(self) -> None:
        for path in iter_coefficient_paths(self):
            lo, hi = coefficient_bounds(path)
            value = get_coefficient(self, path)
            if not lo <= value <= hi:
                raise ValueError(f"coefficient {path}={value} outside [{lo}, {hi}]")

    def beta_for(self, family: str) -> float:
        try:
            return self.success.beta[family]
        except KeyError:
            known = ", ".join(sorted(self.success.beta))
            raise ValueError(
                f"no base competence for profile family {family!r} (known: {known})"
            ) from None


# Box constraints per coefficient path; prefix match on the group/name.
_BOUND_RULES: tuple[tuple[str, tuple[float, float]], ...] = (
    ("success.gamma_", (0.0, 3.0)),
    ("success.beta.", (-5.0, 6.0)),
    ("success.w_", (0.0, 2.0)),
    ("violation.alpha", (-9.0, 2.0)),
    ("violation.lambda_", (0.0, 3.0)),
    ("poisoning.mu_base", (-10.0, 0.0)),
    ("poisoning.mu_adv", (0.0, 5.0)),
    ("poisoning.mu_h", (0.0, 2.0)),
    ("poisoning.mu_mem", (0.0, 3.0)),
    ("handoff.kappa_", (0.0, 4.0)),
    ("escalation.eta_base", (-6.0, 3.0)),
    ("escalation.eta_risk", (0.0, 3.0)),
    ("escalation.eta_amb", (0.0, 3.0)),
    ("escalation.eta_gate", (0.0, 2.0)),
    ("escalation.eta_floor", (0.0, 1.0)),
    ("escalation.violation_suppression", (0.0, 1.0)),
    ("escalation.autonomy_shift", (-2.0, 2.0)),
    ("audit.audit_base", (0.0, 1.0)),
    ("audit.audit_gain", (0.0, 1.5)),
    ("cost_latency.unit_", (0.0, 5.0)),
    ("cost_latency.latency_base", (0.0, 30.0)),
    ("cost_latency.latency_per_handoff", (0.0, 5.0)),
    ("cost_latency.latency_escalation", (0.0, 20.0)),
    ("cost_latency.latency_noise_mu", (-3.0, 3.0)),
    ("cost_latency.latency_noise_sigma", (0.01, 2.0)),
)


def coefficient_bounds(path: str) -> tuple[float, float]:
    for prefix, bounds in _BOUND_RULES:
        if path.startswith(prefix):
            return bounds
    raise KeyError(f"no bounds rule for coefficient path {path!r}")


def iter_coefficient_paths(coeffs: CoefficientSet) -> Iterator[str]:
    """Yield every scalar coefficient as a dotted path."""
    for group_field in dataclasses.fields(coeffs):
        group = getattr(coeffs, group_field.name)
        for leaf in dataclasses.fields(group):
            value = getattr(group, leaf.name)
            if isinstance(value, dict):
                for key in sorted(value):
                    yield f"{group_field.name}.{leaf.name}.{key}"
            else:
                yield f"{group_field.name}.{leaf.name}"


def get_coefficient(coeffs: CoefficientSet, path: str) -> float:
    parts = path.split(".")
    obj = getattr(coeffs, parts[0])
    value = getattr(obj, parts[1])
    if len(parts) == 3:
        return float(value[parts[2]])
    return float(value)


def with_coefficients(coeffs: CoefficientSet, updates: dict[str, float]) -> CoefficientSet:
    """Return a copy with the dotted-path updates applied."""
    grouped: dict[str, dict] = {}
    for path, value in updates.items():
        parts = path.split(".")
        grouped.setdefault(parts[0], {})[tuple(parts[1:])] = float(value)
    replacements = {}
    for group_name, changes in grouped.items():
        group = getattr(coeffs, group_name)
        simple: dict[str, object] = {}
        dict_updates: dict[str, dict[str, float]] = {}
        for key, value in changes.items():
            if len(key) == 1:
                simple[key[0]] = value
            else:
                dict_updates.setdefault(key[0], {})[key[1]] = value
        for attr, entries in dict_updates.items():
            merged = dict(getattr(group, attr))
            merged.update(entries)
            simple[attr] = merged
        replacements[group_name] = dataclasses.replace(group, **simple)
    return dataclasses.replace(coeffs, **replacements)


def coefficients_to_dict(coeffs: CoefficientSet) -> dict:
    return dataclasses.asdict(coeffs)


def coefficients_from_dict(raw: dict) -> CoefficientSet:
    return CoefficientSet(
        success=SuccessCoefficients(**raw["success"]),
        violation=ViolationCoefficients(**raw["violation"]),
        poisoning=PoisoningCoefficients(**raw["poisoning"]),
        handoff=HandoffCoefficients(**raw["handoff"]),
        escalation=EscalationCoefficients(**raw["escalation"]),
        audit=AuditCoefficients(**raw["audit"]),
        cost_latency=CostLatencyCoefficients(**raw["cost_latency"]),
    )


def save_coefficients(coeffs: CoefficientSet, path: str | Path) -> None:
    payload = json.dumps(coefficients_to_dict(coeffs), indent=2, sort_keys=True)
    Path(path).write_text(payload + "\n")


def load_coefficients(path: str | Path) -> CoefficientSet:
    return coefficients_from_dict(json.loads(Path(path).read_text()))


def coefficients_digest(coeffs: CoefficientSet) -> str:
    canonical = json.dumps(coefficients_to_dict(coeffs), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Model primitives
# ---------------------------------------------------------------------------


def sigmoid(x):
    """Standard logistic function, numerically stable for large |x|."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    if out.ndim == 0:
        return float(out)
    return out


def route_quality(profile: ArchitectureProfile, coeffs: CoefficientSet) -> float:
    """Architecture-level competence bonus from the six routing controls."""
    s, f = coeffs.success, profile.features
    return (
        s.w_contracts * f.contracts
        + s.w_registry * f.registry
        + s.w_specialization * f.specialization
        + s.w_policy * f.policy
        + s.w_verifier * f.verifier
        + s.w_protocol * f.protocol_guards
    )


def proliferation_scaled_handoff_base(
    base: float, n_agents: int, rate: float, exponent: float
) -> float:
    """Grow a family's baseline handoff intensity with agent count.

    Coordination overhead compounds super-linearly as more agents share a
    task; at ``n_agents == 1`` the base is returned unchanged.
    """
    return base * (1.0 + rate * (float(n_agents) ** exponent - 1.0))


def handoff_mean(dependencies, tool_count, profile: ArchitectureProfile, coeffs: CoefficientSet):
    """Expected handoffs for each task under a profile (element-wise)."""
    h = coeffs.handoff
    m = (
        h.kappa_base * profile.handoff_base
        + h.kappa_agents * math.log2(profile.agent_count)
        + h.kappa_dep * np.asarray(dependencies, dtype=np.float64)
        - h.kappa_acc * profile.features.capability_map_acc
    )
    if profile.agent_count == 1:
        # A lone agent still hands work to its tools at least once.
        m = np.where(np.asarray(tool_count) >= 1, np.maximum(m, 1.0), m)
    return np.maximum(m, 0.0)


def _poisson_from_uniform(u, mean):
    """Inverse-CDF Poisson draw; one uniform per variate, element-wise."""
    u = np.asarray(u, dtype=np.float64)
    mean = np.broadcast_to(np.asarray(mean, dtype=np.float64), u.shape)
    if u.size == 0:
        return np.zeros(u.shape, dtype=np.int64)
    pmf = np.exp(-mean)
    cdf = pmf.copy()
    k = (u >= cdf).astype(np.int64)
    m_max = float(mean.max())
    k_max = int(math.ceil(m_max + 12.0 * math.sqrt(m_max) + 20.0))
    for j in range(1, k_max + 1):
        pmf = pmf * mean / j
        cdf = cdf + pmf
        add = u >= cdf
        if not add.any():
            break
        k += add
    return k


def sample_handoffs(
    task: Task, profile: ArchitectureProfile, coeffs: CoefficientSet, rng: np.random.Generator
) -> int:
    """Draw the handoff count for one trial from its substream."""
    m = handoff_mean(task.dependencies, task.tool_count, profile, coeffs)
    return int(_poisson_from_uniform(np.asarray(rng.random()), m))


def gate_applicability(
    task: Task, profile: ArchitectureProfile, base_relevance: float = GATE_BASE_RELEVANCE
) -> float:
    """Per-task strength of the human approval gate, in [0, 1]."""
    relevant = task.write_action or task.regulated or task.risk >= 4
    relevance = 1.0 if relevant else base_relevance
    return profile.features.human_gates * relevance


def _gate_applicability_cols(cols: TaskColumns, profile: ArchitectureProfile) -> np.ndarray:
    relevant = cols.write_action | cols.regulated | (cols.risk >= 4)
    relevance = np.where(relevant, 1.0, GATE_BASE_RELEVANCE)
    return profile.features.human_gates * relevance


def _success_logit(coeffs, profile, complexity, risk, ambiguity, handoffs, dependencies):
    s = coeffs.success
    beta = coeffs.beta_for(profile.family)
    rho = route_quality(profile, coeffs)
    return (
        beta
        + rho
        - s.gamma_c * np.asarray(complexity, dtype=np.float64)
        - s.gamma_r * np.asarray(risk, dtype=np.float64)
        - s.gamma_u * np.asarray(ambiguity, dtype=np.float64)
        - s.gamma_h * np.asarray(handoffs, dtype=np.float64)
        - s.gamma_d * np.asarray(dependencies, dtype=np.float64)
    )


def success_probability(
    task: Task, profile: ArchitectureProfile, coeffs: CoefficientSet, handoffs: int
) -> float:
    """Functional-success probability for one trial, given realised handoffs."""
    return float(
        sigmoid(
            _success_logit(
                coeffs, profile, task.complexity, task.risk, task.ambiguity,
                handoffs, task.dependencies,
            )
        )
    )


def _violation_logit(coeffs, profile, risk, sensitive, adversarial, handoffs, gate):
    v = coeffs.violation
    f = profile.features
    return (
        v.alpha
        + v.lambda_r * np.asarray(risk, dtype=np.float64)
        + v.lambda_s * np.asarray(sensitive, dtype=np.float64)
        + v.lambda_x * np.asarray(adversarial, dtype=np.float64)
        + v.lambda_h * np.asarray(handoffs, dtype=np.float64)
        - v.lambda_p * f.policy
        - v.lambda_l * f.least_privilege
        - v.lambda_g * np.asarray(gate, dtype=np.float64)
    )


def violation_probability(
    task: Task,
    profile: ArchitectureProfile,
    coeffs: CoefficientSet,
    handoffs: int,
    gate_strength: float,
) -> float:
    """Policy-violation probability for one trial, before escalation effects."""
    return float(
        sigmoid(
            _violation_logit(
                coeffs, profile, task.risk, task.sensitive, task.adversarial,
                handoffs, gate_strength,
            )
        )
    )


def _poisoning_logit(coeffs, profile, adversarial, handoffs):
    p = coeffs.poisoning
    return (
        p.mu_base
        + p.mu_adv * np.asarray(adversarial, dtype=np.float64)
        + p.mu_h * np.asarray(handoffs, dtype=np.float64)
        - p.mu_mem * profile.features.memory_governance
    )


def poisoning_probability(
    task: Task, profile: ArchitectureProfile, coeffs: CoefficientSet, handoffs: int
) -> float:
    """Memory-poisoning probability for one trial."""
    return float(
        sigmoid(_poisoning_logit(coeffs, profile, task.adversarial, handoffs))
    )


def _escalation_probability(coeffs, profile, risk, ambiguity):
    e = coeffs.escalation
    trigger = sigmoid(
        e.eta_base
        + e.eta_risk * np.asarray(risk, dtype=np.float64)
        + e.eta_amb * np.asarray(ambiguity, dtype=np.float64)
    )
    scale = min(1.0, max(0.0, e.eta_floor + e.eta_gate * profile.features.human_gates))
    return trigger * scale


def escalation_probability(
    task: Task, profile: ArchitectureProfile, coeffs: CoefficientSet
) -> float:
    """Probability the trial is routed to human approval."""
    return float(_escalation_probability(coeffs, profile, task.risk, task.ambiguity))


def _audit_probability(coeffs, profile) -> float:
    a = coeffs.audit
    f = profile.features
    p = a.audit_base + a.audit_gain * (f.audit_instrumentation + f.contracts) / 2.0
    return min(1.0, max(0.0, p))


# ---------------------------------------------------------------------------
# Trial simulation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TaskOutcome:
    task_id: int
    arch_id: str
    handoffs: int
    escalated: bool
    success: bool
    violation: bool
    poisoned: bool
    safe: bool
    automated_safe: bool
    audit_covered: bool
    cost: float
    latency: float


OUTCOME_FIELDS = tuple(f.name for f in dataclasses.fields(TaskOutcome))


@dataclass(frozen=True)
class OutcomeSet:
    """Column-oriented trial results for one architecture over one task set."""

    arch_id: str
    task_ids: np.ndarray
    handoffs: np.ndarray
    escalated: np.ndarray
    success: np.ndarray
    violation: np.ndarray
    poisoned: np.ndarray
    safe: np.ndarray
    automated_safe: np.ndarray
    audit_covered: np.ndarray
    cost: np.ndarray
    latency: np.ndarray

    def __len__(self) -> int:
        return len(self.task_ids)

    def to_task_outcomes(self) -> list[TaskOutcome]:
        return [
            TaskOutcome(
                task_id=int(self.task_ids[i]),
                arch_id=self.arch_id,
                handoffs=int(self.handoffs[i]),
                escalated=bool(self.escalated[i]),
                success=bool(self.success[i]),
                violation=bool(self.violation[i]),
                poisoned=bool(self.poisoned[i]),
                safe=bool(self.safe[i]),
                automated_safe=bool(self.automated_safe[i]),
                audit_covered=bool(self.audit_covered[i]),
                cost=float(self.cost[i]),
                latency=float(self.latency[i]),
            )
            for i in range(len(self))
        ]


def concat_outcomes(chunks: list[OutcomeSet]) -> OutcomeSet:
    if not chunks:
        raise ValueError("no outcome chunks to concatenate")
    arch_ids = {c.arch_id for c in chunks}
    if len(arch_ids) != 1:
        raise ValueError(f"mixed arch_id in outcome chunks: {sorted(arch_ids)}")
    return OutcomeSet(
        arch_id=chunks[0].arch_id,
        **{
            name: np.concatenate([getattr(c, name) for c in chunks])
            for name in (
                "task_ids", "handoffs", "escalated", "success", "violation",
                "poisoned", "safe", "automated_safe", "audit_covered", "cost",
                "latency",
            )
        },
    )


@lru_cache(maxsize=48)
def _cached_uniforms(seed: int, label: str, n_rows: int) -> np.ndarray:
    """Memoised draw matrix; draws depend only on (seed, label), never on
    coefficients, so calibration loops can reuse them."""
    u = uniform_matrix(seed, label, n_rows, TRIAL_DRAWS)
    u.setflags(write=False)
    return u


def trial_rng(master_seed: int, arch_id: str, task_id: int) -> np.random.Generator:
    """Substream for one (architecture, task) trial.

    Positioned at the trial's private block of ``TRIAL_DRAWS`` uniforms;
    identical to the matching row of the vectorised draw matrix.
    """
    block = task_id * (TRIAL_DRAWS // 4)
    bitgen = np.random.Philox(
        key=stream_key(master_seed, f"sim:{arch_id}"), counter=[block, 0, 0, 0]
    )
    return np.random.Generator(bitgen)


def simulate_task(
    task: Task,
    profile: ArchitectureProfile,
    coeffs: CoefficientSet,
    rng: np.random.Generator,
) -> TaskOutcome:
    """Run one trial, consuming draws from ``rng`` in the frozen order."""
    e = coeffs.escalation
    cl = coeffs.cost_latency

    handoffs = sample_handoffs(task, profile, coeffs, rng)
    escalated = bool(rng.random() < escalation_probability(task, profile, coeffs))

    logit_s = _success_logit(
        coeffs, profile, task.complexity, task.risk, task.ambiguity,
        handoffs, task.dependencies,
    )
    if escalated:
        logit_s = logit_s + e.autonomy_shift
    p_success = sigmoid(logit_s)

    p_violation = violation_probability(
        task, profile, coeffs, handoffs, gate_applicability(task, profile)
    )
    if escalated:
        p_violation *= e.violation_suppression
    p_poison = poisoning_probability(task, profile, coeffs, handoffs)

    success = bool(rng.random() < p_success)
    violation = bool(rng.random() < p_violation)
    poisoned = bool(rng.random() < p_poison)
    safe = success and not violation and not poisoned
    automated_safe = safe and not escalated
    u_audit = rng.random()  # always consume the draw to keep columns aligned
    audit_covered = escalated or bool(u_audit < _audit_probability(coeffs, profile))

    cost = (
        cl.unit_step * (1 + task.tool_count)
        + cl.unit_handoff * handoffs
        + cl.unit_verify * profile.features.verifier
        + cl.unit_escalation * escalated
    )
    noise = math.exp(
        cl.latency_noise_mu + cl.latency_noise_sigma * special.ndtri(rng.random())
    )
    latency = (
        cl.latency_base
        + cl.latency_per_handoff * handoffs
        + cl.latency_escalation * escalated
        + noise
    )

    return TaskOutcome(
        task_id=task.id,
        arch_id=profile.id,
        handoffs=handoffs,
        escalated=escalated,
        success=success,
        violation=violation,
        poisoned=poisoned,
        safe=safe,
        automated_safe=automated_safe,
        audit_covered=audit_covered,
        cost=cost,
        latency=float(latency),
    )


def simulate_task_set(
    tasks: TaskSet | TaskColumns,
    profile: ArchitectureProfile,
    coeffs: CoefficientSet,
    master_seed: int,
) -> OutcomeSet:
    """Vectorised trial run for every task; bit-identical to the scalar path."""
    cols = tasks.columns() if isinstance(tasks, TaskSet) else tasks
    n = len(cols.ids)
    if n == 0:
        empty_f = np.empty(0, dtype=np.float64)
        empty_i = np.empty(0, dtype=np.int64)
        empty_b = np.empty(0, dtype=bool)
        return OutcomeSet(
            arch_id=profile.id, task_ids=empty_i, handoffs=empty_i,
            escalated=empty_b, success=empty_b, violation=empty_b,
            poisoned=empty_b, safe=empty_b, automated_safe=empty_b,
            audit_covered=empty_b, cost=empty_f, latency=empty_f,
        )

    n_rows = int(cols.ids.max()) + 1
    u = _cached_uniforms(master_seed, f"sim:{profile.id}", n_rows)[cols.ids]

    e = coeffs.escalation
    cl = coeffs.cost_latency

    mean = handoff_mean(cols.dependencies, cols.tool_count, profile, coeffs)
    handoffs = _poisson_from_uniform(u[:, _COL_HANDOFF], mean)

    p_escalate = _escalation_probability(coeffs, profile, cols.risk, cols.ambiguity)
    escalated = u[:, _COL_ESCALATE] < p_escalate

    logit_s = _success_logit(
        coeffs, profile, cols.complexity, cols.risk, cols.ambiguity,
        handoffs, cols.dependencies,
    )
    p_success = sigmoid(logit_s + e.autonomy_shift * escalated)

    gate = _gate_applicability_cols(cols, profile)
    p_violation = sigmoid(
        _violation_logit(
            coeffs, profile, cols.risk, cols.sensitive, cols.adversarial, handoffs, gate
        )
    )
    p_violation = np.where(escalated, p_violation * e.violation_suppression, p_violation)
    p_poison = sigmoid(_poisoning_logit(coeffs, profile, cols.adversarial, handoffs))

    success = u[:, _COL_SUCCESS] < p_success
    violation = u[:, _COL_VIOLATION] < p_violation
    poisoned = u[:, _COL_POISON] < p_poison
    safe = success & ~violation & ~poisoned
    automated_safe = safe & ~escalated
    audit_covered = escalated | (u[:, _COL_AUDIT] < _audit_probability(coeffs, profile))

    cost = (
        cl.unit_step * (1 + cols.tool_count)
        + cl.unit_handoff * handoffs
        + cl.unit_verify * profile.features.verifier
        + cl.unit_escalation * escalated
    )
    noise = np.exp(
        cl.latency_noise_mu + cl.latency_noise_sigma * special.ndtri(u[:, _COL_LATENCY])
    )
    latency = (
        cl.latency_base
        + cl.latency_per_handoff * handoffs
        + cl.latency_escalation * escalated
        + noise
    )

    return OutcomeSet(
        arch_id=profile.id,
        task_ids=cols.ids.copy(),
        handoffs=handoffs,
        escalated=escalated,
        success=success,
        violation=violation,
        poisoned=poisoned,
        safe=safe,
        automated_safe=automated_safe,
        audit_covered=audit_covered,
        cost=cost.astype(np.float64),
        latency=latency.astype(np.float64),
    )


def write_outcomes_csv(outcomes: OutcomeSet, path: str | Path) -> None:
    """Export one row per trial, columns in outcome field order."""
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(OUTCOME_FIELDS)
        for row in outcomes.to_task_outcomes():
            writer.writerow(
                [
                    row.task_id, row.arch_id, row.handoffs,
                    int(row.escalated), int(row.success), int(row.violation),
                    int(row.poisoned), int(row.safe), int(row.automated_safe),
                    int(row.audit_covered), f"{row.cost:.6f}", f"{row.latency:.6f}",
                ]
            )


def default_coefficients() -> CoefficientSet:
    """Uncalibrated but structurally sensible starting coefficients."""
    return CoefficientSet()


def calibrated_coefficients() -> CoefficientSet:
    """The calibrated coefficient set shipped with the package."""
    from importlib import resources

    with resources.files("agentarch.data").joinpath("coefficients.json").open() as fh:
        return coefficients_from_dict(json.load(fh))
