"""Monte Carlo evaluation harness for enterprise multi-agent architectures."""

__version__ = "0.1.0"

from .acc import ACCDocument, ValidationReport, validate_acc
from .calibration import CalibrationResult, CalibrationTarget, calibrate, loss
from .metrics import MetricsSummary, RankingReport, aggregate, compare
from .model import (
    CoefficientSet,
    OutcomeSet,
    TaskOutcome,
    calibrated_coefficients,
    default_coefficients,
    gate_applicability,
    poisoning_probability,
    route_quality,
    sample_handoffs,
    sigmoid,
    simulate_task,
    simulate_task_set,
    success_probability,
    trial_rng,
    violation_probability,
)
from .profiles import (
    ABLATION_LABELS,
    AblationTag,
    ArchitectureProfile,
    AutonomyLevel,
    FeatureStrengths,
    SweepFamily,
    Topology,
    ablated,
    builtin_profiles,
    resolve_profile,
    sweep_families,
    sweep_profile,
)
from .tasks import (
    Task,
    TaskSet,
    TaskSetSpec,
    generate_task_set,
    stress_subset,
)

__all__ = [
    "ACCDocument",
    "ABLATION_LABELS",
    "AblationTag",
    "ArchitectureProfile",
    "AutonomyLevel",
    "CalibrationResult",
    "CalibrationTarget",
    "CoefficientSet",
    "FeatureStrengths",
    "MetricsSummary",
    "OutcomeSet",
    "RankingReport",
    "SweepFamily",
    "Task",
    "TaskOutcome",
    "TaskSet",
    "TaskSetSpec",
    "Topology",
    "ValidationReport",
    "ablated",
    "aggregate",
    "builtin_profiles",
    "calibrate",
    "calibrated_coefficients",
    "compare",
    "default_coefficients",
    "gate_applicability",
    "generate_task_set",
    "loss",
    "poisoning_probability",
    "resolve_profile",
    "route_quality",
    "sample_handoffs",
    "sigmoid",
    "simulate_task",
    "simulate_task_set",
    "stress_subset",
    "success_probability",
    "sweep_families",
    "sweep_profile",
    "trial_rng",
    "validate_acc",
    "violation_probability",
]
