"""Agent Capability Contract documents and their validation.

An ACC is the fourteen-field design record that justifies an agent's
existence: capability ownership, purpose, autonomy, topology, schemas,
tool scopes, data classification, memory design, model policy,
verification, human interaction, evaluation evidence, observability,
and versioning. Validation reports missing fields by their display name
and flags autonomy/human-interaction inconsistencies.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .profiles import AutonomyLevel

# (attribute, display name) in canonical order.
ACC_FIELDS: tuple[tuple[str, str], ...] = (
    ("capability_owner", "Business capability and owner"),
    ("purpose_nonpurpose", "Purpose and non-purpose"),
    ("autonomy_level", "Autonomy level"),
    ("interaction_topology", "Interaction topology"),
    ("io_schemas", "Input/output schemas"),
    ("tool_scopes", "Tool inventory and scopes"),
    ("data_classification", "Data classification"),
    ("state_memory_design", "State and memory design"),
    ("model_behavior_policy", "Model behavior policy"),
    ("verification_design", "Verification design"),
    ("human_interaction", "Human interaction"),
    ("evaluation_evidence", "Evaluation evidence"),
    ("observability_audit", "Observability and audit"),
    ("versioning_deprecation", "Versioning and deprecation"),
)

DISPLAY_NAMES = dict(ACC_FIELDS)


@dataclass(frozen=True)
class ACCDocument:
    capability_owner: str = ""
    purpose_nonpurpose: str = ""
    autonomy_level: AutonomyLevel | None = None
    interaction_topology: str = ""
    io_schemas: str = ""
    tool_scopes: str = ""
    data_classification: str = ""
    state_memory_design: str = ""
    model_behavior_policy: str = ""
    verification_design: str = ""
    human_interaction: str = ""
    evaluation_evidence: str = ""
    observability_audit: str = ""
    versioning_deprecation: str = ""


@dataclass(frozen=True)
class Finding:
    field: str  # display name
    kind: str  # "missing" or "inconsistent"
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def valid(self) -> bool:
        return not self.findings


def _is_empty(attr: str, value) -> bool:
    if attr == "autonomy_level":
        return value is None
    return not str(value).strip()


def validate_acc(doc: ACCDocument) -> ValidationReport:
    """Check completeness and the autonomy/human-interaction consistency rule."""
    findings: list[Finding] = []
    for attr, display in ACC_FIELDS:
        if _is_empty(attr, getattr(doc, attr)):
            findings.append(
                Finding(field=display, kind="missing", message=f"{display} is missing or empty")
            )
    if (
        doc.autonomy_level is not None
        and doc.autonomy_level >= AutonomyLevel.L3_BoundedExecute
        and _is_empty("human_interaction", doc.human_interaction)
    ):
        findings.append(
            Finding(
                field=DISPLAY_NAMES["human_interaction"],
                kind="inconsistent",
                message=(
                    f"autonomy {doc.autonomy_level.name} requires declared "
                    "human interaction triggers"
                ),
            )
        )
    return ValidationReport(findings=tuple(findings))


def acc_from_dict(raw: dict) -> ACCDocument:
    """Build a document from a mapping with one entry per contract field."""
    raw = dict(raw)
    known = {f.name for f in fields(ACCDocument)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown ACC fields: {sorted(unknown)}")
    if "autonomy_level" in raw and raw["autonomy_level"]:
        raw["autonomy_level"] = AutonomyLevel.parse(str(raw["autonomy_level"]))
    elif "autonomy_level" in raw:
        raw["autonomy_level"] = None
    return ACCDocument(**raw)


def load_acc(path: str | Path) -> ACCDocument:
    """Read an ACC from a TOML file with one entry per contract field."""
    with open(path, "rb") as fh:
        return acc_from_dict(tomllib.load(fh))
