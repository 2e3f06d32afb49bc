"""Architecture profiles: the five built-in designs, sweep families, ablations.

A profile is an immutable value: an agent count, a topology, a maximum
autonomy level, a baseline handoff intensity, and a vector of control
strengths in [0, 1]. The built-in strengths ship in ``data/profiles.toml``
so that every report can embed the exact numbers a run used; the harness
config may override any of them.
"""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib


class AutonomyLevel(enum.IntEnum):
    """Action-authority ladder, ordered from observe-only to high autonomy."""

    L0_Observe = 0
    L1_Draft = 1
    L2_Prepare = 2
    L3_BoundedExecute = 3
    L4_HighAutonomy = 4

    @classmethod
    def parse(cls, text: str) -> "AutonomyLevel":
        name = text.strip()
        for level in cls:
            if name == level.name or name == level.name.split("_")[0]:
                return level
        raise ValueError(f"unknown autonomy level: {text!r}")


class Topology(enum.Enum):
    MonoAgent = "MonoAgent"
    Swarm = "Swarm"
    Brokered = "Brokered"
    Grid = "Grid"
    CapabilityAligned = "CapabilityAligned"


FEATURE_NAMES = (
    "contracts",
    "registry",
    "specialization",
    "policy",
    "verifier",
    "protocol_guards",
    "least_privilege",
    "memory_governance",
    "human_gates",
    "capability_map_acc",
    "audit_instrumentation",
)


@dataclass(frozen=True)
class FeatureStrengths:
    """Per-control strengths, each in [0, 1]."""

    contracts: float = 0.0
    registry: float = 0.0
    specialization: float = 0.0
    policy: float = 0.0
    verifier: float = 0.0
    protocol_guards: float = 0.0
    least_privilege: float = 0.0
    memory_governance: float = 0.0
    human_gates: float = 0.0
    capability_map_acc: float = 0.0
    audit_instrumentation: float = 0.0

    def __post_init__(self) -> None:
        for name in FEATURE_NAMES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"feature {name} must be in [0, 1], got {value}")

    def replace(self, **changes: float) -> "FeatureStrengths":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in FEATURE_NAMES}


@dataclass(frozen=True)
class ArchitectureProfile:
    id: str
    name: str
    agent_count: int
    topology: Topology
    features: FeatureStrengths
    max_autonomy: AutonomyLevel
    handoff_base: float
    family: str = ""  # coefficient family key; defaults to id

    def __post_init__(self) -> None:
        if self.agent_count < 1:
            raise ValueError("agent_count must be >= 1")
        if self.handoff_base < 0:
            raise ValueError("handoff_base must be >= 0")
        if not self.family:
            object.__setattr__(self, "family", self.id)


class AblationTag(enum.Enum):
    """Controls that can be switched off one at a time."""

    CapabilityMapACC = "capability_map_acc"
    RuntimePolicy = "policy"
    VerifierGates = "verifier"
    LeastPrivilege = "least_privilege"
    MemoryGovernance = "memory_governance"
    HumanGates = "human_gates"


# Display labels for ablation report rows, keyed by tag.
ABLATION_LABELS: dict[AblationTag, str] = {
    AblationTag.CapabilityMapACC: "- Capability map and ACCs",
    AblationTag.RuntimePolicy: "- Runtime policy engine",
    AblationTag.VerifierGates: "- Verifier/critic gates",
    AblationTag.LeastPrivilege: "- Least-privilege tool scopes",
    AblationTag.MemoryGovernance: "- Memory governance",
    AblationTag.HumanGates: "- Human approval gates",
}

# Feature fields zeroed by each tag. Dropping the capability map also drops
# contract discipline, since the contracts are what the map is made of.
_ABLATION_FIELDS: dict[AblationTag, tuple[str, ...]] = {
    AblationTag.CapabilityMapACC: ("capability_map_acc", "contracts"),
    AblationTag.RuntimePolicy: ("policy",),
    AblationTag.VerifierGates: ("verifier",),
    AblationTag.LeastPrivilege: ("least_privilege",),
    AblationTag.MemoryGovernance: ("memory_governance",),
    AblationTag.HumanGates: ("human_gates",),
}


def ablated(profile: ArchitectureProfile, tag: AblationTag) -> ArchitectureProfile:
    """Return a copy of ``profile`` with the tagged control(s) zeroed."""
    zeroed = profile.features.replace(**{f: 0.0 for f in _ABLATION_FIELDS[tag]})
    suffix = f"no_{tag.value}"
    if profile.id.endswith(suffix):  # already ablated: a no-op copy
        return dataclasses.replace(profile, features=zeroed)
    return dataclasses.replace(
        profile,
        id=f"{profile.id}_{suffix}",
        name=f"{profile.name} {ABLATION_LABELS[tag]}",
        features=zeroed,
        family=profile.family,
    )


@dataclass(frozen=True)
class SweepFamily:
    """Template for the proliferation sweep: fixed features, varying size.

    ``prolif_rate`` and ``prolif_exponent`` parameterise how the baseline
    handoff intensity grows with agent count (see the outcome module's
    handoff model).
    """

    id: str
    name: str
    features: FeatureStrengths
    topology: Topology
    max_autonomy: AutonomyLevel
    handoff_base: float
    prolif_rate: float
    prolif_exponent: float


SWEEP_AGENT_COUNTS = (1, 2, 4, 8, 16, 32, 64)

BUILTIN_PROFILE_IDS = ("a0", "a1", "a2", "a3", "a4")
SWEEP_FAMILY_IDS = ("cead", "ungoverned")


@lru_cache(maxsize=1)
def _load_profile_text() -> bytes:
    return resources.files("agentarch.data").joinpath("profiles.toml").read_bytes()


def _load_profile_data() -> dict:
    return tomllib.loads(_load_profile_text().decode("utf-8"))


def _deep_update(base: dict, overrides: Mapping) -> dict:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), dict):
            merged[key] = _deep_update(merged[key], value)
        else:
            merged[key] = value
    return merged


def _profile_from_dict(pid: str, raw: dict) -> ArchitectureProfile:
    return ArchitectureProfile(
        id=pid,
        name=raw["name"],
        agent_count=int(raw["agent_count"]),
        topology=Topology(raw["topology"]),
        features=FeatureStrengths(**raw["features"]),
        max_autonomy=AutonomyLevel.parse(raw["max_autonomy"]),
        handoff_base=float(raw["handoff_base"]),
    )


def builtin_profiles(
    overrides: Mapping | None = None,
) -> tuple[ArchitectureProfile, ...]:
    """Return the five built-in profiles, in id order a0..a4.

    ``overrides`` is an optional nested mapping (profile id -> fields,
    with ``features`` merged field-wise) from the harness config.
    """
    data = _load_profile_data()["profiles"]
    if overrides:
        data = {
            pid: _deep_update(raw, overrides.get(pid, {})) for pid, raw in data.items()
        }
    out = []
    for pid in BUILTIN_PROFILE_IDS:
        profile = _profile_from_dict(pid, data[pid])
        if profile.agent_count == 1 and profile.topology is not Topology.MonoAgent:
            raise ValueError(f"built-in profile {pid}: single agent requires MonoAgent topology")
        out.append(profile)
    return tuple(out)


def sweep_families(overrides: Mapping | None = None) -> dict[str, SweepFamily]:
    """Return the sweep family templates keyed by family id."""
    data = _load_profile_data()
    profile_data = data["profiles"]
    sweep_data = data["sweep"]
    if overrides:
        sweep_data = {
            fid: _deep_update(raw, overrides.get(fid, {}))
            for fid, raw in sweep_data.items()
        }
    families = {}
    for fid in SWEEP_FAMILY_IDS:
        raw = dict(sweep_data[fid])
        source = raw.pop("features_from", None)
        if source is not None and "features" not in raw:
            feature_fields = profile_data[source]["features"]
        else:
            feature_fields = raw["features"]
        families[fid] = SweepFamily(
            id=fid,
            name=raw["name"],
            features=FeatureStrengths(**feature_fields),
            topology=Topology(raw["topology"]),
            max_autonomy=AutonomyLevel.parse(raw["max_autonomy"]),
            handoff_base=float(raw["handoff_base"]),
            prolif_rate=float(raw["prolif_rate"]),
            prolif_exponent=float(raw["prolif_exponent"]),
        )
    return families


def sweep_profile(
    family: str | SweepFamily,
    n_agents: int,
    overrides: Mapping | None = None,
) -> ArchitectureProfile:
    """Instantiate a sweep family at a supported agent count."""
    if n_agents not in SWEEP_AGENT_COUNTS:
        raise ValueError(
            f"n_agents must be one of {SWEEP_AGENT_COUNTS}, got {n_agents}"
        )
    if isinstance(family, str):
        key = family.lower()
        if key not in SWEEP_FAMILY_IDS:
            raise ValueError(f"unknown sweep family: {family!r}")
        family = sweep_families(overrides)[key]

    from .model import proliferation_scaled_handoff_base

    scaled = proliferation_scaled_handoff_base(
        family.handoff_base, n_agents, family.prolif_rate, family.prolif_exponent
    )
    return ArchitectureProfile(
        id=f"{family.id}_{n_agents}",
        name=f"{family.name} (n={n_agents})",
        agent_count=n_agents,
        topology=family.topology if n_agents > 1 else Topology.MonoAgent,
        features=family.features,
        max_autonomy=family.max_autonomy,
        handoff_base=scaled,
        family=family.id,
    )


def resolve_profile(
    profile_id: str, overrides: Mapping | None = None
) -> ArchitectureProfile:
    """Map a profile id to its profile.

    Supports built-ins (``a0``..``a4``), sweep points (``cead_8``,
    ``ungoverned_64``), and ablated variants (``a4_no_policy``).
    """
    if "_no_" in profile_id:
        base_id, suffix = profile_id.split("_no_", 1)
        try:
            tag = AblationTag(suffix)
        except ValueError:
            raise ValueError(f"unknown ablation suffix in profile id: {profile_id!r}") from None
        return ablated(resolve_profile(base_id, overrides), tag)
    if profile_id in BUILTIN_PROFILE_IDS:
        by_id = {p.id: p for p in builtin_profiles(overrides)}
        return by_id[profile_id]
    for fid in SWEEP_FAMILY_IDS:
        prefix = f"{fid}_"
        if profile_id.startswith(prefix):
            tail = profile_id[len(prefix):]
            if tail.isdigit():
                return sweep_profile(fid, int(tail), overrides)
    raise ValueError(f"unknown profile id: {profile_id!r}")
