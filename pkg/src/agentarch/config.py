"""Harness configuration: one declarative TOML file drives every run."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .model import (
    CoefficientSet,
    calibrated_coefficients,
    coefficients_digest,
    load_coefficients,
)
from .tasks import TaskSetSpec, spec_from_dict

KNOWN_EXPERIMENTS = ("comparison", "ablation", "sweep", "stress")


class ConfigError(ValueError):
    """Configuration problem; the CLI maps this to exit code 2."""


@dataclass(frozen=True)
class HarnessConfig:
    tasks: TaskSetSpec = field(default_factory=TaskSetSpec)
    master_seed: int = 7
    out_dir: Path = Path("out")
    experiments: tuple[str, ...] = KNOWN_EXPERIMENTS
    jobs: int = 1
    coefficients_path: str = ""  # empty -> packaged calibrated set
    targets_path: str = ""  # empty -> packaged target table
    profile_overrides: dict = field(default_factory=dict)
    acc_documents: dict = field(default_factory=dict)  # name -> field mapping

    def validate(self) -> None:
        try:
            self.tasks.validate()
        except ValueError as exc:
            raise ConfigError(f"tasks.{exc}") from exc
        for name in self.experiments:
            if name not in KNOWN_EXPERIMENTS:
                raise ConfigError(f"unknown experiment: {name!r}")
        if self.jobs < 1:
            raise ConfigError("run.jobs must be >= 1")
        if self.coefficients_path and not Path(self.coefficients_path).exists():
            raise ConfigError(f"coefficient file not found: {self.coefficients_path}")
        if self.targets_path and not Path(self.targets_path).exists():
            raise ConfigError(f"targets file not found: {self.targets_path}")

    def coefficients(self) -> CoefficientSet:
        if self.coefficients_path:
            path = Path(self.coefficients_path)
            if not path.exists():
                raise ConfigError(f"coefficient file not found: {path}")
            return load_coefficients(path)
        return calibrated_coefficients()

    def as_dict(self) -> dict:
        return {
            "tasks": dataclasses.asdict(self.tasks),
            "master_seed": self.master_seed,
            "experiments": list(self.experiments),
            "jobs": self.jobs,
            "coefficients_path": self.coefficients_path,
            "targets_path": self.targets_path,
            "profile_overrides": self.profile_overrides,
        }

    def fingerprint(self) -> str:
        """Content digest over the semantic inputs of a run.

        Worker count and output paths are execution details: results must be
        byte-identical across them, so they stay out of the digest.
        """
        payload = {
            "tasks": dataclasses.asdict(self.tasks),
            "master_seed": self.master_seed,
            "profile_overrides": self.profile_overrides,
            "coefficients_digest": coefficients_digest(self.coefficients()),
            "targets_digest": self._targets_digest(),
        }
        canonical = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def _targets_digest(self) -> str:
        if self.targets_path:
            data = Path(self.targets_path).read_bytes()
        else:
            from importlib import resources

            data = resources.files("agentarch.data").joinpath("targets.csv").read_bytes()
        return hashlib.sha256(data).hexdigest()[:16]


def load_config(path: str | Path) -> HarnessConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config file {path}: {exc}") from exc

    run = raw.get("run", {})
    try:
        tasks = spec_from_dict(raw.get("tasks", {}))
    except ValueError as exc:
        raise ConfigError(f"tasks.{exc}") from exc

    overrides = {}
    if "profiles" in raw:
        overrides["profiles"] = raw["profiles"]
    if "sweep" in raw:
        overrides["sweep"] = raw["sweep"]

    acc_documents = raw.get("acc", {})
    if not isinstance(acc_documents, dict) or not all(
        isinstance(v, dict) for v in acc_documents.values()
    ):
        raise ConfigError("[acc] must map document names to field tables")

    config = HarnessConfig(
        tasks=tasks,
        master_seed=int(run.get("master_seed", 7)),
        out_dir=Path(run.get("out_dir", "out")),
        experiments=tuple(run.get("experiments", KNOWN_EXPERIMENTS)),
        jobs=int(run.get("jobs", 1)),
        coefficients_path=str(raw.get("coefficients", {}).get("path", "")),
        targets_path=str(raw.get("targets", {}).get("path", "")),
        profile_overrides=overrides,
        acc_documents=acc_documents,
    )
    config.validate()
    return config


def default_config() -> HarnessConfig:
    return HarnessConfig()
