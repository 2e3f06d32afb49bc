from __future__ import annotations

import pytest

from agentarch.model import calibrated_coefficients, default_coefficients
from agentarch.profiles import builtin_profiles
from agentarch.tasks import TaskSetSpec, generate_task_set


@pytest.fixture(scope="session")
def default_task_set():
    """The full seeded population used by the published-table checks."""
    return generate_task_set(TaskSetSpec())


@pytest.fixture(scope="session")
def task_columns(default_task_set):
    return default_task_set.columns()


@pytest.fixture(scope="session")
def small_task_set():
    return generate_task_set(TaskSetSpec(n_tasks=500, seed=11))


@pytest.fixture(scope="session")
def coeffs():
    """Committed calibrated coefficients."""
    return calibrated_coefficients()


@pytest.fixture(scope="session")
def raw_coeffs():
    """Code-default (uncalibrated) coefficients for property tests."""
    return default_coefficients()


@pytest.fixture(scope="session")
def profiles():
    return builtin_profiles()


@pytest.fixture(scope="session")
def profiles_by_id(profiles):
    return {p.id: p for p in profiles}
