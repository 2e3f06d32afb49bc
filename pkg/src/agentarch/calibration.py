"""Fitting the free coefficients against published aggregate targets.

The published evaluation reports outcomes but not the coefficients that
generated them, so the coefficient set is recovered numerically: simulate
every targeted profile with a fixed seed (common random numbers make the
objective deterministic), normalise each residual by its tolerance, and
minimise the weighted sum of squares with a box-constrained Nelder-Mead
search that periodically restarts around the incumbent.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .metrics import METRIC_NAMES, aggregate
from .model import (
    CoefficientSet,
    coefficient_bounds,
    get_coefficient,
    iter_coefficient_paths,
    simulate_task_set,
    with_coefficients,
)
from .profiles import resolve_profile
from .tasks import TaskColumns, TaskSet, stress_subset

CONTEXTS = ("full", "stress")


@dataclass(frozen=True)
class CalibrationTarget:
    profile_id: str
    metric: str
    value: float
    weight: float = 1.0
    tolerance: float = 1.0
    context: str = "full"

    def validate(self) -> None:
        if self.metric not in METRIC_NAMES:
            raise ValueError(f"unknown metric in target: {self.metric!r}")
        if self.context not in CONTEXTS:
            raise ValueError(f"unknown context in target: {self.context!r}")
        if self.weight < 0:
            raise ValueError("target weight must be >= 0")
        if self.tolerance <= 0:
            raise ValueError("target tolerance must be > 0")


@dataclass(frozen=True)
class CalibrationResult:
    coefficients: CoefficientSet
    residuals: tuple[float, ...]
    total_loss: float
    evaluations: int
    converged: bool


def load_targets_csv(path: str | Path) -> tuple[CalibrationTarget, ...]:
    """Read targets from CSV: (profile_id, metric, value, weight, tolerance)
    with an optional leading ``context`` column."""
    targets = []
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader)
        has_context = header[0].strip().lower() == "context"
        for row in reader:
            if not row:
                continue
            if has_context:
                context, pid, metric, value, weight, tolerance = row[:6]
            else:
                context = "full"
                pid, metric, value, weight, tolerance = row[:5]
            targets.append(
                CalibrationTarget(
                    profile_id=pid.strip(),
                    metric=metric.strip(),
                    value=float(value),
                    weight=float(weight),
                    tolerance=float(tolerance),
                    context=context.strip(),
                )
            )
    return tuple(targets)


def _simulation_plan(
    targets: Sequence[CalibrationTarget],
    profile_overrides: Mapping | None,
) -> list[tuple[str, str, object]]:
    """Unique (context, profile_id, profile) triples referenced by targets."""
    plan = []
    seen = set()
    for t in targets:
        t.validate()
        key = (t.context, t.profile_id)
        if key in seen:
            continue
        seen.add(key)
        plan.append((t.context, t.profile_id, resolve_profile(t.profile_id, profile_overrides)))
    return plan


def _residuals(
    coeffs: CoefficientSet,
    targets: Sequence[CalibrationTarget],
    cols_by_context: Mapping[str, TaskColumns],
    seed: int,
    plan: list[tuple[str, str, object]],
) -> tuple[float, tuple[float, ...]]:
    summaries = {}
    for context, pid, profile in plan:
        outcomes = simulate_task_set(cols_by_context[context], profile, coeffs, seed)
        summaries[(context, pid)] = aggregate(outcomes)
    residuals = []
    total = 0.0
    for t in targets:
        actual = summaries[(t.context, t.profile_id)].metric(t.metric)
        r = (actual - t.value) / t.tolerance
        residuals.append(r)
        total += t.weight * r * r
    return total, tuple(residuals)


def _context_columns(task_set: TaskSet, targets: Sequence[CalibrationTarget]) -> dict:
    cols = {"full": task_set.columns()}
    if any(t.context == "stress" for t in targets):
        cols["stress"] = stress_subset(task_set).columns()
    return cols


def loss(
    coeffs: CoefficientSet,
    targets: Sequence[CalibrationTarget],
    task_set: TaskSet,
    seed: int,
    profile_overrides: Mapping | None = None,
) -> float:
    """Weighted sum of squared tolerance-normalised residuals."""
    if not targets:
        raise ValueError("no calibration targets")
    plan = _simulation_plan(targets, profile_overrides)
    cols = _context_columns(task_set, targets)
    total, _ = _residuals(coeffs, targets, cols, seed, plan)
    return total


DEFAULT_RESTART_INTERVAL = 400


def calibrate(
    initial: CoefficientSet,
    targets: Sequence[CalibrationTarget],
    task_set: TaskSet,
    budget: int,
    seed: int,
    free_params: Sequence[str] | None = None,
    profile_overrides: Mapping | None = None,
    restart_interval: int = DEFAULT_RESTART_INTERVAL,
) -> CalibrationResult:
    """Box-constrained direct search from ``initial``, spending ``budget`` evals.

    ``free_params`` names the coefficient paths allowed to move (all of them
    by default). The simulation seed is held fixed throughout, so the
    objective -- and therefore the whole search -- is deterministic.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if not targets:
        raise ValueError("no calibration targets")

    plan = _simulation_plan(targets, profile_overrides)
    cols = _context_columns(task_set, targets)
    paths = list(free_params) if free_params is not None else list(iter_coefficient_paths(initial))
    for p in paths:
        coefficient_bounds(p)  # raises on unknown path
    lo = np.array([coefficient_bounds(p)[0] for p in paths])
    hi = np.array([coefficient_bounds(p)[1] for p in paths])
    span = hi - lo

    evals = 0
    best_coeffs = initial
    best_loss = math.inf
    best_residuals: tuple[float, ...] = ()

    def evaluate(coeffs: CoefficientSet) -> float:
        nonlocal evals, best_coeffs, best_loss, best_residuals
        total, residuals = _residuals(coeffs, targets, cols, seed, plan)
        evals += 1
        if total < best_loss:
            best_loss = total
            best_coeffs = coeffs
            best_residuals = residuals
        return total

    def objective(z: np.ndarray) -> float:
        z = np.clip(z, 0.0, 1.0)
        x = lo + z * span
        return evaluate(with_coefficients(initial, dict(zip(paths, x))))

    x0 = np.array([get_coefficient(initial, p) for p in paths])
    z0 = np.clip((x0 - lo) / np.where(span == 0, 1.0, span), 0.0, 1.0)
    evaluate(initial)

    rng = np.random.default_rng(seed)
    dim = len(paths)
    if dim > 0 and budget > 1:
        _nelder_mead(
            objective, z0, dim, budget, rng,
            restart_interval=restart_interval,
            evals_used=lambda: evals,
        )

    converged = all(abs(r) <= 1.0 for r in best_residuals)
    return CalibrationResult(
        coefficients=best_coeffs,
        residuals=best_residuals,
        total_loss=best_loss,
        evaluations=evals,
        converged=converged,
    )


def _nelder_mead(
    objective: Callable[[np.ndarray], float],
    z0: np.ndarray,
    dim: int,
    budget: int,
    rng: np.random.Generator,
    restart_interval: int,
    evals_used: Callable[[], int],
    step: float = 0.08,
) -> None:
    """Nelder-Mead in the unit box with periodic restarts around the incumbent.

    The objective clips and tracks the best point itself; this routine just
    drives the simplex until the evaluation budget runs out.
    """

    def make_simplex(center: np.ndarray, scale: float) -> tuple[list[np.ndarray], list[float]]:
        vertices = [np.clip(center, 0.0, 1.0)]
        for i in range(dim):
            v = vertices[0].copy()
            delta = scale if v[i] + scale <= 1.0 else -scale
            v[i] = min(1.0, max(0.0, v[i] + delta))
            vertices.append(v)
        values = []
        for v in vertices:
            if evals_used() >= budget:
                values.append(math.inf)
            else:
                values.append(objective(v))
        return vertices, values

    verts, vals = make_simplex(z0, step)
    next_restart = restart_interval

    while evals_used() < budget:
        order = np.argsort(vals, kind="stable")
        verts = [verts[i] for i in order]
        vals = [vals[i] for i in order]

        spread = max(vals[-1] - vals[0], 0.0)
        collapsed = max(np.max(np.abs(v - verts[0])) for v in verts[1:]) < 1e-9 if dim else True
        if evals_used() >= next_restart or collapsed or not math.isfinite(spread):
            next_restart = evals_used() + restart_interval
            jitter = rng.normal(0.0, 0.10, size=dim)
            verts, vals = make_simplex(np.clip(verts[0] + jitter, 0.0, 1.0), step)
            continue

        centroid = np.mean(verts[:-1], axis=0)
        reflected = np.clip(centroid + (centroid - verts[-1]), 0.0, 1.0)
        f_r = objective(reflected)
        if evals_used() >= budget:
            return
        if f_r < vals[0]:
            expanded = np.clip(centroid + 2.0 * (centroid - verts[-1]), 0.0, 1.0)
            f_e = objective(expanded)
            if f_e < f_r:
                verts[-1], vals[-1] = expanded, f_e
            else:
                verts[-1], vals[-1] = reflected, f_r
        elif f_r < vals[-2]:
            verts[-1], vals[-1] = reflected, f_r
        else:
            contracted = np.clip(centroid + 0.5 * (verts[-1] - centroid), 0.0, 1.0)
            f_c = objective(contracted)
            if f_c < vals[-1]:
                verts[-1], vals[-1] = contracted, f_c
            else:
                # shrink toward the best vertex
                for i in range(1, len(verts)):
                    if evals_used() >= budget:
                        return
                    verts[i] = np.clip(verts[0] + 0.5 * (verts[i] - verts[0]), 0.0, 1.0)
                    vals[i] = objective(verts[i])
