#!/usr/bin/env python3
"""Staged calibration pipeline.

Fits the model stage by stage against the embedded target table (handoff
baselines, escalation, competence, violations, poisoning, audit, cost,
latency, then the sweep families), finishing with a joint direct-search
polish. Writes the resulting ``coefficients.json`` and ``profiles.toml``
into the package data directory so the shipped harness reproduces the
published tables without refitting.

Run from the repository root:

    python scripts/fit_coefficients.py [--polish-budget N] [--dry-run]
"""

from __future__ import annotations

import argparse
import copy
import math
import sys
import time
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from agentarch.calibration import CalibrationTarget, calibrate, loss
from agentarch.experiments import load_experiment_targets
from agentarch.metrics import aggregate
from agentarch.model import (
    CoefficientSet,
    coefficients_to_dict,
    default_coefficients,
    get_coefficient,
    save_coefficients,
    simulate_task_set,
    with_coefficients,
)
from agentarch.profiles import resolve_profile
from agentarch.tasks import TaskSetSpec, generate_task_set, stress_subset

SEED = 7
DATA_DIR = Path(__file__).resolve().parent.parent / "src" / "agentarch" / "data"

HANDOFF_TARGETS = {"a0": 1.01, "a1": 6.25, "a2": 2.37, "a3": 4.51, "a4": 2.01}

# Cells the model cannot reach without breaking fitted cells elsewhere
# (audit has no policy term; the success equation has no memory term; the
# gate channel that separates the governed and ungoverned violation rates
# necessarily reopens when gates are ablated). Kept in reports, excluded
# from the joint polish so they do not distort everything else.
UNFITTABLE = {
    ("a4_no_policy", "audit_pct"),
    ("a4_no_capability_map_acc", "audit_pct"),
    ("a4_no_human_gates", "violations_per_1k"),
    ("a4_no_memory_governance", "functional_pct"),
}


def flat(profile_data: dict) -> dict:
    return {**profile_data["profiles"], **profile_data["sweep"]}


def pick(
    targets: dict[str, tuple[CalibrationTarget, ...]],
    metrics: set[str],
    experiments: set[str] | None = None,
    profiles: set[str] | None = None,
) -> list[CalibrationTarget]:
    out = []
    for experiment, group in targets.items():
        if experiments and experiment not in experiments:
            continue
        for t in group:
            if t.metric in metrics and (profiles is None or t.profile_id in profiles):
                out.append(t)
    return out


def stage_fit(
    name: str,
    coeffs: CoefficientSet,
    targets: list[CalibrationTarget],
    task_set,
    free: list[str],
    overrides: dict,
    budget: int = 600,
) -> CoefficientSet:
    t0 = time.time()
    result = calibrate(
        initial=coeffs,
        targets=targets,
        task_set=task_set,
        budget=budget,
        seed=SEED,
        free_params=free,
        profile_overrides=overrides,
    )
    within = sum(abs(r) <= 1.0 for r in result.residuals)
    print(
        f"[{name}] loss={result.total_loss:8.3f} within={within}/{len(result.residuals)} "
        f"evals={result.evaluations} ({time.time() - t0:.1f}s)"
    )
    return result.coefficients


def solve_handoff_bases(coeffs, profile_data, task_set) -> None:
    """Iteratively set per-profile handoff_base so mean handoffs hit targets."""
    cols = task_set.columns()
    for _ in range(5):
        overrides = flat(profile_data)
        for pid, target in HANDOFF_TARGETS.items():
            profile = resolve_profile(pid, overrides)
            mean = aggregate(simulate_task_set(cols, profile, coeffs, SEED)).mean_handoffs
            hb = profile_data["profiles"][pid]["handoff_base"]
            profile_data["profiles"][pid]["handoff_base"] = max(0.0, hb + (target - mean))
    overrides = flat(profile_data)
    for pid, target in HANDOFF_TARGETS.items():
        profile = resolve_profile(pid, overrides)
        mean = aggregate(simulate_task_set(cols, profile, coeffs, SEED)).mean_handoffs
        print(f"[handoff] {pid}: mean={mean:.3f} target={target}")


def ratio_tune(
    coeffs, task_set, overrides, path: str, feature_value: float,
    full_id: str, ablated_id: str, metric: str, target_ratio: float,
    iterations: int = 4,
) -> CoefficientSet:
    """Nudge one coefficient so an ablation ratio lands on target."""
    cols = task_set.columns()

    def measure(current_coeffs):
        full = aggregate(
            simulate_task_set(cols, resolve_profile(full_id, overrides), current_coeffs, SEED)
        ).metric(metric)
        abl = aggregate(
            simulate_task_set(cols, resolve_profile(ablated_id, overrides), current_coeffs, SEED)
        ).metric(metric)
        return abl / full

    for _ in range(iterations):
        actual_ratio = measure(coeffs)
        current = get_coefficient(coeffs, path)
        adjusted = current + (math.log(target_ratio) - math.log(actual_ratio)) / feature_value
        coeffs = with_coefficients(coeffs, {path: max(0.0, adjusted)})
    final_ratio = measure(coeffs)
    print(f"[ratio] {path}={get_coefficient(coeffs, path):.4f} ({metric} ratio -> {final_ratio:.3f})")
    return coeffs


def fit_sweep_family(coeffs, profile_data, task_set, family: str, targets) -> CoefficientSet:
    """Fit one family's handoff growth and competence against its figure points."""
    fam_targets = [t for t in targets if t.profile_id.startswith(f"{family}_")]
    beta_path = f"success.beta.{family}"
    raw = profile_data["sweep"][family]
    x0 = np.array(
        [raw["handoff_base"], raw["prolif_rate"], raw["prolif_exponent"],
         get_coefficient(coeffs, beta_path)]
    )
    bounds = [(0.3, 3.0), (0.002, 0.25), (1.0, 1.6), (0.0, 3.0)]

    def objective(x):
        data = copy.deepcopy(profile_data)
        data["sweep"][family].update(
            handoff_base=float(x[0]), prolif_rate=float(x[1]), prolif_exponent=float(x[2])
        )
        trial = with_coefficients(coeffs, {beta_path: float(x[3])})
        return loss(trial, fam_targets, task_set, SEED, profile_overrides=flat(data))

    result = minimize(
        objective, x0, method="Nelder-Mead", bounds=bounds,
        options={"maxfev": 500, "xatol": 1e-4, "fatol": 1e-4},
    )
    x = result.x
    profile_data["sweep"][family].update(
        handoff_base=float(x[0]), prolif_rate=float(x[1]), prolif_exponent=float(x[2])
    )
    coeffs = with_coefficients(coeffs, {beta_path: float(x[3])})
    print(
        f"[sweep:{family}] loss={result.fun:.3f} hb={x[0]:.4f} rate={x[1]:.5f} "
        f"exp={x[2]:.4f} beta={x[3]:.4f}"
    )
    return coeffs


def report_fit(coeffs, profile_data, task_set, targets_by_exp) -> int:
    overrides = flat(profile_data)
    cols_full = task_set.columns()
    cols_stress = stress_subset(task_set).columns()
    failures = 0
    for experiment in ("comparison", "ablation", "sweep", "stress"):
        for t in targets_by_exp.get(experiment, ()):
            cols = cols_stress if t.context == "stress" else cols_full
            summary = aggregate(
                simulate_task_set(cols, resolve_profile(t.profile_id, overrides), coeffs, SEED)
            )
            actual = summary.metric(t.metric)
            ok = abs(actual - t.value) <= t.tolerance
            failures += not ok
            flag = "  " if ok else "->"
            print(
                f"{flag} {experiment:10s} {t.profile_id:28s} {t.metric:20s} "
                f"{actual:8.2f} vs {t.value:8.2f} (+/-{t.tolerance:.2f})"
            )
    print(f"target cells out of tolerance: {failures}")
    return failures


def write_profiles_toml(profile_data: dict, path: Path) -> None:
    lines = [
        "# Architecture control strengths and handoff baselines.",
        "# These values travel with every report; the harness config may override any",
        "# of them. Calibrated together with coefficients.json (see scripts/).",
        "",
    ]

    def fmt(value):
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, (int,)):
            return str(value)
        if isinstance(value, float):
            return f"{value:.6g}"
        return f'"{value}"'

    for section in ("profiles", "sweep"):
        for pid, raw in profile_data[section].items():
            lines.append(f"[{section}.{pid}]")
            for key, value in raw.items():
                if key == "features":
                    continue
                lines.append(f"{key} = {fmt(value)}")
            if "features" in raw:
                lines.append("")
                lines.append(f"[{section}.{pid}.features]")
                for key, value in raw["features"].items():
                    lines.append(f"{key} = {fmt(value)}")
            lines.append("")
    path.write_text("\n".join(lines))


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--polish-budget", type=int, default=1200)
    parser.add_argument("--dry-run", action="store_true", help="fit but do not write data files")
    args = parser.parse_args()

    t_start = time.time()
    with open(DATA_DIR / "profiles.toml", "rb") as fh:
        profile_data = tomllib.load(fh)
    targets_by_exp = load_experiment_targets()
    all_targets = [t for group in targets_by_exp.values() for t in group]

    task_set = generate_task_set(TaskSetSpec())
    coeffs = default_coefficients()

    # 1. handoff baselines (config), then escalation, competence, violations,
    #    poisoning, audit, cost, latency, sweep families, joint polish.
    solve_handoff_bases(coeffs, profile_data, task_set)
    overrides = flat(profile_data)

    esc_targets = pick(targets_by_exp, {"escalation_pct"})
    coeffs = stage_fit(
        "escalation", coeffs, esc_targets, task_set,
        ["escalation.eta_base", "escalation.eta_risk", "escalation.eta_amb",
         "escalation.eta_gate", "escalation.eta_floor"],
        overrides, budget=500,
    )

    func_targets = pick(targets_by_exp, {"functional_pct"}, experiments={"comparison"})
    coeffs = stage_fit(
        "competence", coeffs, func_targets, task_set,
        [f"success.beta.{pid}" for pid in ("a0", "a1", "a2", "a3", "a4")],
        overrides, budget=400,
    )

    viol_targets = pick(
        targets_by_exp, {"violations_per_1k"}, experiments={"comparison", "stress"},
    ) + pick(
        targets_by_exp, {"violations_per_1k"},
        profiles={"a4", "a4_no_policy", "a4_no_least_privilege"},
    )
    coeffs = stage_fit(
        "violations", coeffs, viol_targets, task_set,
        ["violation.alpha", "violation.lambda_r", "violation.lambda_x",
         "violation.lambda_g", "escalation.violation_suppression"],
        overrides, budget=700,
    )
    coeffs = ratio_tune(
        coeffs, task_set, overrides, "violation.lambda_p", 0.95,
        "a4", "a4_no_policy", "violations_per_1k", 44.9 / 23.9,
    )
    coeffs = ratio_tune(
        coeffs, task_set, overrides, "violation.lambda_l", 0.95,
        "a4", "a4_no_least_privilege", "violations_per_1k", 43.0 / 23.9,
    )

    poison_targets = pick(
        targets_by_exp, {"poison_per_1k"}, experiments={"comparison", "stress"},
    ) + pick(targets_by_exp, {"poison_per_1k"}, profiles={"a4", "a4_no_memory_governance"})
    coeffs = stage_fit(
        "poisoning", coeffs, poison_targets, task_set,
        ["poisoning.mu_base", "poisoning.mu_adv", "poisoning.mu_h"],
        overrides, budget=500,
    )
    coeffs = ratio_tune(
        coeffs, task_set, overrides, "poisoning.mu_mem", 0.95,
        "a4", "a4_no_memory_governance", "poison_per_1k", 28.5 / 14.4,
    )

    audit_targets = pick(targets_by_exp, {"audit_pct"})
    coeffs = stage_fit(
        "audit", coeffs, audit_targets, task_set,
        ["audit.audit_base", "audit.audit_gain"],
        overrides, budget=300,
    )

    cost_targets = pick(targets_by_exp, {"mean_cost"}, experiments={"comparison", "ablation"})
    coeffs = stage_fit(
        "cost", coeffs, cost_targets, task_set,
        ["cost_latency.unit_step", "cost_latency.unit_handoff",
         "cost_latency.unit_verify", "cost_latency.unit_escalation"],
        overrides, budget=400,
    )

    latency_targets = pick(targets_by_exp, {"p95_latency"})
    coeffs = stage_fit(
        "latency", coeffs, latency_targets, task_set,
        ["cost_latency.latency_base", "cost_latency.latency_per_handoff",
         "cost_latency.latency_escalation", "cost_latency.latency_noise_mu",
         "cost_latency.latency_noise_sigma"],
        overrides, budget=500,
    )

    sweep_targets = list(targets_by_exp.get("sweep", ()))
    for family in ("cead", "ungoverned"):
        coeffs = fit_sweep_family(coeffs, profile_data, task_set, family, sweep_targets)
    overrides = flat(profile_data)

    if args.polish_budget > 0:
        polish_targets = [
            t for t in all_targets if (t.profile_id, t.metric) not in UNFITTABLE
        ]
        polish_free = (
            [f"success.beta.{k}" for k in ("a0", "a1", "a2", "a3", "a4", "cead", "ungoverned")]
            + ["violation.alpha", "violation.lambda_r", "violation.lambda_x",
               "violation.lambda_g", "escalation.violation_suppression",
               "poisoning.mu_base", "poisoning.mu_adv", "poisoning.mu_h",
               "escalation.eta_base", "escalation.eta_gate", "escalation.eta_floor",
               "audit.audit_base", "audit.audit_gain",
               "cost_latency.unit_step", "cost_latency.unit_handoff",
               "cost_latency.unit_escalation",
               "cost_latency.latency_base", "cost_latency.latency_per_handoff",
               "cost_latency.latency_escalation"]
        )
        coeffs = stage_fit(
            "polish", coeffs, polish_targets, task_set, polish_free, overrides,
            budget=args.polish_budget,
        )

    failures = report_fit(coeffs, profile_data, task_set, targets_by_exp)

    if not args.dry_run:
        save_coefficients(coeffs, DATA_DIR / "coefficients.json")
        write_profiles_toml(profile_data, DATA_DIR / "profiles.toml")
        print(f"wrote {DATA_DIR / 'coefficients.json'}")
        print(f"wrote {DATA_DIR / 'profiles.toml'}")
    print(f"total time: {time.time() - t_start:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
