from __future__ import annotations

import dataclasses
import statistics

import pytest

from agentarch.calibration import (
    CalibrationTarget,
    calibrate,
    load_targets_csv,
    loss,
)
from agentarch.metrics import aggregate
from agentarch.model import (
    CoefficientSet,
    coefficient_bounds,
    default_coefficients,
    get_coefficient,
    iter_coefficient_paths,
    simulate_task_set,
    with_coefficients,
)
from agentarch.profiles import resolve_profile
from agentarch.tasks import TaskSetSpec, generate_task_set

SEED = 31


@pytest.fixture(scope="module")
def fit_task_set():
    return generate_task_set(TaskSetSpec(n_tasks=1500, seed=19))


def observed_targets(coeffs, task_set, profile_ids, metrics, seed, tolerance=1.0):
    """Targets whose values are exactly what the given coefficients produce."""
    targets = []
    for pid in profile_ids:
        summary = aggregate(
            simulate_task_set(task_set.columns(), resolve_profile(pid), coeffs, seed)
        )
        for metric in metrics:
            targets.append(
                CalibrationTarget(
                    profile_id=pid, metric=metric, value=summary.metric(metric),
                    weight=1.0, tolerance=tolerance,
                )
            )
    return targets


class TestLoss:
    def test_zero_when_targets_match_simulation(self, raw_coeffs, fit_task_set):
        targets = observed_targets(
            raw_coeffs, fit_task_set, ["a0", "a2"], ["safe_pct", "violations_per_1k"], SEED
        )
        assert loss(raw_coeffs, targets, fit_task_set, SEED) == 0.0

    def test_linear_in_weights(self, raw_coeffs, fit_task_set):
        targets = [
            CalibrationTarget("a0", "safe_pct", 99.0, weight=1.0, tolerance=2.0),
            CalibrationTarget("a2", "mean_cost", 0.0, weight=2.0, tolerance=0.5),
        ]
        doubled = [dataclasses.replace(t, weight=2 * t.weight) for t in targets]
        base = loss(raw_coeffs, targets, fit_task_set, SEED)
        assert base > 0
        assert loss(raw_coeffs, doubled, fit_task_set, SEED) == pytest.approx(2 * base)

    def test_self_consistency_below_reseeded_noise_floor(self, raw_coeffs, fit_task_set):
        targets = observed_targets(
            raw_coeffs, fit_task_set, ["a1"], ["safe_pct", "poison_per_1k"], SEED
        )
        own = loss(raw_coeffs, targets, fit_task_set, SEED)
        floor = min(
            loss(raw_coeffs, targets, fit_task_set, SEED + 1 + k) for k in range(10)
        )
        assert own == 0.0
        assert own < floor

    def test_unknown_profile_rejected(self, raw_coeffs, fit_task_set):
        bad = [CalibrationTarget("a9", "safe_pct", 50.0, tolerance=1.0)]
        with pytest.raises(ValueError, match="unknown profile id"):
            loss(raw_coeffs, bad, fit_task_set, SEED)

    def test_unknown_metric_rejected(self, raw_coeffs, fit_task_set):
        bad = [CalibrationTarget("a0", "happiness", 50.0, tolerance=1.0)]
        with pytest.raises(ValueError, match="unknown metric"):
            loss(raw_coeffs, bad, fit_task_set, SEED)

    def test_empty_targets_rejected(self, raw_coeffs, fit_task_set):
        with pytest.raises(ValueError, match="no calibration targets"):
            loss(raw_coeffs, [], fit_task_set, SEED)

    def test_stress_context_uses_subset(self, raw_coeffs, fit_task_set):
        full = CalibrationTarget("a0", "violations_per_1k", 0.0, tolerance=1.0)
        stress = dataclasses.replace(full, context="stress")
        # the stressed slice violates more, so its squared residual is larger
        assert loss(raw_coeffs, [stress], fit_task_set, SEED) > loss(
            raw_coeffs, [full], fit_task_set, SEED
        )


class TestCalibrate:
    def test_budget_one_returns_initial(self, raw_coeffs, fit_task_set):
        targets = [CalibrationTarget("a0", "safe_pct", 45.0, tolerance=3.0)]
        result = calibrate(raw_coeffs, targets, fit_task_set, budget=1, seed=SEED)
        assert result.evaluations == 1
        assert result.coefficients == raw_coeffs
        assert len(result.residuals) == 1

    def test_loss_never_increases(self, raw_coeffs, fit_task_set):
        targets = [
            CalibrationTarget("a0", "functional_pct", 40.0, tolerance=1.0),
            CalibrationTarget("a1", "functional_pct", 25.0, tolerance=1.0),
        ]
        initial_loss = loss(raw_coeffs, targets, fit_task_set, SEED)
        result = calibrate(
            raw_coeffs, targets, fit_task_set, budget=120, seed=SEED,
            free_params=["success.beta.a0", "success.beta.a1"],
        )
        assert result.total_loss <= initial_loss

    def test_respects_box_constraints(self, raw_coeffs, fit_task_set):
        targets = [CalibrationTarget("a0", "violations_per_1k", 0.0, tolerance=0.1)]
        result = calibrate(
            raw_coeffs, targets, fit_task_set, budget=150, seed=SEED,
            free_params=["violation.alpha", "violation.lambda_p"],
        )
        for path in iter_coefficient_paths(result.coefficients):
            lo, hi = coefficient_bounds(path)
            assert lo <= get_coefficient(result.coefficients, path) <= hi

    def test_deterministic_for_fixed_seed(self, raw_coeffs, fit_task_set):
        targets = [CalibrationTarget("a2", "safe_pct", 60.0, tolerance=1.0)]
        kwargs = dict(budget=60, seed=SEED, free_params=["success.beta.a2"])
        a = calibrate(raw_coeffs, targets, fit_task_set, **kwargs)
        b = calibrate(raw_coeffs, targets, fit_task_set, **kwargs)
        assert a.coefficients == b.coefficients
        assert a.total_loss == b.total_loss
        assert a.evaluations == b.evaluations

    def test_recovers_hidden_coefficients(self, fit_task_set):
        # Hidden truth: shifted competence and violation base rate.
        hidden = with_coefficients(
            default_coefficients(),
            {"success.beta.a2": 1.9, "violation.alpha": -2.3},
        )
        metrics = ["functional_pct", "violations_per_1k", "safe_pct"]
        targets = observed_targets(hidden, fit_task_set, ["a2"], metrics, SEED)

        # Noise floor: same coefficients, different seeds.
        floors = [
            loss(hidden, targets, fit_task_set, SEED + 1 + k) for k in range(10)
        ]
        floor = statistics.mean(floors)

        start = default_coefficients()
        result = calibrate(
            start, targets, fit_task_set, budget=260, seed=SEED,
            free_params=["success.beta.a2", "violation.alpha"],
        )
        assert result.total_loss <= 2 * floor
        # Predicted metrics at the fit match the synthetic targets closely.
        summary = aggregate(
            simulate_task_set(
                fit_task_set.columns(), resolve_profile("a2"), result.coefficients, SEED
            )
        )
        for t, residual in zip(targets, result.residuals):
            assert summary.metric(t.metric) == pytest.approx(
                t.value + residual * t.tolerance
            )

    def test_converged_flag_reflects_residuals(self, raw_coeffs, fit_task_set):
        reachable = observed_targets(
            raw_coeffs, fit_task_set, ["a0"], ["safe_pct"], SEED, tolerance=3.0
        )
        result = calibrate(raw_coeffs, reachable, fit_task_set, budget=1, seed=SEED)
        assert result.converged

        impossible = [CalibrationTarget("a0", "safe_pct", 1000.0, tolerance=0.01)]
        result = calibrate(raw_coeffs, impossible, fit_task_set, budget=40, seed=SEED)
        assert not result.converged

    def test_invalid_budget(self, raw_coeffs, fit_task_set):
        targets = [CalibrationTarget("a0", "safe_pct", 45.0, tolerance=3.0)]
        with pytest.raises(ValueError, match="budget"):
            calibrate(raw_coeffs, targets, fit_task_set, budget=0, seed=SEED)

    def test_committed_fit_converges_on_comparison_safe_targets(self, default_task_set):
        # The shipped coefficient set already sits inside tolerance on every
        # headline safe-success target, so the search reports convergence
        # without spending budget.
        from agentarch.experiments import load_experiment_targets
        from agentarch.model import calibrated_coefficients

        targets = [
            t
            for t in load_experiment_targets()["comparison"]
            if t.metric == "safe_pct"
        ]
        assert len(targets) == 5
        result = calibrate(
            calibrated_coefficients(), targets, default_task_set, budget=1, seed=7
        )
        assert result.converged
        assert all(abs(r) <= 1.0 for r in result.residuals)


class TestTargetIO:
    def test_csv_roundtrip_with_context_column(self, tmp_path):
        path = tmp_path / "targets.csv"
        path.write_text(
            "context,profile_id,metric,value,weight,tolerance\n"
            "full,a0,safe_pct,45.2,2.0,3.0\n"
            "stress,a4,violations_per_1k,29.5,1.0,8.0\n"
        )
        targets = load_targets_csv(path)
        assert targets[0] == CalibrationTarget("a0", "safe_pct", 45.2, 2.0, 3.0, "full")
        assert targets[1].context == "stress"

    def test_csv_without_context_column(self, tmp_path):
        path = tmp_path / "targets.csv"
        path.write_text(
            "profile_id,metric,value,weight,tolerance\n"
            "a1,mean_cost,4.38,1.0,0.5\n"
        )
        (target,) = load_targets_csv(path)
        assert target.context == "full"
        assert target.metric == "mean_cost"

    def test_embedded_table_loads(self):
        from agentarch.experiments import calibration_targets

        targets = calibration_targets()
        assert len(targets) > 100
        contexts = {t.context for t in targets}
        assert contexts == {"full", "stress"}
        for t in targets:
            t.validate()
