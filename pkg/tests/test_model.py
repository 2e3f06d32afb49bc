from __future__ import annotations

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agentarch.metrics import aggregate
from agentarch.model import (
    CoefficientSet,
    EscalationCoefficients,
    HandoffCoefficients,
    SuccessCoefficients,
    _poisson_from_uniform,
    escalation_probability,
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
from agentarch.profiles import (
    ArchitectureProfile,
    AutonomyLevel,
    FEATURE_NAMES,
    FeatureStrengths,
    Topology,
    ablated,
    AblationTag,
)
from agentarch.rng import uniform_matrix, uniform_row
from agentarch.tasks import Task


def make_task(**overrides) -> Task:
    base = dict(
        id=0, domain="Finance", complexity=3, risk=3, ambiguity=0.4,
        sensitive=False, regulated=False, adversarial=False, tool_count=2,
        dependencies=1, write_action=False, cross_functional=False,
    )
    base.update(overrides)
    return Task(**base)


def make_profile(beta_key: str = "a0", **feature_overrides) -> ArchitectureProfile:
    return ArchitectureProfile(
        id="test",
        name="Test",
        agent_count=4,
        topology=Topology.Brokered,
        features=FeatureStrengths(**feature_overrides),
        max_autonomy=AutonomyLevel.L2_Prepare,
        handoff_base=1.0,
        family=beta_key,
    )


class TestRngScheme:
    def test_row_matches_matrix(self):
        full = uniform_matrix(99, "sim:a2", 50, 8)
        for row in (0, 7, 49):
            assert np.array_equal(uniform_row(99, "sim:a2", row, 8), full[row])

    def test_streams_differ_by_label(self):
        a = uniform_matrix(7, "sim:a0", 10, 8)
        b = uniform_matrix(7, "sim:a1", 10, 8)
        assert not np.array_equal(a, b)

    def test_draw_budget_must_block_align(self):
        with pytest.raises(ValueError):
            uniform_row(7, "x", 0, 7)


class TestSigmoid:
    def test_zero_is_half(self):
        assert sigmoid(0.0) == 0.5

    def test_symmetry_identity(self):
        assert sigmoid(2.0) + sigmoid(-2.0) == pytest.approx(1.0, abs=1e-12)

    def test_matches_high_precision_oracle(self):
        import mpmath

        expected = float(1 / (1 + mpmath.e ** mpmath.mpf("-1.5")))
        assert sigmoid(1.5) == pytest.approx(expected, abs=1e-15)

    def test_strictly_increasing(self):
        xs = np.linspace(-30, 30, 201)
        ys = sigmoid(xs)
        assert np.all(np.diff(ys) > 0)

    def test_no_overflow_at_large_arguments(self):
        assert 0.0 < sigmoid(-30.0) < 1.0
        assert 0.0 < sigmoid(30.0) < 1.0
        assert 0.0 <= sigmoid(-745.0) < 1e-300  # no overflow, graceful underflow

    @given(x=st.floats(min_value=-50, max_value=50, allow_nan=False))
    @settings(max_examples=100)
    def test_complement_identity(self, x):
        assert sigmoid(-x) == pytest.approx(1.0 - sigmoid(x), abs=1e-12)


class TestRouteQuality:
    def test_zero_features_give_zero(self, raw_coeffs):
        assert route_quality(make_profile(), raw_coeffs) == 0.0

    def test_all_ones_with_half_weights(self):
        coeffs = CoefficientSet(
            success=SuccessCoefficients(
                w_contracts=0.5, w_registry=0.5, w_specialization=0.5,
                w_policy=0.5, w_verifier=0.5, w_protocol=0.5,
            )
        )
        profile = make_profile(**{name: 1.0 for name in FEATURE_NAMES})
        assert route_quality(profile, coeffs) == pytest.approx(3.0)

    def test_calibrated_reference_beats_swarm(self, coeffs, profiles_by_id):
        assert route_quality(profiles_by_id["a4"], coeffs) > route_quality(
            profiles_by_id["a1"], coeffs
        )


class TestHandoffs:
    def test_degenerate_mean_is_zero(self):
        coeffs = CoefficientSet(
            handoff=HandoffCoefficients(kappa_base=0, kappa_agents=0, kappa_dep=0, kappa_acc=0)
        )
        profile = dataclasses.replace(make_profile(), handoff_base=0.0, agent_count=4)
        rng = trial_rng(7, "test", 0)
        assert all(
            sample_handoffs(make_task(dependencies=d), profile, coeffs, rng) == 0
            for d in range(4)
        )

    def test_calibrated_mono_agent_mean(self, coeffs, task_columns, profiles_by_id):
        summary = aggregate(simulate_task_set(task_columns, profiles_by_id["a0"], coeffs, 7))
        assert abs(summary.mean_handoffs - 1.01) <= 0.3

    def test_calibrated_swarm_mean(self, coeffs, task_columns, profiles_by_id):
        summary = aggregate(simulate_task_set(task_columns, profiles_by_id["a1"], coeffs, 7))
        assert abs(summary.mean_handoffs - 6.25) <= 0.6

    def test_poisson_sampler_matches_scipy_inverse_cdf(self):
        from scipy import stats

        rng = np.random.default_rng(0)
        u = rng.random(400)
        for mean in (0.0, 0.3, 1.0, 4.5, 17.0):
            ours = _poisson_from_uniform(u, mean)
            theirs = stats.poisson.ppf(u, mean) if mean > 0 else np.zeros_like(u)
            assert np.array_equal(ours, theirs.astype(np.int64))

    def test_poisson_sample_mean(self):
        u = np.random.default_rng(1).random(200_000)
        draws = _poisson_from_uniform(u, 3.7)
        assert abs(draws.mean() - 3.7) < 0.03


class TestSuccessModel:
    def test_neutral_point_is_half(self, raw_coeffs):
        coeffs = dataclasses.replace(
            raw_coeffs,
            success=dataclasses.replace(raw_coeffs.success, beta={"a0": 0.0}),
        )
        task = make_task(complexity=0, risk=0, ambiguity=0.0, dependencies=0)
        profile = make_profile()  # all-zero features -> rho = 0
        assert success_probability(task, profile, coeffs, handoffs=0) == pytest.approx(0.5)

    def test_complexity_monotonicity(self, raw_coeffs):
        profile = make_profile()
        p2 = success_probability(make_task(complexity=2), profile, raw_coeffs, 1)
        p3 = success_probability(make_task(complexity=3), profile, raw_coeffs, 1)
        assert p3 < p2

    def test_calibrated_reference_functional_success(self, coeffs, task_columns, profiles_by_id):
        summary = aggregate(simulate_task_set(task_columns, profiles_by_id["a4"], coeffs, 7))
        assert abs(summary.functional_pct - 73.0) <= 3.0

    @pytest.mark.parametrize("field,values", [
        ("complexity", [1, 2, 3, 4, 5]),
        ("risk", [1, 2, 3, 4, 5]),
        ("ambiguity", [0.0, 0.25, 0.5, 0.75, 1.0]),
        ("dependencies", [0, 1, 2, 3, 4]),
    ])
    def test_penalty_grid_non_increasing(self, raw_coeffs, field, values):
        profile = make_profile(policy=0.5, verifier=0.5)
        probs = [
            success_probability(make_task(**{field: v}), profile, raw_coeffs, 2)
            for v in values
        ]
        assert all(a >= b for a, b in zip(probs, probs[1:]))

    def test_handoff_grid_non_increasing(self, raw_coeffs):
        profile = make_profile()
        probs = [
            success_probability(make_task(), profile, raw_coeffs, h) for h in range(5)
        ]
        assert all(a >= b for a, b in zip(probs, probs[1:]))

    def test_route_features_non_decreasing(self, raw_coeffs):
        for name in ("contracts", "registry", "specialization", "policy", "verifier", "protocol_guards"):
            probs = [
                success_probability(
                    make_task(), make_profile(**{name: v}), raw_coeffs, 2
                )
                for v in [0.0, 0.25, 0.5, 0.75, 1.0]
            ]
            assert all(a <= b for a, b in zip(probs, probs[1:])), name


class TestViolationModel:
    def test_base_rate_case(self, raw_coeffs):
        task = make_task(risk=0, sensitive=False, adversarial=False)
        p = violation_probability(task, make_profile(), raw_coeffs, 0, 0.0)
        assert p == pytest.approx(sigmoid(raw_coeffs.violation.alpha))

    def test_adversarial_flag_increases_probability(self, raw_coeffs):
        profile = make_profile()
        clean = violation_probability(make_task(), profile, raw_coeffs, 1, 0.2)
        adv = violation_probability(make_task(adversarial=True), profile, raw_coeffs, 1, 0.2)
        assert adv > clean

    def test_calibrated_swarm_violations(self, coeffs, task_columns, profiles_by_id):
        summary = aggregate(simulate_task_set(task_columns, profiles_by_id["a1"], coeffs, 7))
        assert abs(summary.violations_per_1k - 248.6) <= max(8.0, 0.15 * 248.6)

    @pytest.mark.parametrize("field,values", [
        ("risk", [1, 2, 3, 4, 5]),
        ("sensitive", [False, True]),
        ("adversarial", [False, True]),
    ])
    def test_task_grid_non_decreasing(self, raw_coeffs, field, values):
        profile = make_profile(policy=0.4, least_privilege=0.4)
        probs = [
            violation_probability(make_task(**{field: v}), profile, raw_coeffs, 2, 0.3)
            for v in values
        ]
        assert all(a <= b for a, b in zip(probs, probs[1:]))

    def test_handoff_grid_non_decreasing(self, raw_coeffs):
        probs = [
            violation_probability(make_task(), make_profile(), raw_coeffs, h, 0.3)
            for h in range(5)
        ]
        assert all(a <= b for a, b in zip(probs, probs[1:]))

    def test_control_grids_non_increasing(self, raw_coeffs):
        grid = [0.0, 0.25, 0.5, 0.75, 1.0]
        for name in ("policy", "least_privilege"):
            probs = [
                violation_probability(
                    make_task(), make_profile(**{name: v}), raw_coeffs, 2, 0.3
                )
                for v in grid
            ]
            assert all(a >= b for a, b in zip(probs, probs[1:])), name
        gate_probs = [
            violation_probability(make_task(), make_profile(), raw_coeffs, 2, g)
            for g in grid
        ]
        assert all(a >= b for a, b in zip(gate_probs, gate_probs[1:]))


class TestGateApplicability:
    def test_zero_gates(self):
        assert gate_applicability(make_task(risk=5), make_profile(human_gates=0.0)) == 0.0

    def test_full_applicability(self):
        assert gate_applicability(make_task(risk=5), make_profile(human_gates=1.0)) == 1.0

    def test_low_relevance_floor(self):
        task = make_task(risk=1, write_action=False, regulated=False)
        assert gate_applicability(task, make_profile(human_gates=1.0)) == pytest.approx(0.2)

    def test_mean_matches_analytic_mixture(self, default_task_set):
        # Oracle from the marginals: relevance is 1 when write_action or
        # regulated or risk >= 4, else 0.2. Condition on risk grade, with
        # p(write|r) and p(regulated|r) shifted by the coupling.
        spec = default_task_set.spec
        weights = spec.boosted_risk_weights()
        expected = 0.0
        for grade, w in zip(range(1, 6), weights):
            shift = spec.risk_coupling * (grade - 3)
            p_write = min(1.0, max(0.0, spec.p_write_action + shift))
            p_reg = min(1.0, max(0.0, spec.p_regulated + shift))
            if grade >= 4:
                p_relevant = 1.0
            else:
                p_relevant = 1.0 - (1.0 - p_write) * (1.0 - p_reg)
            expected += w * (p_relevant * 1.0 + (1.0 - p_relevant) * 0.2)

        profile = make_profile(human_gates=1.0)
        values = [gate_applicability(t, profile) for t in default_task_set.tasks]
        assert np.mean(values) == pytest.approx(expected, abs=0.01)


class TestPoisoningModel:
    def test_calibrated_reference_rate(self, coeffs, task_columns, profiles_by_id):
        summary = aggregate(simulate_task_set(task_columns, profiles_by_id["a4"], coeffs, 7))
        assert abs(summary.poison_per_1k - 12.6) <= 8.0

    def test_memory_governance_monotonicity(self, raw_coeffs):
        task = make_task(adversarial=True)
        weak = poisoning_probability(task, make_profile(memory_governance=0.0), raw_coeffs, 2)
        strong = poisoning_probability(task, make_profile(memory_governance=1.0), raw_coeffs, 2)
        assert weak > strong

    def test_calibrated_memory_ablation_rate(self, coeffs, task_columns, profiles_by_id):
        variant = ablated(profiles_by_id["a4"], AblationTag.MemoryGovernance)
        summary = aggregate(simulate_task_set(task_columns, variant, coeffs, 7))
        assert abs(summary.poison_per_1k - 28.5) <= 8.0


class TestSimulateTask:
    def test_failure_is_never_safe(self, raw_coeffs, small_task_set, profiles_by_id):
        outcomes = simulate_task_set(small_task_set, profiles_by_id["a2"], raw_coeffs, 3)
        for row in outcomes.to_task_outcomes():
            if not row.success:
                assert not row.safe
            if row.safe:
                assert row.success and not row.violation and not row.poisoned
            if row.automated_safe:
                assert row.safe and not row.escalated

    def test_calibrated_grid_escalation_rate(self, coeffs, task_columns, profiles_by_id):
        summary = aggregate(simulate_task_set(task_columns, profiles_by_id["a3"], coeffs, 7))
        assert abs(summary.escalation_pct - 40.9) <= 3.0

    def test_replay_is_bit_identical(self, coeffs, default_task_set, profiles_by_id):
        task = default_task_set.tasks[123]
        p = profiles_by_id["a2"]
        first = simulate_task(task, p, coeffs, trial_rng(7, p.id, task.id))
        second = simulate_task(task, p, coeffs, trial_rng(7, p.id, task.id))
        assert first == second

    def test_scalar_path_equals_vectorised_path(self, coeffs, default_task_set, profiles_by_id):
        p = profiles_by_id["a3"]
        vec = simulate_task_set(default_task_set.columns(), p, coeffs, 7)
        rows = vec.to_task_outcomes()
        for tid in (0, 1, 99, 5000, 9999):
            scalar = simulate_task(default_task_set.tasks[tid], p, coeffs, trial_rng(7, p.id, tid))
            assert scalar == rows[tid]

    def test_escalation_probability_scales_with_gates(self, raw_coeffs):
        task = make_task(risk=5, ambiguity=0.9)
        none = escalation_probability(task, make_profile(human_gates=0.0), raw_coeffs)
        strong = escalation_probability(task, make_profile(human_gates=1.0), raw_coeffs)
        assert strong > none
        assert none > 0.0  # floor: some work reaches humans even ungated

    def test_costs_and_latency_nonnegative(self, raw_coeffs, small_task_set, profiles_by_id):
        outcomes = simulate_task_set(small_task_set, profiles_by_id["a1"], raw_coeffs, 5)
        assert np.all(outcomes.cost >= 0)
        assert np.all(outcomes.latency >= 0)
        assert np.all(outcomes.handoffs >= 0)

    def test_outcomes_csv_export(self, raw_coeffs, small_task_set, profiles_by_id, tmp_path):
        import csv

        from agentarch.model import OUTCOME_FIELDS, write_outcomes_csv

        outcomes = simulate_task_set(small_task_set, profiles_by_id["a0"], raw_coeffs, 5)
        path = tmp_path / "trials.csv"
        write_outcomes_csv(outcomes, path)
        rows = list(csv.reader(open(path, newline="")))
        assert rows[0] == list(OUTCOME_FIELDS)
        assert len(rows) == len(outcomes) + 1
        assert rows[1][1] == "a0"


@st.composite
def finite_coefficient_sets(draw):
    """Defaults perturbed within their boxes; realistic operating regime."""
    from agentarch.model import (
        coefficient_bounds,
        get_coefficient,
        iter_coefficient_paths,
        with_coefficients,
    )

    base = CoefficientSet()
    updates = {}
    for path in iter_coefficient_paths(base):
        lo, hi = coefficient_bounds(path)
        value = get_coefficient(base, path)
        scale = draw(st.floats(min_value=0.5, max_value=1.5, allow_nan=False))
        shift = draw(st.floats(min_value=-0.3, max_value=0.3, allow_nan=False))
        updates[path] = min(hi, max(lo, value * scale + shift))
    return with_coefficients(base, updates)


@given(coeffs=finite_coefficient_sets(), data=st.data())
@settings(max_examples=25, deadline=None)
def test_probabilities_strictly_inside_unit_interval(coeffs, data):
    task = make_task(
        complexity=data.draw(st.integers(1, 5)),
        risk=data.draw(st.integers(1, 5)),
        ambiguity=data.draw(st.floats(0.0, 1.0, allow_nan=False)),
        sensitive=data.draw(st.booleans()),
        adversarial=data.draw(st.booleans()),
    )
    profile = make_profile(
        policy=data.draw(st.floats(0.0, 1.0, allow_nan=False)),
        verifier=data.draw(st.floats(0.0, 1.0, allow_nan=False)),
        human_gates=data.draw(st.floats(0.0, 1.0, allow_nan=False)),
    )
    handoffs = data.draw(st.integers(0, 30))
    for p in (
        success_probability(task, profile, coeffs, handoffs),
        violation_probability(task, profile, coeffs, handoffs, 0.5),
        poisoning_probability(task, profile, coeffs, handoffs),
    ):
        assert 0.0 < p < 1.0
