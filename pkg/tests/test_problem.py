import numpy as np
import pytest

from hermiteopt.exceptions import (
    BudgetExhausted,
    DuplicatePoint,
    EmptySet,
    OutOfBounds,
    UnavailableDerivative,
)
from hermiteopt.problem import (
    Bounds,
    DerivativeAvailability,
    EvaluationBudget,
    EvaluationRecord,
    ObjectiveSpec,
    TrainingSet,
    evaluate,
    incumbent,
    points_equal,
    replace_point,
)
from hermiteopt.testbed import mask_availability, rosenbrock


def make_spec(n=2, mask=(1, 2)):
    return mask_availability(rosenbrock(n), set(mask))


def record(point, value):
    return EvaluationRecord(point=np.asarray(point, dtype=float), value=value)


class TestBounds:
    def test_validation(self):
        with pytest.raises(ValueError):
            Bounds(np.array([1.0, 0.0]), np.array([0.0, 1.0]))

    def test_contains_and_clip(self):
        b = Bounds(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
        assert b.contains(np.array([0.5, -1.0]))
        assert not b.contains(np.array([1.5, 0.0]))
        assert np.array_equal(b.clip(np.array([2.0, -3.0])), np.array([1.0, -1.0]))


class TestAvailability:
    def test_range_check(self):
        av = DerivativeAvailability(first_order=frozenset({3}))
        with pytest.raises(ValueError):
            av.validate(2)

    def test_pair_order(self):
        with pytest.raises(ValueError):
            DerivativeAvailability(second_order=frozenset({(2, 1)}))

    def test_directions_sorted(self):
        av = DerivativeAvailability(first_order=frozenset({3, 1}))
        assert av.directions == (1, 3)
        assert av.k_d == 2


class TestEvaluate:
    def test_rosenbrock_start_value(self):
        # f(1.2, 2) = 31.4 at the standard start
        spec = make_spec()
        budget = EvaluationBudget(5)
        rec = evaluate(spec, np.array([1.2, 2.0]), budget)
        assert rec.value == pytest.approx(31.4, abs=1e-12)
        assert budget.evaluations_used == 1

    def test_optimum_record(self):
        spec = make_spec(mask=(2,))
        rec = evaluate(spec, np.array([1.0, 1.0]), EvaluationBudget(1))
        assert rec.value == pytest.approx(0.0, abs=1e-14)
        assert rec.gradient[2] == pytest.approx(0.0, abs=1e-14)
        assert 1 not in rec.gradient

    def test_deterministic_repeat(self):
        spec = make_spec()
        budget = EvaluationBudget(2)
        x = np.array([0.3, -0.7])
        a = evaluate(spec, x, budget)
        b = evaluate(spec, x, budget)
        assert a.value == b.value
        assert a.gradient == b.gradient

    def test_out_of_bounds(self):
        spec = make_spec()
        with pytest.raises(OutOfBounds):
            evaluate(spec, np.array([100.0, 0.0]), EvaluationBudget(1))

    def test_budget_exhausted(self):
        spec = make_spec()
        budget = EvaluationBudget(1)
        evaluate(spec, np.array([0.0, 0.0]), budget)
        with pytest.raises(BudgetExhausted):
            evaluate(spec, np.array([1.0, 0.0]), budget)

    def test_masked_derivative_errors(self):
        spec = make_spec(mask=(2,))
        with pytest.raises(UnavailableDerivative):
            spec.partial(np.array([0.0, 0.0]), 1)

    def test_billing_counts_value_calls_exactly(self):
        # the counting wrapper sees one value call per evaluate()
        problem = rosenbrock(2)
        calls = {"n": 0}

        def counted(x):
            calls["n"] += 1
            return problem.value(x)

        spec = ObjectiveSpec(
            dimension=2,
            value=counted,
            bounds=problem.bounds,
            availability=DerivativeAvailability(first_order=frozenset({1, 2})),
            derivative=lambda x, i: problem.gradient(x)[i - 1],
        )
        budget = EvaluationBudget(7)
        rng = np.random.default_rng(0)
        for _ in range(7):
            evaluate(spec, rng.uniform(-1, 1, size=2), budget)
        assert calls["n"] == 7 == budget.evaluations_used


class TestTrainingSet:
    def test_incumbent_argmin(self):
        ts = TrainingSet.from_records(
            [record([0, 0], 3.0), record([1, 0], 1.0), record([0, 1], 2.0)]
        )
        assert ts.incumbent_index == 1
        point, value = incumbent(ts)
        assert value == 1.0
        assert np.array_equal(point, [1.0, 0.0])

    def test_tie_breaks_earliest(self):
        ts = TrainingSet.from_records([record([0, 0], 1.0), record([1, 0], 1.0)])
        assert ts.incumbent_index == 0

    def test_empty_set(self):
        with pytest.raises(EmptySet):
            TrainingSet.from_records([])

    def test_duplicate_rejected_at_build(self):
        with pytest.raises(DuplicatePoint):
            TrainingSet.from_records([record([0, 0], 1.0), record([0, 0], 2.0)])

    def test_replace_updates_incumbent(self):
        ts = TrainingSet.from_records(
            [record([0, 0], 3.0), record([1, 0], 1.0), record([0, 1], 2.0)]
        )
        better = record([2, 2], 0.5)
        ts2 = replace_point(ts, 0, better)
        assert ts2.incumbent_index == 0
        assert ts2.size == ts.size
        worse = record([3, 3], 9.0)
        ts3 = replace_point(ts, 2, worse)
        assert ts3.incumbent_index == 1

    def test_replace_duplicate_rejected(self):
        ts = TrainingSet.from_records([record([0, 0], 1.0), record([1, 0], 2.0)])
        with pytest.raises(DuplicatePoint):
            replace_point(ts, 1, record([0, 0], 5.0))

    def test_replace_bad_index(self):
        ts = TrainingSet.from_records([record([0, 0], 1.0)])
        with pytest.raises(IndexError):
            replace_point(ts, 5, record([1, 1], 0.0))

    def test_incumbent_recomputed_below_current(self):
        # recompute argmin by scan after a replacement lowers a value
        rng = np.random.default_rng(3)
        records = [record(rng.uniform(size=2), v) for v in (4.0, 2.0, 3.0)]
        ts = TrainingSet.from_records(records)
        ts = replace_point(ts, 2, record([9, 9], 0.25))
        values = [r.value for r in ts.records]
        assert ts.incumbent_index == int(np.argmin(values))


def test_points_equal_tolerance():
    a = np.array([1.0, 1.0])
    assert points_equal(a, a + 1e-16)
    assert not points_equal(a, a + 1e-10)
    big = np.array([1e8, 0.0])
    assert points_equal(big, big + np.array([0.0, 1e-7]))
