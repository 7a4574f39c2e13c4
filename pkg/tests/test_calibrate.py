"""Tests for the derivative-free calibration search."""

from __future__ import annotations

import numpy as np
import pytest

from inchtwin.calibrate import (
    CalibrationStage,
    CalibrationTarget,
    FreeParameter,
    calibrate,
    golden_section,
)


def test_golden_section_finds_quadratic_minimum():
    x, fx = golden_section(lambda x: (x - 2.0) ** 2, 0.0, 5.0, n_evals=30)
    assert x == pytest.approx(2.0, abs=1e-3)
    assert fx == pytest.approx(0.0, abs=1e-6)


def test_golden_section_respects_eval_budget():
    calls = []
    golden_section(lambda x: calls.append(x) or x * x, -1.0, 1.0, n_evals=7)
    assert len(calls) == 7


class SyntheticSim:
    """Quadratic bowl: speed depends on two parameters analytically."""

    def __init__(self):
        self.calls = 0

    def __call__(self, scenario: str, params: dict) -> dict:
        self.calls += 1
        a = params.get("a", 0.0)
        b = params.get("b", 0.0)
        if scenario == "fast":
            speed = 4.0 - (a - 0.3) ** 2 * 10.0 - (b - 0.6) ** 2 * 5.0
        else:
            speed = 1.0 + a - b
        return {"mean_speed_cm_s": speed, "yaw_rate_rad_s": -0.1 * a}


def targets():
    return [
        CalibrationTarget("fast", "mean_speed_cm_s", 4.0),
        CalibrationTarget("slow", "mean_speed_cm_s", 0.7),
        CalibrationTarget("fast", "yaw_rate_rad_s", -0.03),
    ]


def free():
    return [
        FreeParameter("a", 0.0, 1.0, 0.5),
        FreeParameter("b", 0.0, 1.0, 0.5),
    ]


def test_converges_on_synthetic_problem():
    sim = SyntheticSim()
    result = calibrate(targets(), free(), sim, budget=200)
    assert result.converged
    assert result.params["a"] == pytest.approx(0.3, abs=0.05)
    assert result.n_simulations <= 200
    assert result.n_simulations == sim.calls


def test_never_worse_than_start():
    """The returned objective cannot exceed the starting objective."""
    sim = SyntheticSim()
    start = {"a": 0.5, "b": 0.5}
    result = calibrate(targets(), free(), sim, budget=60)
    ev_start = SyntheticSim()
    from inchtwin.calibrate import _Evaluator, _objective

    f0, _ = _objective(_Evaluator(ev_start, 10), tuple(targets()), start)
    assert result.objective <= f0 + 1e-12


def test_history_objective_monotone():
    result = calibrate(targets(), free(), SyntheticSim(), budget=120)
    objs = [h[1] for h in result.history]
    assert all(b <= a + 1e-12 for a, b in zip(objs[:-1], objs[1:]))


def test_budget_exhaustion_returns_best_so_far():
    sim = SyntheticSim()
    result = calibrate(targets(), free(), sim, budget=9)
    assert sim.calls <= 9
    assert result.params  # still returns a parameter set


def test_zero_free_parameters_reports_residuals():
    sim = SyntheticSim()
    result = calibrate(targets(), [], sim, budget=50)
    assert result.params == {}
    assert len(result.residuals) == 3


def test_beats_random_in_bounds_points():
    """Returned objective <= objective at 50 random in-bounds points."""
    sim = SyntheticSim()
    result = calibrate(targets(), free(), sim, budget=200)

    def objective_at(params):
        total = 0.0
        for t in targets():
            obs = sim(t.scenario, params)
            total += t.weight * ((obs[t.observable] - t.value) / t.value) ** 2
        return total

    rng = np.random.default_rng(99)
    for _ in range(50):
        pt = {"a": rng.uniform(0.0, 1.0), "b": rng.uniform(0.0, 1.0)}
        assert result.objective <= objective_at(pt) + 1e-9


def test_staged_search_respects_stage_parameters():
    sim = SyntheticSim()
    stages = [
        CalibrationStage("first", ("a",), tuple(targets()[:2])),
        CalibrationStage("second", ("b",), (targets()[2],)),
    ]
    result = calibrate(targets(), free(), sim, stages=stages, budget=150)
    assert set(result.params) == {"a", "b"}


def test_validates_inputs():
    with pytest.raises(ValueError):
        calibrate(targets()[:2], free(), SyntheticSim())
    with pytest.raises(ValueError):
        CalibrationTarget("x", "mean_speed_cm_s", 1.0, weight=0.0)
    with pytest.raises(ValueError):
        CalibrationTarget("x", "altitude", 1.0)
    with pytest.raises(ValueError):
        FreeParameter("a", 1.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        FreeParameter("a", 0.0, 1.0, 2.0)
