"""Derivative-free calibration of model parameters against measured targets.

Coordinate descent with golden-section line steps over bounded
parameters, followed by one cross-pattern grid refinement.  The
simulator is injected as a callable so the optimizer itself stays cheap
to test; the harness wires in real scenario runs and counts every
simulation against the budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

OBSERVABLES = ("mean_speed_cm_s", "yaw_rate_rad_s")

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CalibrationTarget:
    """One measured operating point the model should reproduce."""

    scenario: str
    observable: str
    value: float
    weight: float = 1.0

    def __post_init__(self):
        if self.observable not in OBSERVABLES:
            raise ValueError(f"unknown observable {self.observable!r}")
        if self.weight <= 0.0:
            raise ValueError("target weights must be positive")
        if self.value == 0.0:
            raise ValueError("target value must be nonzero (relative errors)")


@dataclass(frozen=True)
class FreeParameter:
    """A calibratable parameter with box bounds and a starting value."""

    name: str
    lo: float
    hi: float
    init: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: empty bound interval")
        if not self.lo <= self.init <= self.hi:
            raise ValueError(f"{self.name}: init outside bounds")


@dataclass(frozen=True)
class CalibrationStage:
    """One pass of the staged search: some parameters against some targets."""

    name: str
    parameters: tuple[str, ...]
    targets: tuple[CalibrationTarget, ...]


@dataclass
class CalibrationResult:
    params: dict[str, float]
    objective: float
    residuals: dict[str, float]   # per target key, relative error
    n_simulations: int
    converged: bool
    history: list[tuple[int, float]] = field(default_factory=list)

    def max_abs_residual(self) -> float:
        if not self.residuals:
            return 0.0
        return max(abs(r) for r in self.residuals.values())


class BudgetExhausted(Exception):
    pass


class _Evaluator:
    """Caches observable evaluations and enforces the simulation budget."""

    def __init__(self, simulate, budget: int):
        self.simulate = simulate
        self.budget = budget
        self.n_simulations = 0
        self._cache: dict[tuple, dict[str, float]] = {}

    def observables(self, scenario: str, params: dict[str, float]) -> dict[str, float]:
        key = (scenario, tuple(sorted((k, round(v, 12)) for k, v in params.items())))
        if key in self._cache:
            return self._cache[key]
        if self.n_simulations >= self.budget:
            raise BudgetExhausted
        self.n_simulations += 1
        out = self.simulate(scenario, dict(params))
        self._cache[key] = out
        return out


def _target_key(t: CalibrationTarget) -> str:
    return f"{t.scenario}:{t.observable}"


def _objective(
    ev: _Evaluator, targets: tuple[CalibrationTarget, ...], params: dict[str, float]
) -> tuple[float, dict[str, float]]:
    total = 0.0
    residuals = {}
    for t in targets:
        obs = ev.observables(t.scenario, params)
        rel = (obs[t.observable] - t.value) / t.value
        residuals[_target_key(t)] = rel
        total += t.weight * rel * rel
    return total, residuals


def golden_section(
    f: Callable[[float], float], lo: float, hi: float, n_evals: int = 6
) -> tuple[float, float]:
    """Golden-section minimization on [lo, hi] with a fixed eval count."""
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    best_x, best_f = (x1, f1) if f1 <= f2 else (x2, f2)
    for _ in range(max(0, n_evals - 2)):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        if f1 < best_f:
            best_x, best_f = x1, f1
        if f2 < best_f:
            best_x, best_f = x2, f2
    return best_x, best_f


def calibrate(
    targets: list[CalibrationTarget],
    free_parameters: list[FreeParameter],
    simulate: Callable[[str, dict[str, float]], dict[str, float]],
    stages: list[CalibrationStage] | None = None,
    budget: int = 200,
    residual_threshold: float = 0.15,
    sweeps: int = 2,
    line_evals: int = 5,
    seed: int = 0,
) -> CalibrationResult:
    """Staged bounded direct search minimizing weighted relative errors.

    Each stage runs ``sweeps`` rounds of coordinate descent with
    golden-section line steps on its own parameters/targets, then one
    cross-pattern refinement around the stage best.  The returned point
    is never worse than the starting point (best-ever bookkeeping), and
    the whole search is deterministic.

    Args:
        targets: Measured operating points (at least 3 overall).
        free_parameters: Bounded parameters; empty list is allowed and
            returns a residual report for the initial values.
        simulate: Maps (scenario name, parameter dict) to observables.
        stages: Optional staged decomposition; default is one stage with
            every parameter against every target.
        budget: Maximum number of simulation runs.
        residual_threshold: Convergence criterion on |relative error|.
        seed: Unused entropy hook, kept for interface stability.

    Returns:
        CalibrationResult; ``converged`` reports whether every final
        residual is within the threshold.
    """
    if len(targets) < 3:
        raise ValueError("need at least 3 calibration targets")
    params = {p.name: p.init for p in free_parameters}
    bounds = {p.name: (p.lo, p.hi) for p in free_parameters}
    ev = _Evaluator(simulate, budget)
    all_targets = tuple(targets)

    if stages is None:
        stages = [
            CalibrationStage(
                name="joint",
                parameters=tuple(p.name for p in free_parameters),
                targets=all_targets,
            )
        ]

    history: list[tuple[int, float]] = []

    def stage_best(stage, params):
        """Coordinate descent + refinement on one stage; returns params."""
        names = [n for n in stage.parameters if n in bounds]
        current = dict(params)
        f_cur, _ = _objective(ev, stage.targets, current)
        best = dict(current)
        f_best = f_cur
        history.append((ev.n_simulations, f_best))

        def try_point(pt):
            nonlocal best, f_best
            val, _ = _objective(ev, stage.targets, pt)
            if val < f_best:
                best, f_best = dict(pt), val
            history.append((ev.n_simulations, f_best))
            return val

        for _ in range(sweeps):
            for name in names:
                lo, hi = bounds[name]

                def line(x):
                    pt = dict(best)
                    pt[name] = x
                    return try_point(pt)

                golden_section(line, lo, hi, n_evals=line_evals)

        # One cross-pattern grid refinement around the stage best.
        for name in names:
            lo, hi = bounds[name]
            h = 0.05 * (hi - lo)
            for x in (best[name] - h, best[name] + h):
                if lo <= x <= hi:
                    pt = dict(best)
                    pt[name] = x
                    try_point(pt)
        return best

    try:
        for stage in stages:
            params = stage_best(stage, params)
    except BudgetExhausted:
        pass

    # Final report against every target at the returned point (cached
    # evaluations keep this inside the budget in the normal case).
    try:
        objective, residuals = _objective(ev, all_targets, params)
    except BudgetExhausted:
        objective, residuals = math.inf, {}
    converged = bool(residuals) and all(
        abs(r) <= residual_threshold for r in residuals.values()
    )
    return CalibrationResult(
        params=params,
        objective=objective,
        residuals=residuals,
        n_simulations=ev.n_simulations,
        converged=converged,
        history=history,
    )
