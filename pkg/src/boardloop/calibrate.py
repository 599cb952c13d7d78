"""Fit simulator parameters to a target similarity sequence.

The objective runs a full experiment at candidate parameters and scores
the simulated curve against the target with RMSE over the whole sequence
(the qualitative signature, one large first drop then a slow tail, lives
in the full curve, not the terminal value). Parameters are shared-noise
deterministic, so the objective is noise-free and a bounded Nelder-Mead
simplex handles it well; quantization and kernel-radius steps make it
only piecewise-smooth, which rules out gradient methods. An optional
coarse grid can seed the simplex when the landscape has distant basins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy import optimize

from .errors import BoardLoopError, CalibrationError, ParameterError
from .experiment import ExperimentConfig, run_experiment

#: Loss assigned to parameter points where the simulation itself fails
#: (for example marker detection loss at extreme blur).
_INVALID_LOSS = 1e3

_MODEL_ATTRS = ("projector", "scene", "camera")


def _locate_param(config: ExperimentConfig, name: str) -> str:
    for attr in _MODEL_ATTRS:
        if name in {f.name for f in fields(getattr(config, attr))}:
            return attr
    raise ParameterError(
        f"unknown free parameter '{name}': not a field of the projector, scene or camera model"
    )


def apply_free_params(config: ExperimentConfig, params: dict[str, float]) -> ExperimentConfig:
    """Return a config copy with named model fields replaced."""
    updates: dict[str, dict[str, float]] = {}
    for name, value in params.items():
        updates.setdefault(_locate_param(config, name), {})[name] = float(value)
    changed = {
        attr: replace(getattr(config, attr), **vals) for attr, vals in updates.items()
    }
    return replace(config, **changed)


@dataclass(frozen=True, eq=False)
class CalibrationProblem:
    """Target sequence, free parameters with bounds, and the base setup.

    ``config.cycles`` is forced to the target length. ``start`` optionally
    overrides the default simplex start (midpoint of each bound range).
    """

    target: tuple[float, ...]
    free_params: dict[str, tuple[float, float]]
    config: ExperimentConfig
    start: dict[str, float] | None = None

    def __post_init__(self):
        if len(self.target) < 1:
            raise ParameterError("calibration target must be non-empty")
        if any(not -1.0 <= float(v) <= 1.0 for v in self.target):
            raise ParameterError("target similarity values must lie in [-1, 1]")
        if not self.free_params:
            raise ParameterError("at least one free parameter is required")
        for name, (lo, hi) in self.free_params.items():
            _locate_param(self.config, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ParameterError(
                    f"bounds for '{name}' must be finite with lower < upper, got ({lo}, {hi})"
                )
        if self.start is not None:
            for name, value in self.start.items():
                lo, hi = self.free_params[name]
                if not lo <= value <= hi:
                    raise ParameterError(
                        f"start value {value} for '{name}' outside bounds ({lo}, {hi})"
                    )


@dataclass(frozen=True)
class CalibrationResult:
    """Best parameters found, their loss, and the evaluation history."""

    params: dict[str, float]
    loss: float
    curve: tuple[float, ...]
    trace: tuple[tuple[dict[str, float], float], ...]
    n_evals: int


def curve_rmse(simulated, target) -> float:
    sim = np.asarray(simulated, dtype=np.float64)
    tgt = np.asarray(target, dtype=np.float64)
    if sim.shape != tgt.shape:
        raise ParameterError(f"curve length {sim.shape} != target length {tgt.shape}")
    return float(np.sqrt(np.mean((sim - tgt) ** 2)))


def calibrate(
    problem: CalibrationProblem,
    budget: int = 200,
    grid_points: int = 0,
) -> CalibrationResult:
    """Minimize curve RMSE over the free parameters.

    ``budget`` caps the number of simulation evaluations (the documented
    minimum is 50). ``grid_points > 1`` first scans a coarse per-axis grid
    and starts the simplex from the best cell; the grid draws from the
    same budget. The simplex clips candidates to the declared bounds, so
    returned parameters always respect them. Deterministic: the experiment
    seed fixes all randomness.
    """
    if budget < 50:
        raise ParameterError(f"calibration budget must be >= 50 evaluations, got {budget}")
    names = sorted(problem.free_params)
    bounds = [tuple(map(float, problem.free_params[n])) for n in names]
    base = replace(problem.config, cycles=len(problem.target))

    trace: list[tuple[dict[str, float], float]] = []
    state = {"evals": 0, "valid": False}

    def objective(x: np.ndarray) -> float:
        if state["evals"] >= budget:
            raise _BudgetExhausted()
        state["evals"] += 1
        params = {n: float(np.clip(v, lo, hi)) for n, v, (lo, hi) in zip(names, x, bounds)}
        try:
            cfg = apply_free_params(base, params)
            curve = run_experiment(cfg, keep_images=False)
            loss = curve_rmse(curve.ssim_values, problem.target)
            state["valid"] = True
        except BoardLoopError:
            loss = _INVALID_LOSS
        trace.append((params, loss))
        return loss

    # Start from the base config's own parameter values: calibration is a
    # refinement around the configured model, and the midpoint of wide
    # bounds is usually a worse guess.
    start = dict(problem.start or {})
    x0 = np.array(
        [
            np.clip(
                start.get(n, getattr(getattr(base, _locate_param(base, n)), n)),
                lo,
                hi,
            )
            for n, (lo, hi) in zip(names, bounds)
        ],
        dtype=np.float64,
    )

    try:
        if grid_points > 1:
            axes = [np.linspace(lo, hi, grid_points) for lo, hi in bounds]
            best = (math.inf, x0)
            for combo in np.stack(np.meshgrid(*axes), axis=-1).reshape(-1, len(names)):
                loss = objective(combo)
                if loss < best[0]:
                    best = (loss, combo)
            x0 = np.asarray(best[1], dtype=np.float64)

        remaining = budget - state["evals"]
        if remaining > 0:
            optimize.minimize(
                objective,
                x0,
                method="Nelder-Mead",
                bounds=bounds,
                options={
                    "maxfev": remaining,
                    "xatol": 1e-4,
                    "fatol": 1e-6,
                    "disp": False,
                },
            )
    except _BudgetExhausted:
        pass

    if not state["valid"]:
        raise CalibrationError(
            f"no valid simulation within {budget} evaluations; every candidate failed"
        )

    best_params, best_loss = min(trace, key=lambda t: t[1])
    best_curve = run_experiment(
        apply_free_params(base, best_params), keep_images=False
    ).ssim_values
    return CalibrationResult(
        params=best_params,
        loss=best_loss,
        curve=best_curve,
        trace=tuple(trace),
        n_evals=state["evals"],
    )


class _BudgetExhausted(Exception):
    pass
