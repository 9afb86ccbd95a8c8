"""Error metrics, environment sweeps, validation construction, and tuning."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .dataset import BinaryDataset, EnvironmentSuite, StableSplit
from .model import DgbrModel, predict_proba
from .synthetic import bias_select_yv

__all__ = [
    "SweepResult",
    "TuningError",
    "rmse",
    "sweep",
    "build_validation_envs",
    "tune",
    "STABILITY_TRADEOFF",
]

#: multiplier on the stability term in the tuning criterion
STABILITY_TRADEOFF = 5.0

#: validation bias rates used when none are supplied
DEFAULT_VALIDATION_RATES = (0.3, 0.5, 0.7)


class TuningError(RuntimeError):
    """Every grid point failed to fit or evaluate."""


def rmse(predictions, truth) -> float:
    """Root mean squared error of probability predictions against 0/1 truth."""
    predictions = np.asarray(predictions, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predictions.shape != truth.shape or predictions.ndim != 1:
        raise ValueError("predictions and truth must be equal-length vectors")
    if predictions.size == 0:
        raise ValueError("need at least one prediction")
    return float(np.sqrt(np.mean((predictions - truth) ** 2)))


@dataclass(frozen=True)
class SweepResult:
    """Per-environment errors with their mean and sample standard deviation."""

    per_env: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if len(self.per_env) < 2:
            raise ValueError("a sweep needs at least 2 environments")
        object.__setattr__(self, "per_env", tuple(self.per_env))

    @property
    def average_error(self) -> float:
        return float(np.mean([e for _, e in self.per_env]))

    @property
    def stability_error(self) -> float:
        errs = [e for _, e in self.per_env]
        return float(np.std(errs, ddof=1))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["environment", "rmse"])
        for label, err in self.per_env:
            writer.writerow([label, err])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "per_env": [{"label": l, "rmse": e} for l, e in self.per_env],
                "average_error": self.average_error,
                "stability_error": self.stability_error,
            }
        )


def sweep(model: DgbrModel, suite: EnvironmentSuite) -> SweepResult:
    """Evaluate a fitted model on every test environment of a suite."""
    per_env = tuple(
        (label, rmse(predict_proba(model, d.features), d.outcome))
        for label, d in suite.tests
    )
    return SweepResult(per_env)


def _empirical_noisy_idx(model: DgbrModel, p: int, quantile: float) -> tuple[int, ...]:
    """Bottom-|quantile| coefficients by magnitude; requires identity embedding."""
    mags = np.abs(model.beta)
    k = max(1, int(math.floor(quantile * p)))
    order = np.argsort(mags, kind="stable")
    return tuple(sorted(int(j) for j in order[:k]))


def build_validation_envs(
    train: BinaryDataset,
    model_hint: DgbrModel,
    count: int = 3,
    seed: int = 0,
    rates=None,
    noisy_quantile: float = 0.5,
) -> list[BinaryDataset]:
    """Resample the training data into shifted validation environments.

    Features with the smallest balanced-fit coefficient magnitudes are taken
    as empirically noisy; each environment reuses the outcome-linked selector
    against the training rows at a different bias rate.
    """
    if model_hint.autoenc is not None:
        raise ValueError("model_hint must use the identity embedding")
    rates = list(rates) if rates is not None else list(DEFAULT_VALIDATION_RATES)[:count]
    if len(rates) != count:
        raise ValueError("need one bias rate per validation environment")
    noisy = _empirical_noisy_idx(model_hint, train.p, noisy_quantile)
    stable = tuple(j for j in range(train.p) if j not in noisy)
    split = StableSplit(stable, noisy)
    n = train.n
    envs = []
    for i, rate in enumerate(rates):
        envs.append(
            bias_select_yv(
                train, split, rate, n, seed=seed + i,
                bias_columns=min(len(noisy), 4),
            )
        )
    return envs


def tune(train: BinaryDataset, grid, fitter, seed: int = 0,
         validation_envs=None, count: int = 3):
    """Grid search minimizing average error + 5 x stability error on
    constructed validation environments.

    ``fitter(dataset, hyper) -> (model, trace)``.  Ties break toward the
    earliest grid point.  Returns (best hyper, tuning table).
    """
    grid = list(grid)
    if not grid:
        raise TuningError("grid must be non-empty")
    if validation_envs is None:
        prelim = None
        last_exc = None
        for hyper in grid:
            try:
                prelim, _ = fitter(train, hyper)
                break
            except Exception as exc:  # try the next grid point
                last_exc = exc
        if prelim is None:
            raise TuningError(f"every preliminary fit failed: {last_exc!r}")
        validation_envs = build_validation_envs(train, prelim, count=count, seed=seed)
    val_suite_tests = tuple(
        (f"val{i}", env) for i, env in enumerate(validation_envs)
    )
    table = []
    best = None
    for i, hyper in enumerate(grid):
        row = {"grid_index": i, "hyper": hyper}
        try:
            model, _ = fitter(train, hyper)
            suite = EnvironmentSuite(train, val_suite_tests)
            result = sweep(model, suite)
            row["average_error"] = result.average_error
            row["stability_error"] = result.stability_error
            row["criterion"] = (
                result.average_error + STABILITY_TRADEOFF * result.stability_error
            )
        except Exception as exc:  # recorded, not fatal per grid point
            row["error"] = repr(exc)
            table.append(row)
            continue
        table.append(row)
        if best is None or row["criterion"] < best["criterion"]:
            best = row
    if best is None:
        raise TuningError("every grid point failed")
    return best["hyper"], table
