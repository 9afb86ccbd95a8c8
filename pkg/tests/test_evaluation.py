"""Error metrics, environment sweeps, validation construction, tuning."""

import numpy as np
import pytest

from stablebal import (
    BinaryDataset,
    EnvironmentSuite,
    HyperParams,
    SweepResult,
    TuningError,
    build_validation_envs,
    fit_gbr,
    fit_lr,
    rmse,
    sweep,
    tune,
)
from stablebal.evaluation import STABILITY_TRADEOFF


def random_dataset(seed, n=60, p=5):
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(n, p))
    logits = X @ rng.normal(size=p)
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logits))).astype(np.int8)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    return BinaryDataset(X.astype(np.int8), y)


class TestRmse:
    def test_perfect(self):
        assert rmse([0.0, 1.0], [0, 1]) == 0.0

    def test_constant_half(self):
        assert rmse([0.5, 0.5], [0, 1]) == pytest.approx(0.5)

    def test_hand_value(self):
        assert rmse([0.2, 0.9], [0, 1]) == pytest.approx(0.15811, abs=1e-5)

    def test_shape_errors(self):
        with pytest.raises(ValueError):
            rmse([0.5], [0, 1])
        with pytest.raises(ValueError):
            rmse([], [])

    def test_bounded_for_probabilities(self):
        rng = np.random.default_rng(0)
        preds = rng.uniform(size=50)
        truth = rng.integers(0, 2, size=50)
        assert 0.0 <= rmse(preds, truth) <= 1.0


class TestSweepResult:
    def test_hand_aggregates(self):
        r = SweepResult((("a", 0.1), ("b", 0.2), ("c", 0.3)))
        assert r.average_error == pytest.approx(0.2)
        assert r.stability_error == pytest.approx(0.1)

    def test_identical_envs_zero_stability(self):
        r = SweepResult((("a", 0.25), ("b", 0.25)))
        assert r.stability_error == 0.0

    def test_permutation_invariance(self):
        a = SweepResult((("a", 0.1), ("b", 0.4), ("c", 0.2)))
        b = SweepResult((("c", 0.2), ("a", 0.1), ("b", 0.4)))
        assert a.average_error == pytest.approx(b.average_error)
        assert a.stability_error == pytest.approx(b.stability_error)

    def test_needs_two_envs(self):
        with pytest.raises(ValueError):
            SweepResult((("only", 0.1),))

    def test_serialization(self):
        r = SweepResult((("a", 0.1), ("b", 0.2)))
        assert "a,0.1" in r.to_csv()
        import json

        payload = json.loads(r.to_json())
        assert payload["average_error"] == pytest.approx(0.15)


class TestSweep:
    def test_sweep_over_suite(self):
        train = random_dataset(1)
        model, _ = fit_lr(train, 0.01, 0.0)
        suite = EnvironmentSuite(
            train, (("e1", random_dataset(2)), ("e2", random_dataset(3)))
        )
        result = sweep(model, suite)
        assert len(result.per_env) == 2
        assert all(0.0 <= e <= 1.0 for _, e in result.per_env)


class TestValidationEnvs:
    def test_deterministic_and_counted(self):
        train = random_dataset(4, n=200, p=6)
        hint, _ = fit_gbr(train, HyperParams(max_outer_iters=3))
        envs1 = build_validation_envs(train, hint, count=3, seed=0)
        envs2 = build_validation_envs(train, hint, count=3, seed=0)
        assert len(envs1) == 3
        assert all(a == b for a, b in zip(envs1, envs2))
        assert all(e.p == train.p for e in envs1)

    def test_rejects_embedded_hint(self):
        from stablebal import fit_dgbr

        train = random_dataset(5, n=80, p=5)
        deep, _ = fit_dgbr(train, HyperParams(max_outer_iters=2))
        with pytest.raises(ValueError):
            build_validation_envs(train, deep)

    def test_rate_count_mismatch(self):
        train = random_dataset(6, n=80, p=5)
        hint, _ = fit_gbr(train, HyperParams(max_outer_iters=2))
        with pytest.raises(ValueError):
            build_validation_envs(train, hint, count=2, rates=[0.3, 0.5, 0.7])


class TestTune:
    def fitter(self, d, hyper):
        return fit_gbr(d, hyper)

    def test_singleton_grid(self):
        train = random_dataset(7, n=150, p=6)
        only = HyperParams(max_outer_iters=3)
        best, table = tune(train, [only], self.fitter, seed=0)
        assert best == only
        assert len(table) == 1
        assert "criterion" in table[0]

    def test_criterion_uses_tradeoff_five(self):
        assert STABILITY_TRADEOFF == 5.0
        train = random_dataset(8, n=150, p=6)
        grid = [HyperParams(max_outer_iters=3), HyperParams(max_outer_iters=3, lambda1=5.0)]
        best, table = tune(train, grid, self.fitter, seed=1)
        for row in table:
            assert row["criterion"] == pytest.approx(
                row["average_error"] + 5.0 * row["stability_error"]
            )
        winner = min(table, key=lambda r: r["criterion"])
        assert best == winner["hyper"]

    def test_per_point_failures_recorded(self):
        train = random_dataset(9, n=100, p=5)

        def flaky(d, hyper):
            if hyper.lambda1 > 100:
                raise RuntimeError("boom")
            return fit_gbr(d, hyper)

        grid = [HyperParams(max_outer_iters=2, lambda1=1000.0),
                HyperParams(max_outer_iters=2)]
        best, table = tune(train, grid, flaky, seed=2)
        assert "error" in table[0]
        assert best == grid[1]

    def test_all_failed_raises(self):
        train = random_dataset(10, n=100, p=5)

        def broken(d, hyper):
            raise RuntimeError("nope")

        # supply validation envs so the preliminary fit is not needed
        envs = [random_dataset(11, n=100, p=5), random_dataset(12, n=100, p=5)]
        with pytest.raises(TuningError):
            tune(train, [HyperParams()], broken, validation_envs=envs)

    def test_empty_grid(self):
        with pytest.raises(TuningError):
            tune(random_dataset(13), [], self.fitter)
