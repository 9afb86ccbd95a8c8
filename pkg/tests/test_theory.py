"""Closed-form imbalance values, their expectation, and the risk bound."""

import math

import numpy as np
import pytest

from stablebal import BoundInputs, alpha_from_m, expected_alpha, risk_bound

from oracles import brute_force_alpha, mc_expected_alpha


class TestAlphaFromM:
    def test_known_values(self):
        assert alpha_from_m(3, 0) == 0.0
        assert alpha_from_m(3, 2) == pytest.approx(0.5)
        assert alpha_from_m(3, 3) == pytest.approx(2.0 / 3.0)
        assert alpha_from_m(3, 4) == 1.0
        assert alpha_from_m(3, 7) == 1.0  # single pattern left: 0/0 := 1

    @pytest.mark.parametrize("p", [2, 3])
    def test_matches_brute_force_enumeration(self, p):
        for m in range(2**p):
            assert alpha_from_m(p, m) == pytest.approx(
                float(brute_force_alpha(p, m)), abs=1e-14
            ), f"p={p}, m={m}"

    @pytest.mark.parametrize("p", [2, 3, 4, 6])
    def test_monotone_in_m_and_bounded(self, p):
        vals = [alpha_from_m(p, m) for m in range(2**p)]
        assert all(0.0 <= v <= 1.0 for v in vals)
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("p", [3, 4, 5, 8])
    def test_continuous_at_case_boundary(self, p):
        # both middle branches agree at m = 2^{p-2}
        m = 2 ** (p - 2)
        case2 = 2 ** (p - 2) / (2 ** (p - 1) - m) - 0.5
        case3 = 1.0 - (2 ** (p - 1) - m) / (3 * 2 ** (p - 2) - m)
        assert case2 == pytest.approx(case3, abs=1e-14)
        assert alpha_from_m(p, m) == pytest.approx(case2, abs=1e-14)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            alpha_from_m(1, 0)
        with pytest.raises(ValueError):
            alpha_from_m(3, -1)
        with pytest.raises(ValueError):
            alpha_from_m(3, 8)


class TestExpectedAlpha:
    def test_single_sample_is_one(self):
        assert expected_alpha(1, 2) == 1.0

    def test_frozen_small_value(self):
        # n=10, p=2: exact rational evaluation gives 5/11
        assert expected_alpha(10, 2) == pytest.approx(5.0 / 11.0, abs=1e-15)

    @pytest.mark.parametrize("n,p", [(10, 2), (50, 3)])
    def test_matches_composition_monte_carlo(self, n, p):
        mean, se = mc_expected_alpha(n, p, draws=100_000, seed=42)
        assert abs(expected_alpha(n, p) - mean) < 3.0 * se

    def test_decreasing_in_n(self):
        for p in (3, 4):
            vals = [expected_alpha(n, p) for n in (10, 100, 1000, 10_000)]
            assert all(b < a for a, b in zip(vals, vals[1:]))

    def test_increasing_in_p(self):
        for n in (100, 1000):
            vals = [expected_alpha(n, p) for p in (2, 3, 4, 5)]
            assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_bounded(self):
        for n, p in ((5, 2), (100, 4), (10_000, 3)):
            assert 0.0 <= expected_alpha(n, p) <= 1.0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            expected_alpha(0, 3)
        with pytest.raises(ValueError):
            expected_alpha(10, 1)
        with pytest.raises(ValueError):
            expected_alpha(10, 21)


def bound_inputs(**kw):
    base = dict(
        n=1000, p=20, layer_sizes=(20, 10, 5), lambda4=1.0, lambda5=10.0,
        lambda7=1.0, bias_caps=(1.0, 1.0), delta=0.05, loss_sup=5.0,
        epsilon_l1=0.01,
    )
    base.update(kw)
    return BoundInputs(**base)


class TestRiskBound:
    def test_zero_epsilon_kills_imbalance_term(self):
        assert risk_bound(bound_inputs(epsilon_l1=0.0)).imbalance_term == 0.0

    def test_layer_norm_cap_composition(self):
        # K=1, lambda7=3, bias cap 1 -> per-layer factor sqrt(3 + 1) = 2
        b = bound_inputs(layer_sizes=(4, 2), lambda7=3.0, bias_caps=(1.0,))
        expected = (
            2 ** (1 + 3)
            * math.sqrt(2.0 * math.log(2.0 * 20) / 1000)
            * min(math.sqrt(1.0 * 2), 10.0)
            * (2.0 * math.sqrt(4))
        )
        assert risk_bound(b).complexity_term == pytest.approx(expected, rel=1e-12)

    def test_full_evaluation_independent_recompute(self):
        b = bound_inputs()
        # term-by-term recomputation with plain floats
        prod = 1.0
        for k in (1, 2):
            prod *= math.sqrt(1.0 + 1.0**2) * math.sqrt(b.layer_sizes[k - 1])
        complexity = 2**5 * math.sqrt(2 * math.log(40) / 1000) * min(math.sqrt(5.0), 10.0) * prod
        confidence = 3.0 * math.sqrt(math.log(2 / 0.05) / 2000)
        imbalance = 2.0 * 5.0 * 0.01
        result = risk_bound(b)
        assert result.complexity_term == pytest.approx(complexity, rel=1e-12)
        assert result.confidence_term == pytest.approx(confidence, rel=1e-12)
        assert result.imbalance_term == pytest.approx(imbalance, rel=1e-12)
        assert result.total == pytest.approx(complexity + confidence + imbalance, rel=1e-12)

    def test_monotonicities(self):
        base = risk_bound(bound_inputs()).total
        assert risk_bound(bound_inputs(n=4000)).total < base
        assert risk_bound(bound_inputs(delta=0.5)).total < base
        assert risk_bound(bound_inputs(lambda7=2.0)).total >= base
        assert risk_bound(bound_inputs(loss_sup=10.0)).total >= base
        assert risk_bound(bound_inputs(epsilon_l1=0.02)).total >= base
        assert risk_bound(bound_inputs(lambda5=20.0)).total >= base

    def test_validation(self):
        with pytest.raises(ValueError):
            bound_inputs(delta=0.0)
        with pytest.raises(ValueError):
            bound_inputs(bias_caps=(1.0,))
        with pytest.raises(ValueError):
            bound_inputs(lambda4=-1.0)
        with pytest.raises(ValueError):
            bound_inputs(layer_sizes=(5,))

    def test_to_dict(self):
        d = risk_bound(bound_inputs()).to_dict()
        assert set(d) == {"complexity_term", "confidence_term", "imbalance_term", "total"}
