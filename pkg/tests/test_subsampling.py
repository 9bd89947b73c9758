from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pvthreshold import DataError, DoseResponseData, NumericError, UsageError, VarianceModel, load_dataset
from pvthreshold.simulation import design, eval_model
from pvthreshold import estimate_known_tau, estimate_method1, estimate_method2
from pvthreshold.subsampling import SubsampleConfig, _draw, subsample_ci, subsample_statistics, type1_quantile

POOLED = VarianceModel.pooled()


def m1_data(seed, m=10, n=100, sigma=0.1):
    rng = np.random.default_rng(seed)
    x = design(n)
    return DoseResponseData.from_matrix(x, eval_model("M1", x)[:, None] + sigma * rng.standard_normal((n, m)))


class TestQuantile:
    def test_order_statistics(self):
        rng = np.random.default_rng(0)
        v = rng.standard_normal(1000)
        s = np.sort(v)
        assert type1_quantile(v, 0.025) == s[24]
        assert type1_quantile(v, 0.975) == s[974]

    @given(st.lists(st.integers(-50, 50), min_size=1, max_size=200), st.integers(1, 999))
    @settings(max_examples=200)
    def test_ceiling_rank(self, values, permille):
        p = permille / 1000
        s = sorted(values)
        # exact rational rank ceil(p * B)
        rank = -((-permille * len(values)) // 1000)
        assert type1_quantile(values, p) == s[max(rank, 1) - 1]


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(m_n=1), dict(m_n=5, B=99), dict(m_n=5, variant="3"), dict(m_n=5, level=1.0)],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(UsageError):
            SubsampleConfig(**kwargs)

    def test_block_not_below_n(self):
        with pytest.raises(UsageError) as e:
            subsample_ci(m1_data(0, n=20), SubsampleConfig(20, 100), POOLED)
        assert e.value.code == "invalid-subsample"

    def test_rejects_non_data(self):
        with pytest.raises(DataError):
            subsample_ci(None, SubsampleConfig(5, 100), POOLED)


class TestInterval:
    def test_formula(self):
        data = m1_data(1)
        cfg = SubsampleConfig(50, 200, "1a", seed=3)
        ci = subsample_ci(data, cfg, POOLED, tau0=0.0)
        d_star, _ = subsample_statistics(data, cfg, POOLED, ci.d_hat, ci.tau_hat, tau0=0.0)
        t = 50 ** (1 / 3) * (d_star - ci.d_hat)
        q_lo, q_hi = np.sort(t)[math.ceil(0.025 * 200) - 1], np.sort(t)[math.ceil(0.975 * 200) - 1]
        assert (ci.q_lo, ci.q_hi) == (q_lo, q_hi)
        assert ci.lower == ci.d_hat - 100 ** (-1 / 3) * q_hi
        assert ci.upper == ci.d_hat - 100 ** (-1 / 3) * q_lo
        assert ci.lower <= ci.upper

    def test_degenerate_collapses(self):
        # every dose sits far above the baseline, so every fit splits at 0
        x = design(30)
        data = DoseResponseData.from_matrix(x, 5.0 + 0.01 * np.array([[-1.0, 0.0, 1.0]] * 30))
        ci = subsample_ci(data, SubsampleConfig(10, 100), POOLED, tau0=0.0)
        assert ci.d_hat == 0.0
        assert (ci.lower, ci.upper, ci.width) == (0.0, 0.0, 0.0)

    def test_known_tau_variants_identical(self):
        data = m1_data(2)
        a = subsample_ci(data, SubsampleConfig(50, 300, "1a", seed=5), POOLED, tau0=0.0)
        b = subsample_ci(data, SubsampleConfig(50, 300, "1b", seed=5), POOLED, tau0=0.0)
        assert (a.lower, a.upper, a.q_lo, a.q_hi, a.d_hat) == (b.lower, b.upper, b.q_lo, b.q_hi, b.d_hat)

    def test_unknown_tau_variants(self):
        data = m1_data(3)
        out = {v: subsample_ci(data, SubsampleConfig(50, 200, v, seed=1), POOLED) for v in ("1a", "1b", "2")}
        assert out["1a"].d_hat == out["1b"].d_hat
        assert out["2"].heuristic and not out["1a"].heuristic
        for ci in out.values():
            assert ci.lower <= ci.upper
            assert ci.lower - 0.2 < 0.5 < ci.upper + 0.2

    @pytest.mark.parametrize("variance", [POOLED, VarianceModel.per_dose()])
    @pytest.mark.parametrize("variant", ["1a", "1b", "2"])
    def test_batched_matches_single_fits(self, variance, variant):
        data = m1_data(6, n=40)
        cfg = SubsampleConfig(15, 100, variant, seed=8)
        full = estimate_method2(data, variance) if variant == "2" else estimate_method1(data, variance)
        d_star, failures = subsample_statistics(data, cfg, variance, full.d_hat, full.tau_hat)
        assert failures == 0
        for b in range(0, 100, 9):
            idx = _draw(8, b, 0, data.n, 15)
            sub = DoseResponseData(data.x[idx], tuple(data.responses[i] for i in idx))
            if variant == "1a":
                ref = estimate_known_tau(sub, full.tau_hat, variance)
            elif variant == "1b":
                ref = estimate_method1(sub, variance)
            else:
                ref = estimate_method2(sub, variance)
            assert d_star[b] == ref.d_hat

    def test_seed_determinism(self):
        data = m1_data(4)
        cfg = SubsampleConfig(40, 150, "1b", seed=11)
        assert subsample_ci(data, cfg, POOLED).to_json() == subsample_ci(data, cfg, POOLED).to_json()

    def test_json_fields(self):
        ci = subsample_ci(m1_data(5), SubsampleConfig(50, 100), POOLED, tau0=0.0)
        doc = json.loads(ci.to_json())
        assert {"variant", "d_hat", "lower", "upper", "m_n", "B", "level", "seed"} <= set(doc)


class TestFailures:
    def sparse_variance(self, noisy):
        # only ``noisy`` doses carry within-dose spread; a subsample without
        # any of them has no pooled variance estimate
        x = design(100)
        Y = np.tile(eval_model("M1", x)[:, None], (1, 4))
        Y[:noisy] += 0.1 * np.array([-1.0, -0.5, 0.5, 1.0])
        return DoseResponseData.from_matrix(x, Y)

    def test_redraws_within_budget(self):
        ci = subsample_ci(self.sparse_variance(6), SubsampleConfig(50, 1000, seed=2), POOLED, tau0=0.0)
        assert 0 < ci.failures <= 50

    def test_aborts_over_budget(self):
        with pytest.raises(NumericError) as e:
            subsample_ci(self.sparse_variance(2), SubsampleConfig(50, 1000, seed=2), POOLED, tau0=0.0)
        assert e.value.code == "subsample-failures"


def test_queue_like_width_order():
    data = load_dataset("queue_like").data
    for variant in ("1a", "2"):
        ci = subsample_ci(data, SubsampleConfig(50, 1000, variant, seed=0), POOLED)
        # reported widths on the real data are 0.023 to 0.046
        assert 0.0035 <= ci.width <= 0.35
        assert ci.lower <= ci.d_hat <= ci.upper
