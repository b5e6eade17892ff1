import math

import numpy as np
import pytest

from helpers import blobs_task, small_spec, train_config
from triam.diagnostics import (
    build_report,
    check_monotonicity,
    decile_ratio,
    estimate_rate,
    increment_norms,
    max_last_quartile,
    render_report,
    report_kv,
    stationarity_residual,
    verify_majorization,
)
from triam.network import NetworkState
from triam.solver import MajorizationRecord


class TestMonotonicity:
    def test_strictly_decreasing_clean(self):
        assert check_monotonicity([5.0, 4.0, 3.0, 1.0], 0.0) == []

    def test_single_rise_located(self):
        out = check_monotonicity([3.0, 2.0, 2.5], 0.0)
        assert out == [(2, 0.5)]

    def test_constant_history_allowed(self):
        assert check_monotonicity([2.0, 2.0, 2.0], 0.0) == []

    def test_slack_scales_with_magnitude(self):
        # rise of 1e-6 against |F| = 1e4 stays within slack 1e-8 * (1 + 1e4)
        assert check_monotonicity([1e4, 1e4 + 1e-6], 1e-8) == []
        assert check_monotonicity([1e4, 1e4 + 1.0], 1e-8) == [(1, 1.0)]


def _state(rng, scale=1.0):
    W = [scale * rng.standard_normal((3, 2)), scale * rng.standard_normal((2, 3))]
    b = [scale * rng.standard_normal((3, 1)), scale * rng.standard_normal((2, 1))]
    z = [scale * rng.standard_normal((3, 4)), scale * rng.standard_normal((2, 4))]
    a = [scale * rng.standard_normal((3, 4))]
    return NetworkState(
        W=W, b=b, z=z, a=a,
        prev_W=[m.copy() for m in W], prev_b=[m.copy() for m in b],
        prev_z=[m.copy() for m in z], prev_a=[m.copy() for m in a],
    )


class TestIncrementNorms:
    def test_frozen_run_all_zero(self):
        rng = np.random.default_rng(0)
        s = _state(rng)
        series, ratios = increment_norms([s, s.clone(), s.clone()])
        for block in "Wbza":
            assert series[block] == [0.0, 0.0]
            assert ratios[block] == 0.0

    def test_geometric_decay_matches_closed_form(self):
        # Construct snapshots whose W increments are exactly 2^-k; the
        # decile ratio then equals the closed-form mean quotient.
        rng = np.random.default_rng(1)
        base = _state(rng)
        snapshots = [base]
        cur = base
        K = 40
        for k in range(K):
            nxt = cur.clone()
            bump = np.zeros_like(nxt.W[0])
            bump[0, 0] = 2.0 ** -k
            nxt.W = [nxt.W[0] + bump, nxt.W[1]]
            snapshots.append(nxt)
            cur = nxt
        series, ratios = increment_norms(snapshots)
        np.testing.assert_allclose(series["W"], [2.0 ** -k for k in range(K)], rtol=1e-12)
        chunk = max(1, K // 10)
        expect = np.mean([2.0 ** -k for k in range(K - chunk, K)]) / np.mean(
            [2.0 ** -k for k in range(chunk)]
        )
        assert ratios["W"] == pytest.approx(expect, rel=1e-12)

    def test_single_pair_flags_ratio_undefined(self):
        rng = np.random.default_rng(2)
        s = _state(rng)
        series, ratios = increment_norms([s, s.clone()])
        assert len(series["W"]) == 1
        assert ratios["W"] is None

    def test_too_few_snapshots(self):
        rng = np.random.default_rng(3)
        with pytest.raises(ValueError):
            increment_norms([_state(rng)])


class TestEstimateRate:
    def test_exact_geometric_series(self):
        F = [0.5 ** k for k in range(12)]
        ratios = estimate_rate(F, 0.0)
        np.testing.assert_allclose(ratios, 0.25, rtol=1e-12)

    def test_constructed_half_ratio(self):
        F = [1.0]
        for _ in range(10):
            F.append(F[-1] * math.sqrt(0.5))
        ratios = estimate_rate(F, 0.0)
        np.testing.assert_allclose(ratios, 0.5, rtol=1e-12)

    def test_denominator_guard_skips_converged_tail(self):
        F = [1.0, 0.5, 0.1, 0.1, 0.1]
        ratios = estimate_rate(F, 0.1 - 1e-13)
        assert len(ratios) < len(F) - 2

    def test_fstar_above_minimum_rejected(self):
        with pytest.raises(ValueError):
            estimate_rate([3.0, 2.0, 1.0], 1.5)

    def test_max_last_quartile(self):
        assert max_last_quartile([0.1, 0.2, 0.9, 0.3]) == 0.3
        assert max_last_quartile([]) is None


class TestVerifyMajorization:
    def test_clean_records(self):
        recs = [MajorizationRecord(1, 1, "W", 2.0, 0.0, 1.0, 0.5)]
        failures, empty = verify_majorization(recs)
        assert failures == 0 and not empty

    def test_corrupted_record_counted(self):
        recs = [MajorizationRecord(1, 1, "W", 1.0, 0.0, 1.0, 1.0)]
        failures, _ = verify_majorization(recs)
        assert failures == 1

    def test_empty_audit_flagged(self):
        failures, empty = verify_majorization([])
        assert failures == 0 and empty


class TestStationarityResidual:
    def test_identical_snapshots_zero(self):
        rng = np.random.default_rng(4)
        s = _state(rng)
        assert stationarity_residual(s.clone(), s.clone()) == 0.0

    def test_unit_change_single_block(self):
        rng = np.random.default_rng(5)
        old = _state(rng)
        new = old.clone()
        bump = np.zeros_like(new.W[0])
        bump[0, 0] = 1.0
        new.W = [new.W[0] + bump, new.W[1]]
        assert stationarity_residual(new, old) == pytest.approx(1.0)

    def test_perturbation_norm_arithmetic(self):
        rng = np.random.default_rng(6)
        old = _state(rng)
        new = old.clone()
        delta = 0.01
        expected = 0.0
        for fam in ("W", "b", "z", "a"):
            mats = getattr(new, fam)
            bumped = []
            total = 0.0
            for m in mats:
                d = delta * rng.standard_normal(m.shape)
                bumped.append(m + d)
                total += float(np.sum(d * d))
            setattr(new, fam, bumped)
            expected += math.sqrt(total)
        assert stationarity_residual(new, old) == pytest.approx(expected, rel=1e-12)

    def test_previous_step_terms_counted(self):
        rng = np.random.default_rng(7)
        old = _state(rng)
        bump = np.zeros_like(old.W[0])
        bump[0, 0] = 2.0
        old.prev_W = [old.W[0] + bump, old.W[1]]  # ||W_old - prev|| = 2
        new = old.clone()
        assert stationarity_residual(new, old) == pytest.approx(2.0)


class TestDecileRatio:
    def test_short_series(self):
        assert decile_ratio([1.0]) is None

    def test_zero_head_zero_tail(self):
        assert decile_ratio([0.0, 0.0]) == 0.0


class TestBuildReport:
    def test_full_report_on_small_run(self):
        from triam.trainer import train

        train_pair, test_pair, _ = blobs_task(d=4, classes=2, per_class=15, separation=3.0)
        spec = small_spec(dims=(4, 8, 2))
        cfg = train_config(spec, epochs=25, seed=0)
        history = train(cfg, train_pair, test_pair)
        report = build_report(history)
        assert report.majorization_checked == len(history.audit) > 0
        assert report.majorization_failures == 0
        assert report.max_feasibility_violation <= 1e-8
        kv = report_kv(report)
        assert kv["monotonicity_violations"] == len(report.monotonicity_violations)
        text = render_report(report)
        assert "majorization audit" in text
        assert "feasibility" in text

    def test_stationarity_series_trends_down_on_long_run(self):
        from triam.trainer import train

        train_pair, test_pair, _ = blobs_task(d=4, classes=2, per_class=15, separation=3.0)
        spec = small_spec(dims=(4, 8, 2))
        cfg = train_config(spec, epochs=200, seed=1)
        history = train(cfg, train_pair, test_pair)
        report = build_report(history)
        res = report.stationarity_residuals
        assert len(res) == len(history.metrics)
        late = np.mean(res[-20:])
        mid = np.mean(res[20:40])
        assert late < mid
