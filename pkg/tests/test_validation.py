import numpy as np
import pandas as pd
import pytest

from invlab.errors import DataError
from invlab.forecast import (
    ForecasterConfig,
    cross_validate,
    performance_by_horizon,
    plan_cross_validation,
)
from invlab.metrics import interval_coverage

START = pd.Timestamp("2023-01-01")
DAY = pd.Timedelta(days=1)


def daily(n, y=None):
    y = np.random.default_rng(0).normal(50, 3, n) if y is None else y
    return pd.DataFrame({"ds": pd.date_range(START, periods=n, freq="D"), "y": y})


class TestPlan:
    def test_nine_cutoffs(self):
        plan = plan_cross_validation((START, START + 360 * DAY), "lost_sales",
                                     initial_days=180, period_days=18, horizon_days=30)
        offsets = [(c - START) / DAY for c in plan.cutoffs]
        assert offsets == [180 + 18 * k for k in range(9)]

    def test_boundary_single_cutoff(self):
        plan = plan_cross_validation((START, START + 210 * DAY), "lost_sales", horizon_days=30)
        assert len(plan.cutoffs) == 1

    def test_lost_sales_defaults(self):
        plan = plan_cross_validation((START, START + 400 * DAY), "lost_sales")
        assert plan.initial == 180 * DAY and plan.period == 18 * DAY and plan.horizon == 30 * DAY

    def test_multi_echelon_from_length(self):
        plan = plan_cross_validation((START, START + 399 * DAY), "multi_echelon", series_length=400)
        assert (plan.initial, plan.period, plan.horizon) == (200 * DAY, 20 * DAY, 60 * DAY)

    def test_dual_sourcing_three_folds(self):
        plan = plan_cross_validation((START, START + 500 * DAY), "dual_sourcing")
        assert len(plan.cutoffs) == 3
        assert plan.horizon == 250 * DAY

    def test_invariants(self):
        end = START + 400 * DAY
        plan = plan_cross_validation((START, end), "lost_sales")
        assert all(c >= START + plan.initial and c + plan.horizon <= end for c in plan.cutoffs)
        assert all(b - a == plan.period for a, b in zip(plan.cutoffs, plan.cutoffs[1:]))

    def test_too_short(self):
        with pytest.raises(ValueError):
            plan_cross_validation((START, START + 100 * DAY), "lost_sales")
        with pytest.raises(ValueError):
            plan_cross_validation((START, START + 100 * DAY), "unknown")


class TestCrossValidate:
    def test_windows_cover_holdout(self):
        df = daily(240)
        plan = plan_cross_validation((START, START + 239 * DAY), "lost_sales", horizon_days=30)
        recs = cross_validate(df, ForecasterConfig(yearly=False), plan)
        for cutoff, fold in recs.groupby("cutoff"):
            expected = df[(df["ds"] > cutoff) & (df["ds"] <= cutoff + plan.horizon)]["ds"]
            assert fold["ds"].tolist() == expected.tolist()

    def test_deterministic_and_parallel(self):
        df = daily(300)
        plan = plan_cross_validation((START, START + 299 * DAY), "lost_sales")
        cfg = ForecasterConfig(yearly=False)
        a = cross_validate(df, cfg, plan)
        pd.testing.assert_frame_equal(a, cross_validate(df, cfg, plan))
        pd.testing.assert_frame_equal(a, cross_validate(df, cfg, plan, n_jobs=3))

    def test_constant_series(self):
        df = daily(260, np.full(260, 7.0))
        plan = plan_cross_validation((START, START + 259 * DAY), "lost_sales")
        recs = cross_validate(df, ForecasterConfig(yearly=False, weekly=False), plan)
        np.testing.assert_allclose(recs["yhat"], 7.0, atol=1e-8)

    def test_fold_without_training_data(self):
        df = daily(40)
        plan = plan_cross_validation((START - 400 * DAY, START + 39 * DAY), "lost_sales")
        with pytest.raises(DataError):
            cross_validate(df, ForecasterConfig(), plan)


class TestPerformanceByHorizon:
    @pytest.fixture(scope="class")
    @classmethod
    def records(cls):
        df = daily(320)
        plan = plan_cross_validation((START, START + 319 * DAY), "lost_sales")
        return cross_validate(df, ForecasterConfig(yearly=False), plan)

    def test_sorted_and_columns(self, records):
        perf = performance_by_horizon(records)
        assert list(perf.columns) == ["horizon", "mse", "rmse", "mae", "mape", "mdape", "smape", "coverage"]
        assert perf["horizon"].is_monotonic_increasing
        assert perf["horizon"].is_unique

    def test_full_window_is_global(self, records):
        perf = performance_by_horizon(records, window_fraction=1.0)
        assert perf.drop(columns="horizon").nunique().max() == 1
        cov = interval_coverage(records["y"], records["yhat_lower"], records["yhat_upper"])
        assert perf["coverage"].iloc[0] == pytest.approx(cov, abs=1e-15)

    def test_coverage_matches_window(self, records):
        perf = performance_by_horizon(records, window_fraction=0.1)
        recs = records.assign(h=records["ds"] - records["cutoff"]).sort_values(["h", "ds"], kind="mergesort")
        recs = recs.reset_index(drop=True)
        w = int(0.1 * len(recs))
        last = recs.groupby("h").tail(1).index[-1]
        window = recs.iloc[last + 1 - w: last + 1]
        cov = interval_coverage(window["y"], window["yhat_lower"], window["yhat_upper"])
        assert perf["coverage"].iloc[-1] == pytest.approx(cov, abs=1e-15)

    def test_empty(self):
        with pytest.raises(ValueError):
            performance_by_horizon(pd.DataFrame(columns=["ds", "y", "yhat", "yhat_lower", "yhat_upper", "cutoff"]))
