"""Rolling-origin cross-validation for the additive forecaster."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd

from invlab.errors import DataError
from invlab.forecast.model import ForecasterConfig, fit, predict
from invlab.metrics import interval_coverage, pointwise_metrics

SECOND = pd.Timedelta(seconds=1)


@dataclass(frozen=True)
class CrossValPlan:
    initial: pd.Timedelta
    period: pd.Timedelta
    horizon: pd.Timedelta
    cutoffs: tuple[pd.Timestamp, ...]


def _days(x: float) -> pd.Timedelta:
    # whole seconds keep cutoff arithmetic exact
    return pd.Timedelta(days=x).floor("s")


def _enumerate_cutoffs(start, end, initial, period, horizon) -> tuple[pd.Timestamp, ...]:
    if period <= pd.Timedelta(0) or horizon <= pd.Timedelta(0):
        raise ValueError("period and horizon must be positive")
    cutoffs = []
    cutoff = start + initial
    while cutoff + horizon <= end:
        cutoffs.append(cutoff)
        cutoff = cutoff + period
    if not cutoffs:
        raise ValueError(
            f"span {end - start} is too short for initial {initial} plus horizon {horizon}"
        )
    return tuple(cutoffs)


def plan_cross_validation(
    span,
    preset: str = "lost_sales",
    series_length: int | None = None,
    *,
    initial_days: float | None = None,
    period_days: float | None = None,
    horizon_days: float | None = None,
) -> CrossValPlan:
    """Cutoff schedule for one of the three model presets.

    lost_sales:    initial 180 days, period initial/10, horizon at least 30 days
                   and at most the data left after the initial window.
    dual_sourcing: horizon half the span; three folds start at 30 %, 40 % and
                   50 % of the span.
    multi_echelon: initial half the series length (daily rows), period 10 %
                   and horizon 30 % of the initial window.

    Explicit ``*_days`` arguments override the preset values.
    """
    start, end = (pd.Timestamp(s) for s in span)
    if end <= start:
        raise ValueError("span end must follow its start")
    total = (end - start) / pd.Timedelta(days=1)

    if preset == "lost_sales":
        initial = initial_days if initial_days is not None else 180.0
        if total <= initial:
            raise ValueError(f"span of {total:g} days is too short for an initial window of {initial:g}")
        period = period_days if period_days is not None else initial / 10.0
        horizon = max(30.0, horizon_days or 30.0)
        horizon = min(horizon, total - initial)
    elif preset == "dual_sourcing":
        horizon = horizon_days if horizon_days is not None else total / 2.0
        initial = initial_days if initial_days is not None else 0.3 * total
        period = period_days if period_days is not None else 0.1 * total
    elif preset == "multi_echelon":
        if series_length is None:
            raise ValueError("multi_echelon plan needs series_length")
        base = series_length / 2.0
        initial = initial_days if initial_days is not None else base
        period = period_days if period_days is not None else 0.1 * base
        horizon = horizon_days if horizon_days is not None else 0.3 * base
    else:
        raise ValueError(f"unknown preset {preset!r}")

    initial, period, horizon = _days(initial), _days(period), _days(horizon)
    return CrossValPlan(initial, period, horizon, _enumerate_cutoffs(start, end, initial, period, horizon))


def _run_fold(df: pd.DataFrame, config: ForecasterConfig, cutoff, horizon) -> pd.DataFrame:
    train = df[df["ds"] <= cutoff]
    test = df[(df["ds"] > cutoff) & (df["ds"] <= cutoff + horizon)]
    if train["ds"].nunique() < 2:
        raise DataError(f"fold at cutoff {cutoff} has fewer than 2 training points")
    if test.empty:
        return pd.DataFrame(columns=["ds", "y", "yhat", "yhat_lower", "yhat_upper", "cutoff"])
    model = fit(train, config)
    fc = predict(model, test)
    fc["y"] = test["y"].to_numpy()
    fc["cutoff"] = cutoff
    return fc[["ds", "y", "yhat", "yhat_lower", "yhat_upper", "cutoff"]]


def cross_validate(df: pd.DataFrame, config: ForecasterConfig, plan: CrossValPlan, n_jobs: int = 1) -> pd.DataFrame:
    """Refit at every cutoff and forecast the following horizon window.

    Holdout rows use their observed regressor values.  Folds may run on a
    thread pool; results are concatenated in cutoff order either way.
    """
    df = df.sort_values("ds", kind="mergesort").reset_index(drop=True)
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            folds = list(pool.map(lambda c: _run_fold(df, config, c, plan.horizon), plan.cutoffs))
    else:
        folds = [_run_fold(df, config, c, plan.horizon) for c in plan.cutoffs]
    folds = [f for f in folds if not f.empty]
    if not folds:
        raise DataError("no holdout rows in any fold")
    return pd.concat(folds, ignore_index=True)


METRIC_COLUMNS = ("mse", "rmse", "mae", "mape", "mdape", "smape", "coverage")


def performance_by_horizon(records: pd.DataFrame, window_fraction: float = 0.1) -> pd.DataFrame:
    """Metrics over a rolling window of records ordered by horizon.

    Each distinct horizon is reported over the ``window_fraction * n`` records
    ending at its last occurrence; horizons too close to the start reuse the
    first full window.
    """
    if records.empty:
        raise ValueError("no cross-validation records")
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must lie in (0, 1]")
    recs = records.assign(horizon=records["ds"] - records["cutoff"])
    recs = recs.sort_values(["horizon", "ds"], kind="mergesort").reset_index(drop=True)
    n = len(recs)
    w = min(max(int(window_fraction * n), 1), n)
    horizons = recs["horizon"].to_numpy()
    last = np.flatnonzero(np.append(horizons[1:] != horizons[:-1], True))

    y = recs["y"].to_numpy(dtype=float)
    yhat = recs["yhat"].to_numpy(dtype=float)
    lo = recs["yhat_lower"].to_numpy(dtype=float)
    hi = recs["yhat_upper"].to_numpy(dtype=float)
    rows = []
    for j in last:
        stop = max(j + 1, w)
        sl = slice(stop - w, stop)
        rep = pointwise_metrics(y[sl], yhat[sl])
        rows.append({
            "horizon": horizons[j],
            "mse": rep.mse,
            "rmse": rep.rmse,
            "mae": rep.mae,
            "mape": np.nan if rep.mape is None else rep.mape,
            "mdape": np.nan if rep.mdape is None else rep.mdape,
            "smape": rep.smape,
            "coverage": interval_coverage(y[sl], lo[sl], hi[sl]),
        })
    return pd.DataFrame(rows, columns=["horizon", *METRIC_COLUMNS])
