"""Additive trend + seasonality + regressor forecaster.

The model is

    y(t) = k + m*t + sum_j delta_j * max(t - s_j, 0)
           + sum_blocks sum_n (a_n sin(2 pi n t / P) + b_n cos(2 pi n t / P))
           + sum_r beta_r * x_r(t)

with t rescaled to [0, 1] over the training range and y divided by max|y|.
It is fitted by ridge-penalized least squares: changepoint deltas carry weight
1/changepoint_prior_scale, Fourier coefficients 1/seasonality_prior_scale,
while the base trend and regressor coefficients are unpenalized.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd
from scipy.special import ndtri

from invlab.errors import DataError

log = logging.getLogger(__name__)

RIDGE_JITTER = 1e-10
DAY_NS = 86_400 * 10**9
SEASONAL_PERIODS = {"yearly": 365.25, "weekly": 7.0, "daily": 1.0}
DAILY_ORDER = 4


@dataclass(frozen=True)
class ForecasterConfig:
    changepoint_prior_scale: float = 0.05
    seasonality_prior_scale: float = 10.0
    yearly: bool = True
    weekly: bool = True
    daily: bool = False
    n_changepoints: int = 25
    changepoint_range: float = 0.8
    weekly_fourier_order: int = 3
    yearly_fourier_order: int = 10
    interval_width: float = 0.8
    regressor_names: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "regressor_names", tuple(self.regressor_names))
        if self.changepoint_prior_scale <= 0 or self.seasonality_prior_scale <= 0:
            raise ValueError("prior scales must be positive")
        if not 0 < self.changepoint_range <= 1:
            raise ValueError("changepoint_range must lie in (0, 1]")
        if not 0 < self.interval_width < 1:
            raise ValueError("interval_width must lie in (0, 1)")
        if self.n_changepoints < 0:
            raise ValueError("n_changepoints must be >= 0")

    def seasonal_blocks(self) -> list[tuple[str, float, int]]:
        blocks = []
        if self.yearly:
            blocks.append(("yearly", SEASONAL_PERIODS["yearly"], self.yearly_fourier_order))
        if self.weekly:
            blocks.append(("weekly", SEASONAL_PERIODS["weekly"], self.weekly_fourier_order))
        if self.daily:
            blocks.append(("daily", SEASONAL_PERIODS["daily"], DAILY_ORDER))
        return [b for b in blocks if b[2] > 0]


@dataclass(frozen=True)
class FittedForecaster:
    config: ForecasterConfig
    start: pd.Timestamp
    end: pd.Timestamp
    t_start: float
    t_span: float
    y_scale: float
    changepoints_t: np.ndarray
    coef: np.ndarray
    regressor_mean: np.ndarray
    regressor_sd: np.ndarray
    residual_sd: float
    layout: dict = field(default_factory=dict)

    def _block(self, name: str) -> np.ndarray:
        lo, hi = self.layout[name]
        return self.coef[lo:hi]

    @property
    def intercept(self) -> float:
        return float(self.coef[0] * self.y_scale)

    @property
    def slope(self) -> float:
        """Base trend slope in target units per day."""
        return float(self.coef[1] * self.y_scale / self.t_span)

    @property
    def changepoints(self) -> pd.DatetimeIndex:
        days = self.t_start + self.changepoints_t * self.t_span
        return pd.to_datetime(np.round(days * DAY_NS).astype(np.int64))

    @property
    def changepoint_deltas(self) -> np.ndarray:
        """Slope changes in target units per day."""
        return self._block("delta") * self.y_scale / self.t_span

    @property
    def seasonal_coefficients(self) -> dict[str, np.ndarray]:
        return {name: self._block(name) * self.y_scale for name, _, _ in self.config.seasonal_blocks()}

    @property
    def regressor_coefficients(self) -> dict[str, float]:
        beta = self._block("regressors") * self.y_scale / self.regressor_sd
        return dict(zip(self.config.regressor_names, map(float, beta)))

    def mean_trend_slope(self) -> float:
        """Average slope of the fitted trend across the training range, per day."""
        ends = np.array([0.0, 1.0])
        trend = _trend_matrix(ends, self.changepoints_t) @ self.coef[: 2 + self.changepoints_t.size]
        return float((trend[1] - trend[0]) * self.y_scale / self.t_span)


def _days(ds) -> np.ndarray:
    stamps = pd.to_datetime(pd.Series(ds)).to_numpy(dtype="datetime64[ns]")
    return stamps.astype(np.int64) / DAY_NS


def _trend_matrix(ts: np.ndarray, changepoints: np.ndarray) -> np.ndarray:
    cols = [np.ones_like(ts), ts]
    cols.extend(np.maximum(ts - s, 0.0) for s in changepoints)
    return np.column_stack(cols)


def fourier_features(days: np.ndarray, period: float, order: int) -> np.ndarray:
    cols = []
    for n in range(1, order + 1):
        angle = 2.0 * np.pi * n * days / period
        cols.extend((np.sin(angle), np.cos(angle)))
    return np.column_stack(cols) if cols else np.empty((days.size, 0))


def _place_changepoints(ts: np.ndarray, config: ForecasterConfig) -> np.ndarray:
    hist = int(np.floor(ts.size * config.changepoint_range))
    n_cp = min(config.n_changepoints, max(hist - 1, 0))
    if n_cp == 0:
        return np.empty(0)
    idx = np.linspace(0, hist - 1, n_cp + 1).round().astype(int)[1:]
    return ts[idx]


def _regressor_matrix(frame: pd.DataFrame, names: Sequence[str]) -> np.ndarray:
    missing = [r for r in names if r not in frame.columns]
    if missing:
        raise DataError(f"missing regressor column(s) {missing}")
    if not names:
        return np.empty((len(frame), 0))
    values = frame[list(names)].to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise DataError("regressor columns contain missing or non-finite values")
    return values


def _design(config, days, ts, changepoints, regs_std) -> tuple[np.ndarray, dict]:
    layout = {}
    parts = [_trend_matrix(ts, changepoints)]
    layout["trend"] = (0, parts[0].shape[1])
    layout["delta"] = (2, parts[0].shape[1])
    pos = parts[0].shape[1]
    for name, period, order in config.seasonal_blocks():
        block = fourier_features(days, period, order)
        layout[name] = (pos, pos + block.shape[1])
        parts.append(block)
        pos += block.shape[1]
    layout["regressors"] = (pos, pos + regs_std.shape[1])
    parts.append(regs_std)
    return np.column_stack(parts), layout


def fit(df: pd.DataFrame, config: ForecasterConfig | None = None) -> FittedForecaster:
    """Fit on a frame with columns ``ds``, ``y`` and every configured regressor."""
    config = config or ForecasterConfig()
    if "ds" not in df.columns or "y" not in df.columns:
        raise DataError("training frame needs 'ds' and 'y' columns")
    df = df.sort_values("ds", kind="mergesort")
    y = df["y"].to_numpy(dtype=float)
    if not np.all(np.isfinite(y)):
        raise DataError("training target contains missing or non-finite values")
    days = _days(df["ds"])
    if np.unique(days).size < 2:
        raise DataError("need at least 2 distinct timestamps to fit")

    t_start, t_span = float(days.min()), float(days.max() - days.min())
    ts = (days - t_start) / t_span
    y_scale = float(np.max(np.abs(y))) or 1.0
    changepoints = _place_changepoints(ts, config)

    regs = _regressor_matrix(df, config.regressor_names)
    reg_mean = regs.mean(axis=0) if regs.size else np.zeros(0)
    reg_sd = regs.std(axis=0) if regs.size else np.zeros(0)
    reg_sd = np.where(reg_sd > 0, reg_sd, 1.0)
    X, layout = _design(config, days, ts, changepoints, (regs - reg_mean) / reg_sd)

    penalty = np.zeros(X.shape[1])
    penalty[slice(*layout["delta"])] = 1.0 / config.changepoint_prior_scale
    for name, _, _ in config.seasonal_blocks():
        penalty[slice(*layout[name])] = 1.0 / config.seasonality_prior_scale
    if np.linalg.matrix_rank(X) < X.shape[1]:
        log.debug("design matrix is rank deficient (%d columns); relying on ridge jitter", X.shape[1])
    lhs = X.T @ X + np.diag(penalty + RIDGE_JITTER)
    coef = np.linalg.solve(lhs, X.T @ (y / y_scale))

    resid = y - (X @ coef) * y_scale
    return FittedForecaster(
        config=config,
        start=pd.Timestamp(df["ds"].iloc[0]),
        end=pd.Timestamp(df["ds"].iloc[-1]),
        t_start=t_start,
        t_span=t_span,
        y_scale=y_scale,
        changepoints_t=changepoints,
        coef=coef,
        regressor_mean=reg_mean,
        regressor_sd=reg_sd,
        residual_sd=float(np.std(resid)),
        layout=layout,
    )


def make_future(last_ds, horizon_days: int, cadence=pd.Timedelta(days=1)) -> pd.DatetimeIndex:
    if horizon_days < 1:
        raise ValueError(f"horizon must be positive, got {horizon_days}")
    cadence = pd.Timedelta(cadence)
    if cadence <= pd.Timedelta(0):
        raise ValueError("cadence must be positive")
    return pd.DatetimeIndex([pd.Timestamp(last_ds) + cadence * k for k in range(1, horizon_days + 1)], name="ds")


def components(model: FittedForecaster, future: pd.DataFrame) -> pd.DataFrame:
    """Trend (intercept included), seasonal blocks and total regressor effect per row."""
    if "ds" not in future.columns:
        raise DataError("future frame needs a 'ds' column")
    days = _days(future["ds"])
    ts = (days - model.t_start) / model.t_span
    regs = _regressor_matrix(future, model.config.regressor_names)
    X, layout = _design(model.config, days, ts, model.changepoints_t,
                        (regs - model.regressor_mean) / model.regressor_sd)
    out = pd.DataFrame({"ds": pd.to_datetime(future["ds"]).to_numpy()})
    total = np.zeros(len(out))
    for name in ("trend", "yearly", "weekly", "daily", "regressors"):
        if name in layout:
            lo, hi = layout[name]
            values = X[:, lo:hi] @ model.coef[lo:hi] * model.y_scale
        else:
            values = np.zeros(len(out))
        out[name] = values
        total = total + values
    out["yhat"] = total
    return out


def predict(model: FittedForecaster, future: pd.DataFrame) -> pd.DataFrame:
    """Point forecast with a symmetric Gaussian interval of the configured width."""
    comp = components(model, future)
    z = float(ndtri(0.5 + model.config.interval_width / 2.0))
    half = z * model.residual_sd
    yhat = comp["yhat"].to_numpy()
    return pd.DataFrame({
        "ds": comp["ds"],
        "yhat": yhat,
        "yhat_lower": yhat - half,
        "yhat_upper": yhat + half,
    })


ACTION = "Action needed"
NO_ACTION = "No action required"


def threshold_report(forecast: pd.DataFrame, threshold: float = 100.0) -> pd.DataFrame:
    """Flag rows whose yhat strictly exceeds ``threshold``."""
    yhat = forecast["yhat"].to_numpy(dtype=float)
    return pd.DataFrame({
        "Date": forecast["ds"].to_numpy(),
        "Units": yhat,
        "Decision": np.where(yhat > threshold, ACTION, NO_ACTION),
    })


# --------------------------------------------------------------------------
# presets
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ForecastPreset:
    name: str
    target: str
    config: ForecasterConfig
    # how each regressor is extended past the training range: "zero" or "last"
    future_fill: Mapping[str, str] = field(default_factory=dict)


PRESETS: dict[str, ForecastPreset] = {
    "lost_sales": ForecastPreset(
        name="lost_sales",
        target="Estimated Lost Sales",
        config=ForecasterConfig(changepoint_prior_scale=0.1, seasonality_prior_scale=10.0),
    ),
    # "Quantity Replenished" is also named as a regressor for this model but
    # it is the target itself, so only the promotion flag is kept
    "dual_sourcing": ForecastPreset(
        name="dual_sourcing",
        target="Quantity Replenished",
        config=ForecasterConfig(
            changepoint_prior_scale=0.05,
            seasonality_prior_scale=10.0,
            regressor_names=("Promotion Type_Discount",),
        ),
        future_fill={"Promotion Type_Discount": "zero"},
    ),
    "multi_echelon": ForecastPreset(
        name="multi_echelon",
        target="Quantity Replenished",
        config=ForecasterConfig(
            changepoint_prior_scale=0.05,
            seasonality_prior_scale=10.0,
            regressor_names=("Potential Lost Sales", "Lead Time", "Market Event E010", "Estimated Demand"),
        ),
        future_fill={
            "Potential Lost Sales": "last",
            "Lead Time": "last",
            "Market Event E010": "last",
            "Estimated Demand": "last",
        },
    ),
}


def preset_frame(frame: pd.DataFrame, preset: ForecastPreset) -> pd.DataFrame:
    """Select ``ds``, ``y`` and regressor columns from a cleaned dataset frame."""
    needed = ["Date", preset.target, *preset.config.regressor_names]
    missing = [c for c in needed if c not in frame.columns]
    if missing:
        raise DataError(f"preset {preset.name} needs column(s) {missing}")
    out = frame[needed].rename(columns={"Date": "ds", preset.target: "y"})
    if out["y"].isna().any():
        out = out[out["y"].notna()]
    return out.reset_index(drop=True)


def future_frame(history: pd.DataFrame, preset: ForecastPreset, horizon_days: int) -> pd.DataFrame:
    """Future timestamps with regressors extended by the preset's fill rules."""
    future = pd.DataFrame({"ds": make_future(history["ds"].max(), horizon_days)})
    for name in preset.config.regressor_names:
        rule = preset.future_fill.get(name, "last")
        future[name] = 0.0 if rule == "zero" else float(history[name].iloc[-1])
    return future
