"""Additive seasonal-trend forecasting with rolling-origin validation."""
from invlab.forecast.model import (
    ACTION,
    NO_ACTION,
    PRESETS,
    FittedForecaster,
    ForecasterConfig,
    ForecastPreset,
    components,
    fit,
    fourier_features,
    future_frame,
    make_future,
    predict,
    preset_frame,
    threshold_report,
)
from invlab.forecast.validation import (
    CrossValPlan,
    cross_validate,
    performance_by_horizon,
    plan_cross_validation,
)

__all__ = [
    "ACTION", "NO_ACTION", "PRESETS", "FittedForecaster", "ForecasterConfig", "ForecastPreset",
    "components", "fit", "fourier_features", "future_frame", "make_future", "predict",
    "preset_frame", "threshold_report", "CrossValPlan", "cross_validate",
    "performance_by_horizon", "plan_cross_validation",
]
