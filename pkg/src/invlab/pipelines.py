"""End-to-end pipelines behind the command-line interface.

Each ``run_*`` function takes an already cleaned frame plus plain settings and
returns named tables (DataFrames) and objects; writing them to disk is left
to :mod:`invlab.cli`.
"""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np
import pandas as pd

from invlab import decide, envs, ingest
from invlab.dqn import Agent, AgentConfig, preset_config, train
from invlab.ensembles import (
    SearchSpace,
    builder_for,
    feature_importance,
    learning_curve,
    r2_score,
    randomized_search,
)
from invlab.errors import DataError
from invlab.forecast import (
    PRESETS,
    ForecasterConfig,
    components,
    cross_validate,
    fit,
    future_frame,
    performance_by_horizon,
    plan_cross_validation,
    predict,
    preset_frame,
    threshold_report,
)
from invlab.metrics import pointwise_metrics, residual_diagnostics

TREE_TARGETS = {
    "lost_sales": "Estimated Lost Sales",
    "dual_sourcing": "Quantity Replenished",
    "multi_echelon": "Quantity Replenished",
}
_BASE_FEATURES = ["Supplier ID Encoded", "Item ID Encoded", "Shelf-life"]
_DATE_PARTS = ("Year", "Month", "Day")
TREE_FEATURES = {
    "lost_sales": [*_BASE_FEATURES, "Replenishment Date Year"],
    "dual_sourcing": [
        *_BASE_FEATURES,
        *(f"{col} {part}" for col in ("Date", "Scheduled Delivery Date", "Date of Stock-out") for part in _DATE_PARTS),
        "Supplier Reliability Score",
        "Lead Time",
        "Cost Difference",
        "Promotion Type_Discount",
    ],
    "multi_echelon": [*_BASE_FEATURES, *(f"Replenishment Date {part}" for part in _DATE_PARTS)],
}
MODEL_LABELS = {"forest": "Random Forest", "gbm": "Gradient Boosting"}
# (order action, idle action) per environment for threshold-style replenishment policies
ORDER_ACTIONS = {"lost_sales": (0, 1), "dual_sourcing": (0, 3), "multi_echelon": (0, 3)}
BASE_UNIT_COST = 10.0


# --------------------------------------------------------------------------
# forecasting
# --------------------------------------------------------------------------


@dataclass
class ForecastResult:
    model: object
    forecast: pd.DataFrame
    components: pd.DataFrame
    cv_records: pd.DataFrame
    cv_metrics: pd.DataFrame
    decisions: pd.DataFrame | None


def forecaster_config(kind: str, overrides: dict | None = None) -> ForecasterConfig:
    return dataclasses.replace(PRESETS[kind].config, **(overrides or {}))


def run_forecast(frame: pd.DataFrame, kind: str, horizon_days: int = 180, threshold: float | None = None,
                 overrides: dict | None = None, n_jobs: int = 1) -> ForecastResult:
    preset = dataclasses.replace(PRESETS[kind], config=forecaster_config(kind, overrides))
    history = preset_frame(frame, preset)
    if len(history) < 2:
        raise DataError("forecasting needs at least two dated observations")
    model = fit(history, preset.config)
    future = future_frame(history, preset, horizon_days)
    forecast = predict(model, future)

    span = (history["ds"].min(), history["ds"].max())
    try:
        plan = plan_cross_validation(span, kind, series_length=len(history), horizon_days=None)
    except ValueError as exc:
        raise DataError(f"cannot cross-validate: {exc}") from exc
    records = cross_validate(history, preset.config, plan, n_jobs=n_jobs)
    cv_metrics = performance_by_horizon(records)

    both = pd.concat([history.drop(columns="y"), future], ignore_index=True)
    comps = components(model, both)
    decisions = threshold_report(forecast, threshold) if threshold is not None else None
    return ForecastResult(model, forecast, comps, records, cv_metrics, decisions)


# --------------------------------------------------------------------------
# tree ensembles
# --------------------------------------------------------------------------


@dataclass
class TreesResult:
    metrics: pd.DataFrame
    search: dict
    models: dict
    learning_curves: dict
    diagnostics: dict
    importance: pd.DataFrame
    predictions: pd.DataFrame
    orders: pd.DataFrame | None


def tree_data(frame: pd.DataFrame, kind: str):
    features = TREE_FEATURES[kind]
    target = TREE_TARGETS[kind]
    missing = [c for c in [*features, target] if c not in frame.columns]
    if missing:
        raise DataError(f"{kind} tree models need column(s) {missing}")
    return ingest.feature_matrix(frame, features), frame[target].to_numpy(dtype=float), features


def supplier_profiles(frame: pd.DataFrame, unit_cost: float = BASE_UNIT_COST) -> list[decide.SupplierProfile]:
    """One profile per supplier code from its average reliability and cost difference."""
    grouped = frame.groupby("Supplier ID Encoded", sort=True)[["Supplier Reliability Score", "Cost Difference"]].mean()
    return [
        decide.SupplierProfile(str(code), unit_cost, float(np.clip(row.iloc[0], 1e-9, 1.0)), float(row.iloc[1]))
        for code, row in grouped.iterrows()
    ]


def order_decisions(predictions, profiles, min_threshold: float = decide.DEFAULT_MIN_THRESHOLD) -> pd.DataFrame:
    supplier = decide.select_supplier(profiles)
    orders = [decide.place_order(max(float(q), 0.0), supplier, min_threshold) for q in predictions]
    return decide.decisions_frame(orders)


def run_trees(frame: pd.DataFrame, kind: str, seed: int = 0, n_iter: int = 5, cv_folds: int = 3,
              learning_curve_folds: int = 5, test_fraction: float = 0.2, space: SearchSpace | None = None,
              min_order_threshold: float = decide.DEFAULT_MIN_THRESHOLD, n_jobs: int = 1) -> TreesResult:
    X, y, features = tree_data(frame, kind)
    train_part, test_part = ingest.train_test_split(frame, test_fraction, seed)
    tr = frame.index.get_indexer(train_part.index)
    te = frame.index.get_indexer(test_part.index)
    if tr.size < max(cv_folds, learning_curve_folds) * 2 or te.size == 0:
        raise DataError(f"{len(frame)} rows are too few for {cv_folds}-fold search and a test split")
    scaler = ingest.standardize_fit(X[tr])
    Xtr, Xte = ingest.standardize_apply(X[tr], scaler), ingest.standardize_apply(X[te], scaler)
    ytr, yte = y[tr], y[te]

    metrics, search, models, curves, diags, importance, preds = {}, {}, {}, {}, {}, {}, {}
    for model_kind in ("forest", "gbm"):
        label = MODEL_LABELS[model_kind]
        result = randomized_search(Xtr, ytr, model_kind, space, n_iter, cv_folds, seed, n_jobs)
        builder = builder_for(model_kind, result.best_params, seed)
        model = builder(Xtr, ytr)
        pred = model.predict(Xte)
        report = pointwise_metrics(yte, pred)
        metrics[label] = {"MSE": report.mse, "MAE": report.mae, "R²": report.r2}
        search[model_kind] = {"best_params": result.best_params, "best_score": result.best_score}
        models[model_kind] = model
        curve = learning_curve(builder, Xtr, ytr, cv_folds=learning_curve_folds, seed=seed)
        curves[model_kind] = pd.DataFrame({
            "train_size": curve.train_sizes,
            "train_score": curve.train_scores,
            "validation_score": curve.validation_scores,
        })
        d = residual_diagnostics(yte - pred)
        diags[model_kind] = (
            pd.DataFrame(d.histogram, columns=["bin_left", "bin_right", "count"]),
            pd.DataFrame(d.qq, columns=["theoretical", "sample"]),
        )
        importance[label] = feature_importance(model)
        preds[label] = pred

    orders = None
    if kind == "dual_sourcing":
        orders = order_decisions(preds[MODEL_LABELS["forest"]], supplier_profiles(frame), min_order_threshold)
    predictions = pd.DataFrame({"row": test_part.index, "actual": yte, **preds})
    return TreesResult(
        metrics=pd.DataFrame(metrics).rename_axis("Metric").reset_index(),
        search=search,
        models=models,
        learning_curves=curves,
        diagnostics=diags,
        importance=pd.DataFrame({"feature": features, **importance}),
        predictions=predictions,
        orders=orders,
    )


# --------------------------------------------------------------------------
# deep Q-learning
# --------------------------------------------------------------------------


def agent_config(kind: str, env: envs.InventoryEnv, tuned: bool = False, overrides: dict | None = None) -> AgentConfig:
    return preset_config(kind, env.observation_size, env.n_actions, tuned=tuned, **(overrides or {}))


def greedy_policy(agent: Agent):
    return lambda obs: int(np.argmax(agent.q_values(obs)))


def run_dqn(frame: pd.DataFrame, kind: str, seed: int = 0, tuned: bool = False, agent_overrides: dict | None = None,
            costs: envs.CostParams | None = None):
    env = envs.make_env(kind, frame, costs)
    config = agent_config(kind, env, tuned, agent_overrides)
    agent, log = train(env, config, seed=seed)
    trace = envs.run_episode(env, greedy_policy(agent))
    return agent, config, log, trace


# --------------------------------------------------------------------------
# benchmark
# --------------------------------------------------------------------------


def replay_cost(kind: str, frame: pd.DataFrame, actions, costs: envs.CostParams | None = None) -> dict:
    """Roll a fixed action sequence through a fresh environment over ``frame``."""
    env = envs.make_env(kind, frame, costs)
    actions = list(actions)
    trace = envs.run_episode(env, lambda _obs, it=iter(actions): next(it))
    total_reward = float(trace["reward"].sum())
    return {
        "total_reward": total_reward,
        "total_cost": -total_reward,
        "orders": int((trace["action"] == ORDER_ACTIONS[kind][0]).sum()),
        "steps": int(len(trace)),
    }


def threshold_actions(kind: str, predictions, level: float) -> list[int]:
    """Order whenever the predicted target exceeds ``level``."""
    order, idle = ORDER_ACTIONS[kind]
    return [order if p > level else idle for p in np.asarray(predictions, dtype=float)]


def _metrics_dict(actual, predicted) -> dict:
    return pointwise_metrics(actual, predicted).to_dict()


def run_benchmark(frame: pd.DataFrame, kind: str, seed: int = 0, test_fraction: float = 0.2, n_iter: int = 3,
                  cv_folds: int = 3, tuned: bool = False, agent_overrides: dict | None = None,
                  forecaster_overrides: dict | None = None, costs: envs.CostParams | None = None,
                  n_jobs: int = 1) -> tuple[dict, dict]:
    """Compare the three method families on one chronological train/test split.

    Returns ``(report, timings)``.  The report holds only deterministic values;
    wall-clock seconds go in ``timings``.
    """
    n_test = int(round(test_fraction * len(frame)))
    if n_test < 2 or len(frame) - n_test < 10:
        raise DataError(f"{len(frame)} rows are too few for a {test_fraction:.0%} benchmark holdout")
    train_frame = frame.iloc[: len(frame) - n_test].reset_index(drop=True)
    test_frame = frame.iloc[len(frame) - n_test:].reset_index(drop=True)
    target = TREE_TARGETS[kind]
    y_train = train_frame[target].to_numpy(dtype=float)
    y_test = test_frame[target].to_numpy(dtype=float)
    level = float(np.median(y_train))
    timings = {}

    start = time.perf_counter()
    preset = dataclasses.replace(PRESETS[kind], config=forecaster_config(kind, forecaster_overrides))
    history = preset_frame(train_frame, preset)
    model = fit(history, preset.config)
    holdout = preset_frame(test_frame, preset).drop(columns="y")
    yhat = predict(model, holdout)["yhat"].to_numpy()
    forecast_section = {
        "metrics": _metrics_dict(y_test, yhat),
        "simulated": replay_cost(kind, test_frame, threshold_actions(kind, yhat, level), costs),
    }
    timings["forecast"] = time.perf_counter() - start

    start = time.perf_counter()
    X_train, _, _ = tree_data(train_frame, kind)
    X_test, _, _ = tree_data(test_frame, kind)
    scaler = ingest.standardize_fit(X_train)
    X_train, X_test = ingest.standardize_apply(X_train, scaler), ingest.standardize_apply(X_test, scaler)
    models = {}
    for model_kind in ("forest", "gbm"):
        result = randomized_search(X_train, y_train, model_kind, None, n_iter, cv_folds, seed, n_jobs)
        fitted = builder_for(model_kind, result.best_params, seed)(X_train, y_train)
        pred = fitted.predict(X_test)
        models[model_kind] = {
            "best_params": result.best_params,
            "cv_score": result.best_score,
            "metrics": _metrics_dict(y_test, pred),
            "r2": r2_score(y_test, pred),
            "predictions": pred,
        }
    # the policy uses whichever model scored better in cross-validation, never the test split
    chosen = max(models, key=lambda k: (models[k]["cv_score"], k == "forest"))
    ensemble_section = {
        "chosen_model": chosen,
        "models": {k: {key: v for key, v in m.items() if key != "predictions"} for k, m in models.items()},
        "simulated": replay_cost(kind, test_frame, threshold_actions(kind, models[chosen]["predictions"], level),
                                 costs),
    }
    timings["ensembles"] = time.perf_counter() - start

    start = time.perf_counter()
    agent, config, log, _ = run_dqn(train_frame, kind, seed, tuned, agent_overrides, costs)
    test_env = envs.make_env(kind, test_frame, costs)
    trace = envs.run_episode(test_env, greedy_policy(agent))
    rewards = np.asarray(log.total_rewards)
    dqn_section = {
        "agent": config.to_dict(),
        "training": {
            "episodes": len(rewards),
            "final_epsilon": log.epsilons[-1],
            "mean_reward_last_10": float(rewards[-10:].mean()),
        },
        "simulated": replay_cost(kind, test_frame, trace["action"].tolist(), costs),
    }
    timings["dqn"] = time.perf_counter() - start

    report = {
        "preset": kind,
        "seed": seed,
        "train_rows": len(train_frame),
        "test_rows": len(test_frame),
        "order_level": level,
        "simulated_cost_note": (
            "Artifact construct: each method's decisions on the holdout rows are replayed through the "
            "matching inventory environment. Forecast and ensemble methods order whenever their "
            "prediction exceeds the training-target median; the agent acts greedily."
        ),
        "methods": {"forecast": forecast_section, "ensembles": ensemble_section, "dqn": dqn_section},
    }
    return report, timings
