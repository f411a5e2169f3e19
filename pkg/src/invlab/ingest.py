"""Loading, cleaning, feature engineering and synthesis of supermarket records.

A frame is a :class:`pandas.DataFrame` whose columns carry one of four roles
(timestamp, numeric, categorical, flag).  The role map lives next to the frame
rather than inside it, so plain pandas operations keep working.
"""
from __future__ import annotations

import csv
import dataclasses
import datetime as dt
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from invlab.errors import DataError

TIMESTAMP = "timestamp"
NUMERIC = "numeric"
CATEGORICAL = "categorical"
FLAG = "flag"
ROLES = (TIMESTAMP, NUMERIC, CATEGORICAL, FLAG)

MODEL_KINDS = ("lost_sales", "dual_sourcing", "multi_echelon")

DEFAULT_SCHEMA: dict[str, str] = {
    "Date": TIMESTAMP,
    "Quantity Sold_x": NUMERIC,
    "Price": NUMERIC,
    "Estimated Lost Sales": NUMERIC,
    "Estimated Demand": NUMERIC,
    "Potential Lost Sales": NUMERIC,
    "Lead Time": NUMERIC,
    "Days Until Replenishment": NUMERIC,
    "Replenishment Date": TIMESTAMP,
    "Scheduled Delivery Date": TIMESTAMP,
    "Date of Stock-out": TIMESTAMP,
    "Quantity Replenished": NUMERIC,
    "Supplier ID Encoded": CATEGORICAL,
    "Item ID Encoded": CATEGORICAL,
    "Shelf-life": NUMERIC,
    "Season_winter": FLAG,
    "Category_Meat": FLAG,
    "Category_Produce": FLAG,
    "Promotion Type_Discount": FLAG,
    "Market Event E010": FLAG,
    "Supplier Reliability Score": NUMERIC,
    "Cost Difference": NUMERIC,
}

INTERACTION = "Quantity Price Interaction"
DATE_PARTS = ("Year", "Month", "Day", "Hour", "Minute")

SUPPLIER_CODES = ("006", "020", "043", "051", "078")
N_ITEMS = 20
BASE_LEVEL = 100.0
YEAR_DAYS = 365.25


# --------------------------------------------------------------------------
# configuration types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CleaningPolicy:
    numeric_fill: str = "median"
    categorical_fill: str = "mode"
    drop_incomplete_target_rows: bool = False
    target: str | None = None

    def __post_init__(self):
        if self.numeric_fill != "median":
            raise ValueError(f"unsupported numeric_fill {self.numeric_fill!r}")
        if self.categorical_fill != "mode":
            raise ValueError(f"unsupported categorical_fill {self.categorical_fill!r}")
        if self.drop_incomplete_target_rows and not self.target:
            raise ValueError("drop_incomplete_target_rows needs a target column")


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of the deterministic synthetic supermarket dataset."""

    n_days: int = 500
    start_date: dt.date = dt.date(2023, 1, 1)
    seed: int = 42
    trend_slope: float = 0.05
    weekly_amplitude: float = 20.0
    yearly_amplitude: float = 15.0
    noise_sd: float = 5.0
    promo_probability: float = 0.2

    def __post_init__(self):
        if isinstance(self.start_date, str):
            object.__setattr__(self, "start_date", dt.date.fromisoformat(self.start_date))
        if int(self.n_days) != self.n_days or self.n_days < 1:
            raise ValueError(f"n_days must be a positive integer, got {self.n_days}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if not 0.0 <= self.promo_probability <= 1.0:
            raise ValueError("promo_probability must lie in [0, 1]")

    @classmethod
    def from_dict(cls, data: Mapping) -> "SynthConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown SynthConfig fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "SynthConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["start_date"] = self.start_date.isoformat()
        return out


@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    scale: np.ndarray


# --------------------------------------------------------------------------
# loading
# --------------------------------------------------------------------------


def _read_header(path: Path) -> list[str]:
    with open(path, newline="", encoding="utf-8") as fh:
        try:
            return next(csv.reader(fh))
        except StopIteration:
            raise DataError(f"{path}: file is empty, expected a header row") from None


def load_dataset(path: str | Path, schema: Mapping[str, str] | None = None) -> pd.DataFrame:
    """Read a comma-separated file into a typed frame.

    Every column named in ``schema`` must be present in the header.  When no
    schema is given the default role map is applied to whichever known columns
    appear.  Columns without a role are kept as text.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"dataset not found: {path}")
    header = _read_header(path)
    dupes = sorted({c for c in header if header.count(c) > 1})
    if dupes:
        raise DataError(f"{path}: duplicate column names {dupes}")
    if schema is None:
        roles = {c: DEFAULT_SCHEMA[c] for c in header if c in DEFAULT_SCHEMA}
    else:
        missing = [c for c in schema if c not in header]
        if missing:
            raise DataError(f"{path}: header lacks required column(s) {missing}")
        roles = dict(schema)
    bad_roles = {r for r in roles.values() if r not in ROLES}
    if bad_roles:
        raise ValueError(f"unknown column roles {sorted(bad_roles)}")

    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.ParserError as exc:
        raise DataError(f"{path}: {exc}") from None

    out = {}
    for col in raw.columns:
        text = raw[col]
        present = text.str.strip() != ""
        role = roles.get(col)
        if role in (NUMERIC, FLAG):
            values = pd.to_numeric(text.where(present), errors="coerce")
        elif role == TIMESTAMP:
            values = pd.to_datetime(text.where(present), format="ISO8601", errors="coerce")
        elif role == CATEGORICAL:
            values = text.where(present, None).astype(object)
        else:
            out[col] = text
            continue
        if role != CATEGORICAL:
            broken = present & values.isna()
            if broken.any():
                row = int(np.flatnonzero(broken.to_numpy())[0])
                raise DataError(
                    f"{path}: row {row}: cannot parse {text.iloc[row]!r} in column {col!r} as {role}"
                )
        out[col] = values
    return pd.DataFrame(out, columns=list(raw.columns))


def infer_roles(frame: pd.DataFrame, schema: Mapping[str, str] | None = None) -> dict[str, str]:
    """Role for every column of ``frame``; unknown text columns get no role."""
    base = dict(DEFAULT_SCHEMA)
    if schema:
        base.update(schema)
    roles = {}
    for col in frame.columns:
        if col in base:
            roles[col] = base[col]
        elif pd.api.types.is_datetime64_any_dtype(frame[col]):
            roles[col] = TIMESTAMP
        elif pd.api.types.is_numeric_dtype(frame[col]):
            roles[col] = NUMERIC
    return roles


# --------------------------------------------------------------------------
# cleaning
# --------------------------------------------------------------------------


def _mode(values: pd.Series):
    counts = values.dropna().value_counts()
    top = counts[counts == counts.max()].index
    # ties resolve to the smallest value, compared as text for categoricals
    return min(top, key=lambda v: (str(v) if isinstance(v, str) else v))


def clean(
    frame: pd.DataFrame,
    policy: CleaningPolicy | None = None,
    schema: Mapping[str, str] | None = None,
) -> pd.DataFrame:
    """Parse timestamps, impute numerics by median and categoricals by mode, sort by Date.

    Rows without a parseable ``Date`` are dropped since they cannot be ordered.
    Secondary timestamp columns may keep missing entries.
    """
    policy = policy or CleaningPolicy()
    roles = infer_roles(frame, schema)
    out = frame.copy()

    for col, role in roles.items():
        if role == TIMESTAMP and not pd.api.types.is_datetime64_any_dtype(out[col]):
            out[col] = pd.to_datetime(out[col], format="ISO8601", errors="coerce")
    if "Date" in out.columns:
        out = out[out["Date"].notna()]
    if policy.drop_incomplete_target_rows:
        if policy.target not in out.columns:
            raise DataError(f"target column {policy.target!r} not in frame")
        out = out[out[policy.target].notna()]

    if len(out):
        for col, role in roles.items():
            if role == TIMESTAMP:
                continue
            column = out[col]
            if not column.isna().any():
                continue
            if column.isna().all():
                raise DataError(f"column {col!r} is entirely missing; cannot impute")
            if role == NUMERIC:
                out[col] = column.fillna(float(column.median()))
            else:
                fill = _mode(column)
                if role == CATEGORICAL:
                    column = column.astype(object)
                out[col] = column.where(column.notna(), fill)

    for col, role in roles.items():
        if role == FLAG and len(out):
            out[col] = out[col].astype(np.int64)
    if "Date" in out.columns:
        out = out.sort_values("Date", kind="mergesort")
    return out.reset_index(drop=True)


# --------------------------------------------------------------------------
# feature engineering
# --------------------------------------------------------------------------


def supplier_lead_time(code) -> int:
    """Lead time in days by supplier parity: even codes 5, odd codes 10."""
    return 5 if int(code) % 2 == 0 else 10


def engineer_features(frame: pd.DataFrame, model_kind: str, seed: int = 0) -> pd.DataFrame:
    """Add date parts, the quantity-price interaction and model-specific columns.

    Date parts of a missing timestamp are recorded as 0.
    """
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"model_kind must be one of {MODEL_KINDS}, got {model_kind!r}")
    for col in ("Quantity Sold_x", "Price"):
        if col not in frame.columns:
            raise DataError(f"{model_kind} features need column {col!r}")
    out = frame.copy()

    new_cols = {}
    for col in frame.columns:
        if not pd.api.types.is_datetime64_any_dtype(frame[col]):
            continue
        stamp = frame[col].dt
        for part, values in zip(DATE_PARTS, (stamp.year, stamp.month, stamp.day, stamp.hour, stamp.minute)):
            new_cols[f"{col} {part}"] = values.fillna(0).astype(np.int64)
    new_cols[INTERACTION] = frame["Quantity Sold_x"].astype(float) * frame["Price"].astype(float)
    for name, values in new_cols.items():
        out[name] = values

    if "Promotion Type_Discount" in out.columns:
        out["Promotion Type_Discount"] = out["Promotion Type_Discount"].fillna(0)
    elif model_kind == "dual_sourcing":
        out["Promotion Type_Discount"] = 0

    if model_kind == "dual_sourcing":
        rng = np.random.default_rng(seed)
        n = len(out)
        if "Supplier Reliability Score" not in out.columns:
            out["Supplier Reliability Score"] = rng.uniform(0.7, 1.0, size=n)
        if "Lead Time" not in out.columns:
            if "Supplier ID Encoded" not in out.columns:
                raise DataError("dual_sourcing needs 'Lead Time' or 'Supplier ID Encoded' to derive it")
            out["Lead Time"] = [supplier_lead_time(c) for c in out["Supplier ID Encoded"]]
        if "Cost Difference" not in out.columns:
            out["Cost Difference"] = rng.uniform(-0.2, 0.2, size=n)
    return out


def feature_matrix(frame: pd.DataFrame, columns: Sequence[str]) -> np.ndarray:
    """Numeric matrix from ``columns``; categorical codes map to their integer value."""
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataError(f"frame lacks feature column(s) {missing}")
    cols = []
    for col in columns:
        values = frame[col]
        if not pd.api.types.is_numeric_dtype(values):
            numeric = pd.to_numeric(values, errors="coerce")
            if numeric.isna().any():
                # non-numeric codes: rank among sorted distinct labels
                labels = sorted(values.astype(str).unique())
                numeric = values.astype(str).map({v: i for i, v in enumerate(labels)})
            values = numeric
        cols.append(values.to_numpy(dtype=float))
    if not cols:
        return np.empty((len(frame), 0))
    return np.column_stack(cols)


# --------------------------------------------------------------------------
# synthesis
# --------------------------------------------------------------------------


def synthetic_signal(config: SynthConfig) -> pd.DataFrame:
    """Noise-free components behind the demand-like synthetic columns."""
    t = np.arange(config.n_days, dtype=float)
    trend = BASE_LEVEL + config.trend_slope * t
    weekly = config.weekly_amplitude * np.sin(2 * np.pi * t / 7.0)
    yearly = config.yearly_amplitude * np.sin(2 * np.pi * t / YEAR_DAYS)
    return pd.DataFrame({"trend": trend, "weekly": weekly, "yearly": yearly, "signal": trend + weekly + yearly})


def generate_synthetic(config: SynthConfig) -> pd.DataFrame:
    """Deterministic daily dataset with every column the pipelines consume."""
    n = config.n_days
    rng = np.random.default_rng(config.seed)
    signal = synthetic_signal(config)["signal"].to_numpy()
    dates = pd.date_range(pd.Timestamp(config.start_date), periods=n, freq="D")

    replenished = np.maximum(signal + config.noise_sd * rng.standard_normal(n), 0.0)
    demand = np.maximum(signal + config.noise_sd * rng.standard_normal(n), 0.0)
    lost_share = rng.uniform(0.5, 0.7, size=n)
    promo = (rng.random(n) < config.promo_probability).astype(np.int64)
    lost = demand * lost_share
    sold = (demand - lost) * (1.0 + 0.1 * promo)

    item_price = rng.uniform(2.0, 8.0, size=N_ITEMS)
    item_shelf = rng.integers(3, 31, size=N_ITEMS)
    item = rng.integers(0, N_ITEMS, size=n)
    price = item_price[item] * (1.0 - 0.1 * promo)
    supplier = np.asarray(SUPPLIER_CODES)[rng.integers(0, len(SUPPLIER_CODES), size=n)]
    lead = np.array([supplier_lead_time(c) for c in supplier], dtype=np.int64)
    days_until = rng.integers(0, lead + 1)
    stockout_offset = rng.integers(0, 15, size=n)
    market_event = (rng.random(n) < 0.05).astype(np.int64)
    reliability = rng.uniform(0.7, 1.0, size=n)
    cost_diff = rng.uniform(-0.2, 0.2, size=n)

    day = pd.to_timedelta(1, unit="D")
    return pd.DataFrame({
        "Date": dates,
        "Quantity Sold_x": sold,
        "Price": price,
        "Estimated Lost Sales": lost,
        "Estimated Demand": demand,
        "Potential Lost Sales": lost * price,
        "Lead Time": lead,
        "Days Until Replenishment": days_until,
        "Replenishment Date": dates + days_until * day,
        "Scheduled Delivery Date": dates + lead * day,
        "Date of Stock-out": dates + stockout_offset * day,
        "Quantity Replenished": replenished,
        "Supplier ID Encoded": supplier.astype(object),
        "Item ID Encoded": np.array([f"{i:03d}" for i in item], dtype=object),
        "Shelf-life": item_shelf[item],
        "Season_winter": np.isin(dates.month, (12, 1, 2)).astype(np.int64),
        "Category_Meat": (item % 3 == 0).astype(np.int64),
        "Category_Produce": (item % 3 == 1).astype(np.int64),
        "Promotion Type_Discount": promo,
        "Market Event E010": market_event,
        "Supplier Reliability Score": reliability,
        "Cost Difference": cost_diff,
    })


def write_csv(frame: pd.DataFrame, path: str | Path) -> None:
    """Write a frame with ISO-8601 timestamps and full float precision."""
    frame.to_csv(path, index=False, date_format="%Y-%m-%d %H:%M:%S", encoding="utf-8")


# --------------------------------------------------------------------------
# splitting and scaling
# --------------------------------------------------------------------------


def train_test_split(frame: pd.DataFrame, test_fraction: float = 0.2, seed: int = 0):
    """Shuffled disjoint partition; the test part holds round(fraction * n) rows."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = len(frame)
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    n_test = int(round(test_fraction * n))
    order = np.random.default_rng(seed).permutation(n)
    return frame.iloc[order[n_test:]], frame.iloc[order[:n_test]]


def standardize_fit(X) -> ScalerParams:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("standardize_fit needs a non-empty 2-D matrix")
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    # constant columns keep unit scale
    flat = sd <= 1e-12 * np.maximum(1.0, np.abs(mean))
    return ScalerParams(mean=mean, scale=np.where(flat, 1.0, sd))


def standardize_apply(X, params: ScalerParams) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.mean.shape[0]:
        raise ValueError(f"expected {params.mean.shape[0]} columns, got shape {X.shape}")
    return (X - params.mean) / params.scale


def standardize_invert(Z, params: ScalerParams) -> np.ndarray:
    return np.asarray(Z, dtype=float) * params.scale + params.mean
