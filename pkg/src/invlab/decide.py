"""Replenishment decision rules: reorder checks, supplier choice, order gating."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import pandas as pd
from scipy.special import ndtr

ORDER_PLACED = "Order placed"
ORDER_SKIPPED = "Order skipped - below minimum threshold"
STATUSES = (ORDER_PLACED, ORDER_SKIPPED)
DEFAULT_MIN_THRESHOLD = 10.0


@dataclass(frozen=True)
class PolicyParams:
    """(Q, s) for a single source plus order-up-to pairs for express and regular sources."""

    order_quantity: float
    reorder_point: float
    express_quantity: float = 0.0
    express_order_up_to: float = 0.0
    regular_quantity: float = 0.0
    regular_order_up_to: float = 0.0
    safety_stock: float = 0.0

    def __post_init__(self):
        for name, value in vars(self).items():
            if value < 0:
                raise ValueError(f"{name} must be nonnegative, got {value}")
        if self.express_order_up_to < self.express_quantity or self.regular_order_up_to < self.regular_quantity:
            raise ValueError("order-up-to levels must not be below their order quantities")


@dataclass(frozen=True)
class DemandModel:
    """Per-period demand ~ Normal(mu, sigma2) with independent increments."""

    mu: float
    sigma2: float
    lead_times: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if any(L <= 0 for L in self.lead_times):
            raise ValueError("lead times must be positive")


@dataclass(frozen=True)
class SupplierProfile:
    id: str
    unit_cost: float
    reliability: float
    cost_difference: float = 0.0

    def __post_init__(self):
        if not 0 < self.reliability <= 1:
            raise ValueError(f"reliability must lie in (0, 1], got {self.reliability}")

    @property
    def score(self) -> float:
        return supplier_score(self)


@dataclass(frozen=True)
class OrderDecision:
    supplier: str
    units: float
    status: str

    @property
    def placed(self) -> bool:
        return self.status == ORDER_PLACED


def stockout_probability(model: DemandModel, reorder_point: float, which_lead: int = 1) -> float:
    """P(D_L > s) with D_L ~ Normal(mu L, sigma2 L).

    Uses the standard normal upper tail from ``scipy.special.ndtr``, which is
    accurate to double precision.  With sigma2 = 0 demand is deterministic.
    """
    if which_lead not in (1, 2):
        raise ValueError("which_lead must be 1 or 2")
    L = model.lead_times[which_lead - 1]
    mean = model.mu * L
    if model.sigma2 == 0:
        return 1.0 if mean > reorder_point else 0.0
    z = (reorder_point - mean) / math.sqrt(model.sigma2 * L)
    return float(ndtr(-z))


def reorder_needed(inventory_position: float, reorder_point: float) -> bool:
    return inventory_position < reorder_point


def supplier_score(profile: SupplierProfile) -> float:
    """Effective cost per reliable unit; lower is better."""
    return profile.unit_cost * (1.0 + profile.cost_difference) / profile.reliability


def select_supplier(candidates: Iterable[SupplierProfile], score=supplier_score) -> str:
    """Id of the lowest-scoring supplier; equal scores go to the smallest id."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidate suppliers")
    return min(candidates, key=lambda p: (score(p), p.id)).id


def place_order(predicted_quantity: float, supplier: str, min_threshold: float = DEFAULT_MIN_THRESHOLD) -> OrderDecision:
    """Place the order when the predicted quantity reaches ``min_threshold``."""
    if predicted_quantity < 0 or math.isnan(predicted_quantity):
        raise ValueError(f"predicted quantity must be nonnegative, got {predicted_quantity}")
    if predicted_quantity >= min_threshold:
        return OrderDecision(supplier, float(predicted_quantity), ORDER_PLACED)
    return OrderDecision(supplier, float(predicted_quantity), ORDER_SKIPPED)


def split_order(total: float, fraction_regular: float) -> tuple[float, float]:
    """(regular, express) parts of ``total``; they add back to ``total`` exactly."""
    if not 0.0 <= fraction_regular <= 1.0:
        raise ValueError(f"fraction_regular must lie in [0, 1], got {fraction_regular}")
    express = total - total * fraction_regular
    # recomputing regular from express makes regular + express == total in floating point
    regular = total - express
    return regular, express


def decisions_frame(decisions: Iterable[OrderDecision]) -> pd.DataFrame:
    return pd.DataFrame(
        [{"Supplier": d.supplier, "Units": round(d.units, 2), "Status": d.status} for d in decisions],
        columns=["Supplier", "Units", "Status"],
    )


def write_decisions(decisions: Iterable[OrderDecision], path: str | Path) -> None:
    decisions_frame(decisions).to_csv(path, index=False, float_format="%.2f")
