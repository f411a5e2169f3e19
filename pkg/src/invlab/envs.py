"""Discrete-time inventory environments driven row by row by a cleaned frame.

All three environments share one accounting rule.  For the row under the
cursor, after the chosen action has modified the working state,

    revenue            = quantity_sold * price
    holding_cost       = holding_cost_per_day * days_until_replenishment / 30
    lost_sales_cost    = estimated_lost_sales * price
    stockout_penalty   = flat penalty if quantity_sold < lost + demand else 0

and the reward is revenue minus every cost term in ``info``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from invlab.errors import DataError

KINDS = ("lost_sales", "dual_sourcing", "multi_echelon")
COST_TERMS = (
    "holding_cost",
    "lost_sales_cost",
    "order_cost",
    "stockout_penalty",
    "transfer_cost",
    "price_reduction_cost",
)
INFO_TERMS = ("revenue", *COST_TERMS)
BASE_COLUMNS = (
    "Quantity Sold_x",
    "Estimated Lost Sales",
    "Days Until Replenishment",
    "Price",
    "Estimated Demand",
    "Lead Time",
)
DAYS_PER_MONTH = 30.0


@dataclass(frozen=True)
class CostParams:
    order_cost_per_unit: float = 10.0
    holding_cost_per_day: float = 1.0
    stockout_cost_per_unit: float = 50.0
    price_reduction_cost: float = 5.0
    supplier2_order_cost: float = 15.0
    transfer_cost: float = 15.0
    order_quantity: float = 50.0
    price_cut: float = 0.1
    sales_lift: float = 1.1
    lead_times: tuple[int, int] = (5, 10)
    initial_inventory: tuple[float, float] = (100.0, 100.0)
    transfer_quantity: float = 20.0
    replenishment_days: tuple[int, int] = (5, 3)

    @classmethod
    def lost_sales(cls) -> "CostParams":
        return cls()

    @classmethod
    def dual_sourcing(cls) -> "CostParams":
        return cls(order_cost_per_unit=10.0, supplier2_order_cost=15.0)

    @classmethod
    def multi_echelon(cls) -> "CostParams":
        return cls(order_cost_per_unit=20.0, holding_cost_per_day=2.0, stockout_cost_per_unit=100.0,
                   transfer_cost=15.0)

    @classmethod
    def preset(cls, kind: str) -> "CostParams":
        if kind not in KINDS:
            raise ValueError(f"unknown environment kind {kind!r}")
        return getattr(cls, kind)()


@dataclass(frozen=True)
class PendingOrder:
    supplier: int
    due_step: int
    quantity: float


@dataclass
class StepOutcome:
    observation: np.ndarray
    reward: float
    done: bool
    info: dict = field(default_factory=dict)

    def __iter__(self):
        # allows ``obs, reward, done, info = env.step(a)``
        return iter((self.observation, self.reward, self.done, self.info))


def reward_from_info(info: dict) -> float:
    reward = info["revenue"]
    for term in COST_TERMS:
        reward = reward - info[term]
    return reward


class InventoryEnv:
    """Shared cursor, accounting and reset logic; subclasses define actions."""

    kind: str = ""
    n_actions: int = 0
    extra_columns: tuple[str, ...] = ()

    def __init__(self, frame: pd.DataFrame, costs: CostParams | None = None, wraparound: bool = False):
        if frame is None or len(frame) == 0:
            raise DataError("environment needs a non-empty frame")
        required = BASE_COLUMNS + self.extra_columns
        missing = [c for c in required if c not in frame.columns]
        if missing:
            raise DataError(f"{self.kind} environment needs column(s) {missing}")
        values = frame[list(required)].to_numpy(dtype=float)
        if not np.all(np.isfinite(values)):
            raise DataError("environment columns contain missing values; clean the frame first")
        self._rows = {c: values[:, i] for i, c in enumerate(required)}
        self.n_rows = len(frame)
        self.costs = costs or CostParams.preset(self.kind)
        self.wraparound = wraparound
        self.reset()

    @property
    def observation_size(self) -> int:
        return self.reset_observation().size

    def row(self, i: int) -> dict:
        return {c: float(v[i]) for c, v in self._rows.items()}

    def reset(self) -> np.ndarray:
        self.cursor = 0
        self.t = 0
        self.done = False
        self._reset_extra()
        self._state = self._load(0)
        return self.observation()

    def reset_observation(self) -> np.ndarray:
        return self.observation()

    def _reset_extra(self):
        pass

    def _load(self, i: int) -> dict:
        r = self.row(i)
        return {
            "quantity_sold": r["Quantity Sold_x"],
            "lost": r["Estimated Lost Sales"],
            "days": r["Days Until Replenishment"],
            "price": r["Price"],
            "demand": r["Estimated Demand"],
            "lead_time": r["Lead Time"],
        }

    def observation(self) -> np.ndarray:
        s = self._state
        return np.maximum(np.array([s["quantity_sold"], s["lost"], s["days"], *self._extra_obs()]), 0.0)

    def _extra_obs(self) -> tuple:
        return ()

    def _accounting(self, s: dict, info: dict) -> dict:
        c = self.costs
        info["revenue"] = s["quantity_sold"] * s["price"]
        info["holding_cost"] = c.holding_cost_per_day * s["days"] / DAYS_PER_MONTH
        info["lost_sales_cost"] = s["lost"] * s["price"]
        stockout = s["quantity_sold"] < s["lost"] + s["demand"]
        info["stockout_penalty"] = c.stockout_cost_per_unit if stockout else 0.0
        return info

    def _apply(self, action: int, s: dict, info: dict) -> dict:
        raise NotImplementedError

    def step(self, action: int) -> StepOutcome:
        if self.done:
            raise RuntimeError("episode is done; call reset()")
        if not 0 <= int(action) < self.n_actions or int(action) != action:
            raise ValueError(f"action must be an integer in [0, {self.n_actions}), got {action!r}")
        action = int(action)
        s = dict(self._state)
        info = {term: 0.0 for term in INFO_TERMS}
        carry = self._apply(action, s, info)
        self._accounting(s, info)
        reward = reward_from_info(info)

        self.t += 1
        self.cursor += 1
        if self.cursor >= self.n_rows:
            if self.wraparound:
                self.cursor = 0
            else:
                self.done = True
        if self.done:
            self._state = s
        else:
            self._state = self._load(self.cursor)
            self._state.update(carry or {})
        return StepOutcome(self.observation(), reward, self.done, info)

    def episode_wraparound(self) -> np.ndarray:
        """Return the cursor to row 0 when running in wraparound mode."""
        if self.wraparound and self.cursor >= self.n_rows - 1 and not self.done:
            self.cursor = 0
            self._state = self._load(0)
        return self.observation()


class LostSalesEnv(InventoryEnv):
    """Actions: 0 order stock, 1 do nothing, 2 reduce price."""

    kind = "lost_sales"
    n_actions = 3

    def _apply(self, action, s, info):
        c = self.costs
        if action == 0:
            s["lost"] = 0.0
            s["days"] = s["lead_time"]
            info["order_cost"] = c.order_cost_per_unit * c.order_quantity
            # the delivered order also clears the next period's lost sales
            return {"lost": 0.0}
        if action == 2:
            s["price"] = s["price"] * (1.0 - c.price_cut)
            s["quantity_sold"] = s["quantity_sold"] * c.sales_lift
            info["price_reduction_cost"] = c.price_reduction_cost
        return None


class DualSourcingEnv(InventoryEnv):
    """Actions: 0 order from supplier 1, 1 from supplier 2, 2 from both, 3 no order."""

    kind = "dual_sourcing"
    n_actions = 4

    def _reset_extra(self):
        self.inventory = np.array(self.costs.initial_inventory, dtype=float)
        self.pending: list[PendingOrder] = []
        self.delivered = np.zeros(2)

    def _extra_obs(self):
        return tuple(self.inventory)

    def _apply(self, action, s, info):
        c = self.costs
        self.delivered = np.zeros(2)
        still_pending = []
        for order in self.pending:
            if order.due_step == self.t:
                self.inventory[order.supplier - 1] += order.quantity
                self.delivered[order.supplier - 1] += order.quantity
            else:
                still_pending.append(order)
        self.pending = still_pending

        unit_costs = (c.order_cost_per_unit, c.supplier2_order_cost)
        suppliers = {0: (1,), 1: (2,), 2: (1, 2), 3: ()}[action]
        for sup in suppliers:
            self.pending.append(PendingOrder(sup, self.t + c.lead_times[sup - 1], c.order_quantity))
            info["order_cost"] += unit_costs[sup - 1] * c.order_quantity
        return None


class MultiEchelonEnv(InventoryEnv):
    """Actions: 0 replenish in 5 days, 1 replenish in 3 days, 2 move stock from
    echelon 1 to echelon 2, 3 do nothing.

    Replenishment orders land in echelon 1 once their lead time has elapsed;
    a transfer moves at most the stock echelon 1 holds.
    """

    kind = "multi_echelon"
    n_actions = 4

    def _reset_extra(self):
        self.echelons = np.array(self.costs.initial_inventory, dtype=float)
        self.pending: list[PendingOrder] = []

    def _extra_obs(self):
        return tuple(self.echelons)

    def _apply(self, action, s, info):
        c = self.costs
        still_pending = []
        for order in self.pending:
            if order.due_step == self.t:
                self.echelons[0] += order.quantity
            else:
                still_pending.append(order)
        self.pending = still_pending

        if action in (0, 1):
            days = c.replenishment_days[action]
            s["days"] = float(days)
            self.pending.append(PendingOrder(1, self.t + days, c.order_quantity))
            info["order_cost"] = c.order_cost_per_unit * c.order_quantity
        elif action == 2:
            moved = min(c.transfer_quantity, self.echelons[0])
            self.echelons[0] -= moved
            self.echelons[1] += moved
            s["quantity_sold"] = s["quantity_sold"] + moved
            info["transfer_cost"] = c.transfer_cost
        return None


ENV_CLASSES = {"lost_sales": LostSalesEnv, "dual_sourcing": DualSourcingEnv, "multi_echelon": MultiEchelonEnv}


def make_env(kind: str, frame: pd.DataFrame, costs: CostParams | None = None, wraparound: bool = False) -> InventoryEnv:
    if kind not in ENV_CLASSES:
        raise ValueError(f"unknown environment kind {kind!r}; expected one of {KINDS}")
    return ENV_CLASSES[kind](frame, costs, wraparound=wraparound)


def run_episode(env: InventoryEnv, policy, max_steps: int | None = None) -> pd.DataFrame:
    """Roll ``policy(observation) -> action`` from reset; one trace row per step."""
    obs = env.reset()
    rows = []
    step = 0
    while not env.done and (max_steps is None or step < max_steps):
        action = int(policy(obs))
        out = env.step(action)
        rows.append({
            "step": step,
            "action": action,
            "reward": out.reward,
            **out.info,
            **{f"obs_{i}": v for i, v in enumerate(out.observation)},
        })
        obs = out.observation
        step += 1
    return pd.DataFrame(rows)
