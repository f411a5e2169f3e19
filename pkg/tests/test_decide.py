import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, strategies as st

from invlab.decide import (
    ORDER_PLACED,
    ORDER_SKIPPED,
    DemandModel,
    PolicyParams,
    SupplierProfile,
    place_order,
    reorder_needed,
    select_supplier,
    split_order,
    stockout_probability,
    supplier_score,
    write_decisions,
)


class TestStockoutProbability:
    def test_symmetry(self):
        m = DemandModel(10, 4, (4, 2))
        assert stockout_probability(m, 40) == pytest.approx(0.5, abs=1e-12)
        assert stockout_probability(m, 20, which_lead=2) == pytest.approx(0.5, abs=1e-12)

    def test_deterministic_demand(self):
        m = DemandModel(10, 0, (4, 4))
        assert stockout_probability(m, 41) == 0.0
        assert stockout_probability(m, 39) == 1.0

    def test_monte_carlo(self):
        m = DemandModel(10, 4, (4, 4))
        draws = np.random.default_rng(7).normal(40, math.sqrt(16), size=10 ** 6)
        assert abs(stockout_probability(m, 44) - np.mean(draws > 44)) <= 0.002

    def test_strictly_decreasing(self):
        m = DemandModel(10, 4, (3, 3))
        p = [stockout_probability(m, s) for s in np.linspace(20, 40, 41)]
        assert all(b < a for a, b in zip(p, p[1:]))

    @given(st.floats(0.1, 10), st.floats(-3, 3))
    def test_standardized_scale_invariance(self, c, z):
        base = DemandModel(5, 1, (2, 2))
        s = 10 + z * math.sqrt(2)
        scaled = DemandModel(5 * c, c * c, (2, 2))
        assert stockout_probability(scaled, c * s) == pytest.approx(stockout_probability(base, s), abs=1e-12)

    def test_invalid(self):
        with pytest.raises(ValueError):
            DemandModel(1, 1, (0, 1))
        with pytest.raises(ValueError):
            DemandModel(1, -1)
        with pytest.raises(ValueError):
            stockout_probability(DemandModel(1, 1), 1, which_lead=3)


class TestPolicyParams:
    def test_valid(self):
        PolicyParams(50, 20, 10, 30, 40, 80, 5)

    def test_negative(self):
        with pytest.raises(ValueError):
            PolicyParams(-1, 20)


class TestReorder:
    @pytest.mark.parametrize("position, s, expected", [(5, 10, True), (10, 10, False), (10, 0, False)])
    def test_examples(self, position, s, expected):
        assert reorder_needed(position, s) is expected


class TestSupplier:
    def test_reliability_dominance(self):
        c = [SupplierProfile("A", 10, 0.9), SupplierProfile("B", 10, 0.99)]
        assert select_supplier(c) == "B"

    def test_scores(self):
        a, b = SupplierProfile("S1", 10, 1.0, 0.0), SupplierProfile("S2", 9, 1.0, 0.2)
        assert supplier_score(a) == 10.0
        assert b.score == pytest.approx(10.8, abs=1e-12)
        assert select_supplier([a, b]) == "S1"

    def test_single_and_empty(self):
        assert select_supplier([SupplierProfile("X", 1, 0.5)]) == "X"
        with pytest.raises(ValueError):
            select_supplier([])

    def test_ties_and_order_invariance(self):
        c = [SupplierProfile("B", 10, 1.0), SupplierProfile("A", 10, 1.0), SupplierProfile("C", 11, 1.0)]
        assert select_supplier(c) == "A"
        assert select_supplier(reversed(c)) == "A"

    def test_reliability_range(self):
        with pytest.raises(ValueError):
            SupplierProfile("A", 10, 0.0)


class TestPlaceOrder:
    @pytest.mark.parametrize("qty, status", [
        (0.0, ORDER_SKIPPED), (77.26, ORDER_PLACED), (9.99, ORDER_SKIPPED), (10.0, ORDER_PLACED),
    ])
    def test_examples(self, qty, status):
        d = place_order(qty, "S1")
        assert d.status == status and d.supplier == "S1" and d.placed == (status == ORDER_PLACED)

    def test_skip_reason(self):
        assert ORDER_SKIPPED.endswith("below minimum threshold")

    @given(st.floats(0, 1000), st.floats(0, 1000))
    def test_step_function(self, qty, threshold):
        assert place_order(qty, "S", threshold).placed == (qty >= threshold)

    def test_negative(self):
        with pytest.raises(ValueError):
            place_order(-0.5, "S1")
        with pytest.raises(ValueError):
            place_order(float("nan"), "S1")


class TestSplit:
    @pytest.mark.parametrize("total, f, expected", [(100, 0.5, (50, 50)), (100, 1.0, (100, 0))])
    def test_examples(self, total, f, expected):
        assert split_order(total, f) == expected

    def test_non_round(self):
        regular, express = split_order(73, 0.6)
        assert regular == pytest.approx(43.8, abs=1e-12) and express == pytest.approx(29.2, abs=1e-12)
        assert regular + express == 73

    @given(st.floats(0, 1e6), st.floats(0, 1))
    def test_sum_exact(self, total, f):
        regular, express = split_order(total, f)
        assert regular + express == total

    def test_range(self):
        with pytest.raises(ValueError):
            split_order(10, 1.5)


def test_decisions_csv(tmp_path):
    path = tmp_path / "d.csv"
    write_decisions([place_order(77.256, "S1"), place_order(0.0, "S2")], path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["Supplier", "Units", "Status"]
    assert frame["Units"].tolist() == [77.26, 0.0]
    assert frame["Status"].tolist() == [ORDER_PLACED, ORDER_SKIPPED]
