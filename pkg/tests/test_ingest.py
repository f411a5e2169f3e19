import datetime as dt

import numpy as np
import pandas as pd
import pytest

from invlab.errors import DataError
from invlab.ingest import (
    DEFAULT_SCHEMA,
    INTERACTION,
    CleaningPolicy,
    SynthConfig,
    clean,
    engineer_features,
    generate_synthetic,
    load_dataset,
    standardize_apply,
    standardize_fit,
    standardize_invert,
    supplier_lead_time,
    synthetic_signal,
    train_test_split,
    write_csv,
)


class TestLoadDataset:
    def test_three_rows(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("Date,Price\n2024-01-01,1.5\n2024-01-02,2\n2024-01-03,3\n")
        frame = load_dataset(path, {"Date": "timestamp", "Price": "numeric"})
        assert len(frame) == 3
        assert frame["Price"].tolist() == [1.5, 2.0, 3.0]

    def test_timestamp_text_parsed(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("Date,Price\n2024-05-03 20:30:00,1\n")
        frame = load_dataset(path)
        assert frame["Date"].iloc[0] == pd.Timestamp("2024-05-03 20:30:00")

    def test_header_only(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("Date,Price\n")
        assert len(load_dataset(path)) == 0

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_dataset(tmp_path / "nope.csv")

    def test_missing_required_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("Date\n2024-01-01\n")
        with pytest.raises(DataError, match="Price"):
            load_dataset(path, {"Date": "timestamp", "Price": "numeric"})

    def test_unparseable_row_reports_index(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("Date,Price\n2024-01-01,1\n2024-01-02,abc\n")
        with pytest.raises(DataError, match="row 1"):
            load_dataset(path)

    def test_duplicate_header(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("Date,Date\n2024-01-01,2024-01-01\n")
        with pytest.raises(DataError, match="duplicate"):
            load_dataset(path)

    def test_unknown_columns_kept_as_text(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("Date,Note\n2024-01-01,007\n")
        assert load_dataset(path)["Note"].iloc[0] == "007"


class TestClean:
    def test_median_fill(self):
        frame = pd.DataFrame({"Price": [1.0, np.nan, 3.0]})
        assert clean(frame)["Price"].tolist() == [1.0, 2.0, 3.0]

    def test_categorical_mode_fill(self):
        frame = pd.DataFrame({"Item ID Encoded": ["Meat", "Meat", None]})
        assert clean(frame)["Item ID Encoded"].tolist() == ["Meat"] * 3

    def test_mode_tie_takes_smallest(self):
        frame = pd.DataFrame({"Item ID Encoded": ["b", "a", None]})
        assert clean(frame)["Item ID Encoded"].iloc[2] == "a"

    def test_flag_mode_fill(self):
        frame = pd.DataFrame({"Season_winter": [1, 1, 0, np.nan]})
        out = clean(frame)
        assert out["Season_winter"].tolist() == [1, 1, 0, 1]
        assert out["Season_winter"].dtype == np.int64

    def test_all_missing_column_raises(self):
        with pytest.raises(DataError, match="entirely missing"):
            clean(pd.DataFrame({"Price": [np.nan, np.nan]}))

    def test_sorted_by_date_and_parsed(self):
        frame = pd.DataFrame({"Date": ["2024-01-03", "2024-01-01", None], "Price": [3.0, 1.0, 2.0]})
        out = clean(frame)
        assert out["Date"].tolist() == [pd.Timestamp("2024-01-01"), pd.Timestamp("2024-01-03")]
        assert out["Price"].tolist() == [1.0, 3.0]

    def test_drop_incomplete_target_rows(self):
        frame = pd.DataFrame({"Date": ["2024-01-01", "2024-01-02"], "Price": [1.0, np.nan]})
        out = clean(frame, CleaningPolicy(drop_incomplete_target_rows=True, target="Price"))
        assert len(out) == 1

    def test_no_missing_after_clean(self, synthetic):
        holed = synthetic.copy()
        holed.loc[::7, "Price"] = np.nan
        holed.loc[::5, "Supplier ID Encoded"] = None
        out = clean(holed)
        assert not out[["Price", "Supplier ID Encoded"]].isna().any().any()

    def test_synthetic_passes_clean_unchanged(self, synthetic):
        pd.testing.assert_frame_equal(clean(synthetic), synthetic)


class TestEngineerFeatures:
    def test_interaction(self):
        frame = pd.DataFrame({"Quantity Sold_x": [10.0], "Price": [2.5]})
        assert engineer_features(frame, "lost_sales")[INTERACTION].iloc[0] == 25.0

    def test_date_parts(self):
        frame = pd.DataFrame({"Date": [pd.Timestamp("2024-05-03 20:30")], "Quantity Sold_x": [1.0], "Price": [1.0]})
        out = engineer_features(frame, "lost_sales")
        parts = [out[f"Date {p}"].iloc[0] for p in ("Year", "Month", "Day", "Hour", "Minute")]
        assert parts == [2024, 5, 3, 20, 30]

    def test_missing_promo_becomes_zero(self):
        frame = pd.DataFrame({"Quantity Sold_x": [1.0, 2.0], "Price": [1.0, 1.0],
                              "Promotion Type_Discount": [1.0, np.nan]})
        assert engineer_features(frame, "lost_sales")["Promotion Type_Discount"].tolist() == [1.0, 0.0]

    def test_dual_synthesis(self):
        frame = pd.DataFrame({"Quantity Sold_x": [1.0] * 4, "Price": [1.0] * 4,
                              "Supplier ID Encoded": ["006", "043", "020", "051"]})
        out = engineer_features(frame, "dual_sourcing", seed=1)
        assert out["Lead Time"].tolist() == [5, 10, 5, 10]
        assert out["Supplier Reliability Score"].between(0.7, 1.0).all()
        assert out["Cost Difference"].between(-0.2, 0.2).all()

    def test_dual_passes_existing_columns_through(self, synthetic):
        out = engineer_features(synthetic, "dual_sourcing")
        pd.testing.assert_series_equal(out["Cost Difference"], synthetic["Cost Difference"])

    def test_never_removes_columns_or_reorders(self, synthetic):
        out = engineer_features(synthetic, "multi_echelon")
        assert list(out.columns[: synthetic.shape[1]]) == list(synthetic.columns)
        pd.testing.assert_index_equal(out.index, synthetic.index)

    def test_unknown_kind(self, synthetic):
        with pytest.raises(ValueError):
            engineer_features(synthetic, "other")

    def test_dual_without_lead_source(self):
        frame = pd.DataFrame({"Quantity Sold_x": [1.0], "Price": [1.0]})
        with pytest.raises(DataError):
            engineer_features(frame, "dual_sourcing")

    def test_supplier_parity(self):
        assert supplier_lead_time("006") == 5
        assert supplier_lead_time("078") == 5
        assert supplier_lead_time("043") == 10


class TestSynthetic:
    def test_length_and_columns(self):
        frame = generate_synthetic(SynthConfig(n_days=500))
        assert len(frame) == 500
        assert set(DEFAULT_SCHEMA) <= set(frame.columns)

    def test_deterministic(self):
        a = generate_synthetic(SynthConfig(n_days=50, seed=9))
        b = generate_synthetic(SynthConfig(n_days=50, seed=9))
        pd.testing.assert_frame_equal(a, b)

    def test_weekly_periodogram_peak(self):
        cfg = SynthConfig(n_days=700, weekly_amplitude=20.0, noise_sd=1.0, yearly_amplitude=0.0, trend_slope=0.0)
        y = generate_synthetic(cfg)["Quantity Replenished"].to_numpy()
        power = np.abs(np.fft.rfft(y - y.mean())) ** 2
        freqs = np.fft.rfftfreq(y.size, d=1.0)
        peak = freqs[1:][np.argmax(power[1:])]
        assert abs(1.0 / peak - 7.0) < 0.05

    def test_signal_matches_components(self):
        sig = synthetic_signal(SynthConfig(n_days=30))
        np.testing.assert_allclose(sig["signal"], sig["trend"] + sig["weekly"] + sig["yearly"])

    @pytest.mark.parametrize("bad", [{"n_days": 0}, {"noise_sd": -1.0}, {"promo_probability": 1.5}])
    def test_invalid_config(self, bad):
        with pytest.raises(ValueError):
            SynthConfig(**bad)

    def test_config_roundtrip(self, tmp_path):
        cfg = SynthConfig(n_days=10, start_date=dt.date(2024, 2, 1))
        path = tmp_path / "c.json"
        import json
        path.write_text(json.dumps(cfg.to_dict()))
        assert SynthConfig.from_json(path) == cfg
        with pytest.raises(ValueError):
            SynthConfig.from_dict({"bogus": 1})

    def test_csv_roundtrip(self, tmp_path, synthetic):
        path = tmp_path / "s.csv"
        write_csv(synthetic, path)
        back = clean(load_dataset(path))
        np.testing.assert_allclose(back["Quantity Replenished"], synthetic["Quantity Replenished"], rtol=1e-15)
        assert back["Supplier ID Encoded"].tolist() == synthetic["Supplier ID Encoded"].tolist()


class TestSplitAndScale:
    def test_split_counts(self):
        frame = pd.DataFrame({"x": range(100)})
        train, test = train_test_split(frame, 0.2, seed=1)
        assert (len(train), len(test)) == (80, 20)
        assert sorted(train.index.tolist() + test.index.tolist()) == list(range(100))

    def test_split_deterministic(self):
        frame = pd.DataFrame({"x": range(50)})
        a = train_test_split(frame, 0.2, seed=4)[1].index.tolist()
        assert a == train_test_split(frame, 0.2, seed=4)[1].index.tolist()

    def test_two_point_scaling(self):
        params = standardize_fit(np.array([[2.0], [4.0]]))
        assert params.mean.tolist() == [3.0] and params.scale.tolist() == [1.0]
        assert standardize_apply(np.array([[2.0], [4.0]]), params).ravel().tolist() == [-1.0, 1.0]

    def test_constant_column(self):
        X = np.array([[5.0], [5.0], [5.0]])
        params = standardize_fit(X)
        assert params.scale.tolist() == [1.0]
        assert standardize_apply(X, params).ravel().tolist() == [0.0, 0.0, 0.0]

    def test_zero_mean_unit_sd(self, rng):
        X = rng.normal(size=(3, 2)) * [3.0, 0.1] + [10.0, -4.0]
        Z = standardize_apply(X, standardize_fit(X))
        assert np.all(np.abs(Z.mean(axis=0)) < 1e-9)
        np.testing.assert_allclose(Z.std(axis=0), 1.0)
        np.testing.assert_allclose(standardize_invert(Z, standardize_fit(X)), X)
