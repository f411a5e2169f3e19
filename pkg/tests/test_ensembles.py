import numpy as np
import pytest

from invlab.ensembles import (
    GBM,
    Forest,
    ForestConfig,
    GBMConfig,
    SearchSpace,
    TreeConfig,
    builder_for,
    cross_val_score,
    feature_importance,
    fit_forest,
    fit_gbm,
    fit_tree,
    kfold_indices,
    learning_curve,
    load_model,
    predict,
    r2_score,
    randomized_search,
    sample_candidates,
    save_model,
)
from invlab.ensembles.tree import LEAF


@pytest.fixture
def linear(rng):
    X = rng.uniform(-1, 1, size=(200, 3))
    y = 3 * X[:, 0] + rng.normal(0, 0.1, 200)
    return X, y


def leaf_sizes(tree):
    return tree.n_samples[tree.feature == LEAF]


class TestTree:
    def test_depth_zero_is_mean(self, linear):
        X, y = linear
        tree = fit_tree(X, y, TreeConfig(max_depth=0))
        assert tree.node_count == 1
        assert tree.predict(X[:5]).tolist() == [y.mean()] * 5

    def test_step_function_exact(self):
        x = np.arange(10.0)
        y = np.where(x < 6, -2.0, 5.0)
        tree = fit_tree(x[:, None], y, TreeConfig(max_depth=1))
        assert tree.threshold[0] == 5.5
        np.testing.assert_array_equal(tree.predict(x[:, None]), y)

    def test_min_leaf_n_forces_single_leaf(self, linear):
        X, y = linear
        tree = fit_tree(X, y, TreeConfig(min_samples_split=200, min_samples_leaf=200))
        assert tree.node_count == 1

    def test_constraints_hold(self, linear):
        X, y = linear
        tree = fit_tree(X, y, TreeConfig(max_depth=4, min_samples_split=10, min_samples_leaf=7))
        assert tree.depth() <= 4
        assert leaf_sizes(tree).min() >= 7

    def test_tie_breaks_to_lowest_feature(self):
        X = np.column_stack([np.arange(6.0), np.arange(6.0)])
        y = np.array([0, 0, 0, 1, 1, 1.0])
        tree = fit_tree(X, y, TreeConfig(max_depth=1))
        assert tree.feature[0] == 0

    def test_piecewise_constant(self, linear):
        X, y = linear
        tree = fit_tree(X, y, TreeConfig(max_depth=3))
        leaves = tree.apply(X)
        i = 0
        same_leaf = np.flatnonzero(leaves == leaves[i])
        np.testing.assert_array_equal(tree.predict(X[same_leaf]), tree.predict(X[[i]])[0])

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            TreeConfig(min_samples_split=2, min_samples_leaf=3)
        with pytest.raises(ValueError):
            TreeConfig(min_samples_split=1)

    def test_shape_errors(self, linear):
        X, y = linear
        tree = fit_tree(X, y, TreeConfig(max_depth=2))
        with pytest.raises(ValueError):
            tree.predict(X[:, :2])
        with pytest.raises(ValueError):
            fit_tree(X, y[:-1])


class TestForest:
    def test_single_tree_without_bootstrap(self, linear):
        X, y = linear
        forest = fit_forest(X, y, ForestConfig(n_estimators=1, bootstrap=False, tree=TreeConfig(max_depth=3)))
        tree = fit_tree(X, y, TreeConfig(max_depth=3))
        np.testing.assert_array_equal(forest.predict(X), tree.predict(X))

    def test_identical_trees_average(self, linear):
        X, y = linear
        tree = fit_tree(X, y, TreeConfig(max_depth=3))
        np.testing.assert_allclose(Forest((tree, tree, tree)).predict(X), tree.predict(X), rtol=1e-15)

    def test_mean_of_trees(self, linear):
        X, y = linear
        forest = fit_forest(X, y, ForestConfig(n_estimators=3, tree=TreeConfig(max_depth=2), seed=5))
        manual = [(t.predict(X)[0] + 0.0) for t in forest.trees]
        assert predict(forest, X)[0] == pytest.approx(sum(manual) / 3, rel=1e-15)

    def test_deterministic_and_parallel(self, linear):
        X, y = linear
        cfg = ForestConfig(n_estimators=8, tree=TreeConfig(max_depth=4, max_features=0.5), seed=3)
        a = fit_forest(X, y, cfg).predict(X)
        np.testing.assert_array_equal(a, fit_forest(X, y, cfg).predict(X))
        np.testing.assert_array_equal(a, fit_forest(X, y, cfg, n_jobs=4).predict(X))

    def test_fit_quality_and_growth(self, linear):
        X, y = linear
        scores = [r2_score(y, fit_forest(X, y, ForestConfig(n_estimators=n, seed=1)).predict(X)) for n in (1, 10, 50)]
        assert scores[-1] > 0.95
        assert scores == sorted(scores)


class TestGBM:
    def test_single_full_stage_interpolates(self, rng):
        X = rng.normal(size=(40, 2))
        y = rng.normal(size=40)
        cfg = GBMConfig(n_estimators=1, learning_rate=1.0, tree=TreeConfig(max_depth=None))
        np.testing.assert_allclose(fit_gbm(X, y, cfg).predict(X), y, atol=1e-12)

    def test_mse_nonincreasing(self, linear):
        X, y = linear
        model = fit_gbm(X, y, GBMConfig(n_estimators=60))
        mse = [np.mean((y - p) ** 2) for p in model.staged_predict(X)]
        assert all(b <= a for a, b in zip(mse, mse[1:]))

    def test_zero_stages_is_mean(self, linear):
        X, y = linear
        model = fit_gbm(X, y, GBMConfig(n_estimators=5))
        np.testing.assert_allclose(model.predict(X, n_stages=0), y.mean())

    def test_learning_rate_bounds(self):
        with pytest.raises(ValueError):
            GBMConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            GBMConfig(learning_rate=1.5)


class TestImportance:
    def test_feature_zero_dominates(self, linear):
        X, y = linear
        imp = feature_importance(fit_forest(X, y, ForestConfig(n_estimators=20, seed=2)))
        assert imp[0] > 0.9 and imp.sum() == pytest.approx(1.0)

    def test_constant_feature_zero(self, rng):
        X = np.column_stack([rng.normal(size=50), np.ones(50)])
        imp = feature_importance(fit_gbm(X, X[:, 0] ** 2, GBMConfig(n_estimators=10)))
        assert imp[1] == 0.0

    def test_single_feature(self, rng):
        x = rng.normal(size=(30, 1))
        assert feature_importance(fit_tree(x, x[:, 0])).tolist() == [1.0]


class TestSerialization:
    @pytest.mark.parametrize("kind", ["tree", "forest", "gbm"])
    def test_roundtrip(self, linear, tmp_path, kind):
        X, y = linear
        model = {
            "tree": lambda: fit_tree(X, y, TreeConfig(max_depth=3)),
            "forest": lambda: fit_forest(X, y, ForestConfig(n_estimators=3)),
            "gbm": lambda: fit_gbm(X, y, GBMConfig(n_estimators=5)),
        }[kind]()
        save_model(model, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        np.testing.assert_array_equal(back.predict(X), model.predict(X))
        if kind == "gbm":
            assert isinstance(back, GBM)

    def test_bad_version(self, tmp_path):
        (tmp_path / "m.json").write_text('{"format_version": 9, "kind": "tree"}')
        with pytest.raises(ValueError):
            load_model(tmp_path / "m.json")


class TestSearch:
    def test_draws_in_ranges(self):
        space = SearchSpace()
        for params in sample_candidates(space, 200, seed=0):
            assert 50 <= params["n_estimators"] <= 200
            assert 2 <= params["max_depth"] <= 10
            assert 0.01 <= params["learning_rate"] <= 0.1
            assert params["min_samples_leaf"] <= params["min_samples_split"]

    def test_order_independent_streams(self):
        a = sample_candidates(SearchSpace(), 5, seed=3, model_kind="gbm")
        b = sample_candidates(SearchSpace(), 5, seed=3, model_kind="forest")
        assert [p["n_estimators"] for p in a] == [p["n_estimators"] for p in b]

    def test_single_candidate_is_best(self, linear):
        X, y = linear
        space = SearchSpace(n_estimators=(5, 10), max_depth=(2, 3))
        res = randomized_search(X, y, "gbm", space, n_iter=1, cv_folds=3, seed=0)
        assert res.best_params == res.candidates[0][0]

    def test_best_dominates_and_parallel(self, linear):
        X, y = linear
        space = SearchSpace(n_estimators=(5, 15), max_depth=(2, 4))
        res = randomized_search(X, y, "forest", space, n_iter=4, cv_folds=3, seed=1)
        assert all(res.best_score >= s for _, s in res.candidates)
        assert randomized_search(X, y, "forest", space, n_iter=4, cv_folds=3, seed=1, n_jobs=3) == res

    def test_kfold_partition(self):
        folds = kfold_indices(23, 5, seed=0)
        assert sorted(np.concatenate([va for _, va in folds]).tolist()) == list(range(23))
        with pytest.raises(ValueError):
            kfold_indices(3, 5, 0)


class TestLearningCurve:
    def test_consistency_and_growth(self, rng):
        X = rng.uniform(-1, 1, size=(150, 2))
        y = 2 * X[:, 0] + 1e-3 * rng.normal(size=150)
        builder = builder_for("gbm", {"n_estimators": 30, "learning_rate": 0.1, "max_depth": 3,
                                      "min_samples_split": 2, "min_samples_leaf": 1})
        curve = learning_curve(builder, X, y, cv_folds=5, seed=4)
        assert np.all(np.diff(curve.train_sizes) > 0)
        assert curve.validation_scores[-1] == pytest.approx(cross_val_score(builder, X, y, 5, 4).mean(), rel=1e-12)
        assert curve.validation_scores[-1] > curve.validation_scores[0]

    def test_bad_fractions(self, linear):
        X, y = linear
        builder = builder_for("gbm", {"n_estimators": 2, "learning_rate": 0.1})
        with pytest.raises(ValueError):
            learning_curve(builder, X, y, fractions=[0.5, 0.2])
