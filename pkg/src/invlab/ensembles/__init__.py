"""From-scratch regression trees, forests, gradient boosting and model search."""
from invlab.ensembles.ensemble import (
    GBM,
    FORMAT_VERSION,
    Forest,
    ForestConfig,
    GBMConfig,
    feature_importance,
    fit_forest,
    fit_gbm,
    load_model,
    model_from_dict,
    model_to_dict,
    predict,
    save_model,
)
from invlab.ensembles.search import (
    LearningCurve,
    SearchResult,
    SearchSpace,
    build_config,
    builder_for,
    cross_val_score,
    kfold_indices,
    learning_curve,
    r2_score,
    randomized_search,
    sample_candidates,
)
from invlab.ensembles.tree import RegressionTree, TreeConfig, fit_tree

__all__ = [
    "GBM", "FORMAT_VERSION", "Forest", "ForestConfig", "GBMConfig", "feature_importance",
    "fit_forest", "fit_gbm", "load_model", "model_from_dict", "model_to_dict", "predict",
    "save_model", "LearningCurve", "SearchResult", "SearchSpace", "build_config", "builder_for",
    "cross_val_score", "kfold_indices", "learning_curve", "r2_score", "randomized_search",
    "sample_candidates", "RegressionTree", "TreeConfig", "fit_tree",
]
