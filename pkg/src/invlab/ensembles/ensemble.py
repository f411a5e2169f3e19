"""Bagged forests and squared-loss gradient boosting over :mod:`tree`."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from invlab.ensembles.tree import RegressionTree, TreeConfig, _check_X, fit_tree

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ForestConfig:
    n_estimators: int = 100
    tree: TreeConfig = field(default_factory=TreeConfig)
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")


@dataclass(frozen=True)
class GBMConfig:
    n_estimators: int = 100
    learning_rate: float = 0.1
    tree: TreeConfig = field(default_factory=lambda: TreeConfig(max_depth=3))
    seed: int = 0

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")


@dataclass(frozen=True)
class Forest:
    trees: tuple[RegressionTree, ...]

    @property
    def n_features(self) -> int:
        return self.trees[0].n_features

    def predict(self, X) -> np.ndarray:
        X = _check_X(X, self.n_features)
        return np.mean([t.predict(X) for t in self.trees], axis=0)


@dataclass(frozen=True)
class GBM:
    init: float
    learning_rate: float
    trees: tuple[RegressionTree, ...]
    n_features: int

    def predict(self, X, n_stages: int | None = None) -> np.ndarray:
        X = _check_X(X, self.n_features)
        out = np.full(X.shape[0], self.init)
        for tree in self.trees[:n_stages]:
            out += self.learning_rate * tree.predict(X)
        return out

    def staged_predict(self, X):
        """Yield predictions after 0, 1, ..., n_estimators stages."""
        X = _check_X(X, self.n_features)
        out = np.full(X.shape[0], self.init)
        yield out.copy()
        for tree in self.trees:
            out += self.learning_rate * tree.predict(X)
            yield out.copy()


def predict(model, X) -> np.ndarray:
    """Predictions of a tree, forest or boosted model."""
    return model.predict(X)


def _check_xy(X, y):
    X = _check_X(X)
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("cannot fit on empty data")
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} feature rows but {y.size} targets")
    return X, y


def fit_forest(X, y, config: ForestConfig | None = None, n_jobs: int = 1) -> Forest:
    """Each tree gets its own stream spawned from the master seed, so the
    forest is identical whether trees are grown serially or in parallel."""
    config = config or ForestConfig()
    X, y = _check_xy(X, y)
    streams = np.random.SeedSequence(config.seed).spawn(config.n_estimators)

    def grow(stream):
        boot_seq, tree_seq = stream.spawn(2)
        if config.bootstrap:
            idx = np.random.default_rng(boot_seq).integers(0, y.size, size=y.size)
            return fit_tree(X[idx], y[idx], config.tree, seed=tree_seq)
        return fit_tree(X, y, config.tree, seed=tree_seq)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = tuple(pool.map(grow, streams))
    else:
        trees = tuple(grow(s) for s in streams)
    return Forest(trees=trees)


def fit_gbm(X, y, config: GBMConfig | None = None) -> GBM:
    """Stage m fits a tree to the residuals of stages < m under squared loss."""
    config = config or GBMConfig()
    X, y = _check_xy(X, y)
    init = float(y.mean())
    current = np.full(y.size, init)
    trees = []
    for stream in np.random.SeedSequence(config.seed).spawn(config.n_estimators):
        tree = fit_tree(X, y - current, config.tree, seed=stream)
        current = current + config.learning_rate * tree.predict(X)
        trees.append(tree)
    return GBM(init=init, learning_rate=config.learning_rate, trees=tuple(trees), n_features=X.shape[1])


def feature_importance(model) -> np.ndarray:
    """Share of total squared-error reduction credited to each feature.

    All zeros when no tree ever split.
    """
    trees = (model,) if isinstance(model, RegressionTree) else model.trees
    total = np.sum([t.feature_gains() for t in trees], axis=0)
    s = total.sum()
    return total / s if s > 0 else total


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def model_to_dict(model) -> dict:
    if isinstance(model, RegressionTree):
        body = {"kind": "tree", "tree": model.to_dict()}
    elif isinstance(model, Forest):
        body = {"kind": "forest", "trees": [t.to_dict() for t in model.trees]}
    elif isinstance(model, GBM):
        body = {
            "kind": "gbm",
            "init": model.init,
            "learning_rate": model.learning_rate,
            "n_features": model.n_features,
            "trees": [t.to_dict() for t in model.trees],
        }
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return {"format_version": FORMAT_VERSION, **body}


def model_from_dict(data: dict):
    if data.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {data.get('format_version')!r}")
    kind = data.get("kind")
    if kind == "tree":
        return RegressionTree.from_dict(data["tree"])
    if kind == "forest":
        return Forest(trees=tuple(RegressionTree.from_dict(t) for t in data["trees"]))
    if kind == "gbm":
        return GBM(
            init=float(data["init"]),
            learning_rate=float(data["learning_rate"]),
            trees=tuple(RegressionTree.from_dict(t) for t in data["trees"]),
            n_features=int(data["n_features"]),
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: str | Path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
