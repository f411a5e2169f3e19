"""Greedy variance-reduction regression trees stored as flat node arrays."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LEAF = -1


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features: float | None = None

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.min_samples_leaf > self.min_samples_split:
            raise ValueError("min_samples_leaf must not exceed min_samples_split")
        if self.max_features is not None and not 0 < self.max_features <= 1:
            raise ValueError("max_features must be a fraction in (0, 1] or None")


@dataclass(frozen=True)
class RegressionTree:
    """Node ``i`` is a leaf when ``feature[i] == -1``; samples with
    ``x[feature] <= threshold`` go to ``left``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    gain: np.ndarray
    n_features: int

    @property
    def node_count(self) -> int:
        return int(self.feature.size)

    def depth(self) -> int:
        depth = np.zeros(self.node_count, dtype=int)
        for i in range(self.node_count):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def apply(self, X) -> np.ndarray:
        """Index of the leaf reached by each row."""
        X = _check_X(X, self.n_features)
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != LEAF
        while active.any():
            r, nd = rows[active], node[active]
            go_left = X[r, self.feature[nd]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] != LEAF
        return node

    def predict(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def feature_gains(self) -> np.ndarray:
        out = np.zeros(self.n_features)
        internal = self.feature != LEAF
        np.add.at(out, self.feature[internal], self.gain[internal])
        return out

    def to_dict(self) -> dict:
        return {
            "n_features": self.n_features,
            **{k: getattr(self, k).tolist() for k in
               ("feature", "threshold", "left", "right", "value", "n_samples", "gain")},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RegressionTree":
        ints = ("feature", "left", "right", "n_samples")
        arrays = {k: np.asarray(data[k], dtype=np.int64 if k in ints else float)
                  for k in ("feature", "threshold", "left", "right", "value", "n_samples", "gain")}
        return cls(n_features=int(data["n_features"]), **arrays)


def _check_X(X, n_features: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"model was fitted on {n_features} features, got {X.shape[1]}")
    return X


def _best_split(Xn: np.ndarray, yn: np.ndarray, features: np.ndarray, min_leaf: int):
    """Return (feature, threshold, gain) of the best split, or None.

    Gain is the reduction in the node's sum of squared errors.  Equal gains go
    to the lowest feature index, then the lowest threshold.
    """
    n = yn.size
    sub = Xn[:, features]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    yc = yn - yn.mean()
    cs = np.cumsum(yc[order], axis=0)[:-1]
    total = float(np.sum(yc))
    n_left = np.arange(1, n)[:, None].astype(float)
    n_right = n - n_left
    gain = cs ** 2 / n_left + (total - cs) ** 2 / n_right - total ** 2 / n
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    gain = np.where(valid, gain, -np.inf)
    best = gain.max()
    if not np.isfinite(best) or best <= 0.0:
        return None
    col = int(np.argmax((gain == best).any(axis=0)))
    pos = int(np.argmax(gain[:, col] == best))
    lo, hi = xs[pos, col], xs[pos + 1, col]
    threshold = lo + (hi - lo) / 2.0
    if threshold >= hi:
        threshold = lo
    return int(features[col]), float(threshold), float(best)


def fit_tree(X, y, config: TreeConfig | None = None, seed=0) -> RegressionTree:
    """Grow a tree by exhaustive search over midpoints of sorted distinct values."""
    config = config or TreeConfig()
    X = _check_X(X)
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0 or X.shape[0] == 0:
        raise ValueError("cannot fit a tree on empty data")
    if X.shape[0] != y.size:
        raise ValueError(f"{X.shape[0]} feature rows but {y.size} targets")
    rng = np.random.default_rng(seed)
    d = X.shape[1]
    k = d if config.max_features is None else max(1, int(config.max_features * d))
    max_depth = np.inf if config.max_depth is None else config.max_depth

    feature, threshold, left, right, value, count, gain = [], [], [], [], [], [], []

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[idx].mean()))
        count.append(idx.size)
        gain.append(0.0)
        return len(feature) - 1

    root = new_node(np.arange(y.size))
    stack = [(root, np.arange(y.size), 0)]
    while stack:
        node, idx, depth = stack.pop()
        n = idx.size
        if depth >= max_depth or n < config.min_samples_split or n < 2 * config.min_samples_leaf or d == 0:
            continue
        feats = np.arange(d) if k == d else np.sort(rng.choice(d, size=k, replace=False))
        split = _best_split(X[idx], y[idx], feats, config.min_samples_leaf)
        if split is None:
            continue
        f, thr, g = split
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node], gain[node] = f, thr, g
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is expanded first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return RegressionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=float),
        n_samples=np.asarray(count, dtype=np.int64),
        gain=np.asarray(gain, dtype=float),
        n_features=d,
    )
