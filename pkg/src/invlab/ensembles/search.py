"""Randomized hyperparameter search, k-fold scoring and learning curves."""
from __future__ import annotations

import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from invlab.ensembles.ensemble import ForestConfig, GBMConfig, fit_forest, fit_gbm
from invlab.ensembles.tree import TreeConfig


@dataclass(frozen=True)
class SearchSpace:
    """Inclusive integer ranges and a continuous uniform learning-rate range."""

    n_estimators: tuple[int, int] = (50, 200)
    max_depth: tuple[int, int] = (2, 10)
    min_samples_split: tuple[int, int] = (2, 20)
    min_samples_leaf: tuple[int, int] = (1, 20)
    learning_rate: tuple[float, float] = (0.01, 0.1)

    def __post_init__(self):
        for name in ("n_estimators", "max_depth", "min_samples_split", "min_samples_leaf", "learning_rate"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range is empty: {lo} > {hi}")
        if self.min_samples_split[0] < 2 or self.min_samples_leaf[0] < 1:
            raise ValueError("min_samples_split starts at 2 and min_samples_leaf at 1")


INT_PARAMS = ("n_estimators", "max_depth", "min_samples_split", "min_samples_leaf")


@dataclass(frozen=True)
class SearchResult:
    best_params: dict
    best_score: float
    candidates: tuple[tuple[dict, float], ...]


@dataclass(frozen=True)
class LearningCurve:
    train_sizes: np.ndarray
    train_scores: np.ndarray
    validation_scores: np.ndarray


def _param_rng(seed: int, name: str) -> np.random.Generator:
    # one stream per hyperparameter name keeps draws independent of declaration order
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode())]))


def sample_candidates(space: SearchSpace, n_iter: int, seed: int, model_kind: str = "gbm") -> list[dict]:
    """Draw ``n_iter`` configurations uniformly from ``space``.

    ``min_samples_split`` is raised to ``min_samples_leaf`` when a draw would
    leave it smaller.
    """
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    draws = {}
    for name in INT_PARAMS:
        lo, hi = getattr(space, name)
        draws[name] = _param_rng(seed, name).integers(lo, hi + 1, size=n_iter)
    if model_kind == "gbm":
        lo, hi = space.learning_rate
        draws["learning_rate"] = _param_rng(seed, "learning_rate").uniform(lo, hi, size=n_iter)
    out = []
    for i in range(n_iter):
        params = {k: (float(v[i]) if k == "learning_rate" else int(v[i])) for k, v in draws.items()}
        params["min_samples_split"] = max(params["min_samples_split"], params["min_samples_leaf"])
        out.append(params)
    return out


def build_config(model_kind: str, params: dict, seed: int = 0):
    tree = TreeConfig(
        max_depth=params.get("max_depth"),
        min_samples_split=params.get("min_samples_split", 2),
        min_samples_leaf=params.get("min_samples_leaf", 1),
    )
    if model_kind == "forest":
        return ForestConfig(n_estimators=params["n_estimators"], tree=tree, seed=seed)
    if model_kind == "gbm":
        return GBMConfig(
            n_estimators=params["n_estimators"],
            learning_rate=params["learning_rate"],
            tree=tree,
            seed=seed,
        )
    raise ValueError(f"model_kind must be 'forest' or 'gbm', got {model_kind!r}")


def builder_for(model_kind: str, params: dict, seed: int = 0) -> Callable:
    config = build_config(model_kind, params, seed)
    fit = fit_forest if model_kind == "forest" else fit_gbm
    return lambda X, y: fit(X, y, config)


def kfold_indices(n: int, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Shuffled (train, validation) index pairs."""
    if k < 2:
        raise ValueError("need at least 2 folds")
    if k > n:
        raise ValueError(f"{k} folds exceed {n} rows")
    folds = np.array_split(np.random.default_rng(seed).permutation(n), k)
    return [(np.concatenate(folds[:i] + folds[i + 1:]), folds[i]) for i in range(k)]


def r2_score(y, pred) -> float:
    y = np.asarray(y, dtype=float)
    ss_tot = np.sum((y - y.mean()) ** 2)
    ss_res = np.sum((y - np.asarray(pred, dtype=float)) ** 2)
    if ss_tot == 0:
        return 1.0 if ss_res == 0 else 0.0
    return float(1.0 - ss_res / ss_tot)


def neg_mse(y, pred) -> float:
    return -float(np.mean((np.asarray(y, dtype=float) - np.asarray(pred, dtype=float)) ** 2))


SCORERS = {"r2": r2_score, "neg_mse": neg_mse}


def cross_val_score(builder: Callable, X, y, cv_folds: int = 5, seed: int = 0, scoring: str = "r2") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    score = SCORERS[scoring]
    return np.array([
        score(y[va], builder(X[tr], y[tr]).predict(X[va]))
        for tr, va in kfold_indices(len(y), cv_folds, seed)
    ])


def randomized_search(
    X,
    y,
    model_kind: str,
    space: SearchSpace | None = None,
    n_iter: int = 10,
    cv_folds: int = 3,
    seed: int = 0,
    n_jobs: int = 1,
) -> SearchResult:
    """Score sampled configurations by k-fold mean negative MSE.

    The best candidate has the highest score; ties go to the earliest draw.
    """
    space = space or SearchSpace()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if cv_folds < 2:
        raise ValueError("cv_folds must be >= 2")
    if cv_folds > len(y):
        raise ValueError(f"{cv_folds} folds exceed {len(y)} rows")
    candidates = sample_candidates(space, n_iter, seed, model_kind)

    def score(params):
        return float(cross_val_score(builder_for(model_kind, params, seed), X, y, cv_folds, seed, "neg_mse").mean())

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            scores = list(pool.map(score, candidates))
    else:
        scores = [score(p) for p in candidates]
    best = int(np.argmax(scores))
    return SearchResult(
        best_params=candidates[best],
        best_score=scores[best],
        candidates=tuple(zip(candidates, scores)),
    )


DEFAULT_FRACTIONS = tuple(np.round(np.arange(1, 11) / 10, 1))


def learning_curve(
    builder: Callable,
    X,
    y,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    cv_folds: int = 5,
    seed: int = 0,
) -> LearningCurve:
    """Train/validation R^2 when training on growing prefixes of each shuffled training fold."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    fractions = list(fractions)
    if any(not 0 < f <= 1 for f in fractions):
        raise ValueError("fractions must lie in (0, 1]")
    if any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise ValueError("fractions must be strictly increasing")
    folds = kfold_indices(len(y), cv_folds, seed)

    sizes, train_scores, val_scores = [], [], []
    for frac in fractions:
        fold_sizes = [int(round(frac * tr.size)) for tr, _ in folds]
        if min(fold_sizes) < 2:
            raise ValueError(f"fraction {frac} leaves fewer than 2 training samples")
        tr_s, va_s = [], []
        for (tr, va), m in zip(folds, fold_sizes):
            sub = tr[:m]
            model = builder(X[sub], y[sub])
            tr_s.append(r2_score(y[sub], model.predict(X[sub])))
            va_s.append(r2_score(y[va], model.predict(X[va])))
        sizes.append(int(round(np.mean(fold_sizes))))
        train_scores.append(float(np.mean(tr_s)))
        val_scores.append(float(np.mean(va_s)))
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"fractions map to non-increasing training sizes {sizes}")
    return LearningCurve(np.asarray(sizes), np.asarray(train_scores), np.asarray(val_scores))
