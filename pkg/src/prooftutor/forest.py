"""Bagged decision-tree ensemble built from scratch.

Gini-impurity splits with per-class weights folded into both the impurity and
the leaf votes; bootstrap sample per tree; sqrt-d feature subsets per split.
The ensemble score is the fraction of trees voting class 1. Everything is
deterministic given (seed, input order): per-tree generators are spawned from
one SeedSequence, so training may be parallelized without changing results.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TreeParams:
    n_trees: int = 100
    max_depth: int = 10
    feature_subset: str = "sqrt"  # sqrt | all
    bootstrap: bool = True
    class_weights: tuple[float, float] = (1.0, 2.0)  # class 1 = positive
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "feature_subset": self.feature_subset,
            "bootstrap": self.bootstrap,
            "class_weights": list(self.class_weights),
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(data: dict) -> "TreeParams":
        return TreeParams(
            n_trees=data["n_trees"],
            max_depth=data["max_depth"],
            feature_subset=data["feature_subset"],
            bootstrap=data["bootstrap"],
            class_weights=tuple(data["class_weights"]),
            seed=data["seed"],
        )


class _TreeBuilder:
    """Grows one tree into flat arrays (feature == -1 marks a leaf)."""

    def __init__(self, X, y, w, params: TreeParams, rng: np.random.Generator):
        self.X = X
        self.y = y
        self.w = w
        self.params = params
        self.rng = rng
        self.features: list[int] = []
        self.thresholds: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.votes: list[int] = []

    def _subset_size(self, d: int) -> int:
        if self.params.feature_subset == "sqrt":
            return max(1, int(np.ceil(np.sqrt(d))))
        return d

    def _leaf(self, idx) -> int:
        w1 = float(self.w[idx][self.y[idx] == 1].sum())
        w0 = float(self.w[idx].sum()) - w1
        node = len(self.features)
        self.features.append(-1)
        self.thresholds.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.votes.append(1 if w1 >= w0 else 0)  # tie favors the positive class
        return node

    def _best_split(self, idx, feature: int) -> tuple[float, float] | None:
        values = self.X[idx, feature]
        order = np.argsort(values, kind="stable")
        xs = values[order]
        if xs[0] == xs[-1]:
            return None
        ys = self.y[idx][order]
        ws = self.w[idx][order]
        w1 = ws * (ys == 1)
        cum_w = np.cumsum(ws)
        cum_w1 = np.cumsum(w1)
        total_w = cum_w[-1]
        total_w1 = cum_w1[-1]
        wl = cum_w[:-1]
        w1l = cum_w1[:-1]
        wr = total_w - wl
        w1r = total_w1 - w1l
        valid = xs[:-1] < xs[1:]
        with np.errstate(divide="ignore", invalid="ignore"):
            gini_l = 1.0 - (w1l / wl) ** 2 - ((wl - w1l) / wl) ** 2
            gini_r = 1.0 - (w1r / wr) ** 2 - ((wr - w1r) / wr) ** 2
            score = (wl * gini_l + wr * gini_r) / total_w
        score = np.where(valid, score, np.inf)
        best = int(np.argmin(score))
        if not np.isfinite(score[best]):
            return None
        threshold = (xs[best] + xs[best + 1]) / 2.0
        return float(score[best]), threshold

    def build(self, idx, depth: int) -> int:
        y_node = self.y[idx]
        if depth >= self.params.max_depth or len(idx) < 2 or y_node.min() == y_node.max():
            return self._leaf(idx)
        d = self.X.shape[1]
        k = self._subset_size(d)
        chosen = np.sort(self.rng.choice(d, size=k, replace=False))
        best: tuple[float, float, int] | None = None
        for feature in chosen:
            found = self._best_split(idx, int(feature))
            if found is None:
                continue
            score, threshold = found
            if best is None or score < best[0]:
                best = (score, threshold, int(feature))
        if best is None:
            return self._leaf(idx)
        _, threshold, feature = best
        mask = self.X[idx, feature] < threshold
        node = len(self.features)
        self.features.append(feature)
        self.thresholds.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.votes.append(0)
        left_child = self.build(idx[mask], depth + 1)
        right_child = self.build(idx[~mask], depth + 1)
        self.left[node] = left_child
        self.right[node] = right_child
        return node


@dataclass
class TreeEnsemble:
    params: TreeParams
    # per-tree flat arrays, padded to the widest tree
    features: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int32))
    thresholds: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    left: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int32))
    right: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int32))
    votes: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int8))

    @property
    def n_trees(self) -> int:
        return self.features.shape[0]

    def predict_score(self, row: np.ndarray) -> float:
        """Fraction of trees voting class 1 for a single feature row."""
        t = self.n_trees
        cur = np.zeros(t, dtype=np.int32)
        tree_idx = np.arange(t)
        for _ in range(self.params.max_depth + 1):
            feats = self.features[tree_idx, cur]
            active = feats >= 0
            if not active.any():
                break
            vals = row[feats[active]]
            go_left = vals < self.thresholds[tree_idx[active], cur[active]]
            nxt = np.where(
                go_left,
                self.left[tree_idx[active], cur[active]],
                self.right[tree_idx[active], cur[active]],
            )
            cur[active] = nxt
        return float(self.votes[tree_idx, cur].mean())

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        """Batch scores: per tree, all rows traversed level by level."""
        n = X.shape[0]
        total = np.zeros(n)
        for t in range(self.n_trees):
            cur = np.zeros(n, dtype=np.int32)
            for _ in range(self.params.max_depth + 1):
                feats = self.features[t, cur]
                active = feats >= 0
                if not active.any():
                    break
                rows = np.nonzero(active)[0]
                vals = X[rows, feats[rows]]
                go_left = vals < self.thresholds[t, cur[rows]]
                cur[rows] = np.where(go_left, self.left[t, cur[rows]], self.right[t, cur[rows]])
            total += self.votes[t, cur]
        return total / self.n_trees

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "features": self.features.tolist(),
            "thresholds": self.thresholds.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "votes": self.votes.tolist(),
        }

    @staticmethod
    def from_dict(data: dict) -> "TreeEnsemble":
        return TreeEnsemble(
            params=TreeParams.from_dict(data["params"]),
            features=np.array(data["features"], dtype=np.int32),
            thresholds=np.array(data["thresholds"]),
            left=np.array(data["left"], dtype=np.int32),
            right=np.array(data["right"], dtype=np.int32),
            votes=np.array(data["votes"], dtype=np.int8),
        )


def train_ensemble(X: np.ndarray, y: np.ndarray, params: TreeParams) -> TreeEnsemble:
    """Fits the bagged ensemble; raises ValueError on a single-class dataset."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int8)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X and y shapes are inconsistent")
    if y.min() == y.max():
        raise ValueError("training data contains a single class")
    weights = np.where(y == 1, params.class_weights[1], params.class_weights[0])
    n = X.shape[0]
    seeds = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    trees = []
    for seq in seeds:
        rng = np.random.default_rng(seq)
        if params.bootstrap:
            idx = rng.integers(0, n, size=n)
        else:
            idx = np.arange(n)
        builder = _TreeBuilder(X, y, weights, params, rng)
        builder.build(np.asarray(idx), 0)
        trees.append(builder)

    width = max(len(t.features) for t in trees)
    ensemble = TreeEnsemble(
        params=params,
        features=np.full((len(trees), width), -1, dtype=np.int32),
        thresholds=np.zeros((len(trees), width)),
        left=np.full((len(trees), width), -1, dtype=np.int32),
        right=np.full((len(trees), width), -1, dtype=np.int32),
        votes=np.zeros((len(trees), width), dtype=np.int8),
    )
    for i, t in enumerate(trees):
        m = len(t.features)
        ensemble.features[i, :m] = t.features
        ensemble.thresholds[i, :m] = t.thresholds
        ensemble.left[i, :m] = t.left
        ensemble.right[i, :m] = t.right
        ensemble.votes[i, :m] = t.votes
    return ensemble
