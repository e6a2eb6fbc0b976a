"""CART decision tree and random forest baselines.

Greedy binary splits on the Gini criterion. Threshold candidates are the
midpoints between consecutive distinct sorted values; ties in impurity
decrease go to the lowest feature index, then the lowest threshold. Feature
importances are the per-feature sums of weighted impurity decrease,
normalized so the best feature scores 1.00.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .semtypes import N_TYPES

_MIN_DECREASE = 1e-12


@dataclass
class DecisionTree:
    # parallel node arrays; feature == -1 marks a leaf
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray            # (n_nodes, n_classes) class counts per node
    raw_importances: np.ndarray   # per-feature summed weighted Gini decrease
    max_depth: int
    n_features: int

    @property
    def n_classes(self) -> int:
        return self.counts.shape[1]

    def _leaf_of(self, x: np.ndarray) -> int:
        node = 0
        while self.feature[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty((X.shape[0], self.n_classes))
        for i, x in enumerate(X):
            c = self.counts[self._leaf_of(x)]
            out[i] = c / c.sum()
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)

    def depth(self) -> int:
        depths = np.zeros(len(self.feature), dtype=np.int64)
        best = 0
        for node in range(len(self.feature)):
            if self.feature[node] >= 0:
                for child in (self.left[node], self.right[node]):
                    depths[child] = depths[node] + 1
                    best = max(best, depths[child])
        return best


def feature_importances(tree: DecisionTree) -> np.ndarray:
    """Summed weighted Gini decrease per feature, scaled so max = 1.00."""
    imp = tree.raw_importances.copy()
    top = imp.max()
    if top > 0:
        imp /= top
    return imp


def _gini_from_counts(counts: np.ndarray, n: int) -> float:
    return 1.0 - float(np.sum((counts / n) ** 2))


def _best_split(X: np.ndarray, onehot: np.ndarray, total: np.ndarray,
                features: np.ndarray):
    """Best (feature, threshold, decrease, left_mask) over candidate features.

    Iterates features in ascending index order and keeps strictly better
    splits only, so equal-quality ties resolve to the lowest feature index
    and lowest threshold."""
    n = X.shape[0]
    parent = _gini_from_counts(total, n)
    best = None
    for f in features:
        x = X[:, f]
        order = np.argsort(x, kind="mergesort")
        xs = x[order]
        boundaries = np.nonzero(xs[1:] > xs[:-1])[0] + 1
        if boundaries.size == 0:
            continue
        cum = np.cumsum(onehot[order], axis=0)
        n_left = boundaries.astype(np.float64)
        left = cum[boundaries - 1]
        right = total - left
        s = (left**2).sum(axis=1) / n_left + (right**2).sum(axis=1) / (n - n_left)
        child_gini = 1.0 - s / n
        decrease = parent - child_gini
        k = int(np.argmax(s))
        if decrease[k] > _MIN_DECREASE and (best is None or decrease[k] > best[2]):
            b = boundaries[k]
            threshold = (xs[b - 1] + xs[b]) / 2.0
            best = (int(f), float(threshold), float(decrease[k]), x <= threshold)
    return best


def train_decision_tree(X: np.ndarray, y: np.ndarray, max_depth: int = 50,
                        seed: int = 0, features_per_split: int | None = None,
                        n_classes: int = N_TYPES) -> DecisionTree:
    """Greedy CART on the Gini criterion.

    Stops at purity, the depth cap, or nodes with fewer than 2 samples.
    ``features_per_split`` limits the candidate features per node to a
    random (seeded) subset, as used by the forest."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.size == 0:
        raise DataError("cannot train a tree on an empty matrix")
    n, p = X.shape
    rng = np.random.default_rng(seed)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[np.ndarray] = []
    importances = np.zeros(p)

    def new_node(node_counts: np.ndarray) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(node_counts)
        return len(feature) - 1

    # (node_id, sample index array, depth)
    root_counts = onehot.sum(axis=0)
    stack = [(new_node(root_counts), np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        node_counts = counts[node]
        m = idx.size
        if m < 2 or depth >= max_depth or np.count_nonzero(node_counts) <= 1:
            continue
        if features_per_split is not None and features_per_split < p:
            cand = np.sort(rng.choice(p, size=features_per_split, replace=False))
        else:
            cand = np.arange(p)
        split = _best_split(X[idx], onehot[idx], node_counts, cand)
        if split is None:
            continue
        f, thr, decrease, left_mask = split
        importances[f] += (m / n) * decrease
        feature[node] = f
        threshold[node] = thr
        left_idx = idx[left_mask]
        right_idx = idx[~left_mask]
        lnode = new_node(onehot[left_idx].sum(axis=0))
        rnode = new_node(onehot[right_idx].sum(axis=0))
        left[node] = lnode
        right[node] = rnode
        stack.append((lnode, left_idx, depth + 1))
        stack.append((rnode, right_idx, depth + 1))

    return DecisionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        counts=np.stack(counts),
        raw_importances=importances,
        max_depth=max_depth,
        n_features=p,
    )


@dataclass
class RandomForest:
    trees: list[DecisionTree] = field(default_factory=list)
    seed: int = 0

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Mean of the per-tree leaf class distributions."""
        probs = self.trees[0].predict_proba(X)
        for tree in self.trees[1:]:
            probs += tree.predict_proba(X)
        return probs / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Majority vote over trees; ties go to the smaller class index."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        votes = np.stack([t.predict(X) for t in self.trees])
        n_classes = self.trees[0].n_classes
        out = np.empty(X.shape[0], dtype=np.int64)
        for i in range(X.shape[0]):
            out[i] = np.bincount(votes[:, i], minlength=n_classes).argmax()
        return out

    def importances(self) -> np.ndarray:
        raw = np.mean([t.raw_importances for t in self.trees], axis=0)
        top = raw.max()
        return raw / top if top > 0 else raw


def train_random_forest(X: np.ndarray, y: np.ndarray, n_trees: int = 10,
                        max_depth: int = 50, seed: int = 0,
                        features_per_split: int | None = None,
                        bootstrap: bool = True,
                        n_classes: int = N_TYPES) -> RandomForest:
    """Bootstrap-resampled trees with sqrt(p) candidate features per split."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.size == 0:
        raise DataError("cannot train a forest on an empty matrix")
    n, p = X.shape
    if features_per_split is None:
        features_per_split = max(1, int(round(np.sqrt(p))))
    seeds = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    for ss in seeds:
        rng = np.random.default_rng(ss)
        tree_seed = int(rng.integers(0, 2**63 - 1))
        if bootstrap:
            idx = rng.integers(0, n, size=n)
        else:
            idx = np.arange(n)
        trees.append(train_decision_tree(
            X[idx], y[idx], max_depth=max_depth, seed=tree_seed,
            features_per_split=features_per_split, n_classes=n_classes))
    return RandomForest(trees=trees, seed=seed)
