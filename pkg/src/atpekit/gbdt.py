"""Gradient-boosted regression trees, from scratch.

Exact greedy splits (no histogramming) over presorted feature columns,
depth-capped trees, squared-error boosting for regression and one-vs-rest
Newton-step log-loss boosting for classification. Everything is
deterministic given the training data order; prediction uses packed node
arrays so a full ensemble evaluates with a handful of vectorized steps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

_MIN_GAIN = 1e-12


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    value: float = 0.0


class RegressionTree:
    """Depth-capped least-squares tree with optional Newton leaf values."""

    def __init__(self, max_depth: int = 4, min_samples_leaf: int = 1) -> None:
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.nodes: list[_Node] = []

    def fit(
        self,
        x: np.ndarray,
        grad: np.ndarray,
        weight: np.ndarray,
        hess: np.ndarray | None = None,
    ) -> "RegressionTree":
        """Fit to targets `grad`; when `hess` is given, leaf values are the
        Newton step sum(w*grad)/sum(w*hess) instead of the weighted mean."""
        x = np.asarray(x, dtype=float)
        grad = np.asarray(grad, dtype=float)
        weight = np.asarray(weight, dtype=float)
        self.nodes = []
        self._split(x, grad, weight, hess, np.arange(len(grad)), depth=0)
        return self

    def _leaf_value(
        self, grad: np.ndarray, weight: np.ndarray, hess: np.ndarray | None
    ) -> float:
        wsum = weight.sum()
        if hess is not None:
            denom = float((weight * hess).sum())
            if denom <= 1e-12:
                return 0.0
            return float((weight * grad).sum() / denom)
        if wsum <= 0.0:
            return 0.0
        return float((weight * grad).sum() / wsum)

    def _split(
        self,
        x: np.ndarray,
        grad: np.ndarray,
        weight: np.ndarray,
        hess: np.ndarray | None,
        idx: np.ndarray,
        depth: int,
    ) -> int:
        node_id = len(self.nodes)
        h = hess[idx] if hess is not None else None
        self.nodes.append(
            _Node(value=self._leaf_value(grad[idx], weight[idx], h))
        )
        if depth >= self.max_depth or len(idx) < 2 * self.min_samples_leaf:
            return node_id
        feat, thr = self._best_split(x, grad, weight, idx)
        if feat < 0:
            return node_id
        mask = x[idx, feat] <= thr
        left_idx = idx[mask]
        right_idx = idx[~mask]
        if len(left_idx) < self.min_samples_leaf or len(right_idx) < self.min_samples_leaf:
            return node_id
        node = self.nodes[node_id]
        node.feature = feat
        node.threshold = thr
        node.left = self._split(x, grad, weight, hess, left_idx, depth + 1)
        node.right = self._split(x, grad, weight, hess, right_idx, depth + 1)
        return node_id

    def _best_split(
        self, x: np.ndarray, grad: np.ndarray, weight: np.ndarray, idx: np.ndarray
    ) -> tuple[int, float]:
        """Exact split search, vectorized over all features at once."""
        g = grad[idx]
        w = weight[idx]
        cols = x[idx]
        n = len(g)
        if n < 2:
            return -1, 0.0
        total_w = w.sum()
        if total_w <= 0.0:
            return -1, 0.0
        total_wg = (w * g).sum()
        total_wg2 = (w * g * g).sum()
        base = total_wg2 - total_wg**2 / total_w
        order = np.argsort(cols, axis=0, kind="stable")
        xs = np.take_along_axis(cols, order, axis=0)
        ws = w[order]
        gs = g[order]
        cw = np.cumsum(ws, axis=0)[:-1]
        cwg = np.cumsum(ws * gs, axis=0)[:-1]
        cwg2 = np.cumsum(ws * gs * gs, axis=0)[:-1]
        rw = total_w - cw
        valid = (xs[1:] > xs[:-1]) & (cw > 0) & (rw > 0)
        if not valid.any():
            return -1, 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            sse = (cwg2 - cwg**2 / cw) + (
                (total_wg2 - cwg2) - (total_wg - cwg) ** 2 / rw
            )
        gains = base - sse
        gains[~valid] = -np.inf
        flat = int(np.argmax(gains.T))  # feature-major tie-break
        f, pos = divmod(flat, gains.shape[0])
        if not (gains[pos, f] > _MIN_GAIN):
            return -1, 0.0
        return int(f), float(0.5 * (xs[pos, f] + xs[pos + 1, f]))

    def to_arrays(self) -> dict[str, list[float]]:
        return {
            "feature": [n.feature for n in self.nodes],
            "threshold": [n.threshold for n in self.nodes],
            "left": [n.left for n in self.nodes],
            "right": [n.right for n in self.nodes],
            "value": [n.value for n in self.nodes],
        }

    @classmethod
    def from_arrays(cls, arrays: dict[str, list[float]]) -> "RegressionTree":
        tree = cls()
        tree.nodes = [
            _Node(int(f), float(t), int(l), int(r), float(v))
            for f, t, l, r, v in zip(
                arrays["feature"],
                arrays["threshold"],
                arrays["left"],
                arrays["right"],
                arrays["value"],
            )
        ]
        return tree


class PackedEnsemble:
    """Node arrays of many trees, traversed together for one input row."""

    def __init__(self, trees: list[RegressionTree], max_depth: int) -> None:
        n_trees = len(trees)
        n_nodes = max((len(t.nodes) for t in trees), default=1)
        self.max_depth = max_depth
        self.feature = np.full((n_trees, n_nodes), -1, dtype=np.int64)
        self.threshold = np.zeros((n_trees, n_nodes))
        self.left = np.zeros((n_trees, n_nodes), dtype=np.int64)
        self.right = np.zeros((n_trees, n_nodes), dtype=np.int64)
        self.value = np.zeros((n_trees, n_nodes))
        for i, t in enumerate(trees):
            for j, n in enumerate(t.nodes):
                self.feature[i, j] = n.feature
                self.threshold[i, j] = n.threshold
                self.left[i, j] = n.left
                self.right[i, j] = n.right
                self.value[i, j] = n.value
        self._rows = np.arange(n_trees)

    def leaf_sum(self, x: np.ndarray) -> float:
        idx = np.zeros(len(self._rows), dtype=np.int64)
        for _ in range(self.max_depth + 1):
            feat = self.feature[self._rows, idx]
            inner = feat >= 0
            if not inner.any():
                break
            go_left = np.zeros_like(inner)
            go_left[inner] = x[feat[inner]] <= self.threshold[self._rows, idx][inner]
            nxt = np.where(go_left, self.left[self._rows, idx], self.right[self._rows, idx])
            idx = np.where(inner, nxt, idx)
        return float(self.value[self._rows, idx].sum())


@dataclass
class BoostedRegressor:
    """Least-squares gradient boosting."""

    n_trees: int = 100
    max_depth: int = 4
    learning_rate: float = 0.1
    init: float = 0.0
    trees: list[RegressionTree] = field(default_factory=list)
    _packed: PackedEnsemble | None = None

    def fit(self, x: np.ndarray, y: np.ndarray, weight: np.ndarray | None = None
            ) -> "BoostedRegressor":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        w = np.ones(len(y)) if weight is None else np.asarray(weight, dtype=float)
        self.init = float((w * y).sum() / w.sum())
        pred = np.full(len(y), self.init)
        self.trees = []
        for _ in range(self.n_trees):
            tree = RegressionTree(self.max_depth).fit(x, y - pred, w)
            self.trees.append(tree)
            pred += self.learning_rate * _tree_predict(tree, x)
        self._packed = None
        return self

    def predict_one(self, x: np.ndarray) -> float:
        if self._packed is None:
            self._packed = PackedEnsemble(self.trees, self.max_depth)
        return self.init + self.learning_rate * self._packed.leaf_sum(x)

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.array([self.predict_one(row) for row in x])

    def to_json(self) -> dict[str, Any]:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "init": self.init,
            "trees": [t.to_arrays() for t in self.trees],
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "BoostedRegressor":
        model = cls(
            n_trees=doc["n_trees"],
            max_depth=doc["max_depth"],
            learning_rate=doc["learning_rate"],
            init=doc["init"],
        )
        model.trees = [RegressionTree.from_arrays(a) for a in doc["trees"]]
        return model


@dataclass
class BoostedClassifier:
    """One-vs-rest log-loss boosting; per class a Newton-step tree stack."""

    n_classes: int = 2
    n_trees: int = 100
    max_depth: int = 4
    learning_rate: float = 0.1
    inits: list[float] = field(default_factory=list)
    trees: list[list[RegressionTree]] = field(default_factory=list)
    _packed: list[PackedEnsemble] | None = None

    def fit(self, x: np.ndarray, y: np.ndarray, weight: np.ndarray | None = None
            ) -> "BoostedClassifier":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        w = np.ones(len(y)) if weight is None else np.asarray(weight, dtype=float)
        self.inits = []
        self.trees = []
        for cls_idx in range(self.n_classes):
            target = (y == cls_idx).astype(float)
            rate = float((w * target).sum() / w.sum())
            rate = min(max(rate, 1e-6), 1.0 - 1e-6)
            f0 = math.log(rate / (1.0 - rate))
            score = np.full(len(y), f0)
            stack = []
            for _ in range(self.n_trees):
                p = 1.0 / (1.0 + np.exp(-score))
                tree = RegressionTree(self.max_depth).fit(
                    x, target - p, w, hess=p * (1.0 - p)
                )
                stack.append(tree)
                score += self.learning_rate * _tree_predict(tree, x)
            self.inits.append(f0)
            self.trees.append(stack)
        self._packed = None
        return self

    def scores_one(self, x: np.ndarray) -> np.ndarray:
        if self._packed is None:
            self._packed = [PackedEnsemble(s, self.max_depth) for s in self.trees]
        return np.array(
            [
                self.inits[c] + self.learning_rate * self._packed[c].leaf_sum(x)
                for c in range(self.n_classes)
            ]
        )

    def predict_one(self, x: np.ndarray) -> int:
        return int(np.argmax(self.scores_one(x)))

    def to_json(self) -> dict[str, Any]:
        return {
            "n_classes": self.n_classes,
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "learning_rate": self.learning_rate,
            "inits": self.inits,
            "trees": [[t.to_arrays() for t in stack] for stack in self.trees],
        }

    @classmethod
    def from_json(cls, doc: dict[str, Any]) -> "BoostedClassifier":
        model = cls(
            n_classes=doc["n_classes"],
            n_trees=doc["n_trees"],
            max_depth=doc["max_depth"],
            learning_rate=doc["learning_rate"],
        )
        model.inits = [float(v) for v in doc["inits"]]
        model.trees = [
            [RegressionTree.from_arrays(a) for a in stack] for stack in doc["trees"]
        ]
        return model


def _tree_predict(tree: RegressionTree, x: np.ndarray) -> np.ndarray:
    """Batch prediction used during fitting (vectorized level walk)."""
    n = len(x)
    idx = np.zeros(n, dtype=np.int64)
    feature = np.array([nd.feature for nd in tree.nodes], dtype=np.int64)
    threshold = np.array([nd.threshold for nd in tree.nodes])
    left = np.array([nd.left for nd in tree.nodes], dtype=np.int64)
    right = np.array([nd.right for nd in tree.nodes], dtype=np.int64)
    value = np.array([nd.value for nd in tree.nodes])
    for _ in range(tree.max_depth + 1):
        feat = feature[idx]
        inner = feat >= 0
        if not inner.any():
            break
        rows = np.nonzero(inner)[0]
        go_left = x[rows, feat[rows]] <= threshold[idx[rows]]
        nxt = np.where(go_left, left[idx[rows]], right[idx[rows]])
        idx[rows] = nxt
    return value[idx]
