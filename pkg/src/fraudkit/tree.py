"""CART trees: greedy binary splits over midpoint thresholds with gini,
entropy or squared-error criteria.

Shared by the decision-tree classifier, the random forest, the boosted
ensemble and the tree-path Shapley computation. Tie-breaks are fixed
(lowest feature index, then lowest threshold) so fits are reproducible.
An impure node splits even at zero impurity decrease, which is what lets
a depth-2 tree carve out XOR.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError

GINI = "gini"
ENTROPY = "entropy"
SQUARED = "squared_error"


def _impurity(pos: float, n: float, criterion: str) -> float:
    if n <= 0:
        return 0.0
    p = pos / n
    if criterion == GINI:
        return 2.0 * p * (1.0 - p)
    q = 1.0 - p
    out = 0.0
    if p > 0:
        out -= p * np.log2(p)
    if q > 0:
        out -= q * np.log2(q)
    return float(out)


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = 0.0
    n_samples: int = 0
    n_positive: int = 0
    node_id: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {
                "value": self.value,
                "n": self.n_samples,
                "pos": self.n_positive,
            }
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "n": self.n_samples,
            "pos": self.n_positive,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TreeNode":
        if "feature" not in doc:
            return cls(value=float(doc["value"]), n_samples=int(doc["n"]), n_positive=int(doc.get("pos", 0)))
        return cls(
            feature=int(doc["feature"]),
            threshold=float(doc["threshold"]),
            left=cls.from_dict(doc["left"]),
            right=cls.from_dict(doc["right"]),
            n_samples=int(doc["n"]),
            n_positive=int(doc.get("pos", 0)),
        )


def _best_split_classification(x, y, candidates, criterion):
    """(feature, threshold, decrease) maximizing impurity decrease, or None.

    Candidates iterate in ascending feature order and thresholds ascend per
    feature, so a strict `>` comparison implements the documented tie-break.
    """
    n = len(y)
    total_pos = int(y.sum())
    parent = _impurity(total_pos, n, criterion)
    best = None
    for j in candidates:
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        ys = y[order]
        distinct = np.nonzero(xs[:-1] < xs[1:])[0]
        if distinct.size == 0:
            continue
        prefix_pos = np.cumsum(ys)
        nl = distinct + 1.0
        nr = n - nl
        pl = prefix_pos[distinct] / nl
        pr = (total_pos - prefix_pos[distinct]) / nr
        if criterion == GINI:
            il = 2.0 * pl * (1.0 - pl)
            ir = 2.0 * pr * (1.0 - pr)
        else:
            def ent(p):
                out = np.zeros_like(p)
                mask = (p > 0) & (p < 1)
                pm = p[mask]
                out[mask] = -(pm * np.log2(pm) + (1 - pm) * np.log2(1 - pm))
                return out

            il = ent(pl)
            ir = ent(pr)
        decrease = parent - (nl * il + nr * ir) / n
        k = int(np.argmax(decrease))
        if best is None or decrease[k] > best[2]:
            thr = (xs[distinct[k]] + xs[distinct[k] + 1]) / 2.0
            best = (j, float(thr), float(decrease[k]))
    return best


def _best_split_regression(x, t, candidates):
    n = len(t)
    sse_parent = float(np.sum((t - t.mean()) ** 2))
    best = None
    for j in candidates:
        order = np.argsort(x[:, j], kind="stable")
        xs = x[order, j]
        ts = t[order]
        distinct = np.nonzero(xs[:-1] < xs[1:])[0]
        if distinct.size == 0:
            continue
        s1 = np.cumsum(ts)
        s2 = np.cumsum(ts * ts)
        nl = distinct + 1.0
        nr = n - nl
        sl = s2[distinct] - s1[distinct] ** 2 / nl
        total1, total2 = s1[-1], s2[-1]
        sr = (total2 - s2[distinct]) - (total1 - s1[distinct]) ** 2 / nr
        decrease = sse_parent - (sl + sr)
        k = int(np.argmax(decrease))
        if best is None or decrease[k] > best[2]:
            thr = (xs[distinct[k]] + xs[distinct[k] + 1]) / 2.0
            best = (j, float(thr), float(decrease[k]))
    return best


@dataclass
class DecisionTree:
    """Binary CART. criterion gini/entropy classifies {0,1} labels;
    squared_error regresses real targets (used by the boosted ensemble)."""

    criterion: str = GINI
    max_depth: int | None = None
    max_features: int | None = None  # per-node random subset size (forests)
    root: TreeNode | None = None
    n_features: int = 0
    leaf_training_indices: dict[int, np.ndarray] = field(default_factory=dict)

    def fit(self, x: np.ndarray, y: np.ndarray, rng: np.random.Generator | None = None) -> "DecisionTree":
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise ModelError("bad training shapes")
        if self.criterion not in (GINI, ENTROPY, SQUARED):
            raise ModelError(f"unknown criterion {self.criterion!r}")
        if self.max_features is not None and rng is None:
            rng = np.random.default_rng(0)
        self.n_features = x.shape[1]
        self.leaf_training_indices = {}
        self._counter = 0
        self.root = self._grow(x, y, np.arange(x.shape[0]), depth=0, rng=rng)
        return self

    def _next_id(self) -> int:
        self._counter += 1
        return self._counter - 1

    def _leaf(self, y: np.ndarray, indices: np.ndarray) -> TreeNode:
        node = TreeNode(node_id=self._next_id(), n_samples=len(y))
        if self.criterion == SQUARED:
            node.value = float(y.mean())
        else:
            node.n_positive = int(y.sum())
            node.value = node.n_positive / node.n_samples
        self.leaf_training_indices[node.node_id] = indices
        return node

    def _grow(self, x, y, indices, depth, rng) -> TreeNode:
        n = len(indices)
        xs, ys = x[indices], y[indices]
        pure = (ys == ys[0]).all()
        if n < 2 or pure or (self.max_depth is not None and depth >= self.max_depth):
            return self._leaf(ys, indices)

        if self.max_features is not None and self.max_features < self.n_features:
            chosen = rng.permutation(self.n_features)[: self.max_features]
            candidates = sorted(int(c) for c in chosen)
        else:
            candidates = range(self.n_features)

        if self.criterion == SQUARED:
            best = _best_split_regression(xs, ys, candidates)
        else:
            best = _best_split_classification(xs, ys, candidates, self.criterion)
        if best is None:
            return self._leaf(ys, indices)
        j, thr, _ = best
        mask = xs[:, j] <= thr
        node = TreeNode(feature=j, threshold=thr, node_id=self._next_id(), n_samples=n)
        if self.criterion != SQUARED:
            node.n_positive = int(ys.sum())
        node.left = self._grow(x, y, indices[mask], depth + 1, rng)
        node.right = self._grow(x, y, indices[~mask], depth + 1, rng)
        return node

    # ---------------------------------------------------------------- use

    def _require_fit(self) -> TreeNode:
        if self.root is None:
            raise ModelError("tree is not fitted")
        return self.root

    def _route(self, x: np.ndarray, out: np.ndarray, pick) -> np.ndarray:
        root = self._require_fit()
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise ModelError(f"expected rows of width {self.n_features}")
        stack = [(root, np.arange(x.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            if node.is_leaf:
                out[idx] = pick(node)
                continue
            mask = x[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[mask]))
            stack.append((node.right, idx[~mask]))
        return out

    def predict_value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self._route(x, np.empty(x.shape[0]), lambda node: node.value)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf node ids reached by each row."""
        x = np.asarray(x, dtype=float)
        return self._route(x, np.empty(x.shape[0], dtype=int), lambda node: node.node_id)

    def leaves(self) -> list[TreeNode]:
        """Depth-first, left-first leaf order."""
        out: list[TreeNode] = []

        def walk(node: TreeNode) -> None:
            if node.is_leaf:
                out.append(node)
            else:
                walk(node.left)
                walk(node.right)

        walk(self._require_fit())
        return out

    def nodes_by_id(self) -> dict[int, TreeNode]:
        out: dict[int, TreeNode] = {}

        def walk(node: TreeNode) -> None:
            out[node.node_id] = node
            if not node.is_leaf:
                walk(node.left)
                walk(node.right)

        walk(self._require_fit())
        return out

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "max_depth": self.max_depth,
            "n_features": self.n_features,
            "root": self._require_fit().to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DecisionTree":
        tree = cls(criterion=doc["criterion"], max_depth=doc["max_depth"])
        tree.n_features = int(doc["n_features"])
        tree.root = TreeNode.from_dict(doc["root"])
        tree._reassign_ids()
        return tree

    def _reassign_ids(self) -> None:
        counter = 0

        def walk(node: TreeNode) -> None:
            nonlocal counter
            node.node_id = counter
            counter += 1
            if not node.is_leaf:
                walk(node.left)
                walk(node.right)

        walk(self._require_fit())
