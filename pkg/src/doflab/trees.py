"""Best-first CART regression trees and feature-subsampled forests.

Trees are grown greedily: the leaf whose best split removes the most squared
error is expanded first, until the leaf budget is reached or no split helps.
Trees always fit the full training set (no bootstrap); a forest randomizes
only the feature subset considered at each split.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

__all__ = ["RegressionTree", "grow_tree"]

_MIN_GAIN = 1e-12


@dataclass
class RegressionTree:
    """Array-encoded binary regression tree (feature < 0 marks a leaf)."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_leaves: int

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0])
        stack = [(0, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            f = self.feature[node]
            if f < 0:
                out[idx] = self.value[node]
                continue
            goes_left = X[idx, f] <= self.threshold[node]
            stack.append((self.left[node], idx[goes_left]))
            stack.append((self.right[node], idx[~goes_left]))
        return out


def _leaf_sse(y: np.ndarray) -> float:
    return float(np.sum((y - y.mean()) ** 2)) if y.size else 0.0


def _best_split(X, y, idx, sse_parent, features):
    """Best (gain, feature, threshold) over the given features, or None.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values; ties resolve to the first feature and first position scanned.
    """
    m = idx.size
    if m < 2 or sse_parent <= _MIN_GAIN:
        return None
    best = None
    yv = y[idx]
    for f in features:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        sx = xs[order]
        sy = yv[order]
        valid = sx[:-1] < sx[1:]
        if not np.any(valid):
            continue
        c1 = np.cumsum(sy)[:-1]
        c2 = np.cumsum(sy**2)[:-1]
        sizes = np.arange(1, m)
        sse_l = c2 - c1**2 / sizes
        sse_r = (c2[-1] + sy[-1] ** 2 - c2) - (c1[-1] + sy[-1] - c1) ** 2 / (m - sizes)
        cost = np.where(valid, sse_l + sse_r, np.inf)
        pos = int(np.argmin(cost))
        gain = sse_parent - cost[pos]
        if gain > _MIN_GAIN and (best is None or gain > best[0]):
            best = (float(gain), int(f), float(0.5 * (sx[pos] + sx[pos + 1])))
    return best


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_leaves: int,
    rng: np.random.Generator | None = None,
    split_features: int | None = None,
) -> RegressionTree:
    """Grow a best-first CART regression tree with at most max_leaves leaves.

    When split_features is given, each split considers only that many
    features, drawn without replacement from rng (forest randomization).
    """
    if max_leaves < 2:
        raise ValueError("max_leaves must be >= 2")
    n, p = X.shape
    if split_features is not None and rng is None:
        raise ValueError("per-split feature subsampling needs an rng")

    feature = [-1]
    threshold = [0.0]
    left = [-1]
    right = [-1]
    value = [float(y.mean())]

    def candidate_features():
        if split_features is None or split_features >= p:
            return np.arange(p)
        return np.sort(rng.choice(p, size=split_features, replace=False))

    heap = []
    counter = 0

    def push(node, idx):
        nonlocal counter
        split = _best_split(X, y, idx, _leaf_sse(y[idx]), candidate_features())
        if split is not None:
            heapq.heappush(heap, (-split[0], counter, node, idx, split))
            counter += 1

    push(0, np.arange(n))
    n_leaves = 1
    while heap and n_leaves < max_leaves:
        _, _, node, idx, (gain, f, thr) = heapq.heappop(heap)
        goes_left = X[idx, f] <= thr
        idx_l, idx_r = idx[goes_left], idx[~goes_left]
        for child_idx in (idx_l, idx_r):
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(float(y[child_idx].mean()))
        feature[node] = f
        threshold[node] = thr
        left[node] = len(feature) - 2
        right[node] = len(feature) - 1
        n_leaves += 1
        push(left[node], idx_l)
        push(right[node], idx_r)

    return RegressionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=float),
        n_leaves=n_leaves,
    )
