"""CART regression trees stored as flat arrays, with batched prediction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(eq=False)
class Tree:
    """Binary regression tree in array form.

    ``feature`` is -1 at leaves; leaf ``left``/``right`` point back at the
    leaf itself so a fixed number of descent steps converges.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    depth: int

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]


def _best_split(X: np.ndarray, rows: np.ndarray, yn: np.ndarray, candidates: np.ndarray):
    """Best (children_sse, feature, threshold) over midpoint thresholds.

    Features are scanned in ascending index order and compared strictly, so
    ties go to the lowest feature index; within a feature np.argmin keeps the
    first (smallest) threshold. Returns None when no feature splits.
    """
    m = yn.shape[0]
    total_sum = yn.sum()
    total_sq = (yn * yn).sum()
    best = None
    for j in candidates:
        col = X[rows, j]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        boundaries = np.nonzero(xs[1:] != xs[:-1])[0]
        if boundaries.size == 0:
            continue
        ys = yn[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        n_left = boundaries + 1.0
        s_left = csum[boundaries]
        q_left = csq[boundaries]
        n_right = m - n_left
        s_right = total_sum - s_left
        q_right = total_sq - q_left
        sse = (q_left - s_left * s_left / n_left) + (q_right - s_right * s_right / n_right)
        i = int(np.argmin(sse))
        if best is None or sse[i] < best[0]:
            cut = boundaries[i]
            best = (float(sse[i]), int(j), float((xs[cut] + xs[cut + 1]) / 2.0))
    return best


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int | None = None,
    rng: np.random.Generator | None = None,
    n_split_features: int | None = None,
) -> Tree:
    """Grow a CART tree by weighted variance reduction.

    Candidate thresholds are midpoints between consecutive distinct sorted
    feature values; leaves store the mean target. A node becomes a leaf at
    size < 2, zero target variance, the depth cap, or when no candidate
    threshold exists. ``n_split_features`` draws a fresh random feature
    subset per split (random-forest mode; requires ``rng``).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    m, d = X.shape
    if m == 0:
        raise ValueError("cannot fit a tree on an empty dataset")
    if n_split_features is not None and rng is None:
        raise ValueError("n_split_features requires an rng")

    features: list[int] = []
    thresholds: list[float] = []
    lefts: list[int] = []
    rights: list[int] = []
    values: list[float] = []
    depth_seen = 0

    all_features = np.arange(d)
    # LIFO with the right child pushed first, so nodes are created in
    # preorder and any rng draws happen in a reproducible order
    stack: list[tuple[np.ndarray, int, int, bool]] = [(np.arange(m), 0, -1, False)]
    while stack:
        rows, depth, parent, is_right = stack.pop()
        idx = len(features)
        yn = y[rows]
        mean = float(yn.mean())
        features.append(-1)
        thresholds.append(np.nan)
        lefts.append(idx)
        rights.append(idx)
        values.append(mean)
        if parent >= 0:
            (rights if is_right else lefts)[parent] = idx
        depth_seen = max(depth_seen, depth)

        if rows.shape[0] < 2:
            continue
        if float(((yn - mean) ** 2).sum()) == 0.0:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        if n_split_features is not None and n_split_features < d:
            candidates = np.sort(rng.choice(d, size=n_split_features, replace=False))
        else:
            candidates = all_features
        split = _best_split(X, rows, yn, candidates)
        if split is None:
            continue
        _, j, threshold = split
        features[idx] = j
        thresholds[idx] = threshold
        go_left = X[rows, j] <= threshold
        stack.append((rows[~go_left], depth + 1, idx, True))
        stack.append((rows[go_left], depth + 1, idx, False))

    return Tree(
        feature=np.asarray(features, dtype=np.int32),
        threshold=np.asarray(thresholds, dtype=float),
        left=np.asarray(lefts, dtype=np.int32),
        right=np.asarray(rights, dtype=np.int32),
        value=np.asarray(values, dtype=float),
        depth=depth_seen,
    )


@dataclass(eq=False)
class TreeEnsemble:
    """Trees concatenated into shared arrays so one descent walks them all."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    roots: np.ndarray
    depth: int

    @property
    def n_trees(self) -> int:
        return self.roots.shape[0]


def stack_trees(trees: Sequence[Tree]) -> TreeEnsemble:
    offsets = np.cumsum([0] + [t.n_nodes for t in trees[:-1]])
    return TreeEnsemble(
        feature=np.concatenate([t.feature for t in trees]),
        threshold=np.concatenate([t.threshold for t in trees]),
        left=np.concatenate([t.left + off for t, off in zip(trees, offsets)]),
        right=np.concatenate([t.right + off for t, off in zip(trees, offsets)]),
        value=np.concatenate([t.value for t in trees]),
        roots=np.asarray(offsets, dtype=np.int64),
        depth=max(t.depth for t in trees),
    )


def ensemble_predictions(ensemble: TreeEnsemble, X: np.ndarray) -> np.ndarray:
    """Per-tree predictions with shape (n_trees, n_rows)."""
    X = np.asarray(X, dtype=float)
    n_rows = X.shape[0]
    n_trees = ensemble.n_trees
    node = np.repeat(ensemble.roots, n_rows)
    rows = np.tile(np.arange(n_rows), n_trees)
    for _ in range(ensemble.depth):
        feat = ensemble.feature[node]
        internal = feat >= 0
        if not internal.any():
            break
        lookup = np.where(internal, feat, 0)
        go_left = X[rows, lookup] <= ensemble.threshold[node]
        step = np.where(go_left, ensemble.left[node], ensemble.right[node])
        node = np.where(internal, step, node)
    return ensemble.value[node].reshape(n_trees, n_rows)


def predict_tree(tree: Tree, X: np.ndarray) -> np.ndarray:
    return ensemble_predictions(stack_trees([tree]), X)[0]


@dataclass(eq=False)
class DTRModel:
    """Fitted decision tree regressor; immutable after fitting."""

    tree: Tree
    n_features: int
    case_tag: str | None
    seed: int
    max_depth: int | None

    kind = "DTR"

    def __post_init__(self):
        self._stacked = stack_trees([self.tree])

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return ensemble_predictions(self._stacked, X)[0]


def fit_dtr(data, max_depth: int | None = None, seed: int = 0) -> DTRModel:
    """CART regression tree fit; fully deterministic for a given dataset."""
    tree = build_tree(data.X, data.y, max_depth=max_depth)
    case_tag = data.case.tag if data.case is not None else None
    return DTRModel(tree, data.n_features, case_tag, seed, max_depth)
