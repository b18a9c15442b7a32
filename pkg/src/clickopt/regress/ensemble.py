"""Bagged forests and AdaBoost.R2 boosting over CART trees."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tree import Tree, TreeEnsemble, build_tree, ensemble_predictions, predict_tree, stack_trees


def weighted_median(predictions: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Per-column weighted median: the smallest prediction whose cumulative
    weight reaches half the total."""
    order = np.argsort(predictions, axis=0, kind="stable")
    sorted_weights = np.asarray(weights, dtype=float)[order]
    cdf = np.cumsum(sorted_weights, axis=0)
    pick = (cdf >= 0.5 * cdf[-1]).argmax(axis=0)
    chosen = np.take_along_axis(order, pick[None, :], axis=0)[0]
    return predictions[chosen, np.arange(predictions.shape[1])]


@dataclass(eq=False)
class RFRModel:
    """Fitted random forest regressor: mean over bootstrap-trained trees."""

    trees: list[Tree]
    n_features: int
    case_tag: str | None
    seed: int
    n_trees: int
    max_depth: int | None
    bootstrap: bool
    n_split_features: int | None

    kind = "RFR"

    def __post_init__(self):
        self._stacked = stack_trees(self.trees)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        return ensemble_predictions(self._stacked, X).mean(axis=0)


def fit_rfr(
    data,
    n_trees: int = 100,
    seed: int = 0,
    max_depth: int | None = None,
    bootstrap: bool = True,
    n_split_features: int | str | None = "auto",
) -> RFRModel:
    """Bagged CART forest: a bootstrap resample per tree and a fresh random
    feature subset per split.

    ``n_split_features="auto"`` uses max(1, floor(d/3)); None considers every
    feature. Each tree owns an rng derived from (seed, tree index), so a
    parallel fit would reproduce the sequential one.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    m, d = data.X.shape
    if n_split_features == "auto":
        subset: int | None = max(1, d // 3)
    else:
        subset = n_split_features
    if subset is not None and subset >= d:
        subset = None

    trees = []
    for t in range(n_trees):
        rng = np.random.default_rng((seed, t))
        rows = rng.integers(0, m, size=m) if bootstrap else np.arange(m)
        trees.append(
            build_tree(data.X[rows], data.y[rows], max_depth=max_depth, rng=rng, n_split_features=subset)
        )
    case_tag = data.case.tag if data.case is not None else None
    return RFRModel(trees, d, case_tag, seed, n_trees, max_depth, bootstrap, subset)


@dataclass(eq=False)
class ABRModel:
    """Fitted AdaBoost.R2 regressor: weighted median over boosted trees."""

    trees: list[Tree]
    tree_weights: np.ndarray
    stage_avg_losses: tuple[float, ...]
    n_features: int
    case_tag: str | None
    seed: int
    n_estimators: int
    base_max_depth: int

    kind = "ABR"

    def __post_init__(self):
        self.tree_weights = np.asarray(self.tree_weights, dtype=float)
        self._stacked = stack_trees(self.trees)

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        per_tree = ensemble_predictions(self._stacked, X)
        if len(self.trees) == 1:
            return per_tree[0]
        return weighted_median(per_tree, self.tree_weights)


def fit_abr(data, n_estimators: int = 50, seed: int = 0, base_max_depth: int = 3) -> ABRModel:
    """AdaBoost.R2 with linear loss over depth-limited CART trees.

    Each round draws a weighted resample with an rng derived from
    (seed, round), fits a tree, normalizes absolute errors by their maximum,
    and reweights samples by beta^(1 - loss) with beta = Lbar / (1 - Lbar).
    Boosting stops early when a round is perfect or Lbar >= 0.5.
    """
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    X, y = data.X, data.y
    m = X.shape[0]
    sample_weights = np.full(m, 1.0 / m)
    trees: list[Tree] = []
    log_inv_betas: list[float] = []
    avg_losses: list[float] = []

    for t in range(n_estimators):
        rng = np.random.default_rng((seed, t))
        rows = rng.choice(m, size=m, replace=True, p=sample_weights)
        tree = build_tree(X[rows], y[rows], max_depth=base_max_depth)
        errors = np.abs(predict_tree(tree, X) - y)
        max_error = float(errors.max())
        if max_error == 0.0:
            # perfect stage: keep it alone-capable and stop boosting
            trees.append(tree)
            log_inv_betas.append(1.0)
            avg_losses.append(0.0)
            break
        losses = errors / max_error
        avg_loss = float((sample_weights * losses).sum())
        if avg_loss >= 0.5:
            if not trees:
                # degenerate first stage; keep one usable estimator
                trees.append(tree)
                log_inv_betas.append(1.0)
                avg_losses.append(avg_loss)
            break
        beta = avg_loss / (1.0 - avg_loss)
        trees.append(tree)
        log_inv_betas.append(math.log(1.0 / beta))
        avg_losses.append(avg_loss)
        sample_weights = sample_weights * beta ** (1.0 - losses)
        sample_weights = sample_weights / sample_weights.sum()

    case_tag = data.case.tag if data.case is not None else None
    return ABRModel(
        trees,
        np.asarray(log_inv_betas),
        tuple(avg_losses),
        X.shape[1],
        case_tag,
        seed,
        n_estimators,
        base_max_depth,
    )
