"""Performance measures for mixture estimates.

* ``w1_distance``: transportation distance between two mixing
  distributions, with per-pair ground cost mean-difference norm plus the
  Frobenius norm of the covariance square-root difference.
* ``align_labels``: minimum-total-KL pairing of true and estimated
  subpopulations (label switching repair).
* ``misclassification_rate``: fraction of observations whose model-based
  cluster disagrees with the aligned true label.
* ``ari``: adjusted Rand index between two partitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import transport
from .gaussian import ground_distance, kl_divergence
from .mixture import LabeledSample, MixingDistribution, classify_many

__all__ = [
    "Clustering",
    "w1_distance",
    "align_labels",
    "misclassification_rate",
    "ari",
]


@dataclass(frozen=True)
class Clustering:
    """Hard partition of N items into K clusters."""

    labels: np.ndarray
    K: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.ndim != 1:
            raise ValueError("labels must be a vector")
        if labels.size and (labels.min() < 0 or labels.max() >= self.K):
            raise ValueError(f"labels must lie in [0, {self.K})")
        object.__setattr__(self, "labels", labels)


def w1_distance(G_hat: MixingDistribution, G_star: MixingDistribution) -> float:
    """Transportation distance between mixing distributions.

    Orders may differ; dimensions must match.  Zero exactly when the two
    mixing distributions coincide as measures.
    """
    if G_hat.dim != G_star.dim:
        raise ValueError("mixing distributions must share one dimension")
    table = np.empty((G_hat.order, G_star.order))
    for i, a in enumerate(G_hat.components):
        for j, b in enumerate(G_star.components):
            table[i, j] = ground_distance(a, b)
    return transport.solve_ot(table, G_hat.weights, G_star.weights).objective


def align_labels(G_hat: MixingDistribution, G_star: MixingDistribution) -> np.ndarray:
    """Permutation sigma minimizing sum_k KL(true_k || estimated_sigma(k)).

    Entry k gives the index of the estimated subpopulation paired with
    true subpopulation k.  Requires equal orders.
    """
    if G_hat.order != G_star.order:
        raise ValueError(
            f"order mismatch: estimate has {G_hat.order}, truth has {G_star.order}"
        )
    K = G_star.order
    cost = np.empty((K, K))
    for k, true_comp in enumerate(G_star.components):
        for l, est_comp in enumerate(G_hat.components):
            cost[k, l] = kl_divergence(true_comp, est_comp)
    rows, cols = linear_sum_assignment(cost)
    sigma = np.empty(K, dtype=int)
    sigma[rows] = cols
    return sigma


def misclassification_rate(
    G_hat: MixingDistribution, sample: LabeledSample, alignment: np.ndarray
) -> float:
    """Fraction of points whose estimated cluster misses the aligned truth."""
    if sample.labels is None:
        raise ValueError("sample has no labels")
    alignment = np.asarray(alignment, dtype=int)
    predicted = classify_many(G_hat, sample.points)
    mapped_truth = alignment[sample.labels]
    return float(np.mean(mapped_truth != predicted))


def _pair_2(counts: np.ndarray) -> int:
    # sum of C(n, 2) over the array, in exact integer arithmetic
    return int(sum(int(c) * (int(c) - 1) // 2 for c in counts.ravel()))


def ari(a, b) -> float:
    """Adjusted Rand index between two partitions of the same items.

    1 for identical partitions (up to label renaming); close to 0 for
    independent ones; can be negative.
    """
    labels_a = a.labels if isinstance(a, Clustering) else np.asarray(a, dtype=int)
    labels_b = b.labels if isinstance(b, Clustering) else np.asarray(b, dtype=int)
    if labels_a.shape != labels_b.shape or labels_a.ndim != 1:
        raise ValueError("the two label vectors must have one common length")
    n = labels_a.size
    if n < 2:
        raise ValueError("need at least two items")
    ka = int(labels_a.max()) + 1
    kb = int(labels_b.max()) + 1
    contingency = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(contingency, (labels_a, labels_b), 1)
    sum_cells = _pair_2(contingency)
    sum_rows = _pair_2(contingency.sum(axis=1))
    sum_cols = _pair_2(contingency.sum(axis=0))
    pairs = n * (n - 1) // 2
    # exact rational arithmetic; the pair counts overflow float64 well
    # before they trouble Python integers
    expected = Fraction(sum_rows * sum_cols, pairs)
    denominator = Fraction(sum_rows + sum_cols, 2) - expected
    if denominator == 0:
        # both partitions are single clusters (or complete singletons)
        return 1.0
    return float((sum_cells - expected) / denominator)
