"""Split-and-conquer learning of finite Gaussian mixtures.

Local shards are fitted by penalized maximum likelihood, the local
mixing distributions are pooled and reduced back to the target order by
a transport-based MM algorithm, and estimates are compared with
transportation-distance, misclassification, and ARI metrics.
"""

from .aggregate import (
    LocalEstimates,
    ShardedDataset,
    aggregate_gmr,
    aggregate_klavg,
    aggregate_median,
    fit_locals,
    split,
)
from .gaussian import Gaussian, ground_distance, kl_barycenter, kl_divergence
from .metrics import Clustering, align_labels, ari, misclassification_rate, w1_distance
from .mixture import LabeledSample, MixingDistribution
from .pmle import PmleConfig, PmleResult, fit, penalized_loglik
from .reduction import GmrConfig, GmrResult, objective, pool, reduce
from .simulate import OverlapSpec, generate, max_overlap, pairwise_overlap
from .transport import CostMatrix, TransportPlan, relaxed_plan, solve_ot

__version__ = "0.1.0"

__all__ = [
    "Gaussian",
    "MixingDistribution",
    "LabeledSample",
    "CostMatrix",
    "TransportPlan",
    "PmleConfig",
    "PmleResult",
    "GmrConfig",
    "GmrResult",
    "ShardedDataset",
    "LocalEstimates",
    "OverlapSpec",
    "Clustering",
    "kl_divergence",
    "ground_distance",
    "kl_barycenter",
    "solve_ot",
    "relaxed_plan",
    "penalized_loglik",
    "fit",
    "pool",
    "objective",
    "reduce",
    "split",
    "fit_locals",
    "aggregate_gmr",
    "aggregate_median",
    "aggregate_klavg",
    "w1_distance",
    "align_labels",
    "misclassification_rate",
    "ari",
    "pairwise_overlap",
    "max_overlap",
    "generate",
    "__version__",
]
