"""Gaussian mixture reduction by majorization-minimization.

Approximates a pooled mixture with many components by one of a designated
order K.  The objective is the transportation divergence from the pooled
mixing distribution with per-pair cost KL(source component || target
component); relaxing the target marginal makes the optimal plan a
row-wise argmin assignment, and the per-target update given a plan is the
analytic KL barycenter.  Alternating the two steps descends the objective
monotonically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import transport
from .gaussian import Gaussian, kl_barycenter, kl_divergence
from .mixture import MixingDistribution
from .transport import TransportPlan

__all__ = ["GmrConfig", "GmrResult", "pool", "objective", "reduce"]

logger = logging.getLogger(__name__)

COV_EIGENVALUE_ALARM = 1e-10


@dataclass
class GmrConfig:
    """Settings for one reduction run.

    ``init`` must have order K; with ``None`` the K heaviest pooled
    components seed the run (callers that hold the local estimates should
    pass the median local estimate instead).
    """

    K: int
    cost: str = "kl"
    tol: float = 1e-6
    max_iter: int = 1000
    init: MixingDistribution | None = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.cost != "kl":
            raise ValueError(f"unsupported cost tag {self.cost!r}; only 'kl' ships")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class GmrResult:
    estimate: MixingDistribution
    objective_trace: np.ndarray
    plan: TransportPlan
    iterations: int
    converged: bool
    reseed_iterations: list[int] = field(default_factory=list)

    @property
    def objective(self) -> float:
        return float(self.objective_trace[-1])


def pool(local_estimates, lambdas) -> MixingDistribution:
    """Weighted concatenation of local mixing distributions.

    Component k of machine m enters with weight lambda_m * w_mk; the
    output order is the sum of the local orders.
    """
    local_estimates = list(local_estimates)
    if not local_estimates:
        raise ValueError("pool needs at least one local estimate")
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.shape != (len(local_estimates),):
        raise ValueError("lambdas must match the number of local estimates")
    if np.any(lambdas < 0.0) or abs(float(lambdas.sum()) - 1.0) > 1e-9:
        raise ValueError("lambdas must lie on the simplex")
    d = local_estimates[0].dim
    if any(G.dim != d for G in local_estimates):
        raise ValueError("local estimates must share one dimension")
    weights = np.concatenate([lam * G.weights for lam, G in zip(lambdas, local_estimates)])
    comps = [g for G in local_estimates for g in G.components]
    return MixingDistribution(weights, comps)


def _cost_table(sources, targets, cost_fn) -> np.ndarray:
    table = np.empty((len(sources), len(targets)))
    for i, src in enumerate(sources):
        for j, tgt in enumerate(targets):
            table[i, j] = cost_fn(src, tgt)
    return table


def objective(pooled: MixingDistribution, G: MixingDistribution, cost_fn=None) -> float:
    """Relaxed transport objective: sum_i w_i * min_gamma cost(i, gamma)."""
    if pooled.dim != G.dim:
        raise ValueError("dimension mismatch between pooled mixture and candidate")
    cost_fn = cost_fn or kl_divergence
    table = _cost_table(pooled.components, G.components, cost_fn)
    return float(pooled.weights @ table.min(axis=1))


def _default_init(pooled: MixingDistribution, K: int) -> MixingDistribution:
    heaviest = np.argsort(-pooled.weights, kind="stable")[:K]
    comps = [pooled.components[i] for i in heaviest]
    w = pooled.weights[heaviest]
    return MixingDistribution(w / w.sum(), comps)


def reduce(pooled: MixingDistribution, cfg: GmrConfig, cost_fn=None) -> GmrResult:
    """Reduce a pooled mixture to order K by the MM iteration.

    Alternates (a) assigning every pooled component to its cheapest
    target and (b) replacing each target by the KL barycenter of its
    assigned components, until the objective changes by less than
    ``cfg.tol``.  Targets that receive no mass are reseeded at the pooled
    component currently paying the largest weighted transport cost; such
    iterations are recorded in ``reseed_iterations`` and excluded from
    the monotone-descent guarantee.
    """
    K = cfg.K
    if pooled.order < K:
        raise ValueError(f"pooled order {pooled.order} is below target order {K}")
    init = cfg.init if cfg.init is not None else _default_init(pooled, K)
    if init.order != K:
        raise ValueError(f"init has order {init.order}, expected {K}")
    if init.dim != pooled.dim:
        raise ValueError("init dimension does not match the pooled mixture")
    cost_fn = cost_fn or kl_divergence

    sources = pooled.components
    w = pooled.weights
    comps = list(init.components)
    trace: list[float] = []
    reseeds: list[int] = []
    converged = False
    final_comps = comps
    final_plan = None

    for t in range(cfg.max_iter):
        table = _cost_table(sources, comps, cost_fn)
        plan = transport.relaxed_plan(table, w)
        reseed_happened = False
        attempts = 0
        while True:
            empty = np.flatnonzero(plan.col_marginal() <= 0.0)
            if empty.size == 0:
                break
            if attempts >= K:
                raise RuntimeError("a reduction column stayed empty after reseeding")
            gamma = int(empty[0])
            per_source = w * table[np.arange(len(sources)), np.argmin(table, axis=1)]
            donor = int(np.argmax(per_source))
            comps[gamma] = sources[donor]
            table[:, gamma] = [cost_fn(src, comps[gamma]) for src in sources]
            plan = transport.relaxed_plan(table, w)
            reseed_happened = True
            attempts += 1
        value = plan.objective
        trace.append(value)
        if reseed_happened:
            reseeds.append(t)
        final_comps = list(comps)
        final_plan = plan
        if t > 0 and not reseed_happened and abs(trace[-2] - value) < cfg.tol:
            converged = True
            break
        comps = _barycenter_update(sources, plan.matrix, comps)

    weights_out = final_plan.col_marginal()
    estimate = MixingDistribution(weights_out, final_comps)
    _warn_on_collapse(estimate)
    return GmrResult(
        estimate=estimate,
        objective_trace=np.asarray(trace),
        plan=final_plan,
        iterations=len(trace),
        converged=converged,
        reseed_iterations=reseeds,
    )


def _barycenter_update(sources, plan_matrix: np.ndarray, comps) -> list[Gaussian]:
    updated = []
    for gamma in range(plan_matrix.shape[1]):
        col = plan_matrix[:, gamma]
        picked = np.flatnonzero(col > 0.0)
        lam = col[picked] / col[picked].sum()
        updated.append(kl_barycenter([sources[i] for i in picked], lam))
    return updated


def _warn_on_collapse(G: MixingDistribution):
    for k, g in enumerate(G.components):
        smallest = float(np.linalg.eigvalsh(g.cov)[0])
        if smallest < COV_EIGENVALUE_ALARM:
            logger.warning(
                "reduced component %d has covariance eigenvalue %.3e", k, smallest
            )
