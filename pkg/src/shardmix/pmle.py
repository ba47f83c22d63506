"""Penalized maximum likelihood estimation of a Gaussian mixture by EM.

The objective adds a covariance penalty to the log-likelihood::

    pll(G) = sum_i log phi(x_i | G)
             - a_n * sum_k [ tr(S Sigma_k^-1) + log det Sigma_k ]

with S the sample covariance (divisor N) of the data.  The penalty bounds
the likelihood away from covariance degeneracies: every EM update keeps
Sigma_k >= 2 a_n / (N + 2 a_n) * S, so the iteration converges to a
nondegenerate local maximum.  The default penalty size is N^(-1/2).

EM iterations increase the penalized log-likelihood monotonically; the
fitter stops when the per-observation increment drops below ``tol``.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .gaussian import Gaussian
from .mixture import (
    MixingDistribution,
    component_log_densities,
    mixture_log_density_many,
)
from .rng import stream

__all__ = [
    "PmleConfig",
    "PmleResult",
    "ComponentStarvationError",
    "sample_covariance",
    "penalized_loglik",
    "responsibilities",
    "em_step",
    "kmeanspp_init",
    "fit",
]

STARVATION_FLOOR = 1e-300
REINIT_FLOOR = 1e-8


class ComponentStarvationError(RuntimeError):
    """A mixture component lost essentially all responsibility mass."""


@dataclass
class PmleConfig:
    """Settings for one penalized-likelihood fit.

    ``a_n`` of ``None`` resolves to ``N**-0.5`` at fit time.  ``init`` of
    ``None`` requests kmeans++ seeding with ``n_starts`` independent EM
    chains; an explicit :class:`MixingDistribution` runs a single chain
    from that start.
    """

    K: int
    a_n: float | None = None
    tol: float = 1e-6
    max_iter: int = 10_000
    init: MixingDistribution | None = None
    n_starts: int = 10

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.a_n is not None and not self.a_n > 0.0:
            raise ValueError("a_n must be positive")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.n_starts < 1:
            raise ValueError("n_starts must be at least 1")


@dataclass
class PmleResult:
    estimate: MixingDistribution
    penalized_loglik_trace: np.ndarray
    iterations: int
    converged: bool
    reinit_iterations: list[int] = field(default_factory=list)
    wall_seconds: float = 0.0

    @property
    def penalized_loglik(self) -> float:
        return float(self.penalized_loglik_trace[-1])


def sample_covariance(data: np.ndarray) -> np.ndarray:
    """Sample covariance with divisor N (matches the EM fixed point at K=1)."""
    data = np.asarray(data, dtype=float)
    centered = data - data.mean(axis=0)
    return centered.T @ centered / data.shape[0]


def _penalty(G: MixingDistribution, a_n: float, S: np.ndarray) -> float:
    total = 0.0
    for g in G.components:
        # tr(S Sigma^-1) through the Cholesky factor of Sigma.
        half = solve_triangular(g.chol, S, lower=True)
        inv_quad = solve_triangular(g.chol, half.T, lower=True)
        total += float(np.trace(inv_quad)) + g.log_det_cov
    return a_n * total


def penalized_loglik(G: MixingDistribution, data: np.ndarray, a_n: float, S: np.ndarray) -> float:
    """Penalized log-likelihood of the data under G."""
    data = np.asarray(data, dtype=float)
    scores = component_log_densities(G, data)
    with np.errstate(divide="ignore"):
        scores = scores + np.log(G.weights)[None, :]
    loglik = float(np.sum(logsumexp(scores, axis=1)))
    if a_n == 0.0:
        return loglik
    return loglik - _penalty(G, a_n, S)


def responsibilities(G: MixingDistribution, data: np.ndarray) -> np.ndarray:
    """(N, K) posterior membership probabilities; rows lie on the simplex."""
    scores = component_log_densities(G, data)
    with np.errstate(divide="ignore"):
        scores = scores + np.log(G.weights)[None, :]
    return np.exp(scores - logsumexp(scores, axis=1, keepdims=True))


def em_step(G: MixingDistribution, data: np.ndarray, a_n: float, S: np.ndarray) -> MixingDistribution:
    """One EM update of the penalized likelihood.

    The M-step shrinks each covariance towards S::

        Sigma_k = (2 a_n S + S_k) / (2 a_n + N w_k)

    where S_k is the responsibility-weighted scatter about the new mean.
    """
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    resp = responsibilities(G, data)
    mass = resp.sum(axis=0)
    if np.any(mass / n < STARVATION_FLOOR):
        raise ComponentStarvationError("component starvation: a weight underflowed")
    weights = mass / n
    means = (resp.T @ data) / mass[:, None]
    comps = []
    for k in range(G.order):
        centered = data - means[k]
        scatter = (centered * resp[:, k : k + 1]).T @ centered
        cov = (2.0 * a_n * S + scatter) / (2.0 * a_n + mass[k])
        comps.append(Gaussian(means[k], cov))
    return MixingDistribution(weights, comps)


def kmeanspp_init(data: np.ndarray, K: int, rng: np.random.Generator) -> MixingDistribution:
    """kmeans++ seeding: D^2-sampled means, covariance S, uniform weights."""
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    S = sample_covariance(data)
    centers = [data[rng.integers(n)]]
    for _ in range(1, K):
        dist2 = np.min(
            [np.sum((data - c) ** 2, axis=1) for c in centers], axis=0
        )
        total = dist2.sum()
        if total > 0.0:
            idx = rng.choice(n, p=dist2 / total)
        else:
            idx = rng.integers(n)
        centers.append(data[idx])
    comps = [Gaussian(c, S) for c in centers]
    return MixingDistribution(np.full(K, 1.0 / K), comps)


def _reinit_starved(G: MixingDistribution, data: np.ndarray, S: np.ndarray, starved) -> MixingDistribution:
    """Move starved components to the lowest-density points, weight 1/N."""
    n = data.shape[0]
    order = np.argsort(mixture_log_density_many(G, data))
    weights = G.weights.copy()
    comps = list(G.components)
    for slot, k in enumerate(starved):
        comps[k] = Gaussian(data[order[slot % n]], S)
        weights[k] = 1.0 / n
    return MixingDistribution(weights / weights.sum(), comps)


def _run_chain(data, cfg: PmleConfig, init: MixingDistribution, a_n: float, S) -> PmleResult:
    n = data.shape[0]
    G = init
    trace = [penalized_loglik(G, data, a_n, S)]
    reinits: list[int] = []
    converged = False
    iterations = 0
    for it in range(1, cfg.max_iter + 1):
        G = em_step(G, data, a_n, S)
        starved = np.flatnonzero(n * G.weights < REINIT_FLOOR)
        if starved.size:
            G = _reinit_starved(G, data, S, starved)
            reinits.append(it)
        value = penalized_loglik(G, data, a_n, S)
        trace.append(value)
        iterations = it
        if (value - trace[-2]) / n < cfg.tol:
            converged = True
            break
    return PmleResult(
        estimate=G,
        penalized_loglik_trace=np.asarray(trace),
        iterations=iterations,
        converged=converged,
        reinit_iterations=reinits,
    )


def fit(data: np.ndarray, cfg: PmleConfig, seed: int = 0) -> PmleResult:
    """Penalized MLE of a K-component Gaussian mixture.

    With kmeans++ initialization, ``cfg.n_starts`` independent EM chains
    run from distinct seedings and the one with the highest final
    penalized log-likelihood wins.  Deterministic for a given seed.
    """
    started = time.perf_counter()
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if not np.all(np.isfinite(data)):
        raise ValueError("data must be finite")
    n = data.shape[0]
    if n <= cfg.K:
        raise ValueError(f"need more than K={cfg.K} observations, got {n}")
    a_n = cfg.a_n if cfg.a_n is not None else float(n) ** -0.5
    S = sample_covariance(data)

    if cfg.init is not None:
        if cfg.init.order != cfg.K:
            raise ValueError("explicit init must have order K")
        if cfg.init.dim != data.shape[1]:
            raise ValueError("explicit init dimension does not match the data")
        best = _run_chain(data, cfg, cfg.init, a_n, S)
    else:
        best = None
        for s in range(cfg.n_starts):
            rng = stream(seed, "pmle-start", s)
            init = kmeanspp_init(data, cfg.K, rng)
            result = _run_chain(data, cfg, init, a_n, S)
            if best is None or result.penalized_loglik > best.penalized_loglik:
                best = result
    best.wall_seconds = time.perf_counter() - started
    return best


def warn_if_small_shards(sizes, K: int):
    """Advisory check that each shard can support a K-component fit."""
    sizes = np.asarray(sizes)
    if np.any(sizes < K + 1):
        warnings.warn(
            f"some shards have fewer than K+1={K + 1} observations; "
            "local fits may be unstable",
            stacklevel=2,
        )
