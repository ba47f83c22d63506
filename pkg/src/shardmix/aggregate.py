"""Split-and-conquer harness and aggregators.

``split`` shards a dataset at random, ``fit_locals`` runs the penalized
MLE per shard (concurrently if asked), and three aggregators combine the
local estimates: transport-based reduction (``aggregate_gmr``), the
transport median (``aggregate_median``), and refitting on synthetic draws
from the locals (``aggregate_klavg``).
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import pmle, reduction, transport
from .gaussian import kl_divergence
from .mixture import MixingDistribution
from .pmle import PmleConfig, PmleResult
from .reduction import GmrConfig
from .rng import derive, stream

__all__ = [
    "ShardedDataset",
    "LocalEstimates",
    "split",
    "fit_locals",
    "aggregate_gmr",
    "aggregate_median",
    "aggregate_klavg",
]


@dataclass(frozen=True)
class ShardedDataset:
    """M data shards with proportions lambda_m = N_m / N."""

    shards: tuple

    def __post_init__(self):
        shards = tuple(np.asarray(s, dtype=float) for s in self.shards)
        if not shards:
            raise ValueError("need at least one shard")
        d = shards[0].shape[1]
        if any(s.ndim != 2 or s.shape[1] != d for s in shards):
            raise ValueError("all shards must be matrices with one common dimension")
        object.__setattr__(self, "shards", shards)

    @property
    def m(self) -> int:
        return len(self.shards)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s.shape[0] for s in self.shards])

    @property
    def total(self) -> int:
        return int(self.sizes.sum())

    @property
    def lambdas(self) -> np.ndarray:
        sizes = self.sizes
        return sizes / sizes.sum()


@dataclass
class LocalEstimates:
    """Per-shard penalized MLEs with shard proportions and fit diagnostics."""

    estimates: list[MixingDistribution]
    lambdas: np.ndarray
    diagnostics: list[PmleResult] = field(default_factory=list)

    def __post_init__(self):
        if not self.estimates:
            raise ValueError("need at least one local estimate")
        K = self.estimates[0].order
        d = self.estimates[0].dim
        if any(G.order != K or G.dim != d for G in self.estimates):
            raise ValueError("local estimates must share one order and dimension")
        lambdas = np.asarray(self.lambdas, dtype=float)
        if lambdas.shape != (len(self.estimates),):
            raise ValueError("lambdas must match the number of estimates")
        self.lambdas = lambdas

    @property
    def m(self) -> int:
        return len(self.estimates)

    @property
    def order(self) -> int:
        return self.estimates[0].order


def split(data: np.ndarray, m: int, seed: int, k: int | None = None) -> ShardedDataset:
    """Randomly partition the rows of ``data`` into m near-equal shards.

    A uniform random permutation is cut into contiguous blocks of sizes
    ceil(N/m) or floor(N/m); deterministic for a given seed.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    n = data.shape[0]
    if m < 1 or m > n:
        raise ValueError(f"m must be between 1 and the number of rows ({n})")
    if k is not None and n < m * (k + 1):
        warnings.warn(
            f"N={n} is below the recommended m*(K+1)={m * (k + 1)} observations",
            stacklevel=2,
        )
    perm = stream(seed, "split").permutation(n)
    blocks = np.array_split(data[perm], m)
    return ShardedDataset(shards=tuple(blocks))


def fit_locals(
    shards: ShardedDataset, cfg: PmleConfig, seed: int, threads: int = 1
) -> LocalEstimates:
    """Fit the penalized MLE on every shard.

    Each shard uses its own sample covariance and, unless ``cfg.a_n`` is
    set, the per-shard default penalty N_m^(-1/2).  Shard m runs with the
    derived seed hash(seed, "shard", m), so results do not depend on
    scheduling; outputs are placed by shard index.
    """
    pmle.warn_if_small_shards(shards.sizes, cfg.K)

    def fit_one(index: int) -> PmleResult:
        try:
            return pmle.fit(shards.shards[index], cfg, derive(seed, "shard", index))
        except Exception as exc:
            raise type(exc)(f"shard {index}: {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool_:
            results = list(pool_.map(fit_one, range(shards.m)))
    else:
        results = [fit_one(i) for i in range(shards.m)]
    return LocalEstimates(
        estimates=[r.estimate for r in results],
        lambdas=shards.lambdas,
        diagnostics=results,
    )


def aggregate_gmr(local: LocalEstimates, cfg: GmrConfig) -> MixingDistribution:
    """Pool the locals and reduce back to order K by the MM algorithm.

    When no explicit initialization is supplied, the median local
    estimate seeds the reduction.
    """
    pooled = reduction.pool(local.estimates, local.lambdas)
    if cfg.init is None:
        cfg = GmrConfig(
            K=cfg.K,
            cost=cfg.cost,
            tol=cfg.tol,
            max_iter=cfg.max_iter,
            init=aggregate_median(local),
        )
    return reduction.reduce(pooled, cfg).estimate


def _transport_divergence(source: MixingDistribution, target: MixingDistribution) -> float:
    table = np.empty((source.order, target.order))
    for i, a in enumerate(source.components):
        for j, b in enumerate(target.components):
            table[i, j] = kl_divergence(a, b)
    return transport.solve_ot(table, source.weights, target.weights).objective


def aggregate_median(local: LocalEstimates) -> MixingDistribution:
    """The local estimate closest to all others in transport divergence.

    Minimizes sum_m lambda_m * T_KL(G_m, G) over the candidate set of
    local estimates; ties go to the smallest machine index.
    """
    m = local.m
    if m == 1:
        return local.estimates[0]
    divergence = np.empty((m, m))
    for a in range(m):
        for b in range(m):
            divergence[a, b] = (
                0.0 if a == b else _transport_divergence(local.estimates[a], local.estimates[b])
            )
    scores = local.lambdas @ divergence
    return local.estimates[int(np.argmin(scores))]


def aggregate_klavg(
    local: LocalEstimates,
    cfg: PmleConfig,
    seed: int,
    per_machine_n: int = 1000,
) -> MixingDistribution:
    """Refit a K-component mixture on synthetic draws from the locals.

    Draws ``per_machine_n`` observations from every local estimate, pools
    them, and fits with penalty (per_machine_n * M)^(-1/2) and kmeans++
    multistart unless the config says otherwise.
    """
    if per_machine_n < local.order + 1:
        raise ValueError("per_machine_n must exceed the mixture order")
    pools = [
        G.sample(per_machine_n, derive(seed, "klavg-sample", m)).points
        for m, G in enumerate(local.estimates)
    ]
    data = np.concatenate(pools, axis=0)
    result = pmle.fit(data, cfg, derive(seed, "klavg-fit"))
    return result.estimate
