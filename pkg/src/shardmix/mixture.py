"""Finite Gaussian mixing distributions.

A :class:`MixingDistribution` is a discrete probability measure over
Gaussian components: weights on the simplex plus a list of Gaussians of a
common dimension.  It supports mixture log-density evaluation, seeded
sampling, and model-based classification.  Instances are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .gaussian import Gaussian
from .rng import stream

__all__ = [
    "MixingDistribution",
    "LabeledSample",
    "component_log_densities",
    "mixture_log_density_many",
    "classify_many",
]

WEIGHT_SUM_TOL = 1e-9
WEIGHT_CLAMP = 1e-12


@dataclass(frozen=True)
class LabeledSample:
    """Observation matrix with optional true component labels."""

    points: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2:
            raise ValueError("points must be an (n, d) matrix")
        object.__setattr__(self, "points", points)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int)
            if labels.shape != (points.shape[0],):
                raise ValueError("labels must have one entry per observation")
            if np.any(labels < 0):
                raise ValueError("labels must be nonnegative component indices")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


class MixingDistribution:
    """Discrete mixing distribution: simplex weights over Gaussian atoms."""

    __slots__ = ("weights", "components")

    def __init__(self, weights, components):
        components = tuple(components)
        if not components:
            raise ValueError("a mixing distribution needs at least one component")
        if not all(isinstance(g, Gaussian) for g in components):
            raise TypeError("components must be Gaussian instances")
        d = components[0].dim
        if any(g.dim != d for g in components):
            raise ValueError("all components must share one dimension")
        weights = np.array(weights, dtype=float).reshape(-1)
        if weights.shape != (len(components),):
            raise ValueError("weights and components must have equal length")
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
        if abs(float(weights.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError("weights do not sum to 1")
        # Clamp dust weights to 0 so downstream log-density code never sees
        # log of a subnormal; renormalize only when something was clamped.
        tiny = (weights > 0.0) & (weights < WEIGHT_CLAMP)
        if np.any(tiny):
            weights = np.where(tiny, 0.0, weights)
            weights = weights / weights.sum()
        weights.flags.writeable = False
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", components)

    def __setattr__(self, name, value):
        raise AttributeError("MixingDistribution is immutable")

    @property
    def order(self) -> int:
        return len(self.components)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def __repr__(self):
        return f"MixingDistribution(order={self.order}, dim={self.dim})"

    def __eq__(self, other):
        if not isinstance(other, MixingDistribution):
            return NotImplemented
        return (
            self.order == other.order
            and np.array_equal(self.weights, other.weights)
            and all(a == b for a, b in zip(self.components, other.components))
        )

    def __hash__(self):
        return hash((self.weights.tobytes(), self.components))

    def log_density(self, x) -> float:
        """Log mixture density at a single point, via log-sum-exp."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.dim},)")
        return float(mixture_log_density_many(self, x[None, :])[0])

    def classify(self, x) -> int:
        """Index of the component maximizing w_k * phi_k(x); ties go low."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.dim},)")
        return int(classify_many(self, x[None, :])[0])

    def sample(self, n: int, seed: int) -> LabeledSample:
        """Draw n labeled observations, bitwise reproducible for a seed.

        Component indices are drawn from the weights, then each point is
        mean + L z with L the component's Cholesky factor and z standard
        normal.
        """
        if n < 1:
            raise ValueError("n must be at least 1")
        rng = stream(seed, "mixture-sample")
        labels = rng.choice(self.order, size=n, p=self.weights / self.weights.sum())
        z = rng.standard_normal((n, self.dim))
        points = np.empty((n, self.dim))
        for k, g in enumerate(self.components):
            mask = labels == k
            if np.any(mask):
                points[mask] = g.mean + z[mask] @ g.chol.T
        return LabeledSample(points=points, labels=labels)

    def mean(self) -> np.ndarray:
        """Mean of the mixture distribution."""
        return self.weights @ np.stack([g.mean for g in self.components])


def component_log_densities(G: MixingDistribution, points: np.ndarray) -> np.ndarray:
    """(n, K) matrix of per-component log densities."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != G.dim:
        raise ValueError(f"points must be (n, {G.dim})")
    out = np.empty((points.shape[0], G.order))
    for k, g in enumerate(G.components):
        out[:, k] = g.log_density_many(points)
    return out


def _log_weights(G: MixingDistribution) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(G.weights)


def mixture_log_density_many(G: MixingDistribution, points: np.ndarray) -> np.ndarray:
    """Vector of log mixture densities; zero-weight components contribute nothing."""
    scores = component_log_densities(G, points) + _log_weights(G)[None, :]
    return logsumexp(scores, axis=1)


def classify_many(G: MixingDistribution, points: np.ndarray) -> np.ndarray:
    """Arg-max component of w_k * phi_k for each row; ties to smallest index."""
    scores = component_log_densities(G, points) + _log_weights(G)[None, :]
    return np.argmax(scores, axis=1)
