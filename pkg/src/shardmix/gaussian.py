"""Exact Gaussian primitives.

Log-density, Kullback-Leibler divergence, a ground distance combining mean
and covariance-square-root discrepancies, and the weighted KL barycenter.
All functions are pure and thread-safe; :class:`Gaussian` is immutable.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

__all__ = ["Gaussian", "kl_divergence", "ground_distance", "kl_barycenter"]

SYMMETRY_TOL = 1e-9
_LOG_2PI = float(np.log(2.0 * np.pi))


class Gaussian:
    """Nondegenerate multivariate normal N(mean, cov).

    The covariance must be symmetric within 1e-9 per entry and positive
    definite (certified by a successful Cholesky factorization, which is
    cached).  Arrays are stored read-only so instances can be shared
    freely across threads.
    """

    __slots__ = ("mean", "cov", "chol", "_log_det_cov")

    def __init__(self, mean, cov):
        mean = np.atleast_1d(np.array(mean, dtype=float, copy=True))
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        if mean.ndim != 1:
            raise ValueError("mean must be a vector")
        d = mean.shape[0]
        if cov.shape != (d, d):
            raise ValueError(f"cov must be {d}x{d} to match mean, got {cov.shape}")
        if not np.all(np.isfinite(mean)) or not np.all(np.isfinite(cov)):
            raise ValueError("mean and cov must be finite")
        if np.max(np.abs(cov - cov.T)) > SYMMETRY_TOL:
            raise ValueError("covariance not symmetric within 1e-9")
        # Averaging tolerates round-trip serialization noise; exact for
        # already-symmetric input.
        cov = (cov + cov.T) / 2.0
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError("covariance not positive definite") from None
        mean.flags.writeable = False
        cov.flags.writeable = False
        chol.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "chol", chol)
        # log det via the Cholesky diagonal; avoids overflow at large d.
        object.__setattr__(
            self, "_log_det_cov", 2.0 * float(np.sum(np.log(np.diag(chol))))
        )

    def __setattr__(self, name, value):
        raise AttributeError("Gaussian is immutable")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def log_det_cov(self) -> float:
        return self._log_det_cov

    def __repr__(self):
        return f"Gaussian(mean={self.mean!r}, cov={self.cov!r})"

    def __eq__(self, other):
        if not isinstance(other, Gaussian):
            return NotImplemented
        return (
            self.mean.shape == other.mean.shape
            and np.array_equal(self.mean, other.mean)
            and np.array_equal(self.cov, other.cov)
        )

    def __hash__(self):
        return hash((self.mean.tobytes(), self.cov.tobytes()))

    def log_density(self, x) -> float:
        """Log of the normal density at a single point ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != self.mean.shape:
            raise ValueError(f"point has dimension {x.shape}, expected {self.mean.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("point must be finite")
        z = solve_triangular(self.chol, x - self.mean, lower=True)
        return -0.5 * (self.dim * _LOG_2PI + self._log_det_cov + float(z @ z))

    def log_density_many(self, points: np.ndarray) -> np.ndarray:
        """Vector of log densities for the rows of an (n, d) array."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise ValueError(f"points must be (n, {self.dim})")
        z = solve_triangular(self.chol, (points - self.mean).T, lower=True)
        quad = np.einsum("ij,ij->j", z, z)
        return -0.5 * (self.dim * _LOG_2PI + self._log_det_cov + quad)

    def sqrt_cov(self) -> np.ndarray:
        """Symmetric PSD principal square root of the covariance."""
        return _sqrtm_psd(self.cov)


def _sqrtm_psd(matrix: np.ndarray) -> np.ndarray:
    # Eigenvalues clamped at 0 from below to absorb -1e-16 round-off.
    vals, vecs = np.linalg.eigh(matrix)
    if not np.all(np.isfinite(vals)) or not np.all(np.isfinite(vecs)):
        raise ValueError("eigendecomposition produced non-finite entries")
    root = np.sqrt(np.clip(vals, 0.0, None))
    return (vecs * root) @ vecs.T


def _check_same_dim(p: Gaussian, q: Gaussian):
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")


def kl_divergence(p: Gaussian, q: Gaussian) -> float:
    """KL(p || q) between two Gaussians, in nats.

    Computed from Cholesky factors without forming explicit inverses::

        0.5 * (tr(Sq^-1 Sp) + (mq-mp)' Sq^-1 (mq-mp) - d
               + log det Sq - log det Sp)

    Always nonnegative; zero iff the parameters coincide.
    """
    _check_same_dim(p, q)
    a = solve_triangular(q.chol, p.chol, lower=True)
    trace_term = float(np.sum(a * a))
    u = solve_triangular(q.chol, q.mean - p.mean, lower=True)
    quad = float(u @ u)
    value = 0.5 * (trace_term + quad - p.dim + q.log_det_cov - p.log_det_cov)
    return max(value, 0.0)


def ground_distance(p: Gaussian, q: Gaussian) -> float:
    """Distance |m_p - m_q|_2 + |Sp^(1/2) - Sq^(1/2)|_F between Gaussians.

    A true metric on Gaussian parameters (symmetric, triangle inequality);
    used as the ground cost for the transportation distance between
    mixing distributions.
    """
    _check_same_dim(p, q)
    mean_part = float(np.linalg.norm(p.mean - q.mean))
    cov_part = float(np.linalg.norm(p.sqrt_cov() - q.sqrt_cov(), ord="fro"))
    return mean_part + cov_part


def kl_barycenter(gaussians, lambdas) -> Gaussian:
    """Gaussian minimizing sum_m lambda_m * KL(nu_m || eta) over Gaussians eta.

    The minimizer is analytic: the mean is the weighted average of the
    means and the covariance is the weighted average of the covariances
    plus the between-mean scatter.
    """
    gaussians = list(gaussians)
    if not gaussians:
        raise ValueError("kl_barycenter needs at least one Gaussian")
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.shape != (len(gaussians),):
        raise ValueError("lambdas must match the number of Gaussians")
    if np.any(lambdas < 0.0):
        raise ValueError("lambdas must be nonnegative")
    if abs(float(lambdas.sum()) - 1.0) > 1e-12:
        raise ValueError("lambdas must sum to 1 within 1e-12")
    d = gaussians[0].dim
    if any(g.dim != d for g in gaussians):
        raise ValueError("all Gaussians must share one dimension")
    means = np.stack([g.mean for g in gaussians])
    mean_bar = lambdas @ means
    cov_bar = np.zeros((d, d))
    for lam, g in zip(lambdas, gaussians):
        diff = g.mean - mean_bar
        cov_bar += lam * (g.cov + np.outer(diff, diff))
    return Gaussian(mean_bar, cov_bar)
