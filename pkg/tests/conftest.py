import numpy as np
import pytest

from shardmix import Gaussian, MixingDistribution


def random_spd(rng: np.random.Generator, d: int, eig_low=0.3, eig_high=2.0) -> np.ndarray:
    basis, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eigenvalues = rng.uniform(eig_low, eig_high, size=d)
    return (basis * eigenvalues) @ basis.T


def random_gaussian(rng: np.random.Generator, d: int, spread=3.0) -> Gaussian:
    return Gaussian(rng.uniform(-spread, spread, size=d), random_spd(rng, d))


def random_mixture(rng: np.random.Generator, K: int, d: int, spread=3.0) -> MixingDistribution:
    weights = rng.dirichlet(np.full(K, 2.0))
    weights = 0.5 / K + 0.5 * weights  # keep every weight bounded away from 0
    comps = [random_gaussian(rng, d, spread) for _ in range(K)]
    return MixingDistribution(weights, comps)


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
