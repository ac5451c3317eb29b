import numpy as np
import pytest

from treecast import density_evolution, make_params

DENSITY_EPS = (0.10, 0.12, 0.125, 0.14, 0.20)
DENSITY_POOL = 1_000_000
DENSITY_DEPTH = 50
DENSITY_SEED = 20250810


@pytest.fixture(scope="session")
def density_runs():
    """Shared BP density-evolution runs at d=2 (pool 1e6, depth 50)."""
    return {
        eps: density_evolution(
            make_params(2, eps), DENSITY_DEPTH, DENSITY_POOL, DENSITY_SEED
        )
        for eps in DENSITY_EPS
    }


def random_full_support(rng: np.random.Generator, size: int) -> np.ndarray:
    p = rng.random(size) + 1e-3
    return p / p.sum()
