import numpy as np
import pytest


def random_density(rng, dim, rank=None):
    """Random mixed state from a Ginibre matrix of the given rank."""
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (a + a.conj().T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def state_cache(tmp_path_factory):
    """Grid and training ground-state caches, built once per test session.

    Set ``QIS_TEST_CACHE`` to an existing cache directory to skip the rebuild.
    """
    import os
    from pathlib import Path

    from qis import experiment

    pre = os.environ.get("QIS_TEST_CACHE")
    root = Path(pre) if pre else tmp_path_factory.mktemp("qis_cache")
    cfg = experiment.ExperimentConfig(paths=experiment.Paths(cache_dir=str(root), output=str(root / "out")))
    experiment.cmd_gen_states(cfg)
    return root
