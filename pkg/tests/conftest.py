import numpy as np
import pytest

from opeval.core import FiniteInstance


def random_stochastic(rng, rows, cols, floor=0.02):
    """Row-stochastic matrix with entries bounded away from zero."""
    m = rng.uniform(floor, 1.0, size=(rows, cols))
    return m / m.sum(axis=1, keepdims=True)


def random_sparse_target(rng, logging):
    """Row-stochastic target with random zero entries (absolute continuity
    holds because the logging matrix is strictly positive)."""
    rows, cols = logging.shape
    m = rng.uniform(0.0, 1.0, size=(rows, cols))
    kill = rng.random((rows, cols)) < 0.3
    m[kill] = 0.0
    for i in range(rows):
        if m[i].sum() == 0.0:
            m[i, rng.integers(cols)] = 1.0
    return m / m.sum(axis=1, keepdims=True)


def random_instance(rng, num_contexts=None, num_actions=None, noise=0.5):
    m = int(rng.integers(2, 7)) if num_contexts is None else num_contexts
    k = int(rng.integers(2, 6)) if num_actions is None else num_actions
    lam = rng.uniform(0.1, 1.0, m)
    lam /= lam.sum()
    logging = random_stochastic(rng, m, k)
    target = random_sparse_target(rng, logging)
    return FiniteInstance(
        context_probs=lam,
        logging=logging,
        target=target,
        mean_reward=rng.uniform(0.0, 1.0, (m, k)),
        noise_sd=rng.uniform(0.0, noise, (m, k)),
        reward_cap=np.ones((m, k)),
    )


def random_log(rng, instance=None, n=None):
    inst = random_instance(rng) if instance is None else instance
    size = int(rng.integers(5, 40)) if n is None else n
    return inst, inst.sample_log(size, seed=int(rng.integers(2**63)))


@pytest.fixture
def rng():
    return np.random.default_rng(20_240_817)
