"""Fixed finite bandit instances shipped for verification and demos.

These are small, fully specified problems whose exact risks and bounds can
be computed by summation; the test suite and the `theory-check` command
compare those closed forms against Monte-Carlo simulation on the same
instances.
"""

from __future__ import annotations

import numpy as np

from .core import FiniteInstance


def instance_5x3() -> FiniteInstance:
    """Five contexts, three actions, moderate weights (max rho 3.5)."""
    return FiniteInstance(
        context_probs=np.array([0.30, 0.25, 0.20, 0.15, 0.10]),
        logging=np.array(
            [
                [0.50, 0.30, 0.20],
                [0.20, 0.50, 0.30],
                [0.30, 0.20, 0.50],
                [0.40, 0.40, 0.20],
                [0.25, 0.25, 0.50],
            ]
        ),
        target=np.array(
            [
                [0.10, 0.60, 0.30],
                [0.70, 0.10, 0.20],
                [0.20, 0.70, 0.10],
                [0.10, 0.20, 0.70],
                [0.60, 0.30, 0.10],
            ]
        ),
        mean_reward=np.array(
            [
                [0.80, 0.20, 0.50],
                [0.10, 0.90, 0.40],
                [0.60, 0.30, 0.70],
                [0.50, 0.50, 0.20],
                [0.30, 0.80, 0.60],
            ]
        ),
        noise_sd=np.array(
            [
                [0.30, 0.50, 0.20],
                [0.40, 0.30, 0.50],
                [0.20, 0.40, 0.30],
                [0.50, 0.20, 0.40],
                [0.30, 0.30, 0.20],
            ]
        ),
        reward_cap=np.ones((5, 3)),
    )


def biased_model_5x3() -> np.ndarray:
    """A deliberately imperfect tabular reward model for instance_5x3."""
    inst = instance_5x3()
    bump = np.array(
        [
            [+0.15, -0.10, +0.20],
            [-0.05, -0.30, +0.25],
            [+0.30, +0.10, -0.20],
            [-0.20, +0.25, +0.10],
            [+0.10, -0.15, +0.30],
        ]
    )
    return np.clip(inst.mean_reward + bump, 0.0, 1.0)


def instance_4x3() -> FiniteInstance:
    """Four contexts, three actions, heavy weights (max rho 16)."""
    return FiniteInstance(
        context_probs=np.array([0.35, 0.30, 0.20, 0.15]),
        logging=np.array(
            [
                [0.70, 0.25, 0.05],
                [0.10, 0.80, 0.10],
                [0.05, 0.15, 0.80],
                [0.30, 0.40, 0.30],
            ]
        ),
        target=np.array(
            [
                [0.05, 0.15, 0.80],
                [0.60, 0.20, 0.20],
                [0.80, 0.15, 0.05],
                [0.20, 0.20, 0.60],
            ]
        ),
        mean_reward=np.array(
            [
                [0.70, 0.40, 0.90],
                [0.20, 0.60, 0.30],
                [0.80, 0.50, 0.10],
                [0.40, 0.30, 0.60],
            ]
        ),
        noise_sd=np.array(
            [
                [0.30, 0.20, 0.40],
                [0.50, 0.30, 0.20],
                [0.20, 0.40, 0.30],
                [0.40, 0.50, 0.20],
            ]
        ),
        reward_cap=np.ones((4, 3)),
    )


def model_4x3() -> np.ndarray:
    """Tabular reward model for instance_4x3, off by a known bias."""
    inst = instance_4x3()
    bump = np.array(
        [
            [-0.20, +0.15, -0.25],
            [+0.30, -0.10, +0.20],
            [-0.15, +0.25, +0.30],
            [+0.20, -0.20, -0.10],
        ]
    )
    return np.clip(inst.mean_reward + bump, 0.0, 1.0)


def instance_2x2_moments() -> FiniteInstance:
    """Two contexts, two actions, rho * sigma table ((2, 0), (1, 1))."""
    return FiniteInstance(
        context_probs=np.array([0.5, 0.5]),
        logging=np.array([[0.5, 0.5], [0.5, 0.5]]),
        target=np.array([[1.0, 0.0], [0.5, 0.5]]),
        mean_reward=np.full((2, 2), 0.5),
        noise_sd=np.ones((2, 2)),
        reward_cap=np.ones((2, 2)),
    )


def instance_uniform_noiseless(num_contexts: int, reward_cap: float = 1.0) -> FiniteInstance:
    """Single action, uniform contexts, zero noise, zero mean reward.

    With many contexts every joint mass is tiny, which is the regime where
    the cap-driven part of the minimax floor is non-trivial.
    """
    m = int(num_contexts)
    shape = (m, 1)
    return FiniteInstance(
        context_probs=np.full(m, 1.0 / m),
        logging=np.ones(shape),
        target=np.ones(shape),
        mean_reward=np.zeros(shape),
        noise_sd=np.zeros(shape),
        reward_cap=np.full(shape, float(reward_cap)),
    )
