"""Group-relative policy optimization arithmetic over caller-supplied arrays.

Pure functions: within-group advantage normalization and the clipped
surrogate objective with a KL penalty. No gradients, no optimizer state;
the caller decides the optimization direction.
"""

from __future__ import annotations

import math
from typing import Sequence

from .errors import LengthMismatch

DEFAULT_EPSILON = 1e-8
DEFAULT_CLIP_EPSILON = 0.2


def group_advantages(rewards: Sequence[float],
                     epsilon: float = DEFAULT_EPSILON) -> list[float]:
    """Normalize a group of rollout rewards to advantages.

    A_i = (R_i - mean) / (pop_std + epsilon), with the population standard
    deviation. The epsilon keeps zero-variance groups finite (all-equal
    rewards map to exactly 0 / epsilon = 0).
    """
    if not rewards:
        raise ValueError("reward group must contain at least one rollout")
    n = len(rewards)
    mean = math.fsum(rewards) / n
    variance = math.fsum((r - mean) ** 2 for r in rewards) / n
    std = math.sqrt(variance)
    return [(r - mean) / (std + epsilon) for r in rewards]


def grpo_objective(ratios: Sequence[float], advantages: Sequence[float],
                   kl_divergence: float = 0.0,
                   clip_epsilon: float = DEFAULT_CLIP_EPSILON,
                   kl_coeff: float = 0.0) -> float:
    """Clipped surrogate value minus the KL penalty.

    mean_i min(r_i * A_i, clip(r_i, 1 - eps, 1 + eps) * A_i) - beta * D_KL.
    The KL divergence is a caller-supplied scalar (for example a mean
    per-token estimate); nothing here evaluates distributions.
    """
    if len(ratios) != len(advantages):
        raise LengthMismatch(
            f"{len(ratios)} ratios vs {len(advantages)} advantages")
    if not ratios:
        raise ValueError("objective needs at least one sample")
    if clip_epsilon <= 0:
        raise ValueError("clip_epsilon must be positive")
    lo, hi = 1.0 - clip_epsilon, 1.0 + clip_epsilon
    total = math.fsum(
        min(r * a, min(max(r, lo), hi) * a)
        for r, a in zip(ratios, advantages)
    )
    return total / len(ratios) - kl_coeff * kl_divergence
