"""Randomized binary power policy on top of the network's scalar outputs.

Each node transmits at level p0 with probability sigmoid(z_i),
independently across nodes, so the joint policy factorizes and the
log-likelihood derivative w.r.t. z_i is the Bernoulli score
(1 - pi_i) on a transmit draw and -pi_i otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Z_CLAMP = 30.0  # keeps probabilities strictly inside (0, 1)


@dataclass
class PolicySample:
    probs: np.ndarray    # (m,) transmit probabilities
    actions: np.ndarray  # (m,) in {0, p0}
    p0: float
    score: np.ndarray    # (m,) d(log psi_i)/dz_i


def transmit_probs(z: np.ndarray, pi_min: float = 0.0) -> np.ndarray:
    """Sigmoid probabilities, optionally clipped to [pi_min, 1 - pi_min].

    The exploration floor keeps the score-function estimator responsive: a
    fully saturated sigmoid yields zero score on every draw, freezing the
    policy at all-on or all-off for good.
    """
    if not 0.0 <= pi_min < 0.5:
        raise ValueError("pi_min must lie in [0, 0.5)")
    z = np.clip(np.asarray(z, dtype=float), -Z_CLAMP, Z_CLAMP)
    probs = 1.0 / (1.0 + np.exp(-z))
    if pi_min > 0.0:
        probs = np.clip(probs, pi_min, 1.0 - pi_min)
    return probs


def sample(z: np.ndarray, p0: float, rng: np.random.Generator,
           pi_min: float = 0.0) -> PolicySample:
    if p0 <= 0:
        raise ValueError("p0 must be positive")
    probs = transmit_probs(z, pi_min)
    on = rng.random(probs.shape) < probs
    actions = np.where(on, p0, 0.0)
    score = np.where(on, 1.0 - probs, -probs)
    return PolicySample(probs, actions, float(p0), score)


def threshold(z: np.ndarray, p0: float) -> np.ndarray:
    """Deterministic evaluation-mode actions: p0 where sigmoid(z) >= 1/2."""
    return np.where(transmit_probs(z) >= 0.5, p0, 0.0)


def log_prob_grad_chain(sample: PolicySample, dz_dA: list) -> tuple:
    """Chain the Bernoulli scores through per-node output gradients.

    dz_dA: per-layer arrays (m, ...) holding dz_i/dA for each node i.
    Returns (total, per_node) where total[l] = sum_i score_i * dz_dA[l][i]
    and per_node keeps the unsummed (m, ...) terms for per-node weighting.
    """
    m = sample.score.shape[0]
    if any(g.shape[0] != m for g in dz_dA):
        raise ValueError("gradient batch size does not match sample")
    per_node = [g * sample.score.reshape((m,) + (1,) * (g.ndim - 1)) for g in dz_dA]
    total = [g.sum(axis=0) for g in per_node]
    return total, per_node
