"""Reward, utility and constraint functions for the power-control examples.

Rates use the Shannon formula with natural log, unit noise floor by
default, and squared channel magnitudes; interference is summed over the
same thresholded neighborhood the policies observe.
"""

from __future__ import annotations

import numpy as np


def sumrate(p: np.ndarray, gain: np.ndarray, eta0: float = 0.0,
            noise: float = 1.0, thresholded: bool = True) -> np.ndarray:
    """Per-link capacities log(1 + g_ii^2 p_i / (noise + sum_j g_ij^2 p_j)).

    ``thresholded`` restricts the interference sum to entries with
    gain >= eta0; disable it to quantify the modeling gap.
    """
    p = np.asarray(p, dtype=float)
    g2 = gain * gain
    if thresholded:
        g2 = np.where(gain >= eta0, g2, 0.0)
    direct = np.diag(gain) ** 2 * p
    interference = g2 @ p - np.diag(g2) * p
    return np.log1p(direct / (noise + interference))


def demand_reward(p: np.ndarray, gain: np.ndarray, x: np.ndarray,
                  eta0: float = 0.0, noise: float = 1.0) -> np.ndarray:
    """Capacity minus the node's own demand."""
    return sumrate(p, gain, eta0, noise) - np.asarray(x, dtype=float)


def utility_u0(r: np.ndarray) -> float:
    """Sum utility (permutation invariant)."""
    return float(np.sum(r))


def power_slack(p: np.ndarray, P_max: float) -> float:
    """Instantaneous budget slack P_max - total power; its expectation is
    the constraint."""
    return float(P_max - np.sum(p))
