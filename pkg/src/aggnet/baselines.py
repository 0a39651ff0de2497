"""Model-based and naive power allocation baselines."""

from __future__ import annotations

import warnings

import numpy as np


def wmmse(gain: np.ndarray, p_cap: float, iters: int, noise: float = 1.0) -> np.ndarray:
    """Block-coordinate weighted-MMSE power control with per-node cap p_cap.

    Amplitude variables start at sqrt(p_cap); each iteration updates the
    receive scalars u, the MSE weights w and the clamped amplitudes v, and
    the returned powers are v^2.
    """
    if iters < 0:
        raise ValueError("iters must be nonnegative")
    g = np.asarray(gain, dtype=float)
    g2 = g * g
    d = np.diag(g)
    m = g.shape[0]
    cap = np.sqrt(p_cap)
    v = np.full(m, cap)
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(iters):
            u = d * v / (noise + g2 @ (v * v))
            w = 1.0 / (1.0 - u * d * v)
            v = np.clip(w * u * d / (g2.T @ (u * u * w)), 0.0, cap)
    if not np.all(np.isfinite(v)):
        warnings.warn("wmmse hit a degenerate division; returning zero powers")
        return np.zeros(m)
    return v * v


def equal_power(m: int, P_max: float) -> np.ndarray:
    """P_max / m to every transmitter."""
    return np.full(m, P_max / m)


def random_power(m: int, P_max: float, p0: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Full power p0 with probability P_max / (p0 m), independently."""
    prob = P_max / (p0 * m)
    if prob > 1.0:
        raise ValueError("P_max exceeds m * p0")
    return np.where(rng.random(m) < prob, p0, 0.0)
