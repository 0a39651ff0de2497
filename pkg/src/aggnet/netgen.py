"""Network geometry and the correlated channel / node-state processes.

Topologies pair each transmitter i with a receiver r(i); the static
pathloss matrix holds ||tx_i - rx_{r(j)}||^-gamma so that entry (i, j) is
the large-scale gain between transmitter i and the receiver serving
transmitter j.  On top of that, a Gauss-Markov complex fading process

    h(t+1) = sqrt(1 - delta) * h(t) + sqrt(delta) * w(t+1)

drives the time-varying gain matrix |h_ij(t)| = pathloss_ij * |fading_ij(t)|.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_GAMMA = 2.2


@dataclass
class NetworkTopology:
    tx_pos: np.ndarray       # (m, 2)
    rx_pos: np.ndarray       # (n, 2)
    pairing: np.ndarray      # (m,) transmitter i -> receiver r(i)
    gamma: float
    pathloss: np.ndarray     # (m, m)
    seed: int | None = None

    @property
    def m(self) -> int:
        return self.tx_pos.shape[0]

    @property
    def n(self) -> int:
        return self.rx_pos.shape[0]

    def to_json(self) -> str:
        doc = {
            "tx_pos": self.tx_pos.tolist(),
            "rx_pos": self.rx_pos.tolist(),
            "pairing": self.pairing.tolist(),
            "gamma": self.gamma,
            "seed": self.seed,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "NetworkTopology":
        doc = json.loads(text)
        return from_positions(
            np.asarray(doc["tx_pos"], dtype=float),
            np.asarray(doc["rx_pos"], dtype=float),
            np.asarray(doc["pairing"], dtype=int),
            doc["gamma"],
            seed=doc.get("seed"),
        )


def pathloss_matrix(tx_pos: np.ndarray, rx_pos: np.ndarray, pairing: np.ndarray,
                    gamma: float) -> np.ndarray:
    """||tx_i - rx_{r(j)}||^-gamma for every transmitter/receiver-of-j pair."""
    rx_of = rx_pos[pairing]                        # (m, 2): receiver serving column j
    diff = tx_pos[:, None, :] - rx_of[None, :, :]  # (m, m, 2)
    dist = np.hypot(diff[..., 0], diff[..., 1])
    if np.any(dist == 0.0):
        raise ValueError("coincident transmitter/receiver positions")
    return dist ** (-gamma)


def from_positions(tx_pos: np.ndarray, rx_pos: np.ndarray, pairing: np.ndarray,
                   gamma: float = DEFAULT_GAMMA, seed: int | None = None) -> NetworkTopology:
    """Build a topology from explicit coordinates (fixed layouts, reloads)."""
    tx_pos = np.asarray(tx_pos, dtype=float)
    rx_pos = np.asarray(rx_pos, dtype=float)
    pairing = np.asarray(pairing, dtype=int)
    if tx_pos.shape[0] != pairing.shape[0]:
        raise ValueError("pairing must cover every transmitter")
    pl = pathloss_matrix(tx_pos, rx_pos, pairing, gamma)
    return NetworkTopology(tx_pos, rx_pos, pairing, float(gamma), pl, seed)


def generate_adhoc(m: int, gamma: float = DEFAULT_GAMMA, seed: int = 0,
                   area: float | None = None,
                   rx_halfwidth: float | None = None) -> NetworkTopology:
    """Drop m tx/rx pairs: tx uniform in [-area, area]^2, rx in a box around its tx.

    ``area`` defaults to m; ``rx_halfwidth`` defaults to m/4.  Scaled-density
    transference uses area = sqrt(m * m') while keeping rx_halfwidth at the
    training m/4.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if area is None:
        area = float(m)
    if rx_halfwidth is None:
        rx_halfwidth = m / 4.0
    rng = np.random.default_rng(seed)
    tx = rng.uniform(-area, area, size=(m, 2))
    rx = tx + rng.uniform(-rx_halfwidth, rx_halfwidth, size=(m, 2))
    # resample any receiver landing exactly on a transmitter (pathloss diverges)
    while True:
        d = np.hypot(*(tx[:, None, :] - rx[None, :, :]).transpose(2, 0, 1))
        bad = np.unique(np.nonzero(d == 0.0)[1])
        if bad.size == 0:
            break
        rx[bad] = tx[bad] + rng.uniform(-rx_halfwidth, rx_halfwidth, size=(bad.size, 2))
    pairing = np.arange(m)
    return from_positions(tx, rx, pairing, gamma, seed=seed)


def generate_cellular(n_bs: int, m_users: int, gamma: float = DEFAULT_GAMMA,
                      seed: int = 0) -> NetworkTopology:
    """Base stations on a regular grid, users uniform in the area, even split.

    Users are assigned greedily (in index order) to their nearest base
    station that still has quota; quotas split m_users evenly with the
    remainder going to the lowest-index cells.
    """
    if n_bs < 1:
        raise ValueError("n_bs must be >= 1")
    if m_users < n_bs:
        raise ValueError("need at least one user per base station")
    area = float(m_users)
    side = math.ceil(math.sqrt(n_bs))
    coords = np.linspace(-area, area, side + 2)[1:-1]
    grid = np.array([(x, y) for y in coords for x in coords])[:n_bs]
    rng = np.random.default_rng(seed)
    users = rng.uniform(-area, area, size=(m_users, 2))
    base, rem = divmod(m_users, n_bs)
    quota = np.full(n_bs, base)
    quota[:rem] += 1
    pairing = np.empty(m_users, dtype=int)
    for i in range(m_users):
        order = np.argsort(np.hypot(*(grid - users[i]).T))
        for c in order:
            if quota[c] > 0:
                quota[c] -= 1
                pairing[i] = c
                break
    while True:
        d = np.hypot(*(users[:, None, :] - grid[None, pairing, :]).transpose(2, 0, 1))
        bad = np.unique(np.nonzero(d == 0.0)[0])
        if bad.size == 0:
            break
        users[bad] = rng.uniform(-area, area, size=(bad.size, 2))
    return from_positions(users, grid, pairing, gamma, seed=seed)


@dataclass
class ChannelProcess:
    """Gauss-Markov Rayleigh fading on top of a static pathloss matrix."""

    pathloss: np.ndarray
    delta: float
    sigma: float
    rng: np.random.Generator
    fading_re: np.ndarray = field(default=None)
    fading_im: np.ndarray = field(default=None)

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        shape = self.pathloss.shape
        if self.fading_re is None:
            self.fading_re = self.rng.normal(0.0, self.sigma, size=shape)
        if self.fading_im is None:
            self.fading_im = self.rng.normal(0.0, self.sigma, size=shape)

    @property
    def gain(self) -> np.ndarray:
        """|h_ij| = pathloss_ij * |fading_ij| (magnitudes; squares live in rewards)."""
        return self.pathloss * np.hypot(self.fading_re, self.fading_im)


def step_fading(cp: ChannelProcess) -> ChannelProcess:
    """Advance the fading one step; innovations are drawn in one vectorized
    call so the draw order is fixed regardless of downstream parallelism."""
    keep = math.sqrt(1.0 - cp.delta)
    mix = math.sqrt(cp.delta)
    shape = cp.pathloss.shape
    w_re = cp.rng.normal(0.0, cp.sigma, size=shape)
    w_im = cp.rng.normal(0.0, cp.sigma, size=shape)
    cp.fading_re = keep * cp.fading_re + mix * w_re
    cp.fading_im = keep * cp.fading_im + mix * w_im
    return cp


MODE_CONSTANT = "constant-one"
MODE_DEMAND = "demand-poisson"


@dataclass
class NodeStateProcess:
    m: int
    mode: str = MODE_CONSTANT
    demand_rate: float = 0.0
    rng: np.random.Generator | None = None
    x: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.mode not in (MODE_CONSTANT, MODE_DEMAND):
            raise ValueError(f"unknown node-state mode {self.mode!r}")
        if self.mode == MODE_DEMAND and self.demand_rate < 0:
            raise ValueError("demand_rate must be nonnegative")
        if self.x is None:
            self.x = np.ones(self.m)


def step_node_state(ns: NodeStateProcess) -> NodeStateProcess:
    if ns.mode == MODE_CONSTANT:
        ns.x = np.ones(ns.m)
    else:
        ns.x = ns.rng.poisson(ns.demand_rate, size=ns.m).astype(float)
    return ns
