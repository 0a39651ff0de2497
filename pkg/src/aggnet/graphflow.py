"""Graph shift operator construction and delayed multi-hop aggregation.

The gain matrix is sparsified into a shift operator by a channel threshold
and by zeroing the columns of currently inactive transmitters.  Each node i
keeps a K-entry aggregation sequence

    y_i(t) = [x_i(t); [Hs(t) y^(0)(t-1)]_i; ...; [Hs(t) y^(K-2)(t-1)]_i]

so that entry k unrolls to the i-th entry of the product of the last k
shift operators applied to x(t-k).  One exchange per time step suffices:
advancing reads only the previous step's sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MODE_SYNC = "synchronous"
MODE_ASYNC = "asynchronous"


@dataclass
class GraphShift:
    h_tilde: np.ndarray
    eta0: float


def sparsify(gain: np.ndarray, eta0: float, active: np.ndarray) -> GraphShift:
    """Keep entry (i, j) iff gain_ij >= eta0 and transmitter j is active."""
    if eta0 < 0:
        raise ValueError("eta0 must be nonnegative")
    active = np.asarray(active, dtype=bool)
    h = np.where((gain >= eta0) & active[None, :], gain, 0.0)
    return GraphShift(h, float(eta0))


def shift(gs: GraphShift, signal: np.ndarray) -> np.ndarray:
    """One hop of weighted aggregation: returns Hs @ signal."""
    signal = np.asarray(signal, dtype=float)
    if signal.shape[0] != gs.h_tilde.shape[1]:
        raise ValueError("signal length does not match shift operator")
    return gs.h_tilde @ signal


@dataclass
class AggregationState:
    y: np.ndarray  # (m, K); column k = k-hop delayed aggregate

    @classmethod
    def cold(cls, m: int, K: int) -> "AggregationState":
        if K < 1:
            raise ValueError("K must be >= 1")
        return cls(np.zeros((m, K)))

    @property
    def K(self) -> int:
        return self.y.shape[1]


def advance_aggregation(st: AggregationState, gs: GraphShift,
                        x_now: np.ndarray) -> AggregationState:
    """One time step: all nodes receive; inactive transmitters contribute
    nothing because their columns of the shift operator are already zero."""
    x_now = np.asarray(x_now, dtype=float)
    m, K = st.y.shape
    new = np.empty_like(st.y)
    new[:, 0] = x_now
    if K > 1:
        new[:, 1:] = gs.h_tilde @ st.y[:, : K - 1]
    return AggregationState(new)


@dataclass
class ActivationSchedule:
    mode: str = MODE_SYNC
    subsets: list = field(default_factory=list)  # boolean masks, async mode
    rng: np.random.Generator | None = None

    def __post_init__(self):
        if self.mode not in (MODE_SYNC, MODE_ASYNC):
            raise ValueError(f"unknown activation mode {self.mode!r}")


def make_poisson_subsets(m: int, lam: float, n_subsets: int,
                         rng: np.random.Generator) -> list:
    """Pre-generate candidate active sets; |A_i| ~ Poisson(lam) clamped to [1, m]."""
    subsets = []
    for _ in range(n_subsets):
        size = int(np.clip(rng.poisson(lam), 1, m))
        members = rng.choice(m, size=size, replace=False)
        mask = np.zeros(m, dtype=bool)
        mask[members] = True
        subsets.append(mask)
    return subsets


def sample_activation(sched: ActivationSchedule, m: int) -> np.ndarray:
    """Boolean mask of active nodes for the current step."""
    if sched.mode == MODE_SYNC:
        return np.ones(m, dtype=bool)
    if not sched.subsets:
        raise ValueError("asynchronous schedule needs a nonempty subset list")
    idx = sched.rng.integers(len(sched.subsets))
    return sched.subsets[idx]


def dump_aggregation_csv(path, snapshots) -> None:
    """Debug dump: rows (t, node, k, value) for a list of AggregationState."""
    with open(path, "w") as fh:
        fh.write("t,node,k,value\n")
        for t, st in enumerate(snapshots):
            m, K = st.y.shape
            for i in range(m):
                for k in range(K):
                    fh.write(f"{t},{i},{k},{st.y[i, k]!r}\n")
