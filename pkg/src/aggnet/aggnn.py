"""The shared convolutional policy network and its exact gradients.

Every node runs the same stack of causal 1-D convolutional layers over its
length-K aggregation sequence: layer l maps F_{l-1} feature sequences to
F_l feature sequences with K_l-tap filters,

    v[f, n] = sum_g sum_k alpha[f, g, k] * y[g, n - k]   (y[.,n<0] = 0)

keeping the sequence length, applies ReLU on hidden layers, and the final
single-feature sequence is reduced to a scalar by its mean.  The batched
entry points evaluate all m nodes at once, each with its own tap tensor,
which is what asynchronous training with stale local copies needs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FilterTensor:
    """taps[l] has shape (F_l, F_{l-1}, K_l); F_0 = 1."""

    taps: list

    def __post_init__(self):
        if not self.taps:
            raise ValueError("filter tensor needs at least one layer")
        if self.taps[0].shape[1] != 1:
            raise ValueError("first layer must take a single input feature")
        for a, b in zip(self.taps, self.taps[1:]):
            if b.shape[1] != a.shape[0]:
                raise ValueError("feature counts of consecutive layers disagree")
        if self.taps[-1].shape[0] != 1:
            raise ValueError("last layer must emit a single feature")

    @property
    def n_layers(self) -> int:
        return len(self.taps)

    @property
    def n_params(self) -> int:
        return sum(a.size for a in self.taps)

    def copy(self) -> "FilterTensor":
        return FilterTensor([a.copy() for a in self.taps])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.taps])

    def from_vector(self, vec: np.ndarray) -> "FilterTensor":
        """New tensor with this one's shapes and the given flat values."""
        out, k = [], 0
        for a in self.taps:
            out.append(np.asarray(vec[k:k + a.size], dtype=float).reshape(a.shape))
            k += a.size
        if k != len(vec):
            raise ValueError("vector length does not match parameter count")
        return FilterTensor(out)


def default_layer_spec(L: int = 10, features: int = 1, taps: int = 10):
    """(features list, taps list) for the default architecture: with L=10,
    F=1, K_l=10 the parameter count is exactly 100."""
    return [1] + [features] * (L - 1) + [1], [taps] * L


def init_filters(features, taps, scale: float, seed: int,
                 nonneg: bool = False) -> FilterTensor:
    """Taps i.i.d. uniform in [-scale/sqrt(K_l), scale/sqrt(K_l)].

    ``nonneg`` draws from [0, scale/sqrt(K_l)] instead: aggregation
    sequences are elementwise nonnegative, so an all-positive start keeps
    every ReLU alive; a symmetric draw with single-feature layers almost
    surely zeroes some hidden sequence and freezes the whole network.
    """
    if len(features) != len(taps) + 1:
        raise ValueError("need one feature count per layer boundary")
    if not taps:
        raise ValueError("empty layer spec")
    if scale <= 0:
        raise ValueError("scale must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = []
    for l, kl in enumerate(taps):
        lim = scale / np.sqrt(kl)
        lo = 0.0 if nonneg else -lim
        out.append(rng.uniform(lo, lim, size=(features[l + 1], features[l], kl)))
    return FilterTensor(out)


# -- batched evaluation over all nodes ---------------------------------------

@dataclass
class LayerActivations:
    """Forward cache: per-layer inputs and pre-activations, batched over nodes."""

    inputs: list   # inputs[l]: (m, F_{l-1}, K)
    pre: list      # pre[l]:    (m, F_l, K)
    z: np.ndarray  # (m,)


def stack_filters(tensors) -> list:
    """Per-node tap tensors stacked to [(m, F_l, F_{l-1}, K_l)] per layer."""
    return [np.stack([t.taps[l] for t in tensors])
            for l in range(tensors[0].n_layers)]


def broadcast_filter(A: FilterTensor, m: int) -> list:
    """Shared-parameter view of A for m nodes (no copy)."""
    return [np.broadcast_to(a, (m,) + a.shape) for a in A.taps]


def _conv_layer(stack_l: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Causal zero-padded convolution, batched: (m,F_out,F_in,Kl) x (m,F_in,K)."""
    m, f_out, _, kl = stack_l.shape
    K = y.shape[2]
    v = np.zeros((m, f_out, K))
    for k in range(min(kl, K)):
        v[:, :, k:] += np.einsum("mfg,mgn->mfn", stack_l[:, :, :, k], y[:, :, : K - k])
    return v


def forward_nodes(stack: list, y0: np.ndarray) -> tuple:
    """Evaluate node i's network (taps stack[..][i]) on its sequence y0[i].

    y0: (m, K).  Returns (z: (m,), LayerActivations).
    """
    y0 = np.asarray(y0, dtype=float)
    y = y0[:, None, :]
    L = len(stack)
    inputs, pre = [], []
    for l, st in enumerate(stack):
        if st.shape[2] != y.shape[1]:
            raise ValueError("layer input feature count mismatch")
        inputs.append(y)
        v = _conv_layer(st, y)
        pre.append(v)
        y = np.maximum(v, 0.0) if l < L - 1 else v
    z = y[:, 0, :].mean(axis=1)
    return z, LayerActivations(inputs, pre, z)


def backward_nodes(stack: list, acts: LayerActivations, upstream: np.ndarray) -> list:
    """Per-node gradients of upstream[i] * z_i w.r.t. node i's taps.

    Returns [(m, F_l, F_{l-1}, K_l)] matching the stack's shapes.  ReLU
    subgradient at exactly 0 is taken as 0.
    """
    upstream = np.asarray(upstream, dtype=float)
    m = upstream.shape[0]
    K = acts.inputs[0].shape[2]
    if acts.pre[-1].shape[0] != m:
        raise ValueError("activations were produced for a different node count")
    L = len(stack)
    grads = [None] * L
    dv = np.zeros_like(acts.pre[-1])
    dv[:, 0, :] = upstream[:, None] / K
    for l in range(L - 1, -1, -1):
        st = stack[l]
        y_in = acts.inputs[l]
        kl = st.shape[3]
        g = np.zeros((m,) + st.shape[1:])
        dy = np.zeros_like(y_in)
        for k in range(min(kl, K)):
            g[:, :, :, k] = np.einsum("mfn,mgn->mfg", dv[:, :, k:], y_in[:, :, : K - k])
            dy[:, :, : K - k] += np.einsum("mfg,mfn->mgn", st[:, :, :, k], dv[:, :, k:])
        grads[l] = g
        if l > 0:
            dv = dy * (acts.pre[l - 1] > 0)
    return grads


# -- single-node contract ----------------------------------------------------

def forward(A: FilterTensor, y_i: np.ndarray) -> tuple:
    """Scalar output z and the activation cache for one node's sequence."""
    y_i = np.asarray(y_i, dtype=float)
    if y_i.ndim != 1 or y_i.shape[0] < 1:
        raise ValueError("aggregation sequence must be a nonempty vector")
    z, acts = forward_nodes(broadcast_filter(A, 1), y_i[None, :])
    return float(z[0]), acts


def backward(A: FilterTensor, acts: LayerActivations, upstream: float) -> FilterTensor:
    """d(upstream * z)/dA with A's shapes, as a FilterTensor container."""
    grads = backward_nodes(broadcast_filter(A, 1), acts, np.array([float(upstream)]))
    return FilterTensor([g[0] for g in grads])


# -- checkpoint format -------------------------------------------------------

def save_filter(A: FilterTensor, path) -> None:
    """Text checkpoint: feature counts, taps per layer, then one tap per line."""
    features = [A.taps[0].shape[1]] + [a.shape[0] for a in A.taps]
    taps = [a.shape[2] for a in A.taps]
    with open(path, "w") as fh:
        fh.write("features " + " ".join(map(str, features)) + "\n")
        fh.write("taps " + " ".join(map(str, taps)) + "\n")
        for a in A.taps:
            for v in a.ravel():
                fh.write(f"{v:.17g}\n")


def load_filter(path) -> FilterTensor:
    with open(path) as fh:
        head = fh.readline().split()
        if head[:1] != ["features"]:
            raise ValueError("not a filter checkpoint")
        features = [int(v) for v in head[1:]]
        taps = [int(v) for v in fh.readline().split()[1:]]
        values = np.array([float(line) for line in fh if line.strip()])
    template = FilterTensor([np.zeros((features[l + 1], features[l], taps[l]))
                             for l in range(len(taps))])
    return template.from_vector(values)
