"""Forward/backward tests for the shared convolutional policy network."""

import numpy as np
import pytest

from aggnet import aggnn


def naive_forward(A, y):
    """Independent direct-summation oracle for the layer recursion."""
    seq = [np.asarray(y, dtype=float)]
    K = len(y)
    L = A.n_layers
    for l, taps in enumerate(A.taps):
        f_out, f_in, kl = taps.shape
        out = []
        for f in range(f_out):
            v = np.zeros(K)
            for n in range(K):
                for g in range(f_in):
                    for k in range(kl):
                        if n - k >= 0:
                            v[n] += taps[f, g, k] * seq[g][n - k]
            out.append(v)
        if l < L - 1:
            out = [np.maximum(v, 0.0) for v in out]
        seq = out
    return seq[0].mean()


def random_filter(rng, features, taps):
    return aggnn.FilterTensor(
        [rng.normal(size=(features[l + 1], features[l], taps[l]))
         for l in range(len(taps))])


def test_zero_taps_give_zero_output():
    A = aggnn.FilterTensor([np.zeros((1, 1, 3)), np.zeros((1, 1, 3))])
    z, _ = aggnn.forward(A, np.array([1.0, -2.0, 3.0]))
    assert z == 0.0


def test_identity_filter_mean_readout():
    A = aggnn.FilterTensor([np.array([[[1.0]]])])
    z, _ = aggnn.forward(A, np.array([3.0, -1.0, 2.0]))
    assert z == pytest.approx(4.0 / 3.0)


def test_forward_matches_naive_oracle():
    rng = np.random.default_rng(0)
    for _ in range(5):
        A = random_filter(rng, [1, 2, 2, 1], [4, 4, 4])
        y = rng.normal(size=10)
        z, _ = aggnn.forward(A, y)
        assert z == pytest.approx(naive_forward(A, y), abs=1e-12)


def test_forward_feature_mismatch_error():
    A = aggnn.FilterTensor([np.zeros((2, 1, 3)), np.zeros((1, 2, 3))])
    bad_stack = [np.zeros((1, 2, 2, 3))]  # expects 2 input features
    with pytest.raises(ValueError):
        aggnn.forward_nodes(bad_stack, np.zeros((1, 4)))


def test_backward_zero_upstream():
    rng = np.random.default_rng(1)
    A = random_filter(rng, [1, 1, 1], [3, 3])
    _, acts = aggnn.forward(A, rng.normal(size=5))
    g = aggnn.backward(A, acts, 0.0)
    assert all(np.all(t == 0.0) for t in g.taps)


def test_backward_linear_single_layer():
    # L=1: z = mean_n sum_k alpha_k y[n-k], so dz/dalpha_k = mean_n y[n-k]
    rng = np.random.default_rng(2)
    y = rng.normal(size=6)
    A = aggnn.FilterTensor([rng.normal(size=(1, 1, 3))])
    _, acts = aggnn.forward(A, y)
    g = aggnn.backward(A, acts, 1.0)
    K = len(y)
    for k in range(3):
        shifted = np.zeros(K)
        shifted[k:] = y[: K - k]
        assert g.taps[0][0, 0, k] == pytest.approx(shifted.mean(), rel=1e-12)


def fd_gradient(A, y, h=1e-5):
    vec = A.to_vector()
    out = np.zeros_like(vec)
    for i in range(len(vec)):
        up, dn = vec.copy(), vec.copy()
        up[i] += h
        dn[i] -= h
        zu, _ = aggnn.forward(A.from_vector(up), y)
        zd, _ = aggnn.forward(A.from_vector(dn), y)
        out[i] = (zu - zd) / (2 * h)
    return out


def test_backward_matches_finite_differences():
    rng = np.random.default_rng(3)
    worst = 0.0
    for trial in range(20):
        A = random_filter(rng, [1, 2, 1], [3, 2])
        y = rng.normal(size=5) + 0.1  # keep ReLUs off their kinks
        _, acts = aggnn.forward(A, y)
        g = aggnn.backward(A, acts, 1.0).to_vector()
        fd = fd_gradient(A, y)
        denom = max(np.linalg.norm(fd), 1e-8)
        worst = max(worst, np.linalg.norm(g - fd) / denom)
    assert worst <= 1e-4


def test_batched_matches_single_node():
    rng = np.random.default_rng(4)
    m, K = 6, 5
    tensors = [random_filter(rng, [1, 1, 1], [3, 3]) for _ in range(m)]
    y0 = rng.normal(size=(m, K))
    z, acts = aggnn.forward_nodes(aggnn.stack_filters(tensors), y0)
    grads = aggnn.backward_nodes(aggnn.stack_filters(tensors), acts, np.ones(m))
    for i in range(m):
        zi, acts_i = aggnn.forward(tensors[i], y0[i])
        assert z[i] == pytest.approx(zi, abs=1e-12)
        gi = aggnn.backward(tensors[i], acts_i, 1.0)
        for l in range(2):
            np.testing.assert_allclose(grads[l][i], gi.taps[l], atol=1e-12)


def test_default_spec_has_100_parameters():
    features, taps = aggnn.default_layer_spec()
    A = aggnn.init_filters(features, taps, 2.0, seed=0)
    assert A.n_params == 100
    assert A.n_layers == 10


def test_init_scale_bounds_and_determinism():
    features, taps = aggnn.default_layer_spec(3, 1, 4)
    a = aggnn.init_filters(features, taps, 0.5, seed=7)
    b = aggnn.init_filters(features, taps, 0.5, seed=7)
    assert np.array_equal(a.to_vector(), b.to_vector())
    assert np.all(np.abs(a.to_vector()) <= 0.5 / np.sqrt(4))
    c = aggnn.init_filters(features, taps, 0.5, seed=7, nonneg=True)
    assert np.all(c.to_vector() >= 0.0)


def test_init_rejects_bad_spec():
    with pytest.raises(ValueError):
        aggnn.init_filters([1], [], 1.0, seed=0)
    with pytest.raises(ValueError):
        aggnn.init_filters([1, 1], [3], 0.0, seed=0)


def test_filter_tensor_structure_validation():
    with pytest.raises(ValueError):
        aggnn.FilterTensor([np.zeros((1, 2, 3))])  # F_0 != 1
    with pytest.raises(ValueError):
        aggnn.FilterTensor([np.zeros((2, 1, 3)), np.zeros((1, 3, 3))])
    with pytest.raises(ValueError):
        aggnn.FilterTensor([np.zeros((1, 1, 3)), np.zeros((2, 1, 3))])


def test_vector_roundtrip():
    rng = np.random.default_rng(5)
    A = random_filter(rng, [1, 2, 1], [3, 4])
    vec = A.to_vector()
    B = A.from_vector(vec)
    assert np.array_equal(B.to_vector(), vec)
    with pytest.raises(ValueError):
        A.from_vector(vec[:-1])


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    A = random_filter(rng, [1, 2, 2, 1], [4, 3, 2])
    path = tmp_path / "filter.txt"
    aggnn.save_filter(A, path)
    B = aggnn.load_filter(path)
    assert np.array_equal(A.to_vector(), B.to_vector())
    assert [t.shape for t in A.taps] == [t.shape for t in B.taps]
