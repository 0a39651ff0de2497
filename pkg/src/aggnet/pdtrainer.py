"""Model-free primal-dual training of the filter tensor.

Alternates gradient ascent on the primal variables (running reward
estimate r, filter tensor A) with projected gradient descent on the dual
variables (per-node lambda, scalar budget multiplier mu_p).  The A-update
uses the score-function estimator: one stochastic rollout per iteration,
with the filter gradient weighted by the observed Lagrangian signal

    s = lambda . f_obs + mu_p * (P_max - total power).

Asynchrony is honored through per-node local copies A_i that resync to the
central A only while the node is active.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import aggnn, baselines, graphflow, netgen, policy, rewards
from .config import ExperimentConfig
from .seeds import stream_rng


class TrainerDivergence(RuntimeError):
    pass


@dataclass
class TrainerState:
    A: aggnn.FilterTensor
    A_local: list                      # m per-node copies
    r: np.ndarray                      # (m,) running reward estimate
    lam: np.ndarray                    # (m,) >= 0
    mu_p: float = 0.0                  # >= 0
    tau: int = 0
    ema_baseline: float = 0.0
    ema_var: float = 1.0
    ema_weight: float = 0.0
    init_norms: list | None = None     # per-layer tap norms at initialization

    @classmethod
    def fresh(cls, A: aggnn.FilterTensor, m: int) -> "TrainerState":
        return cls(A=A, A_local=[A.copy() for _ in range(m)],
                   r=np.zeros(m), lam=np.ones(m))


def lagrangian(state: TrainerState, f_obs: np.ndarray, slack_obs: float) -> float:
    """Stochastic Lagrangian value at the current primal/dual variables."""
    return (rewards.utility_u0(state.r)
            + float(state.lam @ (f_obs - state.r))
            + state.mu_p * slack_obs)


def primal_step_r(state: TrainerState, eps: float) -> TrainerState:
    """r ascends on grad_r L = 1 - lambda (sum utility; budget has no r term)."""
    state.r = state.r + eps * (1.0 - state.lam)
    return state


def dual_step(state: TrainerState, f_obs: np.ndarray, slack_obs: float,
              eps: float, mu_cap: float = np.inf) -> TrainerState:
    """Projected descent: lambda and mu_p stay nonnegative.

    mu_p is additionally clipped at mu_cap: the budget multiplier is an
    integrator driven by the noisy per-step slack, and without an
    anti-windup bound a long stretch of violation can push it far past
    the marginal-rate scale and collapse the whole policy to zero power.
    """
    state.lam = np.maximum(state.lam - eps * (f_obs - state.r), 0.0)
    state.mu_p = min(max(state.mu_p - eps * slack_obs, 0.0), mu_cap)
    return state


def sync_local_copies(state: TrainerState, active: np.ndarray) -> TrainerState:
    """A_i <- A for currently active nodes; stale copies persist otherwise."""
    for i in np.nonzero(np.asarray(active, dtype=bool))[0]:
        state.A_local[i] = state.A.copy()
    return state


def primal_step_A(state: TrainerState, per_node_grads: list, score: np.ndarray,
                  f_obs: np.ndarray, p_obs: np.ndarray, P_max: float,
                  eps: float, estimator: str = "global",
                  baseline: float = 0.0, signal_scale: float = 1.0,
                  clip: float = np.inf, step_cap: float = 0.0,
                  norm_floor: float = 0.0, norm_ceil: float = 0.0) -> float:
    """Ascend A along the score-function estimate of grad_A E[lam.f + mu.slack].

    per_node_grads: per-layer arrays (m, ...) holding dz_i/dA_i.  The
    default "global" estimator applies the scalar signal s (minus a
    variance-reduction baseline) to the full log-policy gradient
    sum_i score_i dz_i/dA; the "per-node" variant weights each node's term
    by lambda_i f_i instead.  Returns the gradient norm.
    """
    m = score.shape[0]
    if any(g.shape[0] != m for g in per_node_grads):
        raise ValueError("gradient batch size mismatch")
    slack = P_max - float(np.sum(p_obs))
    if estimator == "global":
        s = float(state.lam @ f_obs) + state.mu_p * slack
        weight = np.clip((s - baseline) * signal_scale, -clip, clip) * score
    elif estimator == "per-node":
        weight = np.clip((state.lam * f_obs + state.mu_p * slack) * signal_scale,
                         -clip, clip) * score
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    sq = 0.0
    for l, g in enumerate(per_node_grads):
        step = eps * np.einsum("m...,m->...", g, weight)
        if step_cap > 0.0:
            # trust region: one update may move a layer by at most this
            # relative amount, else a single noisy draw can zero out a
            # whole ReLU layer of the multiplicative stack for good
            lim = step_cap * float(np.linalg.norm(state.A.taps[l]))
            norm = float(np.linalg.norm(step))
            if norm > lim > 0.0:
                step *= lim / norm
        state.A.taps[l] += step
        if state.init_norms is not None:
            # the stack is multiplicative in the layer norms, so common-mode
            # drift compounds across layers: sustained downward pressure
            # reaches the all-zero ReLU state where every gradient dies for
            # good, and sustained upward pressure saturates every sigmoid
            # (score ~ 0, policy frozen at all-on).  Bounding each layer's
            # norm relative to its initial value keeps the policy in the
            # responsive region while leaving layer shapes free to change.
            norm = float(np.linalg.norm(state.A.taps[l]))
            lo = norm_floor * state.init_norms[l]
            hi = norm_ceil * state.init_norms[l]
            if norm_floor > 0.0 and 0.0 < norm < lo:
                state.A.taps[l] *= lo / norm
            elif norm_ceil > 0.0 and norm > hi > 0.0:
                state.A.taps[l] *= hi / norm
        sq += float(np.sum(step * step))
    return float(np.sqrt(sq)) / max(eps, 1e-300)


def probe_aggregation(cfg: ExperimentConfig, topo: netgen.NetworkTopology,
                      steps_extra: int = 5) -> np.ndarray:
    """Warm up a short deterministic channel realization; return its y."""
    m = topo.m
    probe = netgen.ChannelProcess(topo.pathloss, cfg.delta, cfg.sigma,
                                  stream_rng(cfg.seed, "init", (1,)))
    agg = graphflow.AggregationState.cold(m, cfg.hops)
    for _ in range(cfg.hops + steps_extra):
        netgen.step_fading(probe)
        gs = graphflow.sparsify(probe.gain, cfg.eta0, np.ones(m, bool))
        agg = graphflow.advance_aggregation(agg, gs, np.ones(m))
    return agg.y


def feature_scales(cfg: ExperimentConfig, topo: netgen.NetworkTopology
                   ) -> np.ndarray:
    """Per-delay-level input scaling, probe-calibrated at initialization.

    The k = 0 entry of every aggregation sequence is the node state itself
    (order one), while deeper entries are products of channel gains that can
    sit orders of magnitude lower; unscaled, the shared leading entry swamps
    the node-dependent ones and the filter output barely varies across
    nodes.  The scale is one constant per delay level — node-independent,
    so permutation equivariance is untouched.
    """
    if not cfg.feat_norm:
        return np.ones(cfg.hops)
    y = probe_aggregation(cfg, topo)
    return 1.0 / (np.mean(np.abs(y), axis=0) + 1e-12)


def calibrate_output_scale(A: aggnn.FilterTensor, cfg: ExperimentConfig,
                           topo: netgen.NetworkTopology, target: float = 1.0,
                           feat_scale: np.ndarray | None = None
                           ) -> aggnn.FilterTensor:
    """Rescale all taps so the mean initial output is ``target``.

    A nonnegative-tap network on nonnegative inputs is positively
    homogeneous of degree L in its taps, so one probe forward pass on a
    warmed-up aggregation sequence pins the exact rescaling; without it
    the depth-10 stack leaves z anywhere between 1e-5 and 1e3 depending on
    the topology's gain scale, which stalls or saturates the policy.
    """
    m = topo.m
    y = probe_aggregation(cfg, topo)
    if feat_scale is not None:
        y = y * feat_scale
    z, _ = aggnn.forward_nodes(aggnn.broadcast_filter(A, m), y)
    base = float(np.mean(np.abs(z)))
    if base <= 0.0:
        return A
    c = (target / base) ** (1.0 / A.n_layers)
    return aggnn.FilterTensor([a * c for a in A.taps])


LOG_COLUMNS = ("tau", "u0_r", "sumrate_obs", "sumrate_det", "power_obs",
               "constraint_violation", "lambda_mean", "mu_p", "grad_norm")
BASELINE_COLUMNS = ("tau", "equal", "random", "wmmse")


@dataclass
class TrainResult:
    filter: aggnn.FilterTensor
    state: TrainerState
    log: dict                      # column -> (iterations,) array
    baseline_log: dict             # column -> array (empty if not tracked)
    topology: netgen.NetworkTopology


def train(cfg: ExperimentConfig,
          topology: netgen.NetworkTopology | None = None,
          A0: aggnn.FilterTensor | None = None) -> TrainResult:
    """Run the full primal-dual loop of the configured experiment.

    Baseline curves (equal / random / WMMSE), when tracked, are computed on
    the very same channel realizations inside the loop so all methods stay
    paired; in asynchronous mode they refresh every ceil(m / lambda) slots
    and hold in between.
    """
    cfg.validate()
    topo = topology if topology is not None else make_topology(cfg)
    m = topo.m
    P_max = cfg.resolved_P_max()

    cp = netgen.ChannelProcess(topo.pathloss, cfg.delta, cfg.sigma,
                               stream_rng(cfg.seed, "fading"))
    ns = netgen.NodeStateProcess(m, cfg.node_state, cfg.demand_rate,
                                 stream_rng(cfg.seed, "nodestate"))
    sched = make_schedule(cfg, m)
    policy_rng = stream_rng(cfg.seed, "policy")
    base_rng = stream_rng(cfg.seed, "baseline")

    feat_scale = feature_scales(cfg, topo)
    if A0 is None:
        features, taps = aggnn.default_layer_spec(cfg.layers, cfg.features,
                                                  cfg.layer_taps)
        A0 = aggnn.init_filters(features, taps, cfg.init_scale,
                                stream_rng(cfg.seed, "init"),
                                nonneg=cfg.init_nonneg)
        if cfg.init_calibrate:
            A0 = calibrate_output_scale(A0, cfg, topo, target=cfg.init_target,
                                        feat_scale=feat_scale)
    state = TrainerState.fresh(A0.copy(), m)
    state.init_norms = [float(np.linalg.norm(a)) for a in state.A.taps]

    agg = graphflow.AggregationState.cold(m, cfg.hops)
    prev_actions = np.zeros(m)
    synchronous = cfg.activation == "synchronous"
    refresh = max(1, int(np.ceil(m / cfg.act_lambda))) if not synchronous else 1
    held = {}

    log = {c: np.zeros(cfg.iterations) for c in LOG_COLUMNS}
    blog = ({c: np.zeros(cfg.iterations) for c in BASELINE_COLUMNS}
            if cfg.track_baselines else {})

    for tau in range(cfg.iterations):
        netgen.step_fading(cp)
        gain = cp.gain
        active = graphflow.sample_activation(sched, m)
        if synchronous:
            # every node is active every step, so all local copies equal A
            stack = aggnn.broadcast_filter(state.A, m)
        else:
            sync_local_copies(state, active)
            stack = aggnn.stack_filters(state.A_local)

        gs = graphflow.sparsify(gain, cfg.eta0, active)
        netgen.step_node_state(ns)
        agg = graphflow.advance_aggregation(agg, gs, ns.x)

        z, acts = aggnn.forward_nodes(stack, agg.y * feat_scale)
        # the policy sees z shifted by a fixed bias: a nonnegative-tap
        # network on nonnegative inputs yields z >= 0, i.e. pi >= 1/2, so
        # without the shift no node can ever be more off than a coin flip
        zb = z - cfg.output_bias
        ps = policy.sample(zb, cfg.p0, policy_rng, cfg.pi_min)
        actions = np.where(active, ps.actions, prev_actions)
        score = np.where(active, ps.score, 0.0)
        prev_actions = actions

        f_obs = observe_reward(cfg, actions, gain, ns.x)
        slack = rewards.power_slack(actions, P_max)
        s = float(state.lam @ f_obs) + state.mu_p * slack

        if cfg.value_baseline:
            # counterfactual control variate: the Lagrangian at the expected
            # power vector on the same channel draw.  Independent of the
            # sampled actions, so subtracting it keeps the estimator unbiased
            # while removing the fading- and common-mode sampling variance
            # that otherwise swamps the per-node differentials.
            p_bar = np.where(active,
                             policy.transmit_probs(zb, cfg.pi_min) * cfg.p0,
                             actions)
            f_bar = observe_reward(cfg, p_bar, gain, ns.x)
            value_b = (float(state.lam @ f_bar)
                       + state.mu_p * rewards.power_slack(p_bar, P_max))
        else:
            value_b = 0.0

        grads = aggnn.backward_nodes(stack, acts, np.ones(m))
        residual = (s - value_b) - state.ema_baseline
        gnorm = primal_step_A(
            state, grads, score, f_obs, actions, P_max,
            cfg.eps_A, cfg.estimator,
            baseline=value_b + (state.ema_baseline if cfg.use_ema_baseline else 0.0),
            signal_scale=(1.0 / np.sqrt(max(state.ema_var, 1e-4))
                          if cfg.signal_norm else 1.0),
            clip=cfg.signal_clip, step_cap=cfg.step_cap,
            norm_floor=cfg.norm_floor, norm_ceil=cfg.norm_ceil)
        primal_step_r(state, cfg.eps_r)
        dual_step(state, f_obs, slack, cfg.eps_dual, cfg.mu_cap)
        state.ema_weight = cfg.ema_decay * state.ema_weight + (1 - cfg.ema_decay)
        corr = (1 - cfg.ema_decay) / state.ema_weight
        state.ema_baseline += corr * residual
        state.ema_var += corr * (residual * residual - state.ema_var)
        state.tau = tau + 1

        u0_r = rewards.utility_u0(state.r)
        if not np.isfinite(u0_r) or abs(u0_r) > cfg.divergence_bound:
            raise TrainerDivergence(f"u0(r) = {u0_r} at iteration {tau}")

        det_rate = observe_reward(cfg, policy.threshold(zb, cfg.p0), gain, ns.x)
        log["tau"][tau] = tau
        log["u0_r"][tau] = u0_r
        log["sumrate_obs"][tau] = float(np.sum(f_obs))
        log["sumrate_det"][tau] = float(np.sum(det_rate))
        log["power_obs"][tau] = float(np.sum(actions))
        log["constraint_violation"][tau] = float(np.sum(actions)) - P_max
        log["lambda_mean"][tau] = float(np.mean(state.lam))
        log["mu_p"][tau] = state.mu_p
        log["grad_norm"][tau] = gnorm

        if cfg.track_baselines:
            if tau % refresh == 0 or not held:
                held["equal"] = baselines.equal_power(m, P_max)
                held["random"] = baselines.random_power(m, P_max, cfg.p0, base_rng)
                held["wmmse"] = baselines.wmmse(gs.h_tilde if synchronous
                                                else graphflow.sparsify(gain, cfg.eta0,
                                                                        np.ones(m, bool)).h_tilde,
                                                cfg.p0, cfg.resolved_baseline_iters(),
                                                cfg.noise)
            blog["tau"][tau] = tau
            for name in ("equal", "random", "wmmse"):
                blog[name][tau] = float(np.sum(
                    observe_reward(cfg, held[name], gain, ns.x)))

    return TrainResult(state.A, state, log, blog, topo)


def observe_reward(cfg: ExperimentConfig, actions: np.ndarray,
                   gain: np.ndarray, x: np.ndarray) -> np.ndarray:
    if cfg.reward == "demand":
        return rewards.demand_reward(actions, gain, x, cfg.eta0, cfg.noise)
    return rewards.sumrate(actions, gain, cfg.eta0, cfg.noise)


def make_topology(cfg: ExperimentConfig) -> netgen.NetworkTopology:
    if cfg.topology == "cellular":
        return netgen.generate_cellular(cfg.n_bs, cfg.m, cfg.gamma,
                                        int(stream_rng(cfg.seed, "topology").integers(2**31)))
    return netgen.generate_adhoc(cfg.m, cfg.gamma,
                                 int(stream_rng(cfg.seed, "topology").integers(2**31)))


def make_schedule(cfg: ExperimentConfig, m: int) -> graphflow.ActivationSchedule:
    if cfg.activation == "synchronous":
        return graphflow.ActivationSchedule(graphflow.MODE_SYNC)
    act_rng = stream_rng(cfg.seed, "activation")
    subsets = graphflow.make_poisson_subsets(m, cfg.act_lambda, cfg.n_subsets, act_rng)
    return graphflow.ActivationSchedule(graphflow.MODE_ASYNC, subsets, act_rng)


def moving_average(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing moving average with a growing window at the start."""
    if window < 1:
        raise ValueError("window must be >= 1")
    values = np.asarray(values, dtype=float)
    csum = np.cumsum(values)
    out = np.empty_like(values)
    out[:window] = csum[:window] / np.arange(1, min(window, len(values)) + 1)
    if len(values) > window:
        out[window:] = (csum[window:] - csum[:-window]) / window
    return out
