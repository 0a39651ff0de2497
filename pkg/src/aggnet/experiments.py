"""Experiment orchestration: training runs, evaluation of frozen policies,
permutation property trials, transference studies and sweeps, with CSV/JSON
artifacts on disk."""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from . import aggnn, baselines, graphflow, netgen, policy, rewards
from .config import ExperimentConfig
from .pdtrainer import (BASELINE_COLUMNS, LOG_COLUMNS, TrainResult,
                        feature_scales, make_topology, moving_average,
                        observe_reward, train)
from .seeds import stream_rng


def write_csv(path, columns, table: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        n = len(table[columns[0]]) if columns and columns[0] in table else 0
        for i in range(n):
            w.writerow([table[c][i] for c in columns])


def run_train(cfg: ExperimentConfig, outdir: str | None = None) -> dict:
    """Train per config; write log CSVs, checkpoint, topology and summary."""
    outdir = outdir or cfg.outdir
    os.makedirs(outdir, exist_ok=True)
    result = train(cfg)
    write_csv(os.path.join(outdir, "training_log.csv"), LOG_COLUMNS, result.log)
    if result.baseline_log:
        write_csv(os.path.join(outdir, "baseline_log.csv"), BASELINE_COLUMNS,
                  result.baseline_log)
    aggnn.save_filter(result.filter, os.path.join(outdir, "filter.txt"))
    with open(os.path.join(outdir, "topology.json"), "w") as fh:
        fh.write(result.topology.to_json())
    cfg.to_file(os.path.join(outdir, "config.txt"))
    summary = summarize(cfg, result)
    with open(os.path.join(outdir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    return summary


def summarize(cfg: ExperimentConfig, result: TrainResult) -> dict:
    w = cfg.log_window
    out = {"iterations": cfg.iterations, "seed": cfg.seed, "m": result.topology.m,
           "P_max": cfg.resolved_P_max()}
    if cfg.iterations == 0:
        return out
    out["final_sumrate"] = float(moving_average(result.log["sumrate_obs"], w)[-1])
    out["final_sumrate_det"] = float(moving_average(result.log["sumrate_det"], w)[-1])
    tail = max(1, cfg.iterations // 10)
    out["tail_mean_power"] = float(np.mean(result.log["power_obs"][-tail:]))
    for name in ("equal", "random", "wmmse"):
        if result.baseline_log:
            out[f"final_{name}"] = float(
                moving_average(result.baseline_log[name], w)[-1])
    return out


# -- frozen-policy evaluation -------------------------------------------------

def evaluate_policy(cfg: ExperimentConfig, topo: netgen.NetworkTopology,
                    A: aggnn.FilterTensor, steps: int = 500,
                    warmup: int | None = None, seed_extra: tuple = ()) -> dict:
    """Mean sum-rates of the frozen filter and all baselines on one network.

    The policy runs in deterministic evaluation mode (threshold at 1/2);
    the sampled-policy mean is reported alongside.
    """
    m = topo.m
    P_max = cfg.resolved_P_max()
    cp = netgen.ChannelProcess(topo.pathloss, cfg.delta, cfg.sigma,
                               stream_rng(cfg.seed, "fading", seed_extra))
    ns = netgen.NodeStateProcess(m, cfg.node_state, cfg.demand_rate,
                                 stream_rng(cfg.seed, "nodestate", seed_extra))
    pol_rng = stream_rng(cfg.seed, "policy", seed_extra)
    base_rng = stream_rng(cfg.seed, "baseline", seed_extra)
    agg = graphflow.AggregationState.cold(m, cfg.hops)
    active = np.ones(m, dtype=bool)
    stack = aggnn.broadcast_filter(A, m)
    feat_scale = feature_scales(cfg, topo)
    if warmup is None:
        warmup = cfg.hops
    totals = {k: 0.0 for k in ("agg", "agg_sampled", "equal", "random", "wmmse")}
    for t in range(warmup + steps):
        netgen.step_fading(cp)
        netgen.step_node_state(ns)
        gs = graphflow.sparsify(cp.gain, cfg.eta0, active)
        agg = graphflow.advance_aggregation(agg, gs, ns.x)
        if t < warmup:
            continue
        z, _ = aggnn.forward_nodes(stack, agg.y * feat_scale)
        zb = z - cfg.output_bias
        gain = cp.gain
        totals["agg"] += np.sum(observe_reward(cfg, policy.threshold(zb, cfg.p0),
                                               gain, ns.x))
        totals["agg_sampled"] += np.sum(observe_reward(
            cfg, policy.sample(zb, cfg.p0, pol_rng, cfg.pi_min).actions,
            gain, ns.x))
        totals["equal"] += np.sum(observe_reward(
            cfg, baselines.equal_power(m, P_max), gain, ns.x))
        totals["random"] += np.sum(observe_reward(
            cfg, baselines.random_power(m, P_max, cfg.p0, base_rng), gain, ns.x))
        totals["wmmse"] += np.sum(observe_reward(
            cfg, baselines.wmmse(gs.h_tilde, cfg.p0,
                                 cfg.resolved_baseline_iters(), cfg.noise),
            gain, ns.x))
    return {k: v / steps for k, v in totals.items()}


# -- permutation property trials ----------------------------------------------

def permutation_deviation(cfg: ExperimentConfig, A: aggnn.FilterTensor,
                          rng: np.random.Generator, history: int = 12) -> float:
    """Replay one random state history plain and permuted; return
    max |Phi(permuted) - Pi^T Phi(original)| over the final outputs."""
    m = cfg.m
    perm = rng.permutation(m)
    Pi = np.eye(m)[:, perm]  # column j of Pi is e_{perm_j}; Pi^T x = x[perm]
    gains = rng.random((history, m, m)) / m  # keep shift spectral radius O(1)
    xs = rng.random((history, m))
    actives = rng.random((history, m)) < 0.7
    actives[:, rng.integers(m)] = True  # keep at least one transmitter awake

    def run(g_seq, x_seq, a_seq):
        agg = graphflow.AggregationState.cold(m, cfg.hops)
        for g, x, a in zip(g_seq, x_seq, a_seq):
            gs = graphflow.sparsify(g, cfg.eta0, a)
            agg = graphflow.advance_aggregation(agg, gs, x)
        z, _ = aggnn.forward_nodes(aggnn.broadcast_filter(A, m), agg.y)
        return z

    z_plain = run(gains, xs, actives)
    z_perm = run(np.stack([Pi.T @ g @ Pi for g in gains]),
                 xs[:, perm], actives[:, perm])
    return float(np.max(np.abs(z_perm - z_plain[perm])))


def run_permtest(cfg: ExperimentConfig, trials: int, A: aggnn.FilterTensor | None,
                 tolerance: float = 1e-9) -> dict:
    rng = stream_rng(cfg.seed, "transfer")
    if A is None:
        features, taps = aggnn.default_layer_spec(cfg.layers, cfg.features,
                                                  cfg.layer_taps)
        A = aggnn.init_filters(features, taps, cfg.init_scale,
                               stream_rng(cfg.seed, "init"))
    devs = [permutation_deviation(cfg, A, rng) for _ in range(trials)]
    return {"trials": trials, "max_deviation": max(devs) if devs else 0.0,
            "tolerance": tolerance,
            "passed": bool(max(devs) <= tolerance) if devs else True}


# -- transference -------------------------------------------------------------

def run_transfer(cfg: ExperimentConfig, A: aggnn.FilterTensor, mode: str,
                 m_prime: int, trials: int, steps: int = 300) -> dict:
    """Evaluate a frozen filter on freshly drawn networks.

    mode "same-size" redraws networks with the training generator; mode
    "scaled" drops m' nodes in [-sqrt(m m'), sqrt(m m')]^2 with the
    training receiver box, keeping density fixed.
    """
    if mode not in ("same-size", "scaled"):
        raise ValueError(f"unknown transfer mode {mode!r}")
    rows = {k: [] for k in ("trial", "agg", "equal", "random", "wmmse")}
    topo_rng = stream_rng(cfg.seed, "topology", (1,))
    for trial in range(trials):
        seed = int(topo_rng.integers(2**31))
        if mode == "same-size":
            topo = netgen.generate_adhoc(cfg.m, cfg.gamma, seed)
            eval_cfg = cfg
        else:
            area = float(np.sqrt(cfg.m * m_prime))
            topo = netgen.generate_adhoc(m_prime, cfg.gamma, seed, area=area,
                                         rx_halfwidth=cfg.m / 4.0)
            eval_cfg = cfg.with_overrides(
                m=m_prime, P_max=cfg.resolved_P_max() * m_prime / cfg.m)
        res = evaluate_policy(eval_cfg, topo, A, steps=steps,
                              seed_extra=(trial,))
        rows["trial"].append(trial)
        for k in ("agg", "equal", "random", "wmmse"):
            rows[k].append(res[k])
    means = {k: float(np.mean(rows[k])) for k in ("agg", "equal", "random", "wmmse")}
    return {"mode": mode, "m_prime": m_prime, "trials": trials,
            "rows": rows, "means": means}


# -- sweeps -------------------------------------------------------------------

def run_sweep(cfg: ExperimentConfig, axis: str, values) -> dict:
    """Train one policy per axis value; report sum-rate relative to WMMSE."""
    if axis not in ("hops", "delta"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    if not len(values):
        raise ValueError("sweep needs at least one value")
    rows = {k: [] for k in ("value", "agg", "wmmse", "relative")}
    for v in values:
        point = (cfg.with_overrides(hops=int(v)) if axis == "hops"
                 else cfg.with_overrides(delta=float(v)))
        result = train(point)
        agg = moving_average(result.log["sumrate_obs"], point.log_window)[-1]
        wm = moving_average(result.baseline_log["wmmse"], point.log_window)[-1]
        rows["value"].append(v)
        rows["agg"].append(float(agg))
        rows["wmmse"].append(float(wm))
        rows["relative"].append(float(agg / wm))
    return {"axis": axis, "rows": rows}
