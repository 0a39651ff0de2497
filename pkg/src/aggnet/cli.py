"""Command-line entry point.

Subcommands: train, permtest, transfer, sweep, baseline, eval.  Flags
mirror config keys and override the config file.  Exit codes: 0 success,
1 validation error, 2 property-test failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields

import numpy as np

from . import aggnn, baselines, experiments, netgen
from .config import ConfigError, ExperimentConfig

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PROPERTY = 2
EXIT_IO = 3


def add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file")
    for f in fields(ExperimentConfig):
        name = f.type if isinstance(f.type, str) else f.type.__name__
        typ = {"int": int, "float": float, "str": str, "bool": int}.get(name, str)
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name,
                       type=typ, default=None)


def load_config(args) -> ExperimentConfig:
    cfg = (ExperimentConfig.from_file(args.config) if args.config
           else ExperimentConfig())
    overrides = {}
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            overrides[f.name] = bool(v) if f.type in (bool, "bool") else v
    return cfg.with_overrides(**overrides)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aggnet",
                                 description="decentralized power-control lab")
    sub = ap.add_subparsers(dest="command", required=True)

    for name in ("train", "baseline"):
        p = sub.add_parser(name)
        add_config_flags(p)

    p = sub.add_parser("permtest")
    add_config_flags(p)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--checkpoint", help="trained filter (default: random init)")
    p.add_argument("--tolerance", type=float, default=1e-9)

    p = sub.add_parser("transfer")
    add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mode", choices=("same-size", "scaled"), default="same-size")
    p.add_argument("--m-prime", type=int, default=None)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--steps", type=int, default=300)

    p = sub.add_parser("sweep")
    add_config_flags(p)
    p.add_argument("--axis", choices=("hops", "delta"), required=True)
    p.add_argument("--values", required=True,
                   help="comma-separated axis values")

    p = sub.add_parser("eval")
    add_config_flags(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--topology-file", help="topology JSON to reload")
    p.add_argument("--steps", type=int, default=500)
    return ap


def cmd_train(cfg: ExperimentConfig) -> int:
    summary = experiments.run_train(cfg)
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_baseline(cfg: ExperimentConfig) -> int:
    """One-shot baseline allocations on a fresh network draw."""
    topo = experiments.make_topology(cfg)
    cp = netgen.ChannelProcess(topo.pathloss, cfg.delta, cfg.sigma,
                               np.random.default_rng(cfg.seed))
    netgen.step_fading(cp)
    from .graphflow import sparsify
    gs = sparsify(cp.gain, cfg.eta0, np.ones(topo.m, bool))
    out = {
        "equal": baselines.equal_power(topo.m, cfg.resolved_P_max()).tolist(),
        "wmmse": baselines.wmmse(gs.h_tilde, cfg.p0,
                                 cfg.resolved_baseline_iters(), cfg.noise).tolist(),
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_permtest(cfg, args) -> int:
    A = aggnn.load_filter(args.checkpoint) if args.checkpoint else None
    report = experiments.run_permtest(cfg, args.trials, A, args.tolerance)
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["passed"] else EXIT_PROPERTY


def cmd_transfer(cfg, args) -> int:
    A = aggnn.load_filter(args.checkpoint)
    m_prime = args.m_prime if args.m_prime is not None else cfg.m
    report = experiments.run_transfer(cfg, A, args.mode, m_prime,
                                      args.trials, args.steps)
    os.makedirs(cfg.outdir, exist_ok=True)
    path = os.path.join(cfg.outdir, f"transfer_{args.mode}_{m_prime}.csv")
    experiments.write_csv(path, ("trial", "agg", "equal", "random", "wmmse"),
                          report["rows"])
    print(json.dumps({k: report[k] for k in ("mode", "m_prime", "trials", "means")},
                     indent=2))
    return EXIT_OK


def cmd_sweep(cfg, args) -> int:
    values = [float(v) for v in args.values.split(",") if v.strip()]
    report = experiments.run_sweep(cfg, args.axis, values)
    os.makedirs(cfg.outdir, exist_ok=True)
    path = os.path.join(cfg.outdir, f"sweep_{args.axis}.csv")
    experiments.write_csv(path, ("value", "agg", "wmmse", "relative"),
                          report["rows"])
    print(json.dumps(report["rows"], indent=2))
    return EXIT_OK


def cmd_eval(cfg, args) -> int:
    A = aggnn.load_filter(args.checkpoint)
    if args.topology_file:
        with open(args.topology_file) as fh:
            topo = netgen.NetworkTopology.from_json(fh.read())
    else:
        topo = experiments.make_topology(cfg)
    res = experiments.evaluate_policy(cfg, topo, A, steps=args.steps)
    print(json.dumps(res, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "baseline":
            return cmd_baseline(cfg)
        if args.command == "permtest":
            return cmd_permtest(cfg, args)
        if args.command == "transfer":
            return cmd_transfer(cfg, args)
        if args.command == "sweep":
            return cmd_sweep(cfg, args)
        if args.command == "eval":
            return cmd_eval(cfg, args)
        raise AssertionError(args.command)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
