"""Experiment configuration: a flat key = value file with hard-error typos.

Defaults reproduce the reference medium-scale setup: 25-node ad-hoc
network, delta = 0.3, gamma = 2.2, 10 single-feature layers with 10 taps
each (100 parameters), 5 hops.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

FALSE_STRINGS = {"0", "false", "no", "off"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    # topology
    topology: str = "adhoc"          # adhoc | cellular
    m: int = 25
    n_bs: int = 5
    gamma: float = 2.2
    # channel / node state
    delta: float = 0.3
    sigma: float = 1.0
    noise: float = 1.0
    node_state: str = "constant-one"  # constant-one | demand-poisson
    demand_rate: float = 2.0
    # graph flow
    eta0: float = 0.0
    hops: int = 5
    activation: str = "synchronous"   # synchronous | asynchronous
    act_lambda: float = 25.0
    n_subsets: int = 100
    # architecture
    layers: int = 10
    features: int = 1
    layer_taps: int = 10
    init_scale: float = 2.0
    init_nonneg: bool = True
    init_calibrate: bool = True       # rescale taps so initial outputs are O(1)
    feat_norm: bool = True            # per-delay-level input scaling (probe-calibrated)
    # power / rewards
    reward: str = "sumrate"           # sumrate | demand
    p0: float = 1.0
    P_max: float = -1.0               # -1 -> 0.75 * m * p0
    # training
    iterations: int = 40000
    eps_A: float = 5e-3
    signal_clip: float = 3.0          # cap on the normalized reward signal
    step_cap: float = 0.01            # max relative per-layer change per step (0 = off)
    norm_floor: float = 0.85          # min layer norm relative to init (0 = off)
    norm_ceil: float = 1.15           # max layer norm relative to init (0 = off)
    init_target: float = 2.5          # calibrated initial mean output
    output_bias: float = 2.5          # subtracted from z before the sigmoid
    pi_min: float = 0.02              # exploration floor on transmit probabilities
    eps_r: float = 1e-2
    eps_dual: float = 1e-2
    mu_cap: float = 0.1               # anti-windup bound on the budget dual
    estimator: str = "global"         # global | per-node
    use_ema_baseline: bool = True
    value_baseline: bool = True       # counterfactual control variate on the signal
    signal_norm: bool = True          # divide the signal by its running std
    ema_decay: float = 0.99
    divergence_bound: float = 1e6
    log_window: int = 500
    checkpoint_every: int = 0         # 0 -> final checkpoint only
    baseline_iters: int = -1          # -1 -> hops
    track_baselines: bool = True
    # bookkeeping
    seed: int = 0
    outdir: str = "results"

    def resolved_P_max(self) -> float:
        return 0.75 * self.m * self.p0 if self.P_max < 0 else self.P_max

    def resolved_baseline_iters(self) -> int:
        return self.hops if self.baseline_iters < 0 else self.baseline_iters

    def validate(self) -> None:
        bad = []
        if self.topology not in ("adhoc", "cellular"):
            bad.append("topology")
        if self.m < 1:
            bad.append("m")
        if self.topology == "cellular" and (self.n_bs < 1 or self.m < self.n_bs):
            bad.append("n_bs")
        if self.gamma <= 0:
            bad.append("gamma")
        if not 0.0 <= self.delta <= 1.0:
            bad.append("delta")
        if self.sigma <= 0:
            bad.append("sigma")
        if self.noise <= 0:
            bad.append("noise")
        if self.node_state not in ("constant-one", "demand-poisson"):
            bad.append("node_state")
        if self.demand_rate < 0:
            bad.append("demand_rate")
        if self.eta0 < 0:
            bad.append("eta0")
        if self.hops < 1:
            bad.append("hops")
        if self.activation not in ("synchronous", "asynchronous"):
            bad.append("activation")
        if self.n_subsets < 1:
            bad.append("n_subsets")
        if self.layers < 1:
            bad.append("layers")
        if self.features < 1:
            bad.append("features")
        if self.layer_taps < 1:
            bad.append("layer_taps")
        if self.init_scale <= 0:
            bad.append("init_scale")
        if self.reward not in ("sumrate", "demand"):
            bad.append("reward")
        if self.p0 <= 0:
            bad.append("p0")
        if self.resolved_P_max() <= 0 or self.resolved_P_max() > self.m * self.p0:
            bad.append("P_max")
        if self.iterations < 0:
            bad.append("iterations")
        if min(self.eps_A, self.eps_r, self.eps_dual) <= 0:
            bad.append("eps")
        if self.estimator not in ("global", "per-node"):
            bad.append("estimator")
        if not 0.0 <= self.pi_min < 0.5:
            bad.append("pi_min")
        if not 0.0 <= self.ema_decay < 1.0:
            bad.append("ema_decay")
        if self.log_window < 1:
            bad.append("log_window")
        if bad:
            raise ConfigError("invalid config values for: " + ", ".join(bad))

    # -- flat text round-trip -------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    def to_file(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        known = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            values[key] = _coerce(key, val, known[key])
        cfg = cls(**values)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def with_overrides(self, **kw) -> "ExperimentConfig":
        cfg = replace(self, **kw)
        cfg.validate()
        return cfg


def _coerce(key: str, val: str, typ) -> object:
    name = typ if isinstance(typ, str) else typ.__name__
    try:
        if name == "bool":
            return val.lower() not in FALSE_STRINGS
        if name == "int":
            return int(val)
        if name == "float":
            return float(val)
        return val
    except ValueError as exc:
        raise ConfigError(f"cannot parse {key} = {val!r}") from exc
