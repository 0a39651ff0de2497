"""Configuration parsing, validation and round-trip tests."""

import pytest

from aggnet.config import ConfigError, ExperimentConfig


def test_defaults_reproduce_reference_setup():
    cfg = ExperimentConfig()
    assert cfg.m == 25
    assert cfg.delta == 0.3
    assert cfg.gamma == 2.2
    assert cfg.layers == 10
    assert cfg.features == 1
    assert cfg.layer_taps == 10
    assert cfg.hops == 5
    cfg.validate()


def test_round_trip():
    cfg = ExperimentConfig(m=12, delta=0.7, activation="asynchronous",
                           outdir="elsewhere")
    back = ExperimentConfig.from_text(cfg.to_text())
    assert back == cfg


def test_unknown_key_is_hard_error():
    with pytest.raises(ConfigError, match="unknown key"):
        ExperimentConfig.from_text("m = 10\nitertions = 5\n")


def test_malformed_line_rejected():
    with pytest.raises(ConfigError, match="key = value"):
        ExperimentConfig.from_text("just some words\n")


def test_unparsable_value_rejected():
    with pytest.raises(ConfigError, match="cannot parse"):
        ExperimentConfig.from_text("m = ten\n")


def test_comments_and_blanks_ignored():
    cfg = ExperimentConfig.from_text("# header\n\nm = 9  # inline\n")
    assert cfg.m == 9


def test_validation_lists_offending_keys():
    cfg = ExperimentConfig(m=0, delta=2.0, hops=0)
    with pytest.raises(ConfigError) as err:
        cfg.validate()
    msg = str(err.value)
    for key in ("m", "delta", "hops"):
        assert key in msg


def test_resolved_defaults():
    cfg = ExperimentConfig()
    assert cfg.resolved_P_max() == pytest.approx(25 * cfg.p0 * 0.75)
    assert cfg.resolved_baseline_iters() == cfg.hops
    cfg2 = ExperimentConfig(P_max=10.0, baseline_iters=3)
    assert cfg2.resolved_P_max() == 10.0
    assert cfg2.resolved_baseline_iters() == 3


def test_p_max_cannot_exceed_total_power():
    with pytest.raises(ConfigError, match="P_max"):
        ExperimentConfig(m=4, p0=1.0, P_max=5.0).validate()


def test_with_overrides_validates():
    cfg = ExperimentConfig()
    assert cfg.with_overrides(m=30).m == 30
    with pytest.raises(ConfigError):
        cfg.with_overrides(topology="ring")


def test_file_round_trip(tmp_path):
    cfg = ExperimentConfig(seed=42, eta0=0.05)
    path = tmp_path / "config.txt"
    cfg.to_file(path)
    assert ExperimentConfig.from_file(path) == cfg
