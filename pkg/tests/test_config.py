from pathlib import Path

import pytest

from ssrc.baselines import FilterKind
from ssrc.config import baseline_from_name, config_from_dict, load_config, with_overrides
from ssrc.errors import ParseError, SchemaError
from ssrc.generators import NoiseFamily
from ssrc.tuning import Strategy

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def minimal(**experiment):
    return {
        "experiment": {"name": "t", **experiment},
        "signals": [{"name": "lz", "family": "lorenz", "noise": {"family": "lognormal", "snr_db": 2.67}}],
    }


def test_defaults():
    cfg = config_from_dict(minimal())
    assert (cfg.length, cfg.validation_len, cfg.realizations, cfg.base_seed) == (9000, 1000, 100, 0)
    assert cfg.strategy is Strategy.BAYES and cfg.budget == 40
    assert [b.name for b in cfg.baselines][:2] == ["wavelet1", "wavelet2"]
    assert cfg.signals[0].noise.family is NoiseFamily.LOGNORMAL


@pytest.mark.parametrize("name", ["table1", "table2", "table3", "sweep"])
def test_shipped_configs_load(name):
    cfg = load_config(CONFIGS / f"{name}.toml")
    assert cfg.realizations >= 1


def test_shipped_table_snrs():
    snrs = {t: [s.noise.target_snr_db for s in load_config(CONFIGS / f"{t}.toml").signals]
            for t in ("table1", "table2", "table3")}
    assert snrs == {"table1": [2.67, 15.3, 21.6], "table2": [-8.01, 4.58, 5.1], "table3": [-2.68, 9.0, 9.0]}


def test_round_trip_and_hash():
    cfg = load_config(CONFIGS / "table1.toml")
    again = config_from_dict(cfg.to_source())
    assert again == cfg
    assert again.hash() == cfg.hash()
    assert with_overrides(cfg, out="elsewhere").hash() == cfg.hash()
    assert with_overrides(cfg, base_seed=1).hash() != cfg.hash()


@pytest.mark.parametrize("raw", [
    {"experiment": {"name": "t", "realizations": 0}},
    {"experiment": {"name": "t", "bogus": 1}},
    {"experiment": {"name": "t"}, "signals": [{"name": "a", "family": "henon", "noise": {"family": "gamma"}}]},
    {"experiment": {"name": "t"}, "signals": [{"name": "a", "family": "lorenz", "noise": {"family": "pink"}}]},
    {"experiment": {"name": "t"}, "signals": [{"name": "a", "family": "lorenz", "noise": {"family": "gamma"},
                                                "period_samples": 4}]},
    {"experiment": {"name": "t"}, "tuner": {"budget": 3}},
    {"experiment": {"name": "t"}, "baselines": {"names": ["kalman"]}},
    {"experiment": {"name": "t", "validation_len": 9000}},
])
def test_schema_errors(raw):
    with pytest.raises(SchemaError):
        config_from_dict(raw)


def test_load_errors(tmp_path):
    with pytest.raises(ParseError):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[experiment\nname=")
    with pytest.raises(ParseError):
        load_config(bad)


def test_baseline_names():
    assert baseline_from_name("lowpass25").fraction == 0.25
    assert baseline_from_name("lowpass60").fraction == pytest.approx(0.6)
    assert baseline_from_name("adaptive").kind is FilterKind.ADAPTIVE
    assert baseline_from_name("wavelet2").variant.value == "hard"
