import pytest

from ctvff import AlgorithmConfig, ConfigError, Event, ScenarioConfig, load_config
from ctvff.config import config_from_dict, dump_config
from ctvff.presets import PRESETS


def test_defaults_validate():
    cfg = ScenarioConfig().validate()
    assert cfg.M == 17 and cfg.K_total == 6


def test_toml_round_trip(tmp_path):
    cfg = ScenarioConfig(events=(Event(500, (3.0, 0.0)),),
                         algorithms=(AlgorithmConfig("ctvff"), AlgorithmConfig("fixed", lam=0.99)))
    path = tmp_path / "s.toml"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


@pytest.mark.parametrize("name", list(PRESETS))
def test_presets_round_trip(name, tmp_path):
    for label, cfg in PRESETS[name].variants:
        path = tmp_path / f"{label}.toml".replace("/", "_")
        path.write_text(dump_config(cfg))
        assert load_config(path) == cfg


def test_fig4_uses_published_parameters():
    cfg = PRESETS["fig4"].config
    ct, gv, fx, sg = cfg.algorithms
    assert (ct.lambda_minus, ct.lambda_plus, ct.delta1, ct.delta2, ct.delta3) == \
        (0.98, 0.99998, 0.934, 0.005, 0.99)
    assert (gv.lambda_minus, gv.lambda_plus, gv.lambda0, gv.mu) == (0.992, 0.99998, 0.998, 0.0025)
    assert fx.lam == 0.997
    assert cfg.training_symbols == 250 and cfg.events[0].symbol_index == 1000
    assert cfg.K_total == 10


def test_entry_symbols():
    cfg = ScenarioConfig(K_initial=2, power_offsets_db=(0.0, 0.0),
                         events=(Event(10, (0.0,)), Event(20, (1.0, 2.0))), total_symbols=30)
    assert cfg.entry_symbols() == [1, 1, 11, 21, 21]
    assert cfg.all_power_offsets_db() == [0.0, 0.0, 0.0, 1.0, 2.0]


@pytest.mark.parametrize("changes, needle", [
    (dict(training_symbols=2000, total_symbols=1500), "training_symbols"),
    (dict(events=(Event(900, (0.0,)), Event(800, (0.0,)))), "strictly increasing"),
    (dict(K_initial=18, power_offsets_db=(0.0,) * 18), "capacity"),
    (dict(algorithms=(AlgorithmConfig("ctvff", delta1=1.0),)), "delta1 must lie in (0,1)"),
    (dict(algorithms=(AlgorithmConfig("wgvff"),)), "kind must be one of"),
    (dict(profile_db=(0.0,)), "profile_db"),
    (dict(power_offsets_db=(3.0, 0.0, 0.0, 0.0, 0.0, 0.0)), "desired user"),
])
def test_invalid_configs_name_the_problem(changes, needle):
    with pytest.raises(ConfigError) as exc:
        ScenarioConfig().with_changes(**changes).validate()
    assert any(needle in p for p in exc.value.problems)


def test_unknown_fields_are_reported():
    with pytest.raises(ConfigError) as exc:
        config_from_dict({"N": 15, "bogus": 1, "algorithms": [{"kind": "ctvff", "delta4": 1}]})
    text = "\n".join(exc.value.problems)
    assert "bogus" in text and "delta4" in text


def test_malformed_toml(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("N = [")
    with pytest.raises(ConfigError):
        load_config(path)
