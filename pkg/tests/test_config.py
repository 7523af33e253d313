import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mwsn.config import DEFAULTS, KEYS, ConfigError, SimConfig, describe_keys, format_config, load_config, parse_config
from mwsn.protocols import ALL_PROTOCOLS


def test_defaults_validate_and_match_reference_setup():
    cfg = DEFAULTS.validate()
    assert cfg.initial_j == 3.0
    assert cfg.e_elec_nj == 50.0
    assert cfg.e_amp_pj == 0.0013
    assert (cfg.data_bytes, cfg.control_bytes) == (100, 25)
    assert (cfg.zone_rows, cfg.zone_cols) == (4, 4)
    assert cfg.effective_range == pytest.approx(353.5533905932738)
    assert cfg.sink == (500.0, 500.0)


def test_keys_and_fields_correspond_one_to_one():
    assert sorted(k.attr for k in KEYS) == sorted(f.name for f in dataclasses.fields(SimConfig))
    assert len({k.name for k in KEYS}) == len(KEYS)


def test_parse_overrides_and_comments():
    cfg = parse_config("# trial\nsim.nodes = 50   # fewer\nprotocol.kind = grc_recovery\nrecovery.enabled = auto\n")
    assert cfg.nodes == 50
    assert cfg.kind.value == "GRC_RECOVERY"
    assert cfg.recovery_enabled


def test_unknown_key_reports_its_line():
    with pytest.raises(ConfigError) as err:
        parse_config("sim.nodes = 10\n\nradio.power = 3\n")
    assert err.value.line == 3
    assert err.value.key == "radio.power"


def test_weight_order_violation_cites_rule():
    with pytest.raises(ConfigError) as err:
        parse_config("protocol.kind = GRC\nprotocol.w2 = 0.8\nprotocol.w1 = 0.2\n")
    assert "0 < w2 < w1" in str(err.value)


@pytest.mark.parametrize(
    "text",
    [
        "sim.nodes = many",
        "energy.initial_j = -1",
        "energy.initial_j = 0",
        "radio.path_loss_exponent = 3",
        "round.data_tick = 19\nround.inter_tick = 18",
        "protocol.kind = LEACH",
        "sink.x = 2000",
        "just words",
        "sim.nodes = auto",
        "field.width = nan",
    ],
)
def test_malformed_configs_raise(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_from_file(tmp_path):
    p = tmp_path / "c.conf"
    p.write_text("sim.seed = 42\n")
    assert load_config(p).seed == 42


def test_describe_lists_every_key_with_provenance():
    out = describe_keys()
    lines = {line.split(" | ")[0]: line.split(" | ") for line in out.splitlines()[1:]}
    assert set(lines) == {k.name for k in KEYS}
    assert lines["energy.initial_j"][3] == "3.0"
    assert lines["radio.e_elec_nj_per_bit"][3] == "50.0"
    assert "derived" in lines["radio.range_m"][3]
    assert "derived" in lines["radio.range_m"][4]
    assert lines["energy.initial_j"][4] == "reference setup"


configs = st.builds(
    lambda **kw: DEFAULTS.with_(**kw),
    nodes=st.integers(1, 500),
    seed=st.integers(0, 2**31),
    protocol=st.sampled_from([p.value for p in ALL_PROTOCOLS]),
    mean_speed=st.floats(0, 50, allow_nan=False),
    initial_j=st.floats(1e-3, 10),
    fix_cost_j=st.floats(0, 1e-2),
    range_m=st.one_of(st.none(), st.floats(1, 2000)),
    recovery=st.one_of(st.none(), st.booleans()),
    max_rounds=st.integers(0, 10**6),
    hello_period=st.integers(1, 40),
)


@settings(max_examples=100)
@given(configs)
def test_round_trip(cfg: SimConfig):
    cfg = cfg.validate()
    assert parse_config(format_config(cfg)) == cfg
