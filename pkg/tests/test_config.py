import pytest

from mcflab.config import apply_overrides, defaults, parse_config, set_value
from mcflab.errors import ConfigError
from mcflab.presets import PRESETS, make_flow_config, resolve


def test_empty_document_gives_defaults():
    assert parse_config("") == defaults()
    assert parse_config("# only a comment\n") == defaults()


def test_keys_before_a_header_belong_to_general():
    cfg = parse_config("n = 3\nseed = 7\n[flow]\nnodes = 101\n")
    assert cfg["general"]["n"] == 3 and cfg["general"]["seed"] == 7
    assert cfg["flow"]["nodes"] == 101


def test_dimension_reaches_the_flow_config():
    cfg = resolve("sphere-shrink", "[general]\nn = 3\n")
    assert make_flow_config(cfg).n == 3


def test_lists_and_inline_comments():
    cfg = parse_config("[interior]\nr = 0.2, 0.4   # two radii\nL = 3\n")
    assert cfg["interior"]["r"] == [0.2, 0.4]
    assert cfg["interior"]["L"] == [3.0]


@pytest.mark.parametrize("text,key", [
    ("[flow]\nnodes = many\n", "flow.nodes"),
    ("[flow]\nt_end = 1e-3x\n", "flow.t_end"),
    ("[general]\nn = 0\n", "general.n"),
    ("[interior]\nL = 1.0\n", "interior.L"),
    ("[flow]\nshape = torus\n", "flow.shape"),
])
def test_bad_values_name_their_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key


def test_unknown_keys_and_sections_are_rejected():
    with pytest.raises(ConfigError) as exc:
        parse_config("[flow]\nspeed = 2\n")
    assert exc.value.key == "flow.speed"
    with pytest.raises(ConfigError):
        parse_config("[weather]\nrain = 1\n")


def test_malformed_document():
    with pytest.raises(ConfigError):
        parse_config("[flow\nnodes = 3\n")


def test_layering_order():
    base = parse_config("[flow]\nnodes = 101\nt_end = 0.3\n")
    cfg = apply_overrides(base, [("flow.nodes", "201")])
    assert cfg["flow"]["nodes"] == 201 and cfg["flow"]["t_end"] == 0.3
    assert base["flow"]["nodes"] == 101
    cfg = resolve("interior-audit", "[flow]\nnodes = 101\n", [("flow.snapshot_every", "7")])
    assert cfg["flow"]["nodes"] == 101
    assert cfg["flow"]["snapshot_every"] == 7


def test_bare_override_targets_general():
    cfg = defaults()
    set_value(cfg, "threads", "4")
    assert cfg["general"]["threads"] == 4


def test_every_preset_resolves():
    for name in PRESETS:
        cfg = resolve(name)
        assert set(cfg) == set(defaults())
