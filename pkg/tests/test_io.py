import json

import numpy as np
import pytest

from chainbounds.errors import ConfigError
from chainbounds.io import channel_to_dict, load_channel_file, load_config, read_json, write_channel_file
from chainbounds.toy_models import Toy1Config, toy1_channel


def _write(tmp_path, obj, name="c.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


CHANNEL = {
    "w_atoms": [{"label": "a", "coords": [0.5]}, {"label": "b", "coords": [-0.5]}],
    "s_atoms": [{"label": "x", "coords": 0.0}, {"label": "y", "coords": 1.0}],
    "joint": [[0.25, 0.25], [0.1, 0.4]],
}


def test_round_trip(tmp_path):
    ch = toy1_channel(Toy1Config(1, resolution=4))
    p = tmp_path / "ch.json"
    write_channel_file(ch, p)
    kind, back = load_channel_file(p)
    assert kind == "channel"
    np.testing.assert_array_equal(back.joint, ch.joint)
    np.testing.assert_array_equal(back.w_coords, ch.w_coords)
    assert channel_to_dict(back) == channel_to_dict(ch)


def test_scalar_coords_and_lists(tmp_path):
    kind, ch = load_channel_file(_write(tmp_path, CHANNEL))
    assert ch.s_coords.shape == (2, 1)
    kind, chs = load_channel_file(_write(tmp_path, {"channels": [CHANNEL, CHANNEL]}, "l.json"))
    assert kind == "channels" and len(chs) == 2


def test_supersample_file(tmp_path):
    data = {
        "x_atoms": [{"label": "p", "coords": [0.0]}, {"label": "q", "coords": [1.0]}],
        "w_atoms": [{"label": "w", "coords": [0.0]}],
        "sstar": [[[0, 1]]],
        "joint": [[[0.5, 0.5]]],
    }
    kind, ssc = load_channel_file(_write(tmp_path, data))
    assert kind == "supersample" and ssc.m == 1


def test_field_diagnostics(tmp_path):
    bad = json.loads(json.dumps(CHANNEL))
    bad["w_atoms"][1]["coords"] = ["x"]
    with pytest.raises(ConfigError) as info:
        load_channel_file(_write(tmp_path, bad))
    assert info.value.code == "PARSE_ERROR"
    assert "w_atoms[1].coords[0]" in str(info.value.message)
    bad = json.loads(json.dumps(CHANNEL))
    bad["joint"] = [[0.25, 0.25]]
    with pytest.raises(ConfigError) as info:
        load_channel_file(_write(tmp_path, bad))
    assert "joint" in str(info.value.message)


def test_mass_errors_keep_their_code(tmp_path):
    bad = json.loads(json.dumps(CHANNEL))
    bad["joint"] = [[0.3, 0.3], [0.1, 0.1]]
    with pytest.raises(ConfigError) as info:
        load_channel_file(_write(tmp_path, bad))
    assert info.value.code == "SUM_NOT_ONE"


def test_syntax_error_position(tmp_path):
    with pytest.raises(ConfigError) as info:
        read_json(_write(tmp_path, '{"a": 1,\n  "b": }'))
    assert info.value.code == "PARSE_ERROR"
    assert "line 2" in str(info.value.message)


def test_missing_file_and_config(tmp_path):
    with pytest.raises(ConfigError) as info:
        read_json(tmp_path / "nope.json")
    assert info.value.code == "IO_ERROR"
    assert load_config(None) == {}
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "[1, 2]"))
