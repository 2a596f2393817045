import csv
import io
import json
import subprocess
import sys

import pytest

from chainbounds.cli import EXIT_CODES, main
from chainbounds.io import write_channel_file
from chainbounds.distributions import DiscreteDistribution, deterministic_channel, JointChannel
from chainbounds.toy_models import Toy1Config, toy1_analytic, toy1_engine


def run(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr()
    return status, out.out, out.err


def _csv_rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_toy1_row(capsys):
    status, out, _ = run(capsys, "toy1", "--k-star", "3", "--mc-samples", "0")
    assert status == 0
    assert out.startswith("# config: {")
    (row,) = _csv_rows(out)
    assert float(row["b_grad_analytic"]) == pytest.approx(10 / 9 / 64, rel=1e-15)
    assert float(row["b_grad_engine"]) < 10 / 9 / 64
    total = float(row["b_grad_engine"]) + float(row["b_grad_engine_tail"])
    assert total == pytest.approx(0.0173611, abs=1e-6)
    assert float(row["b_ltilde_engine"]) == pytest.approx(1 / 12, rel=1e-5)


def test_toy1_sweep(capsys):
    status, out, _ = run(capsys, "toy1", "--k-star", "1..4", "--mc-samples", "0", "--resolution", "10")
    assert status == 0
    rows = _csv_rows(out)
    assert [int(r["k_star"]) for r in rows] == [1, 2, 3, 4]


def test_toy2_json(capsys):
    status, out, _ = run(capsys, "toy2", "--a", "2", "--mc-samples", "2000", "--format", "json")
    assert status == 0
    doc = json.loads(out)
    quantities = {(r["quantity"], r["source"]) for r in doc["result"]}
    assert ("b_l", "mc") in quantities and ("gap", "engine") in quantities
    assert doc["config"]["seed_source"] == "default"


def test_missing_flag_is_usage_error(capsys):
    status, _, err = run(capsys, "toy1")
    assert status == 2 and "USAGE" in err
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 2


def test_parse_error_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"w_atoms": [}')
    status, _, err = run(capsys, "bounds", "--channel", str(p), "--preset", "w1")
    assert status == EXIT_CODES["PARSE_ERROR"]
    assert err.startswith("PARSE_ERROR: ") and err.count("\n") == 1


def test_check_exit_status(capsys):
    assert run(capsys, "check", "--suite", "pinsker")[0] == 0
    status, out, _ = run(capsys, "check", "--suite", "nets", "--format", "csv")
    assert status == 1
    assert "axiom:refining,False" in out


def _independent_file(tmp_path):
    w = DiscreteDistribution.from_points([[-0.5], [0.5]], [0.5, 0.5], prefix="w")
    x = DiscreteDistribution.from_points([[0.0], [1.0]], [0.3, 0.7])
    import numpy as np

    ch = JointChannel(w.labels, x.labels, np.outer(w.probs, x.probs), w.coords, x.coords)
    p = tmp_path / "ind.json"
    write_channel_file(ch, p)
    return p


def test_bounds_on_independent_channel(capsys, tmp_path):
    p = _independent_file(tmp_path)
    status, out, _ = run(capsys, "bounds", "--channel", str(p), "--preset", "chained-w1", "--net", "nested-dyadic:1:6")
    assert status == 0
    assert json.loads(out)["result"]["value"] == 0.0


def test_bounds_matches_toy1_engine(capsys, tmp_path):
    path = tmp_path / "toy.json"
    status, _, _ = run(capsys, "toy1", "--k-star", "2", "--mc-samples", "0", "--export-channel", str(path))
    assert status == 0
    status, out, _ = run(capsys, "bounds", "--channel", str(path), "--preset", "chained-w1", "--net", "dyadic:1:12")
    value = json.loads(out)["result"]["value"]
    assert value == pytest.approx(toy1_engine(Toy1Config(2))["b_grad"].value, rel=1e-12)


def test_lautum_inf_and_mi_finite(capsys, tmp_path):
    x = DiscreteDistribution.from_points([[0.0], [0.5], [1.0]], [0.2, 0.3, 0.5])
    p = tmp_path / "det.json"
    write_channel_file(deterministic_channel(x).merge_w([0, 1, 2], ["a", "b", "c"], x.coords), p)
    status, out, _ = run(capsys, "bounds", "--channel", str(p), "--preset", "mi")
    assert status == 0 and json.loads(out)["result"]["value"] < 2
    lines = tmp_path / "lines.json"
    lines.write_text(json.dumps({"channels": [json.loads(p.read_text())]}))
    status, out, _ = run(capsys, "bounds", "--channel", str(lines), "--preset", "ind-lautum", "--format", "csv")
    assert status == 0 and "+inf" in out


def test_pac_modes(capsys):
    status, out, _ = run(capsys, "pac", "--mode", "standard", "--kl", "inf", "--lambda", "1", "--format", "csv")
    assert status == 0 and "+inf" in out
    status, out, _ = run(capsys, "pac", "--posterior-point", "0.3", "--depth", "6", "--net", "nested-dyadic:1:6")
    assert json.loads(out)["result"]["value"] == pytest.approx(9.668392818449287, rel=1e-12)
    status, _, err = run(capsys, "pac", "--posterior-point", "0.3", "--net", "dyadic:1:4")
    assert status == EXIT_CODES["INCONSISTENT_POSTERIOR"]


def test_byte_identical_output(capsys):
    a = run(capsys, "toy2", "--a", "1", "--mc-samples", "500", "--seed", "7")[1]
    b = run(capsys, "toy2", "--a", "1", "--mc-samples", "500", "--seed", "7")[1]
    assert a == b


def test_env_seed_and_precedence(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv("CHAINBOUNDS_SEED", "11")
    out = run(capsys, "toy2", "--a", "1", "--mc-samples", "100", "--format", "json")[1]
    cfg = json.loads(out)["config"]
    assert cfg["seed"] == 11 and cfg["seed_source"] == "env"
    conf = tmp_path / "cfg.json"
    conf.write_text(json.dumps({"seed": 5, "mc_samples": 200}))
    cfg = json.loads(run(capsys, "toy2", "--a", "1", "--config", str(conf), "--format", "json")[1])["config"]
    assert (cfg["seed"], cfg["seed_source"], cfg["mc_samples"]) == (5, "config", 200)
    cfg = json.loads(run(capsys, "toy2", "--a", "1", "--config", str(conf), "--seed", "3", "--format", "json")[1])["config"]
    assert (cfg["seed"], cfg["seed_source"], cfg["mc_samples"]) == (3, "flag", 200)


def test_out_file(capsys, tmp_path):
    target = tmp_path / "r.csv"
    status, out, _ = run(capsys, "toy2", "--a", "1", "--mc-samples", "0", "--out", str(target))
    assert status == 0 and out == ""
    assert target.read_text().startswith("# config:")


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "chainbounds", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "chainbounds" in res.stdout
