import json

import pytest
import yaml

from smallimpact import cli
from smallimpact.config import parse_config
from smallimpact.errors import ConfigError


def write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data) if isinstance(data, dict) else data)
    return str(path)


EXPANSION = {"experiment": "expansion-check", "model": {"preset": "bachelier-const"}, "lambdas": [1e-3],
             "mc": {"n_paths": 600, "seed": 1}, "output": {"prefix": "exp"},
             "options": {"theta_offset": 0.5, "require_decrease": False, "min_steps": 50}}


def test_list_presets(capsys):
    assert cli.main(["list-presets"]) == 0
    out = capsys.readouterr().out
    for name in ("bachelier-const", "ou-myopic", "hedge-tanh"):
        assert name in out
    assert cli.main(["list-presets", "--json"]) == 0
    table = json.loads(capsys.readouterr().out)
    assert set(table) == {"bachelier-const", "ou-myopic", "hedge-tanh"}
    assert table["ou-myopic"]["params"]["nu"] == 0.1


def test_unknown_flag_exit_2():
    with pytest.raises(SystemExit) as info:
        cli.main(["list-presets", "--nope"])
    assert info.value.code == 2


@pytest.mark.parametrize("text", ["experiment: [unclosed", "experiment: nonsense\n",
                                  "experiment: friction-compare\nbogus: 1\n",
                                  "experiment: friction-compare\nmc: {n_paths: 1}\n",
                                  "experiment: friction-compare\noptions: {nope: 1}\n",
                                  "experiment: hedging-ce\nmodel: {preset: missing}\n"])
def test_malformed_config_exit_2(tmp_path, text):
    cfg = write(tmp_path, "bad.yaml", text)
    out = tmp_path / "out"
    out.mkdir()
    assert cli.main(["run", cfg, "--out", str(out)]) == 2
    assert list(out.iterdir()) == []


def test_wrong_preset_for_experiment_exit_2(tmp_path):
    cfg = write(tmp_path, "c.yaml", {"experiment": "stationary-variance", "model": {"preset": "ou-myopic"}})
    assert cli.main(["run", cfg, "--out", str(tmp_path)]) == 2


def test_friction_compare_outputs(tmp_path):
    cfg = write(tmp_path, "c.yaml", {"experiment": "friction-compare", "output": {"prefix": "fc"}})
    assert cli.main(["run", cfg, "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "fc_summary.json").read_text())
    assert summary["passed"] is True
    assert all({"name", "estimate", "theory", "tolerance", "passed"} <= set(c) for c in summary["checks"])
    assert (tmp_path / "fc_data.csv").read_text().startswith("friction,impact,threshold")


def test_expansion_outputs_and_determinism(tmp_path):
    cfg = write(tmp_path, "e.yaml", EXPANSION)
    blobs = []
    for i, workers in enumerate(("1", "1", "3")):
        out = tmp_path / f"o{i}"
        out.mkdir()
        assert cli.main(["run", cfg, "--seed", "7", "--workers", workers, "--out", str(out)]) == 0
        blobs.append((out / "exp_data.csv").read_bytes())
    assert blobs[0] == blobs[1] == blobs[2]
    assert b"\r\n" not in blobs[0]
    assert blobs[0].splitlines()[0] == b"lambda,ce_simulated,stderr,ce_theory,ratio,dt,n_paths"
    summary = json.loads((tmp_path / "o0" / "exp_summary.json").read_text())
    row = summary["results"]["per_lambda"][0]
    assert {"ce_simulated", "ce_theory", "ratio"} <= set(row)
    assert summary["config"]["mc"]["seed"] == 7


def test_env_overrides(tmp_path, monkeypatch):
    cfg = write(tmp_path, "e.yaml", EXPANSION)
    out = tmp_path / "env"
    out.mkdir()
    monkeypatch.setenv("SMALLIMPACT_OUT_DIR", str(out))
    monkeypatch.setenv("SMALLIMPACT_SEED", "99")
    assert cli.main(["run", cfg]) == 0
    summary = json.loads((out / "exp_summary.json").read_text())
    assert summary["config"]["mc"]["seed"] == 99


def test_assertion_failure_exit_1(tmp_path):
    cfg = write(tmp_path, "s.yaml", {"experiment": "stationary-variance", "mc": {"n_paths": 20},
                                     "options": {"band": [5.0, 6.0]}, "output": {"prefix": "sv"}})
    assert cli.main(["run", cfg, "--out", str(tmp_path)]) == 1
    summary = json.loads((tmp_path / "sv_summary.json").read_text())
    assert summary["passed"] is False


def test_simulation_error_exit_3(tmp_path):
    data = dict(EXPANSION, mc={"n_paths": 10, "dt": 0.1})
    cfg = write(tmp_path, "x.yaml", data)
    assert cli.main(["run", cfg, "--out", str(tmp_path)]) == 3
    assert not (tmp_path / "exp_summary.json").exists()


def test_parse_defaults():
    cfg = parse_config({"experiment": "expansion-check"})
    assert cfg.model.preset == "ou-myopic"
    assert cfg.lambdas == (1e-3, 1e-4, 1e-5)
    assert cfg.options["tolerance"] == 0.15
    with pytest.raises(ConfigError):
        parse_config({"experiment": "expansion-check", "model": {"preset": "ou-myopic", "params": {"zz": 1}}})
