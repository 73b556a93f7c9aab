import json

import pytest
import yaml

from conftest import small_config
from zkdecay import cli
from zkdecay import persistence as io


@pytest.fixture(autouse=True)
def _out(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "out"))


def test_verify_weights(tmp_path):
    res = cli.dispatch(["verify-weights"])
    assert res.exit_code == 0
    rep = json.loads(open(res.report_path).read())
    assert rep["violations"] == 0


@pytest.mark.parametrize("params,code", [({"kind": "2d", "b": 0.3, "r": 1.0}, 0),
                                         ({"kind": "2d", "b": 0.7, "r": 1.0}, 1),
                                         ({"kind": "3d", "p1": 0.3, "p2": 0.31, "p3": 0.32,
                                           "p4": 0.33}, 0),
                                         ({"kind": "gkdv", "p": 4, "b": 0.9, "q": 1.1}, 1),
                                         ({"kind": "4d"}, 1)])
def test_params_check(tmp_path, params, code):
    path = tmp_path / "p.yaml"
    path.write_text(yaml.safe_dump(params))
    assert cli.dispatch(["params", "check", "--config", str(path)]).exit_code == code


def test_reduce_check():
    res = cli.dispatch(["params", "reduce-check", "--samples", "5000",
                        "--boundary-samples", "500", "--seed", "2"])
    assert res.exit_code == 0
    assert "0 discrepancies" in res.summary


def test_times_seq():
    res = cli.dispatch(["times-seq", "--t0", "10", "--eps", "0.1", "--c0", "1",
                        "--b", "0.3", "--n", "4"])
    assert res.exit_code == 0
    assert len(json.loads(open(res.report_path).read())["times"]) == 4
    bad = cli.dispatch(["times-seq", "--t0", "3", "--eps", "0.1", "--c0", "1",
                        "--b", "0.3", "--n", "4"])
    assert bad.exit_code == 1


def test_soliton_writes_checkpoint(tmp_path):
    out = tmp_path / "q.bin"
    res = cli.dispatch(["soliton", "--dim", "1", "--speed", "1.0", "--out", str(out)])
    assert res.exit_code == 0
    header, values = io.read_checkpoint(out)
    assert header.equation == "ground-state" and values.max() == pytest.approx(1.5)


def test_soliton_non_convergence_is_numerical_failure(tmp_path):
    res = cli.dispatch(["soliton", "--dim", "1", "--tol", "1e-30", "--max-iter", "3",
                        "--out", str(tmp_path / "q.bin")])
    assert res.exit_code == 2


def test_simulate_and_diagnose(tmp_path):
    cfg = tmp_path / "run.yaml"
    io.save_config(small_config(), cfg)
    out = tmp_path / "run"
    assert cli.dispatch(["simulate", "--config", str(cfg), "--out", str(out)]).exit_code == 0
    res = cli.dispatch(["diagnose", "--traj", str(out), "--functional", "xi_2d",
                        "--params", "b=0.3", "r=1.0", "q=1.1"])
    assert res.exit_code == 0 and "0 bound violations" in res.summary


def test_simulate_invalid_config(tmp_path):
    data = small_config().to_dict()
    data["diagnostics"] = [{"functional": "xi_2d", "b": 0.7, "r": 1.0}]
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(yaml.safe_dump(data))
    res = cli.dispatch(["simulate", "--config", str(cfg)])
    assert res.exit_code == 1 and "diagnostics[0].b" in res.summary


def test_blow_up_exit_code(tmp_path):
    cfg = small_config(initial={"kind": "gaussian", "amplitude": 1e200, "width": 4.0},
                       diagnostics=[])
    path = tmp_path / "blow.yaml"
    io.save_config(cfg, path)
    res = cli.dispatch(["simulate", "--config", str(path), "--out", str(tmp_path / "b")])
    assert res.exit_code == 2


@pytest.mark.parametrize("argv", [[], ["nope"], ["times-seq", "--t0", "x"],
                                  ["diagnose", "--traj", "missing", "--functional", "mass"]])
def test_usage_errors(argv):
    assert cli.dispatch(argv).exit_code == 1


def test_main_prints_summary(capsys):
    code = cli.main(["verify-weights"])
    assert code == 0
    assert "invariants" in capsys.readouterr().out
