import json
import math

import numpy as np
import pytest
import yaml

from conftest import small_config
from zkdecay import persistence as io
from zkdecay import solver as S
from zkdecay.runner import simulate


def test_config_round_trip(tmp_path, config):
    path = io.save_config(config, tmp_path / "run.yaml")
    again = io.load_config(path)
    assert again == config
    assert again.run_id == config.run_id


def test_run_id_tracks_content(config):
    other = small_config(seed=4)
    assert other.run_id != config.run_id


@pytest.mark.parametrize("change,field", [
    ({"dt": -1.0}, "dt"),
    ({"t_start": 1.0}, "t_start"),
    ({"t_end": 2.0}, "t_end"),
    ({"t_end": 3.005}, "t_end"),
    ({"equation": "gkdv-p2"}, "equation"),
    ({"initial": {"kind": "square"}}, "initial.kind"),
    ({"grid": {"n": [100, 100], "half_length": [10.0, 10.0]}}, "grid"),
])
def test_config_rejections_name_the_field(config, change, field):
    data = {**config.to_dict(), **change}
    with pytest.raises(io.ConfigError) as exc:
        io.RunConfig.from_dict(data)
    assert exc.value.path == field


def test_region_rejected_before_compute(config):
    data = config.to_dict()
    data["diagnostics"] = [{"functional": "xi_2d", "b": 0.7, "r": 1.0}]
    with pytest.raises(io.ConfigError) as exc:
        io.RunConfig.from_dict(data)
    assert exc.value.path == "diagnostics[0].b"


def test_region_must_fit_box(config):
    data = config.to_dict()
    data["t_end"] = 1e6
    with pytest.raises(io.ConfigError):
        io.RunConfig.from_dict(data)


def test_far_band_must_fit(config):
    data = config.to_dict()
    data["t_end"] = 100.0
    data["diagnostics"] = [{"functional": "far_identity", "far_exponent": 1.5, "eps": 0.1}]
    with pytest.raises(io.ConfigError) as exc:
        io.RunConfig.from_dict(data)
    assert exc.value.path.endswith("far_exponent")


@pytest.mark.parametrize("bad", [{"extra": 1}, {"equation": None}])
def test_unknown_or_missing_keys(config, bad):
    data = config.to_dict()
    if "extra" in bad:
        data.update(bad)
    else:
        del data["equation"]
    with pytest.raises(io.ConfigError):
        io.RunConfig.from_dict(data)


def test_checkpoint_round_trip(tmp_path):
    g = S.Grid((64, 32), (10.0, 5.0))
    vals = np.random.default_rng(0).standard_normal(g.shape)
    h = io.CheckpointHeader(2, g.n, g.half_length, 3.5, 0.01, 150, 9, "zk", 1.25, -0.5)
    io.write_checkpoint(tmp_path / "a.bin", vals, h)
    h2, v2 = io.read_checkpoint(tmp_path / "a.bin")
    assert h2 == h
    assert np.array_equal(v2, vals)
    assert (tmp_path / "a.bin").stat().st_size == 8 * 64 * 32 + io._HEADER.size


def test_checkpoint_version_and_magic(tmp_path):
    g = S.Grid((32,), (5.0,))
    h = io.CheckpointHeader(1, g.n, g.half_length, 2.0, 0.1, 0, 0, "gkdv-p2", version=2)
    io.write_checkpoint(tmp_path / "v2.bin", np.zeros(32), h)
    with pytest.raises(io.CheckpointError, match="version"):
        io.read_checkpoint(tmp_path / "v2.bin")
    (tmp_path / "junk.bin").write_bytes(b"x" * 200)
    with pytest.raises(io.CheckpointError, match="magic"):
        io.read_checkpoint(tmp_path / "junk.bin")
    raw = (tmp_path / "v2.bin").read_bytes()
    (tmp_path / "short.bin").write_bytes(raw[:-8])
    with pytest.raises(io.CheckpointError):
        io.read_checkpoint(tmp_path / "short.bin")


def test_checkpoint_shape_checked(tmp_path):
    h = io.CheckpointHeader(1, (32,), (5.0,), 2.0, 0.1, 0, 0, "gkdv-p2")
    with pytest.raises(io.CheckpointError):
        io.write_checkpoint(tmp_path / "x.bin", np.zeros(64), h)


def test_restart_is_bitwise_identical(tmp_path, config):
    full = simulate(config, tmp_path / "full")
    simulate(config, tmp_path / "part", stop_after=40)
    resumed = simulate(config, tmp_path / "part",
                       resume=tmp_path / "part" / "checkpoints" / "step_00000025.bin")
    a = (tmp_path / "full" / "final.bin").read_bytes()
    b = (tmp_path / "part" / "final.bin").read_bytes()
    assert a == b
    full.pop("created_unix")
    resumed.pop("created_unix")
    assert full == resumed
    for name in ("xi", "mass"):
        assert (tmp_path / "full" / "series" / f"{name}.csv").read_text() == \
            (tmp_path / "part" / "series" / f"{name}.csv").read_text()


def test_restart_rejects_mismatch(tmp_path, config):
    simulate(config, tmp_path / "run")
    other = small_config(dt=2e-2)
    with pytest.raises(io.CheckpointError, match="dt"):
        io.restart(tmp_path / "run" / "final.bin", other)


def test_same_seed_same_outputs(tmp_path, config):
    a = simulate(config, tmp_path / "a")
    b = simulate(config, tmp_path / "b")
    a.pop("created_unix")
    b.pop("created_unix")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_series_csv_round_trip(tmp_path):
    rows = [(2.0, 0.1, 0.0), (2.5, 1 / 3, 0.01)]
    io.write_series_csv(tmp_path / "s.csv", rows, "abc")
    rid, back = io.read_series_csv(tmp_path / "s.csv")
    assert rid == "abc" and back == rows


def test_manifest_contents(tmp_path, config):
    man = simulate(config, tmp_path / "run")
    on_disk = json.loads((tmp_path / "run" / "manifest.json").read_text())
    assert on_disk["run_id"] == config.run_id
    assert on_disk["checks"]["mass_drift"]["ok"]
    assert on_disk["checks"]["xi_bound"]["violations"] == 0
    assert all("anchor" in c for c in on_disk["checks"].values())
    assert man["steps"] == 100
    ckpts = sorted(p.name for p in (tmp_path / "run" / "checkpoints").iterdir())
    assert ckpts == [f"step_{k:08d}.bin" for k in (0, 25, 50, 75, 100)]
