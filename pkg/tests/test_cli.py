import json
from pathlib import Path

import pytest

from hybridmem import cli
from hybridmem.config import ConfigError, ExperimentConfig, apply_overrides, from_dict, load, preset
from hybridmem.solver import Memristor, Netlist, Resistor, Schedule, VSource, transient_run
from hybridmem.experiments import background_rng, run_density, run_device_test, run_energy_scaling

# small enough to run every command in a few seconds
FAST = ["--set", "workload.rounds=1", "--set", "workload.energy_writes=1", "--set", "topology.tiles_x=1",
        "--set", "topology.tiles_y=1", "--set", "sweep.rounds=1", "--set", "sweep.sense_r_ron=[1,8]",
        "--set", "scaling.sizes=[1,2]", "--set", "scaling.writes=2",
        "--set", "scaling.backgrounds=2"]


def test_defaults_valid_and_presets():
    cfg = ExperimentConfig().validate()
    assert cfg.timing.vw == 7.0 and cfg.topology.sense_r_ron == 8.0
    assert cfg.hybrid_spec().sense_r == pytest.approx(8 * 124947.93, rel=1e-6)
    p8 = preset("tile8")
    assert (p8.topology.tile_rows, p8.timing.vw, p8.topology.sense_r_ron) == (8, 7.5, 0.5)
    with pytest.raises(KeyError):
        preset("tile5")


def test_json_roundtrip(tmp_path):
    cfg = preset("tile8")
    path = tmp_path / "c.json"
    path.write_text(cfg.to_json())
    assert load(path).to_dict() == cfg.to_dict()


@pytest.mark.parametrize("data,path", [
    ({"device": {"Vp": "x"}}, "device.Vp"),
    ({"topology": {"bogus": 1}}, "topology.bogus"),
    ({"workload": {"rounds": 0}}, "workload.rounds"),
    ({"sweep": {"sense_r_ron": [1, -2]}}, "sweep.sense_r_ron[1]"),
    ({"topology": {"type": "mesh"}}, "topology.type"),
    ({"timing": {"v_read": 1.5}}, "timing"),
    ({"workload": {"seed": True}}, "workload.seed"),
])
def test_validation_paths(data, path):
    with pytest.raises(ConfigError) as err:
        from_dict(data)
    assert err.value.path == path


def test_overrides():
    cfg = apply_overrides(ExperimentConfig(), ["timing.vw=7.5", "topology.type=1t1m", "scaling.sizes=[2,3]"])
    assert cfg.timing.vw == 7.5 and cfg.topology.type == "1t1m" and cfg.scaling.sizes == [2, 3]
    with pytest.raises(ConfigError):
        apply_overrides(ExperimentConfig(), ["timing.nope=1"])
    with pytest.raises(ConfigError):
        apply_overrides(ExperimentConfig(), ["timing.vw"])


def test_device_test_outputs():
    out = run_device_test(ExperimentConfig())
    s = out.summary
    assert s["r_on_ohm"] == pytest.approx(124.95e3, rel=1e-4)
    assert s["ratio"] >= 1e6
    lines = out.files["device_trace.csv"].splitlines()
    assert lines[0] == "time_ns,v_volts,i_amperes,x"
    assert s["x_max"] >= 0.985


def test_device_test_read_only_flat_x():
    cfg = apply_overrides(ExperimentConfig(), ["device_test.read_only=true"])
    rows = run_device_test(cfg).files["device_trace.csv"].splitlines()[1:]
    assert len({r.split(",")[3] for r in rows}) == 1


def test_lone_crossbar_matches_series_oracle():
    # a 1x1 crossbar is one device between two 500 ohm segments
    cfg = apply_overrides(ExperimentConfig(), ["scaling.writes=1", "scaling.backgrounds=1"])
    p = cfg.device_params()
    rng = background_rng(cfg.workload.seed, 0)
    x0 = 1.0 if rng.integers(0, 2, size=(1, 1))[0, 0] else p.x_floor
    _, _, bit = rng.integers(1), rng.integers(1), rng.integers(2)
    vh = 3.5 if bit else -3.5
    net = Netlist()
    for n in ("A", "a", "b", "B"):
        net.node(n)
    net.add(VSource("VA", "A"))
    net.add(VSource("VB", "B"))
    net.add(Resistor("R1", "A", "a", 500.0))
    net.add(Memristor("M", "a", "b", p, x0))
    net.add(Resistor("R2", "b", "B", 500.0))
    tm = cfg.timing
    t0 = tm.gap / 2
    pts = [(t0, 0.0), (t0 + tm.ramp, 1.0), (t0 + tm.ramp + tm.write_width, 1.0),
           (t0 + 2 * tm.ramp + tm.write_width, 0.0)]
    sched = Schedule({"VA": [(t, vh * k) for t, k in pts], "VB": [(t, -vh * k) for t, k in pts]}, {},
                     t0 * 2 + 2 * tm.ramp + tm.write_width)
    oracle = transient_run(net, sched).total_energy
    out = run_energy_scaling(cfg, [1])
    assert out.summary["write_energy_J"][0] == pytest.approx(oracle, rel=1e-12)


def test_energy_scaling_warns_beyond_16():
    cfg = apply_overrides(ExperimentConfig(), ["scaling.writes=1", "scaling.backgrounds=1"])
    with pytest.warns(UserWarning, match="exceed"):
        run_energy_scaling(cfg, [17])


def test_density_outputs():
    out = run_density(ExperimentConfig())
    assert "Hybrid (4x4)" in out.files["density.txt"]
    assert out.files["density.csv"].count("\n") == 6


def _run(args, tmp_path):
    return cli.main(args + ["--out", str(tmp_path)])


def test_malformed_config_no_outputs(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "runs"
    assert cli.main(["density", "--config", str(bad), "--out", str(out)]) != 0
    assert not out.exists()
    assert "config error" in capsys.readouterr().err


def test_bad_override_nonzero(tmp_path):
    assert _run(["device-test", "--set", "device.b=-1"], tmp_path / "r") == 2
    assert not (tmp_path / "r").exists()


def test_tile_requires_hybrid(tmp_path):
    assert _run(["tile", "--topology", "crossbar"] + FAST, tmp_path) == 2


@pytest.mark.parametrize("command", cli.COMMANDS)
def test_every_command_reruns_identically(command, tmp_path, capsys):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text("{}")
    before = cfg_file.read_text()
    assert _run([command, "--config", str(cfg_file), "--seed", "7"] + FAST, tmp_path) == 0
    run_dir = Path(capsys.readouterr().out.strip())
    assert run_dir.name.startswith(f"{command}_") and run_dir.name.endswith("_s7")
    man = json.loads((run_dir / "manifest.json").read_text())
    assert man["seed"] == 7 and man["command"] == command and man["files"]
    assert cli.main(["rerun", str(run_dir / "manifest.json"), "--check", "--out", str(tmp_path)]) == 0
    rerun_dir = Path(capsys.readouterr().out.strip())
    assert rerun_dir != run_dir
    for name in man["files"]:
        assert (run_dir / name).read_bytes() == (rerun_dir / name).read_bytes()
    assert cfg_file.read_text() == before
