from src.cli import main
from src.series.LambdaSeries import LambdaSeries
from src.utils.config import RunConfig
from src.utils.errors import ConfigError
import json
import os
import pytest

CONFIGS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "configs")


def config(name):
    return os.path.join(CONFIGS, name)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def value_after(out, label):
    line = next(line for line in out.splitlines() if line.startswith(label))
    return line.split(":", 1)[1].strip()


def test_trace_onedim(tmp_path, capsys):
    code, out, _ = run(capsys, "trace", "--config", config("onedim.json"), "--t-end", "5", "--out", str(tmp_path))
    assert code == 0
    assert "switches: 1" in out
    assert "status: t_end" in out
    assert (tmp_path / "trace.csv").exists()
    switches = json.loads((tmp_path / "switches.json").read_text())["switches"]
    assert len(switches) == 1 and switches[0]["t"] == pytest.approx(1.0, abs=1e-8)


def test_trace_flag_overrides_config(tmp_path, capsys):
    code, out, _ = run(capsys, "trace", "--config", config("onedim.json"), "--t-end", "0.5", "--out", str(tmp_path))
    assert code == 0
    assert "switches: 0" in out


def test_missing_config(tmp_path, capsys):
    missing = str(tmp_path / "missing.json")
    code, _, err = run(capsys, "trace", "--config", missing)
    assert code == 1
    assert missing in err


def test_unknown_config_key(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"mesh": "tetrahedron", "stepsize": 0.1}))
    code, _, err = run(capsys, "yamabe", "--config", str(path))
    assert code == 1
    assert "stepsize" in err


def test_spiral_hits_chattering_guard(tmp_path, capsys):
    code, _, err = run(capsys, "trace", "--config", config("spiral.json"), "--out", str(tmp_path))
    assert code == 2
    assert "chattering guard" in err
    status = json.loads((tmp_path / "switches.json").read_text())["status"]
    assert status == "chattering"


def test_solve_bernoulli(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--config", config("bernoulli.json"), "--out", str(tmp_path))
    assert code == 0
    assert float(value_after(out, "residual")) <= 1e-12
    payload = json.loads((tmp_path / "solution.json").read_text())
    series = LambdaSeries.from_dict(payload["series"])
    assert series.order == 12
    assert payload["resonance_log"] == []


def test_solve_logs_resonance(tmp_path, capsys):
    code, out, _ = run(capsys, "solve", "--config", config("resonance.json"), "--out", str(tmp_path))
    assert code == 0
    assert "'J': [2, 0], 'i': 1" in value_after(out, "resonances")


def test_solve_rejects_nondiagonal_field(tmp_path, capsys):
    code, _, err = run(capsys, "solve", "--config", config("nondiagonal.json"), "--out", str(tmp_path))
    assert code == 1
    assert "NotDiagonalLinearPart" in err


def test_asym_decoupled(capsys):
    code, out, _ = run(capsys, "asym", "--config", config("decoupled.json"))
    assert code == 0
    assert out.strip() == "EventuallyInside cell 1"


def test_asym_from_traced_state(tmp_path, capsys):
    path = tmp_path / "traced.json"
    path.write_text(json.dumps({"cover": config("decoupled.cover.json"), "fields": config("decoupled.fields.json"),
                                "x0": [1.0, 2.0], "t_end": 20.0}))
    code, out, _ = run(capsys, "asym", "--config", str(path))
    assert code == 0
    assert "EventuallyInside cell 1" in out


def test_asym_equilibrium_outside_cell(capsys):
    code, _, err = run(capsys, "asym", "--config", config("asym_outside.json"))
    assert code == 1
    assert "EquilibriumNotInCell" in err


def test_asym_undecided(capsys):
    code, out, _ = run(capsys, "asym", "--config", config("undecided.json"))
    assert code == 3
    assert "Undecided: truncation-limited" in out


def test_yamabe_tetrahedron(tmp_path, capsys):
    code, out, _ = run(capsys, "yamabe", "--config", config("tetrahedron.json"), "--out", str(tmp_path))
    assert code == 0
    assert int(value_after(out, "flips")) >= 0
    assert float(value_after(out, "final deviation")) <= 1e-6
    assert (tmp_path / "run.csv").exists()


def test_yamabe_fixed_point(tmp_path, capsys):
    code, out, _ = run(capsys, "yamabe", "--config", config("octahedron.json"), "--out", str(tmp_path))
    assert code == 0
    assert "flips: 0" in out


def test_yamabe_rhombus_flips(tmp_path, capsys):
    code, out, _ = run(capsys, "yamabe", "--config", config("rhombus.json"), "--out", str(tmp_path))
    assert code == 0
    assert int(value_after(out, "flips")) >= 1


def test_yamabe_degenerate_mesh(tmp_path, capsys):
    code, _, err = run(capsys, "yamabe", "--config", config("degenerate.json"), "--out", str(tmp_path))
    assert code == 1
    assert "DegenerateTriangle" in err


def test_verify_geometry(capsys):
    code, out, _ = run(capsys, "verify", "geometry", "--seed", "7", "--scale", "0.05")
    assert code == 0
    assert out.splitlines()[-1] == "5/5 properties passed"
    assert all(line.startswith("PASS") for line in out.splitlines()[:-1])


def test_config_resolves_paths_and_validates():
    cfg = RunConfig.load(config("decoupled.json"))
    assert os.path.isabs(cfg.cover) and os.path.exists(cfg.cover)
    assert RunConfig.load(config("tetrahedron.json")).mesh == "tetrahedron"
    cfg.override(order=None, t_end=3.0)
    assert (cfg.order, cfg.t_end) == (6, 3.0)
    with pytest.raises(ConfigError):
        RunConfig(order=1).validate()
    with pytest.raises(ConfigError):
        RunConfig(tol=0.0).validate()
    with pytest.raises(ConfigError, match="x0"):
        RunConfig().validate(required=("x0",))


def test_unknown_suite_is_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        main(["verify", "bogus"])
    assert info.value.code == 2
    assert "invalid choice" in capsys.readouterr().err
