import csv
import json

import pytest

from lugre_lab.cli import main, thread_count
from lugre_lab.sim import CSV_COLUMNS


def write(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


SMALL = {"name": "small", "loop_kind": "velocity", "reference": {"type": "step"},
         "controller": {"Kp": 1.6, "Ki": 0.16}, "duration": 0.05, "record_stride": 10}


def test_run_writes_csv_and_report(tmp_path, capsys):
    rc = main(["run", "--config", write(tmp_path, SMALL), "--out", str(tmp_path / "o")])
    assert rc == 0
    with open(tmp_path / "o" / "small.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 1 + 501
    rep = json.loads((tmp_path / "o" / "small.report.json").read_text())
    assert set(rep["variants"]["small"]["metrics"]) == {"rmse", "steady_state_error", "overshoot",
                                                        "settling_time"}
    assert "rmse=" in capsys.readouterr().out


def test_run_preset_with_overrides(tmp_path):
    rc = main(["run", "--preset", "table1-position", "--duration", "0.02", "--out", str(tmp_path)])
    assert rc == 0 and (tmp_path / "table1-position.csv").exists()


def test_invalid_config_exit_2(tmp_path, capsys):
    rc = main(["run", "--config", write(tmp_path, dict(SMALL, dt=0)), "--out", str(tmp_path)])
    assert rc == 2
    assert "dt" in capsys.readouterr().err


def test_bad_json_exit_2(tmp_path):
    path = tmp_path / "x.json"
    path.write_text("{nope")
    assert main(["run", "--config", str(path)]) == 2


def test_missing_file_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.json")]) == 2


def test_config_and_preset_are_exclusive(tmp_path):
    assert main(["run", "--config", write(tmp_path, SMALL), "--preset", "table1-velocity"]) == 2
    assert main(["run"]) == 2


def test_diverged_exit_3(tmp_path, capsys):
    data = dict(SMALL, controller={"Kp": 1e4, "Ki": 0}, friction_enabled=False)
    assert main(["run", "--config", write(tmp_path, data), "--out", str(tmp_path)]) == 3
    assert "diverged" in capsys.readouterr().err


def test_compare_three_curves(tmp_path, capsys):
    rc = main(["compare", "--config", write(tmp_path, SMALL), "--out", str(tmp_path),
               "--variants", "no_friction,uncompensated,oracle"])
    assert rc == 0
    rep = json.loads((tmp_path / "small-compare.report.json").read_text())
    assert list(rep["variants"]) == ["no_friction", "uncompensated", "oracle"]
    for v in rep["variants"].values():
        assert v["csv"].endswith(".csv")
    out = capsys.readouterr().out
    assert out.count("rmse=") == 3


def test_compare_open_loop_decay_table(tmp_path):
    data = {"name": "ol", "loop_kind": "open_loop_observer", "reference": {"type": "constant", "value": 0.05},
            "observer": {"type": "natural"}, "duration": 0.3, "record_stride": 10,
            "initial": {"z_hat": -0.001, "w": 0.05, "w_hat": 0.04},
            "variants": [{"name": "natural"},
                         {"name": "existing", "observer": {"type": "existing", "k": 0.35}},
                         {"name": "exponential",
                          "observer": {"type": "proposed_exponential", "C": 0.0022, "alpha": 1000,
                                       "beta": 1000}}]}
    assert main(["compare", "--config", write(tmp_path, data), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "ol-compare.report.json").read_text())
    rates = {k: v["decay_fits"]["e_z"]["rate"] for k, v in rep["variants"].items()}
    assert rates["natural"] == pytest.approx(45.61, rel=0.02)
    assert rates["existing"] == pytest.approx(rates["natural"], rel=1e-9)
    checks = rep["variants"]["exponential"]["checks"]
    assert checks and all(c["passed"] for c in checks)


def test_compare_single_variant_is_usage_error(tmp_path):
    assert main(["compare", "--config", write(tmp_path, SMALL), "--variants", "oracle"]) == 2


def test_compare_bad_variant(tmp_path):
    assert main(["compare", "--config", write(tmp_path, SMALL), "--variants", "oracle,zzz"]) == 2


def test_sweep_table(tmp_path):
    rc = main(["sweep", "--config", write(tmp_path, SMALL), "--param", "controller.Ki",
               "--range", "0.1:10:3:log", "--out", str(tmp_path)])
    assert rc == 0
    with open(tmp_path / "small-sweep.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["controller.Ki"]) for r in rows] == pytest.approx([0.1, 1.0, 10.0])
    assert all(r["rmse"] for r in rows)


@pytest.mark.parametrize("extra", [["--range", "1:2:0"], ["--values", ""], [],
                                   ["--range", "a:b:c"], ["--range", "0:1:3:log"]])
def test_sweep_usage_errors(tmp_path, extra):
    assert main(["sweep", "--config", write(tmp_path, SMALL), "--param", "controller.Ki"] + extra) == 2


def test_sweep_non_numeric_param(tmp_path):
    assert main(["sweep", "--config", write(tmp_path, SMALL), "--param", "loop_kind",
                 "--values", "1,2"]) == 2


def test_verify_gains_exit_0(tmp_path, capsys):
    assert main(["verify", "gains", "--seed", "3", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "verify-gains.report.json").read_text())
    assert rep["seed"] == 3 and all(c["passed"] for c in rep["checks"])
    assert "14/14 checks passed" in capsys.readouterr().out


def test_verify_failure_exit_1(monkeypatch):
    from lugre_lab import verify
    monkeypatch.setattr(verify, "run_suite", lambda name, seed=0: [verify.Check("x", False, 1.0, 0.0)])
    assert main(["verify", "oracle"]) == 1


def test_argparse_usage_exit_2():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_thread_count(monkeypatch):
    monkeypatch.setenv("LUGRE_LAB_THREADS", "2")
    assert thread_count(10) == 2 and thread_count(1) == 1
    monkeypatch.setenv("LUGRE_LAB_THREADS", "0")
    assert thread_count(3) >= 1
    monkeypatch.setenv("LUGRE_LAB_THREADS", "x")
    from lugre_lab.sim import ConfigError
    with pytest.raises(ConfigError):
        thread_count(3)


def test_report_carries_loop_figures(tmp_path):
    assert main(["run", "--config", write(tmp_path, SMALL), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "small.report.json").read_text())
    loop = rep["variants"]["small"]["loop"]
    assert loop["bandwidth_hz"] == pytest.approx(115.76, rel=1e-3)
    assert loop["spr_margin"] < 0
