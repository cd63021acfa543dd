import csv
import hashlib
import json
from pathlib import Path

import pytest

from hetplatoon.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
DEMO = str(CONFIGS / "demo.toml")


def run(*argv):
    return main([str(a) for a in argv])


def pipeline(out, config=DEMO):
    assert run("gen-arrivals", "--config", config, "--out", out) == 0
    assert run("schedule", "--config", config, "--out", out) == 0
    assert run("profile", "--config", config, "--out", out) == 0
    return run("verify", "--config", config, "--trajectories", "trajectories.csv", "--out", out)


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def write_rows(path, data):
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(data)


@pytest.fixture(scope="module")
def demo_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("demo")
    status = pipeline(out)
    return out, status


def test_pipeline_passes_verification(demo_run):
    out, status = demo_run
    assert status == 0
    for name in ("arrivals.csv", "schedule.csv", "pending.csv", "platoons.csv", "delay_stats.json",
                 "trajectories.csv", "samples.csv", "verify.json"):
        assert (out / name).stat().st_size > 0
    rep = json.loads((out / "verify.json").read_text())
    assert rep["ok"] and rep["checks"]["safety"] > 0 and rep["checks"]["headway"] > 0


def test_manifest_hashes(demo_run):
    out, _ = demo_run
    m = json.loads((out / "schedule.manifest.json").read_text())
    assert m["command"] == "schedule" and m["seed"] == 7
    assert "--out" not in m["argv"]
    assert m["inputs"]["arrivals.csv"] == hashlib.sha256((out / "arrivals.csv").read_bytes()).hexdigest()
    assert m["outputs"]["schedule.csv"] == hashlib.sha256((out / "schedule.csv").read_bytes()).hexdigest()


def test_tampered_schedule_fails(demo_run, tmp_path):
    out, _ = demo_run
    data = rows(out / "schedule.csv")
    # move the second crossing onto the first one
    data[2][4] = data[1][4]
    write_rows(tmp_path / "schedule.csv", data)
    assert run("verify", "--config", DEMO, "--out", tmp_path) == 1
    rep = json.loads((tmp_path / "verify.json").read_text())
    assert not rep["ok"] and rep["violation_counts"]


def test_tampered_trajectory_fails(demo_run, tmp_path, capsys):
    out, _ = demo_run
    (tmp_path / "schedule.csv").write_bytes((out / "schedule.csv").read_bytes())
    data = rows(out / "trajectories.csv")
    k = next(i for i, r in enumerate(data[1:], 1) if float(r[4]) < 0)
    data[k][4] = repr(float(data[k][4]) * 1.5)  # brake harder than allowed
    write_rows(tmp_path / "trajectories.csv", data)
    assert run("verify", "--config", DEMO, "--trajectories", "trajectories.csv", "--out", tmp_path) == 1
    assert "violation [trajectory]" in capsys.readouterr().err


def test_load_prints_table_values(capsys):
    assert run("load", "--config", CONFIGS / "paper_table3.toml", "--lambda", "0.39,1.34,0.06") == 0
    text = capsys.readouterr().out
    for v in ("0.4956", "0.8997", "0.0895"):
        assert v in text


def test_load_cars_only_animation(capsys):
    assert run("load", "--config", CONFIGS / "animation_cars.json") == 0
    assert "0.4943" in capsys.readouterr().out


def test_load_target(capsys):
    assert run("load", "--target", "0.5") == 0
    assert "lambda 0.39" in capsys.readouterr().out


def test_region_too_short_exit(demo_run, tmp_path, capsys):
    out, _ = demo_run
    (tmp_path / "schedule.csv").write_bytes((out / "schedule.csv").read_bytes())
    assert run("profile", "--config", DEMO, "--x0", "20", "--out", tmp_path) == 3
    err = capsys.readouterr().err
    assert "x0 >=" in err and "lane" in err


def test_bad_config_exit(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("v_max = -3.0\n")
    assert run("load", "--config", bad) == 2
    assert "v_max" in capsys.readouterr().err
    bad.write_text("[vehicles.car]\na_max = 'fast'\n")
    assert run("load", "--config", bad) == 2
    assert "vehicles.car.a_max" in capsys.readouterr().err


def test_missing_input_exit(tmp_path):
    assert run("schedule", "--config", DEMO, "--out", tmp_path) == 2


def test_rerun_reproduces_outputs(demo_run, tmp_path):
    out, _ = demo_run
    (tmp_path / "arrivals.csv").write_bytes((out / "arrivals.csv").read_bytes())
    assert run("rerun", out / "schedule.manifest.json", "--out", tmp_path) == 0
    for name in ("schedule.csv", "pending.csv", "platoons.csv", "delay_stats.json"):
        assert (tmp_path / name).read_bytes() == (out / name).read_bytes()


def test_oracle_battery_entry(tmp_path):
    assert run("oracle", "--entries", "0,1", "--h", "0.25", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "oracle.json").read_text())
    assert len(rep["platoons"]) == 2 and rep["all_feasible"]
    assert rep["max_gap"] <= 0.02


def test_oracle_from_schedule(demo_run, tmp_path):
    out, _ = demo_run
    (tmp_path / "schedule.csv").write_bytes((out / "schedule.csv").read_bytes())
    assert run("oracle", "--config", DEMO, "--schedule", "schedule.csv", "--platoon", "0", "--h", "0.5",
               "--lp-out", "p0.lp", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "oracle.json").read_text())
    assert [c["status"] for c in rep["comparisons"]] == ["Optimal", "Optimal"]
    assert (tmp_path / "p0.lp").read_text().startswith("\\ platoon")
    assert run("oracle", "--config", DEMO, "--schedule", "schedule.csv", "--platoon", "999999",
               "--out", tmp_path) == 2


def test_capacity_and_plots(tmp_path):
    args = ("capacity", "--scenario", "symmetric", "--horizon", "5000", "--seeds", "1,2",
            "--x-from", "100", "--x-to", "700", "--x-step", "50", "--plot")
    assert run(*args, "--out", tmp_path / "a") == 0
    assert run(*args, "--out", tmp_path / "b") == 0
    data = rows(tmp_path / "a" / "capacity.csv")
    assert data[0] == ["x", "n1", "n2", "prop_real", "prop_inf", "p_q_gt_n1", "p_q_gt_n2"]
    assert len(data) == 14
    for name in ("capacity.json", "capacity.csv", "capacity.png"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_profile_plot(demo_run, tmp_path):
    out, _ = demo_run
    (tmp_path / "schedule.csv").write_bytes((out / "schedule.csv").read_bytes())
    assert run("profile", "--config", DEMO, "--max-platoons", "20", "--plot", "--out", tmp_path) == 0
    png = (tmp_path / "trajectories.png").read_bytes()
    assert png[:8] == b"\x89PNG\r\n\x1a\n"
