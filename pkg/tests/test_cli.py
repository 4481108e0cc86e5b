import json

import yaml

from conftest import tiny_tree
from ecm_invade.cli import main


def write_tree(tmp_path, tree, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(tree))
    return str(path)


def test_run_command(tmp_path):
    cfg = write_tree(tmp_path, tiny_tree())
    code = main(["run", "--config", cfg, "--out", str(tmp_path / "out"), "--quiet"])
    assert code == 0
    run_dirs = list((tmp_path / "out").glob("run-*"))
    assert len(run_dirs) == 1
    assert (run_dirs[0] / "summary.json").exists()


def test_run_with_overrides(tmp_path):
    cfg = write_tree(tmp_path, tiny_tree())
    code = main(["run", "--config", cfg, "--set", "t_end=1.0",
                 "--out", str(tmp_path / "out"), "--quiet"])
    assert code == 0
    summary = json.loads(next((tmp_path / "out").glob("run-*/summary.json")).read_text())
    assert summary["t_end"] == 1.0


def test_invalid_config_exit_2(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("model:\n  lamda: 2.0\n")
    assert main(["run", "--config", str(path), "--quiet"]) == 2


def test_missing_config_exit_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.yaml"), "--quiet"]) == 2


def test_unknown_override_exit_2(tmp_path):
    cfg = write_tree(tmp_path, tiny_tree())
    assert main(["run", "--config", cfg, "--set", "nope=1", "--quiet"]) == 2


def test_solver_failure_exit_1(tmp_path):
    tree = tiny_tree()
    tree["explicit"].update({"integrator": "rk4_fixed", "dt_init": 0.5})
    cfg = write_tree(tmp_path, tree)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 1


def test_sweep_empty_lambdas_exit_2(tmp_path):
    cfg = write_tree(tmp_path, tiny_tree())
    assert main(["sweep", "--config", cfg, "--quiet"]) == 2
    assert main(["sweep", "--config", cfg, "--lambdas", "", "--quiet"]) == 2


def test_sweep_command(tmp_path, monkeypatch):
    monkeypatch.setenv("ECM_INVADE_THREADS", "2")
    cfg = write_tree(tmp_path, tiny_tree())
    out = str(tmp_path / "sweep")
    code = main(["sweep", "--config", cfg, "--lambdas", "1,10", "--out", out, "--quiet"])
    assert code == 0
    records = json.loads((tmp_path / "sweep" / "sweep_summary.json").read_text())
    assert [r["lambda"] for r in records] == [1.0, 10.0]


def test_crosscheck_command(tmp_path):
    tree = tiny_tree()
    tree["crosscheck"].update({"taus": [0.1, 0.05], "t_end": 0.5})
    cfg = write_tree(tmp_path, tree)
    code = main(["crosscheck", "--config", cfg, "--out", str(tmp_path / "cc"), "--quiet"])
    assert code in (0, 1)  # monotonicity is the full acceptance run's claim
    assert (tmp_path / "cc" / "crosscheck.json").exists()


def test_report_command(tiny_run):
    code = main(["report", "--run", str(tiny_run.run_dir), "--quiet"])
    assert code == 0
    assert (tiny_run.run_dir / "profiles.png").exists()
    assert (tiny_run.run_dir / "front_position.png").exists()


def test_report_bad_dir_exit_2(tmp_path):
    assert main(["report", "--run", str(tmp_path), "--quiet"]) == 2


def test_usage_error_exit_2():
    assert main(["run", "--quiet"]) == 2
    assert main([]) == 2
