import json
import subprocess
import sys

import pytest
import yaml

from pilotwave.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, OUTPUT_ENV, main

SMALL_FREE = {"n_traj": 2000, "points": 2048, "extent": 40.0, "dt": 0.02, "t_final": 2.0}


def _config(tmp_path, doc, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def _free(tmp_path, **extra):
    return _config(tmp_path, {"scenario": "free_gaussian", "seed": 1,
                              "parameters": dict(SMALL_FREE), **extra})


def _stable(path):
    doc = json.loads(path.read_text())
    for key in ("created", "runtime_s", "content_hash"):
        doc.pop(key)
    return doc


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "free_gaussian" in out and "structural_invariants" in out


def test_list_scenarios_json(capsys):
    assert main(["list-scenarios", "--json"]) == EXIT_OK
    cat = json.loads(capsys.readouterr().out)
    assert len(cat) >= 6
    assert {"id", "claim", "criteria", "defaults", "schema"} <= set(cat[0])


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["run", "--bogus", "x.yaml"])
    assert exc.value.code == 2


def test_negative_mass_names_field(tmp_path, capsys):
    cfg = _config(tmp_path, {"scenario": "box_release", "parameters": {"mass": -1.0}})
    assert main(["run", cfg, "--output", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "parameters.mass" in capsys.readouterr().err


@pytest.mark.parametrize("doc", [
    {"scenario": "free_gaussian", "parameters": {"no_such_key": 1}},
    {"scenario": "free_gaussian", "colour": "blue"},
    {"scenario": "no_such_scenario"},
    {"parameters": {}},
])
def test_bad_configs_exit_2(tmp_path, doc):
    assert main(["run", _config(tmp_path, doc), "--output", str(tmp_path / "o")]) == EXIT_CONFIG


def test_missing_and_malformed_config(tmp_path):
    assert main(["run", str(tmp_path / "absent.yaml")]) == EXIT_CONFIG
    bad = tmp_path / "bad.yaml"
    bad.write_text("scenario: [unclosed\n")
    assert main(["run", str(bad)]) == EXIT_CONFIG


def test_unstable_step_exits_3(tmp_path):
    cfg = _config(tmp_path, {"scenario": "solver_hygiene",
                             "parameters": {"dt": 0.2, "norm_steps": 10}})
    assert main(["run", cfg, "--output", str(tmp_path / "o")]) == EXIT_NUMERIC


def test_workers_must_be_positive(tmp_path):
    assert main(["run", _free(tmp_path), "--workers", "0"]) == EXIT_CONFIG


def test_run_then_verify(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", _free(tmp_path), "--output", str(out), "--workers", "1"]) == EXIT_OK
    assert capsys.readouterr().out == ""
    report = json.loads((out / "report.json").read_text())
    assert report["passed"] and report["config_hash"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config_hash"] == report["config_hash"]
    assert any(k.endswith(".csv") for k in report["files"])
    assert main(["verify", str(out)]) == EXIT_OK


def test_verify_detects_truncated_csv(tmp_path):
    out = tmp_path / "run"
    main(["run", _free(tmp_path), "--output", str(out), "--workers", "1"])
    csv_file = sorted((out / "csv").glob("*.csv"))[0]
    csv_file.write_text(csv_file.read_text()[:100])
    assert main(["verify", str(out)]) != EXIT_OK


def test_verify_detects_flipped_pass_flag(tmp_path):
    out = tmp_path / "run"
    main(["run", _free(tmp_path), "--output", str(out), "--workers", "1"])
    doc = json.loads((out / "report.json").read_text())
    doc["checks"][0]["pass"] = not doc["checks"][0]["pass"]
    (out / "report.json").write_text(json.dumps(doc))
    assert main(["verify", str(out)]) == EXIT_CHECK


def test_failing_checks_exit_1(tmp_path):
    # at a low mode number the momentum spread exceeds the late-speed tolerance
    cfg = _config(tmp_path, {"scenario": "box_release",
                             "parameters": {"k_mode": 200, "n_traj": 2000, "points": 1024}})
    assert main(["run", cfg, "--output", str(tmp_path / "o")]) == EXIT_CHECK


def test_report_identical_across_workers(tmp_path):
    cfg = _free(tmp_path)
    assert main(["run", cfg, "--output", str(tmp_path / "a"), "--workers", "1"]) == EXIT_OK
    assert main(["run", cfg, "--output", str(tmp_path / "b"), "--workers", "2"]) == EXIT_OK
    assert _stable(tmp_path / "a" / "report.json") == _stable(tmp_path / "b" / "report.json")
    for f in sorted((tmp_path / "a" / "data").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / "data" / f.name).read_bytes()


def test_seed_override_changes_output(tmp_path):
    cfg = _free(tmp_path)
    main(["run", cfg, "--output", str(tmp_path / "a"), "--workers", "1"])
    main(["run", cfg, "--output", str(tmp_path / "b"), "--workers", "1", "--seed", "7"])
    a, b = _stable(tmp_path / "a" / "report.json"), _stable(tmp_path / "b" / "report.json")
    assert a["seeds"] != b["seeds"] and a["config_hash"] != b["config_hash"]


def test_output_env_default_root(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "root"))
    assert main(["run", _free(tmp_path), "--workers", "1"]) == EXIT_OK
    assert (tmp_path / "root" / "free_gaussian-seed1" / "report.json").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "pilotwave", "run", _free(tmp_path),
                          "--output", str(tmp_path / "o"), "--workers", "1"],
                         capture_output=True, text=True)
    assert res.returncode == EXIT_OK
    assert res.stdout == ""
    assert "PASS" in res.stderr
    bad = subprocess.run([sys.executable, "-m", "pilotwave", "run", "--bogus"],
                         capture_output=True, text=True)
    assert bad.returncode == 2


def test_shipped_configs_validate():
    from pathlib import Path

    from pilotwave.cli import load_config
    configs = sorted((Path(__file__).parent.parent / "configs").glob("*.yaml"))
    assert len(configs) >= 6
    for path in configs:
        load_config(path)
