import json

import numpy as np
import pytest

from pilotwave.checks import REGISTRY, evaluate, make_check
from pilotwave.report import (ScenarioReport, canonical_json, content_hash, load_arrays,
                              save_arrays, sha256_file, verify_run)


def test_generic_checks():
    a = {"x": np.array([1e-9, -3e-9]), "ok": np.array([1, 1, 0, 1]), "z": np.zeros(5)}
    assert evaluate("max_abs_le", a, {"key": "x", "bound": 1e-8})[3]
    assert not evaluate("max_abs_le", a, {"key": "x", "bound": 1e-9})[3]
    assert evaluate("fraction_ge", a, {"key": "ok", "bound": 0.75})[0] == 0.75
    assert evaluate("count_zero", a, {"key": "z"})[3]
    assert evaluate("value_in", {"r": np.array(4.1)}, {"key": "r", "low": 3.0, "high": 5.0})[3]


def test_nan_statistic_fails():
    assert not evaluate("value_le", {"v": np.array(np.nan)}, {"key": "v", "bound": 1.0})[3]


def test_binomial_within():
    hits = np.array([1] * 52 + [0] * 48)
    stat, bound, rel, ok, detail = evaluate("binomial_within", {"h": hits}, {"key": "h", "p0": 0.5})
    assert stat == pytest.approx(0.02) and bound == pytest.approx(0.15) and ok
    assert detail["n"] == 100
    # p0 = 1 demands every trial
    assert not evaluate("binomial_within", {"h": hits}, {"key": "h", "p0": 1.0})[3]


def test_unknown_kind():
    with pytest.raises(KeyError):
        evaluate("no_such_check", {}, {})


def test_registry_covers_scenario_needs():
    for kind in ("equivariance_tv", "equivariance_ks", "gaussian_oracle", "sign_changes",
                 "mismatch_count", "ratio_in", "visibility_le", "oscillation_frequency"):
        assert kind in REGISTRY


def test_save_arrays_is_byte_identical(tmp_path):
    arrays = {"b": np.arange(5.0), "a": np.eye(3, dtype=np.int8)}
    save_arrays(tmp_path / "1.npz", arrays)
    save_arrays(tmp_path / "2.npz", dict(reversed(list(arrays.items()))))
    assert sha256_file(tmp_path / "1.npz") == sha256_file(tmp_path / "2.npz")
    back = load_arrays(tmp_path / "1.npz")
    np.testing.assert_array_equal(back["a"], arrays["a"])


def test_canonical_json_handles_numpy():
    doc = {"b": np.float64(0.5), "a": [np.int64(2), np.bool_(True)], "c": float("nan")}
    assert canonical_json(doc) == '{"a":[2,true],"b":0.5,"c":"nan"}'


def test_content_hash_ignores_volatile():
    d = {"x": 1, "created": "now", "runtime_s": 3.2}
    assert content_hash(d) == content_hash({"x": 1, "created": "later", "runtime_s": 9.0})
    assert content_hash(d) != content_hash({"x": 2})


def _report():
    arrays = {"err": np.array([1e-9, 2e-9])}
    rep = ScenarioReport("demo", {"n": 2}, {"root": 1}, datasets={"d": arrays})
    rep.add(make_check("small", "max_abs_le", "d", arrays, key="err", bound=1e-8))
    return rep


def test_write_and_verify_roundtrip(tmp_path):
    _report().write(tmp_path)
    res = verify_run(tmp_path)
    assert res.code == 0, res.messages


def test_verify_detects_tampered_dataset(tmp_path):
    _report().write(tmp_path)
    save_arrays(tmp_path / "data" / "d.npz", {"err": np.array([1.0, 2.0])})
    res = verify_run(tmp_path)
    assert res.code == 2 and "hash mismatch" in res.messages[0]


def test_verify_detects_flipped_flag(tmp_path):
    path = _report().write(tmp_path)
    doc = json.loads(path.read_text())
    doc["checks"][0]["pass"] = False
    path.write_text(json.dumps(doc))
    res = verify_run(tmp_path)
    assert res.code == 1
    assert any("pass flag" in m for m in res.messages)


def test_verify_reports_failing_check(tmp_path):
    arrays = {"err": np.array([1.0])}
    rep = ScenarioReport("demo", {}, {}, datasets={"d": arrays})
    rep.add(make_check("small", "max_abs_le", "d", arrays, key="err", bound=1e-8))
    rep.write(tmp_path)
    res = verify_run(tmp_path)
    assert res.code == 1 and "failing checks" in res.messages[0]


def test_verify_missing_report(tmp_path):
    assert verify_run(tmp_path).code == 2
