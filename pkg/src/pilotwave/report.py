"""Scenario reports: JSON plus content-hashed array archives, and their verification."""
from __future__ import annotations

import hashlib
import io
import json
import math
import time
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .checks import Check, evaluate

SCHEMA_VERSION = "1.0"
VOLATILE = ("runtime_s", "created", "content_hash")
_EPOCH = (1980, 1, 1, 0, 0, 0)


def save_arrays(path, arrays: dict) -> None:
    """Write an ``.npz`` archive byte-identically for identical arrays (fixed zip timestamps)."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(arrays[name]), allow_pickle=False)
            info = zipfile.ZipInfo(name + ".npy", date_time=_EPOCH)
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, buf.getvalue())


def load_arrays(path) -> dict:
    with np.load(path, allow_pickle=False) as data:
        return {k: data[k] for k in data.files}


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))


def content_hash(report: dict) -> str:
    body = {k: v for k, v in report.items() if k not in VOLATILE}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


@dataclass
class ScenarioReport:
    """Outcome of one scenario run.

    ``datasets`` maps a dataset name to the arrays it holds; every check
    names the dataset it is computed from.
    """

    scenario_id: str
    parameters: dict
    seeds: dict
    checks: list[Check] = field(default_factory=list)
    datasets: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)
    runtime_s: float = 0.0
    ensemble: object = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "artifact_version": __version__,
                "scenario_id": self.scenario_id, "parameters": self.parameters,
                "seeds": self.seeds, "checks": [c.to_dict() for c in self.checks],
                "passed": self.passed, "summary": self.summary, "files": self.files,
                "runtime_s": self.runtime_s}

    def write(self, outdir, extra: dict | None = None) -> Path:
        """Write ``report.json`` and ``data/<dataset>.npz`` under ``outdir``."""
        out = Path(outdir)
        (out / "data").mkdir(parents=True, exist_ok=True)
        datasets = {}
        for name in sorted(self.datasets):
            rel = f"data/{name}.npz"
            save_arrays(out / rel, self.datasets[name])
            datasets[name] = {"file": rel, "sha256": sha256_file(out / rel)}
        for key, rel in list(self.files.items()):
            if isinstance(rel, str) and (out / rel).exists():
                self.files[key] = {"file": rel, "sha256": sha256_file(out / rel)}
        doc = self.to_dict()
        doc["datasets"] = datasets
        if extra:
            doc.update(extra)
        doc["created"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
        doc["content_hash"] = content_hash(doc)
        path = out / "report.json"
        path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")
        return path


@dataclass
class VerifyResult:
    code: int
    messages: list[str]


def _same(a, b) -> bool:
    if isinstance(a, list) or isinstance(b, list):
        return isinstance(a, list) and isinstance(b, list) and len(a) == len(b) and all(
            _same(x, y) for x, y in zip(a, b))
    if isinstance(a, str) or isinstance(b, str):
        return str(a) == str(b)
    try:
        return float(a) == float(b) or (math.isnan(float(a)) and math.isnan(float(b)))
    except (TypeError, ValueError):
        return a == b


def verify_run(path) -> VerifyResult:
    """Recompute every check of a stored run from its datasets.

    Returns exit code 0 when all files are intact and every check reproduces
    and passes, 1 on any discrepancy or failing check, 2 on missing or
    corrupt files.
    """
    root = Path(path)
    report_path = root / "report.json" if root.is_dir() else root
    root = report_path.parent
    if not report_path.exists():
        return VerifyResult(2, [f"missing report: {report_path}"])
    try:
        doc = json.loads(report_path.read_text())
    except json.JSONDecodeError as exc:
        return VerifyResult(2, [f"unreadable report: {exc}"])
    msgs = []
    if "content_hash" in doc and content_hash(doc) != doc["content_hash"]:
        msgs.append("report.json content hash does not match its body")
    loaded = {}
    entries = dict(doc.get("datasets", {}))
    for key, ent in doc.get("files", {}).items():
        if isinstance(ent, dict):
            entries[f"file:{key}"] = ent
    for name, ent in entries.items():
        f = root / ent["file"]
        if not f.exists():
            msgs.append(f"missing file {ent['file']}")
            continue
        if sha256_file(f) != ent["sha256"]:
            msgs.append(f"hash mismatch for {ent['file']}")
            continue
        if not name.startswith("file:"):
            try:
                loaded[name] = load_arrays(f)
            except (OSError, ValueError, zipfile.BadZipFile) as exc:
                msgs.append(f"unreadable dataset {ent['file']}: {exc}")
    if any(not m.startswith("report.json") for m in msgs):
        return VerifyResult(2, msgs)

    all_pass = True
    for c in doc.get("checks", []):
        if c["dataset"] not in loaded:
            msgs.append(f"{c['name']}: dataset {c['dataset']!r} not listed")
            continue
        stat, bound, rel, ok, _ = evaluate(c["kind"], loaded[c["dataset"]], c["params"])
        if not _same(stat, c["statistic"]):
            msgs.append(f"{c['name']}: statistic {c['statistic']!r} recomputes to {stat!r}")
        if not _same(bound, c["bound"]):
            msgs.append(f"{c['name']}: bound {c['bound']!r} recomputes to {bound!r}")
        if rel != c["relation"]:
            msgs.append(f"{c['name']}: relation {c['relation']!r} should be {rel!r}")
        if ok != c["pass"]:
            msgs.append(f"{c['name']}: pass flag {c['pass']} but recomputed {ok}")
        all_pass = all_pass and ok
    if doc.get("passed") != all_pass:
        msgs.append(f"report passed={doc.get('passed')} but checks give {all_pass}")
    if not msgs and not all_pass:
        failed = [c["name"] for c in doc.get("checks", []) if not c["pass"]]
        msgs.append("failing checks: " + ", ".join(failed))
    return VerifyResult(0 if not msgs else 1, msgs)
