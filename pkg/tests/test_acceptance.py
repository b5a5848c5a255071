"""Acceptance gate: every criterion at its stated tolerance, full defaults, seed 1.

Each run goes through the command line exactly as a user would start it,
from the configs shipped in ``configs/``, and is then re-verified from its
stored arrays.  One PASS/FAIL line per criterion is printed.
"""
import json
from pathlib import Path

import pytest

from pilotwave.cli import EXIT_OK, main
from pilotwave.report import verify_run

CONFIGS = Path(__file__).parent.parent / "configs"

RUNS = {
    "free_gaussian": "free_gaussian.yaml",
    "box_release": "box_release.yaml",
    "double_slit": "double_slit.yaml",
    "double_slit_which_way": "double_slit_which_way.yaml",
    "stationary_box": "stationary_box.yaml",
    "stationary_harmonic": "stationary_harmonic.yaml",
    "identical_antisymmetric": "identical_antisymmetric.yaml",
    "identical_symmetric": "identical_symmetric.yaml",
    "born_rule": "born_rule.yaml",
    "subspace_measurement": "subspace_measurement.yaml",
    "effective_collapse": "effective_collapse.yaml",
    "solver_hygiene": "solver_hygiene.yaml",
    "structural_invariants": "structural_invariants.yaml",
}

CRITERIA = {
    "AC1": ("equivariance at every stored frame, n = 1e4",
            ["free_gaussian", "double_slit", "box_release"]),
    "AC2": ("outcome frequencies match |c_i|^2 within 3 sigma",
            ["born_rule", "subspace_measurement"]),
    "AC3": ("released box: speed, sign from side, even split", ["box_release"]),
    "AC4": ("double slit: slit side fixes screen side; which-way kills fringes",
            ["double_slit", "double_slit_which_way"]),
    "AC5": ("effective collapse: fidelity and empty-branch deviation", ["effective_collapse"]),
    "AC6": ("real stationary states stand still", ["stationary_box", "stationary_harmonic"]),
    "AC7": ("free Gaussian oracle and plane-wave phase", ["free_gaussian", "solver_hygiene"]),
    "AC8": ("norm, reversibility and continuity convergence", ["solver_hygiene"]),
    "AC9": ("structural invariants, zero violations",
            ["structural_invariants", "identical_antisymmetric", "identical_symmetric"]),
    "AC10": ("node abort fraction at most 1e-3",
             ["free_gaussian", "box_release", "double_slit", "stationary_box",
              "stationary_harmonic", "identical_antisymmetric", "identical_symmetric",
              "born_rule"]),
}


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")
    cache = {}

    def get(name):
        if name not in cache:
            out = root / name
            code = main(["-q", "run", str(CONFIGS / RUNS[name]), "--output", str(out),
                         "--workers", "1"])
            report = out / "report.json"
            doc = json.loads(report.read_text()) if report.exists() else None
            res = verify_run(out) if doc is not None else None
            cache[name] = (code, doc, res)
        return cache[name]

    return get


def _evaluate(ac, runs):
    names = CRITERIA[ac][1]
    checks, problems = [], []
    for name in names:
        code, doc, res = runs(name)
        if doc is None:
            problems.append(f"{name}: no report (exit {code})")
            continue
        integrity = [m for m in res.messages if not m.startswith("failing checks")]
        problems += [f"{name}: verify: {m}" for m in integrity]
        sel = [c for c in doc["checks"] if c["criterion"] == ac]
        if not sel:
            problems.append(f"{name}: no {ac} checks")
        checks += [(name, c) for c in sel]
    failed = [f"{n}/{c['name']}: {c['statistic']} {c['relation']} {c['bound']}"
              for n, c in checks if not c["pass"]]
    return checks, problems, failed


@pytest.mark.parametrize("ac", list(CRITERIA))
def test_acceptance_criterion(ac, runs, capsys):
    checks, problems, failed = _evaluate(ac, runs)
    ok = not problems and not failed
    with capsys.disabled():
        print(f"\n{ac:5s} {'PASS' if ok else 'FAIL'}  {CRITERIA[ac][0]}  "
              f"[{len(checks)} checks in {len(CRITERIA[ac][1])} runs]")
        for line in problems + failed:
            print(f"      {line}")
    assert ok, problems + failed


def test_every_acceptance_run_exits_cleanly(runs):
    """Beyond the tagged checks, every diagnostic of every run passes and verifies."""
    bad = {}
    for name in RUNS:
        code, doc, res = runs(name)
        if code != EXIT_OK or res is None or res.code != EXIT_OK:
            bad[name] = (code, None if res is None else res.messages)
    assert not bad, bad
