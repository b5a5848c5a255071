"""Command-line front end: ``run``, ``verify`` and ``list-scenarios``.

Exit codes: 0 success, 1 check failure, 2 configuration or usage error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import jsonschema
import yaml

from . import __version__
from .errors import ConfigError, NumericalInstabilityError, PilotWaveError
from .export import export_csv
from .report import canonical_json, verify_run

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
OUTPUT_ENV = "PILOTWAVE_OUTPUT"
DEFAULT_SEED = 1

log = logging.getLogger("pilotwave")

EMIT_SCHEMA = {"type": "object", "additionalProperties": False,
               "properties": {"trajectories": {"type": "boolean"},
                              "histograms": {"type": "boolean"},
                              "trials": {"type": "boolean"},
                              "max_trajectories": {"type": "integer", "minimum": 0}}}
EMIT_DEFAULTS = {"trajectories": True, "histograms": True, "trials": True, "max_trajectories": 100}


def config_schema(scenario) -> dict:
    return {"type": "object", "additionalProperties": False, "required": ["scenario"],
            "properties": {"scenario": {"const": scenario.id},
                           "seed": {"type": "integer", "minimum": 0},
                           "workers": {"type": "integer", "minimum": 1},
                           "output": {"type": "string"},
                           "parameters": scenario.schema(),
                           "emit": EMIT_SCHEMA}}


def _field(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "additionalProperties":
        return f"{path + ': ' if path else ''}{err.message}"
    return f"{path or '<root>'}: {err.message}"


def load_config(path) -> dict:
    """Read and validate a YAML run configuration; raises :class:`ConfigError`."""
    from .scenarios import CATALOG

    try:
        doc = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    sid = doc.get("scenario")
    if sid not in CATALOG:
        raise ConfigError(f"scenario: unknown scenario {sid!r}; choose from {sorted(CATALOG)}")
    validator = jsonschema.Draft202012Validator(config_schema(CATALOG[sid]))
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(_field(e) for e in errors))
    return doc


def config_hash(doc: dict) -> str:
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def resolve_output(args_output, doc: dict, seed: int) -> Path:
    if args_output:
        return Path(args_output)
    if doc.get("output"):
        return Path(doc["output"])
    root = Path(os.environ.get(OUTPUT_ENV, "runs"))
    return root / f"{doc['scenario']}-seed{seed}"


def _has_nan(report) -> bool:
    for c in report.checks:
        s = c.statistic
        if isinstance(s, float) and math.isnan(s):
            return True
    return False


def cmd_run(args) -> int:
    from .scenarios import get

    try:
        doc = load_config(args.config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    seed = args.seed if args.seed is not None else doc.get("seed", DEFAULT_SEED)
    workers = args.workers or doc.get("workers") or os.cpu_count() or 1
    resolved = {"scenario": doc["scenario"], "seed": seed,
                "parameters": doc.get("parameters", {}),
                "emit": {**EMIT_DEFAULTS, **doc.get("emit", {})}}
    outdir = resolve_output(args.output, doc, seed)
    scenario = get(doc["scenario"])
    log.info("running %s (seed %d, %d workers) -> %s", scenario.id, seed, workers, outdir)
    t0 = time.perf_counter()
    try:
        report = scenario.run(dict(resolved["parameters"]), seed, workers=workers)
    except (NumericalInstabilityError, FloatingPointError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (ConfigError, ValueError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except PilotWaveError as exc:
        log.error("run failed: %s: %s", type(exc).__name__, exc)
        return EXIT_CHECK

    emit = resolved["emit"]
    outdir.mkdir(parents=True, exist_ok=True)
    export_csv(report, outdir, emit["trajectories"], emit["histograms"], emit["trials"],
               emit["max_trajectories"])
    chash = config_hash(resolved)
    path = report.write(outdir, extra={"config_hash": chash})
    manifest = {"artifact_version": __version__, "config_hash": chash, "config": resolved,
                "report": {"file": path.name,
                           "content_hash": json.loads(path.read_text())["content_hash"]},
                "wall_time_s": time.perf_counter() - t0}
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    for c in report.checks:
        log.info("%-4s %-40s %s %s %s", "PASS" if c.passed else "FAIL", c.name,
                 c.statistic, c.relation, c.bound)
    if _has_nan(report):
        log.error("non-finite check statistic")
        return EXIT_NUMERIC
    failed = [c.name for c in report.checks if not c.passed]
    if failed:
        log.error("%d check(s) failed: %s", len(failed), ", ".join(failed))
        return EXIT_CHECK
    log.info("all %d checks passed", len(report.checks))
    return EXIT_OK


def cmd_verify(args) -> int:
    res = verify_run(args.path)
    for m in res.messages:
        log.error("%s", m)
    if res.code == EXIT_OK:
        log.info("verified %s", args.path)
    return res.code


def cmd_list(args) -> int:
    from .scenarios import CATALOG

    if args.json:
        print(json.dumps([s.describe() for s in CATALOG.values()], indent=2, default=str))
        return EXIT_OK
    for s in CATALOG.values():
        print(f"{s.id}  [{', '.join(s.criteria)}]")
        print(f"    {s.claim}")
        params = ", ".join(f"{k}={v!r}" for k, v in s.defaults.items())
        print(f"    parameters: {params}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pilotwave", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario from a YAML config")
    run.add_argument("config", help="path to the YAML run configuration")
    run.add_argument("--workers", type=int, default=None,
                     help="worker threads (default: config value, else all cores)")
    run.add_argument("--output", default=None,
                     help=f"output directory (default: config value, else ${OUTPUT_ENV}/<id>-seed<S>)")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="recompute and check a stored run")
    ver.add_argument("path", help="run directory or report.json")
    ver.set_defaults(func=cmd_verify)

    lst = sub.add_parser("list-scenarios", help="list available scenarios")
    lst.add_argument("--json", action="store_true", help="machine-readable catalog")
    lst.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    if getattr(args, "workers", None) is not None and args.workers < 1:
        log.error("--workers must be at least 1")
        return EXIT_CONFIG
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
