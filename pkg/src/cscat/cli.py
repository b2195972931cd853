"""Command line entry point: ``cscat <scenario> --config FILE [--out-dir DIR] [--seed N] ...``.

Thread counts are applied through the environment before numpy is imported.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

SCENARIOS = ("validate", "mie_check", "farfield", "probe", "scan", "herglotz_fit",
             "cgo_phase", "cgo_remainder", "fourier_identity")
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cscat", description="Run a scattering scenario from a JSON config.")
    sub = p.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        s = sub.add_parser(name, help=f"run the {name} scenario")
        s.add_argument("--config", required=True, help="JSON scenario document")
        s.add_argument("--out-dir", default=None, help="output directory (default: output.directory)")
        s.add_argument("--seed", type=int, default=None, help="override the config seed")
        s.add_argument("--threads", type=int, default=None,
                       help="BLAS/OpenMP threads (default: $CSCAT_THREADS)")
        s.add_argument("--deterministic", action="store_true",
                       help="single-threaded run for byte-identical payloads")
    return p


def resolve_threads(threads, deterministic, environ=os.environ):
    if deterministic:
        return 1
    if threads is not None:
        return threads
    env = environ.get("CSCAT_THREADS")
    return int(env) if env else None


def _fail(payload, code):
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        threads = resolve_threads(args.threads, args.deterministic)
    except ValueError:
        return _fail({"code": "config.invalid", "message": "CSCAT_THREADS is not an integer"}, 2)
    if threads is not None:
        if threads < 1:
            return _fail({"code": "config.invalid", "message": "--threads must be positive"}, 2)
        for var in THREAD_VARS:
            os.environ[var] = str(threads)

    from .cli_io import error_payload, run_scenario
    from .config import parse_config
    from .errors import ConfigurationError

    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        return _fail({"code": "config.unreadable", "message": str(exc)}, 2)
    try:
        cfg = parse_config(text)
    except ConfigurationError as exc:
        err = error_payload(exc)
        return _fail(err, err["exit_code"])
    if cfg.scenario != args.scenario:
        return _fail({"code": "config.scenario_mismatch",
                      "message": f"subcommand {args.scenario!r} but config declares {cfg.scenario!r}"}, 2)
    rec = run_scenario(cfg, args.out_dir, args.seed, args.deterministic, threads)
    line = {"scenario": rec.scenario, "status": rec.status, "passed": rec.passed}
    if rec.error:
        line["error"] = rec.error
        print(json.dumps(line, sort_keys=True), file=sys.stderr)
    else:
        print(json.dumps(line, sort_keys=True))
    return rec.exit_code


if __name__ == "__main__":
    sys.exit(main())
