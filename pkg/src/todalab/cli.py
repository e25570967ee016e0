"""Command-line entry point.

    todalab <check|all> --config run.json --out DIR [--precision P] [--seed S]
    todalab diff A.json B.json

Exit codes: 0 all checks pass, 1 a check failed (named in report.json),
2 config could not be parsed, 3 config failed validation.  Nothing is
written to ``--out`` unless the configuration validates.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import platform
import sys
import time
from importlib import metadata as _md

from .checks import CHECKS, run_checks
from .config import ConfigParseError, build_run, load_config
from .errors import ConfigError, TodaError, ValidationError
from .report import SCHEMA, ReportSchemaError, dumps, report_diff

__all__ = ["main", "build_report"]

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_INVALID = 0, 1, 2, 3


def _version() -> str:
    try:
        return _md.version("artifact")
    except _md.PackageNotFoundError:  # pragma: no cover
        return "unknown"


def build_report(cfg, names, seed, precision):
    """Run ``names`` and assemble (report dict, tables, timings)."""
    cd, params = build_run(cfg)
    sol, blocks, timings, info = run_checks(cfg, cd, params, names, seed, precision)
    tables = {}
    for name, block in blocks.items():
        for fname, text in block.pop("tables", {}).items():
            tables[fname] = text
    failed = sorted(name for name, b in blocks.items() if not b["pass"])
    config = cfg.to_dict()
    config.pop("precision")
    config["seed"] = seed
    report = {
        "schema": SCHEMA,
        "config": config,
        "solution": {
            "n": cd.n,
            "params": params.to_dict(),
            "S": [float(cd.S(m)) for m in range(1, cd.n + 1)],
            "D": [info["D"][m] for m in range(1, cd.n + 1)],
            "D1": [info["D1"][m] for m in range(1, cd.n + 1)],
        },
        "checks": blocks,
        "failed": failed,
        "pass": not failed,
        "run": {"precision": precision, "version": _version()},
    }
    return report, tables, timings


def _parser():
    p = argparse.ArgumentParser(prog="todalab", description="Toda system solution checks")
    sub = p.add_subparsers(dest="command", required=True)
    for name in list(CHECKS) + ["all"]:
        s = sub.add_parser(name, help=f"run the {name} check" if name != "all" else "run every configured check")
        s.add_argument("--config", required=True)
        s.add_argument("--out", required=True)
        s.add_argument("--precision", choices=("double", "extended"))
        s.add_argument("--seed", type=int)
    d = sub.add_parser("diff", help="compare two reports within their tolerances")
    d.add_argument("a")
    d.add_argument("b")
    return p


def _diff(args) -> int:
    try:
        with open(args.a, encoding="utf-8") as fa, open(args.b, encoding="utf-8") as fb:
            a, b = json.load(fa), json.load(fb)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        lines, status = report_diff(a, b)
    except ReportSchemaError as exc:
        print(f"schema mismatch at field {exc.field}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    for line in lines:
        print(line)
    print("reports agree within tolerance" if status == 0 else f"{len(lines)} field(s) differ")
    return status


def _run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"error: field {exc.field}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    precision = args.precision or cfg.precision
    seed = cfg.seed if args.seed is None else args.seed
    if seed < 0:
        print("error: field seed: must be non-negative", file=sys.stderr)
        return EXIT_INVALID
    names = list(cfg.checks) if args.command == "all" else [args.command]
    try:
        build_run(cfg)
    except ValidationError as exc:
        print(f"error: field {exc.field}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    started = _dt.datetime.now(_dt.timezone.utc)
    t0 = time.perf_counter()
    try:
        report, tables, timings = build_report(cfg, names, seed, precision)
    except ValidationError as exc:
        print(f"error: field {exc.field}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except TodaError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    elapsed = time.perf_counter() - t0

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(report))
    if cfg.csv:
        for fname, text in sorted(tables.items()):
            with open(os.path.join(args.out, fname), "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    meta = {
        "started": started.isoformat(),
        "elapsed_s": elapsed,
        "check_seconds": timings,
        "python": platform.python_version(),
        "platform": platform.platform(),
        "command": args.command,
    }
    with open(os.path.join(args.out, "metadata.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for name, block in report["checks"].items():
        print(f"{name:<11} {'pass' if block['pass'] else 'FAIL'}")
        if not block["pass"]:
            for qn, q in block["quantities"].items():
                if not q["pass"]:
                    print(f"    {qn}: {q['value']} (tol {q['tol']})")
    return EXIT_OK if report["pass"] else EXIT_FAIL


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "diff":
        return _diff(args)
    return _run(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
