"""Command line entry point.

Exit status: 0 success, 1 invalid input or I/O failure, 2 numerical abort.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

from . import __version__
from .errors import ConfigurationError, NumericalError
from .scenario import ScenarioError, parse_scenario
from .tensor import run_identity_suite

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output-dir", default=".", help="directory for records, summary and dumps")
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--threads", type=int, default=None, help="worker threads for lattice kernels")

    parser = argparse.ArgumentParser(prog="dyonem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", parents=[common], help="execute a scenario file")
    run_p.add_argument("scenario", help="YAML scenario file")
    sub.add_parser("check-identities", parents=[common], help="exhaustive tensor identity checks")
    sub.add_parser("version", help="print the package version")
    return parser


def _cmd_run(args) -> int:
    from .runner import run

    try:
        with open(args.scenario) as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        scenario = parse_scenario(text)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        result = run(scenario, args.output_dir, seed=args.seed, threads=args.threads)
    except NumericalError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    s = result.summary
    print(f"{scenario.mode}: status {s['status']}, summary in {result.summary_path}")
    for key in ("energy_drift", "momentum_drift", "gauss_residual_e_max", "gauss_residual_m_max"):
        if key in s:
            print(f"  {key} = {s[key]:.6e}")
    for i, p in enumerate(s.get("particles", [])):
        if p.get("gyroradius") is not None:
            print(f"  particle {i} gyroradius = {p['gyroradius']:.12g}")
    return EXIT_OK


def _cmd_identities(args) -> int:
    t0 = time.perf_counter()
    results = run_identity_suite()
    elapsed = time.perf_counter() - t0
    bad = 0
    for name, (count, failures) in results.items():
        print(f"{name}: {count} tuples, {len(failures)} failures")
        bad += len(failures)
    print(f"elapsed {elapsed:.3f} s")
    if args.output_dir not in (None, "."):
        from pathlib import Path

        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "identities.json", "w") as fh:
            json.dump({k: {"checked": c, "failures": len(f)} for k, (c, f) in results.items()}, fh, indent=2)
    return EXIT_OK if bad == 0 else EXIT_NUMERICAL


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "version":
        print(f"dyonem {__version__}")
        return EXIT_OK
    if args.command == "check-identities":
        return _cmd_identities(args)
    return _cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
