"""Command-line entry point: ``wulff-lab list | verify | profile``."""
from __future__ import annotations

import argparse
import sys

from . import lab


def _parse_sets(items) -> dict[str, str]:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise lab.ScenarioError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wulff-lab", description="Anisotropic variational geometry workbench")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list catalog scenarios")

    v = sub.add_parser("verify", help="run the verification pipeline")
    v.add_argument("--scenario")
    v.add_argument("--all", action="store_true", help="run every catalog scenario")
    v.add_argument("--set", action="append", metavar="KEY=VALUE", dest="sets")
    v.add_argument("--report", help="write the JSON report here (default: stdout)")

    pr = sub.add_parser("profile", help="tabulate the volume-corrected energy along N_K")
    pr.add_argument("--scenario", required=True)
    pr.add_argument("--tmax", type=float, default=0.05)
    pr.add_argument("--steps", type=int, default=21)
    pr.add_argument("--set", action="append", metavar="KEY=VALUE", dest="sets")
    pr.add_argument("--out", help="CSV path (default: stdout)")
    return p


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "list":
            for s in lab.list_scenarios():
                print(f"{s['id']}: {s['description']} ({s['anchor']})")
            return lab.EXIT_OK
        overrides = _parse_sets(args.sets)
        if args.command == "verify":
            if args.all:
                report = lab.run_all(overrides)
            elif args.scenario:
                report = lab.run_verify(args.scenario, overrides)
            else:
                print("verify needs --scenario or --all", file=sys.stderr)
                return lab.EXIT_VALIDATION
            _emit(lab.report_json(report), args.report)
            comp = report["comparison"]
            for c in comp.get("scenarios", [comp]):
                failed = [x["name"] for x in c["checks"] if not x["pass"]]
                status = "PASS" if not failed else "FAIL: " + "; ".join(failed)
                print(f"{c['scenario']}: {status}", file=sys.stderr)
            return lab.EXIT_OK if comp["passed"] else lab.EXIT_NUMERIC
        _emit(lab.run_profile(args.scenario, args.tmax, args.steps, overrides), args.out)
        return lab.EXIT_OK
    except lab.UnknownScenario as exc:
        print(f"unknown scenario: {exc.args[0]}", file=sys.stderr)
        return lab.EXIT_UNKNOWN
    except lab.ScenarioError as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return lab.EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
