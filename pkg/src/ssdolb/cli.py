"""Command line: run scenario checks, generate random fragments, list checks.

    ssdolb run <file> [--report out.json] [--checks name,...] [--seed N]
    ssdolb gen <kind> --space <file> --seed N [--rank K]
    ssdolb --list-checks

Exit codes: 0 pass, 1 check failure, 2 validation error, 3 parse error.
"""

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from .checks import REGISTRY, run_checks
from .fixtures import (
    ScenarioParseError, ScenarioValidationError, cover_to_json, fixture_path, list_fixtures,
    load_scenario, map_to_json, parse_space, sheaf_to_json,
)
from .random_gen import MAX_RANK, random_ses, random_sheaf, random_tower, rng_for

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_PARSE = 0, 1, 2, 3


def _resolve(path):
    p = Path(path)
    if not p.exists() and path in list_fixtures():
        return fixture_path(path)
    return p


def build_report(sc, results, seed):
    body = {
        "scenario": sc.name,
        "seed": seed,
        "passed": all(r.passed for r in results),
        "checks": [r.as_json() for r in results],
    }
    digest = hashlib.sha256(json.dumps(body, sort_keys=True).encode()).hexdigest()
    return body, digest


def format_report(body, digest):
    lines = [f"scenario {body['scenario']}  seed {body['seed']}"]
    width = max((len(c["name"]) for c in body["checks"]), default=0)
    for c in body["checks"]:
        lines.append(f"  {c['name']:<{width}}  {c['status'].upper():<4}  {c['summary']}")
        for name, table in sorted(c.get("tables", {}).get("cohomology", {}).items()):
            for pipe, h in table.items():
                lines.append(f"      H({name}) {pipe:<20} {h}")
        for d in c.get("diff", []):
            lines.append(f"      ! {d}")
    lines.append(f"result {'PASS' if body['passed'] else 'FAIL'}  body sha256 {digest}")
    return "\n".join(lines)


def cmd_run(args):
    sc = load_scenario(_resolve(args.file))
    names = [n for n in args.checks.split(",") if n] if args.checks else None
    requested = names or [c["name"] for c in sc.checks]
    unknown = [n for n in requested if n not in REGISTRY]
    if unknown:
        raise ScenarioValidationError(f"unknown checks: {', '.join(unknown)} "
                                      "(see --list-checks)")
    seed = sc.seed if args.seed is None else args.seed
    t0 = time.perf_counter_ns()
    results = run_checks(sc, names, seed)
    elapsed_ms = (time.perf_counter_ns() - t0) // 1_000_000
    body, digest = build_report(sc, results, seed)
    print(format_report(body, digest))
    if args.report:
        out = dict(body, body_sha256=digest, timings={"total_ms": elapsed_ms})
        Path(args.report).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if body["passed"] else EXIT_FAIL


def _load_space(path):
    p = _resolve(path)
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"{p.name}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    except OSError as e:
        raise ScenarioValidationError(f"cannot read {path}: {e.strerror}") from None
    return parse_space(raw.get("space", raw))


def cmd_gen(args):
    if args.rank > MAX_RANK or args.rank < 1:
        raise ScenarioValidationError(f"--rank must be between 1 and {MAX_RANK}")
    space = _load_space(args.space)
    rng = rng_for(args.seed)
    if args.kind == "sheaf":
        out = {"sheaves": {"F": sheaf_to_json(random_sheaf(rng, space, args.rank))}}
    elif args.kind == "ses":
        f1, f2, f3, i, p = random_ses(rng, space, args.rank)
        out = {"sheaves": {"F1": sheaf_to_json(f1), "F2": sheaf_to_json(f2),
                           "F3": sheaf_to_json(f3)},
               "maps": {"i": map_to_json(i, "F1", "F2"), "p": map_to_json(p, "F2", "F3")}}
    else:
        fine, mid, coarse, tf, tm = random_tower(rng, space)
        out = {"covers": {"fine": cover_to_json(fine), "mid": cover_to_json(mid),
                          "coarse": cover_to_json(coarse)},
               "refinements": {"fine": [tf[k] for k in sorted(tf)],
                               "mid": [tm[k] for k in sorted(tm)]}}
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


def make_parser():
    p = argparse.ArgumentParser(prog="ssdolb", description="Exact checks for sheaf resolutions "
                                "built from embedding atlases on finite posets.")
    p.add_argument("--list-checks", action="store_true", help="list the check registry and exit")
    sub = p.add_subparsers(dest="command")
    r = sub.add_parser("run", help="run the checks of a scenario file or bundled fixture")
    r.add_argument("file")
    r.add_argument("--report", help="also write the JSON report here")
    r.add_argument("--checks", help="comma separated check names")
    r.add_argument("--seed", type=int)
    g = sub.add_parser("gen", help="generate a random scenario fragment")
    g.add_argument("kind", choices=["sheaf", "ses", "ss-tower"])
    g.add_argument("--space", required=True, help="file holding a space (or a scenario)")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--rank", type=int, default=2, help="largest stalk dimension")
    return p


def main(argv=None):
    parser = make_parser()
    args = parser.parse_args(argv)
    if args.list_checks:
        for name, (_, desc) in REGISTRY.items():
            print(f"{name:<20} {desc}")
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_INVALID
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_gen(args)
    except ScenarioParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except ScenarioValidationError as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
