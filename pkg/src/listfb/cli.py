"""Command line entry point.

    listfb --config run.json --mode run-full-fb --trials 200 --seed 7 --out results/ff
    listfb --mode component-selftest
    listfb --schema

Flags override the matching config fields. Run modes write <out>.json and
<out>.csv; without --out the aggregates go to stdout. component-selftest
runs the acceptance suite and exits 0 iff every criterion passes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema

from listfb import acceptance
from listfb.harness import (
    CONFIG_SCHEMA,
    MODES,
    RunConfig,
    _jsonable,
    cli_plan,
    cli_run,
    cli_sweep,
    plan_csv,
    summary_csv,
)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="listfb", description="List decoding with feedback: planner, simulations, self-test.")
    ap.add_argument("--config", type=Path, help="JSON run configuration (see --schema)")
    ap.add_argument("--mode", choices=MODES)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output path stem; .json and .csv are appended")
    ap.add_argument("--criteria", help="selftest only: comma-separated criterion numbers (default all)")
    ap.add_argument("--schema", action="store_true", help="print the config JSON schema and exit")
    return ap


def _load(args) -> RunConfig:
    raw = json.loads(args.config.read_text())
    for key in ("mode", "trials", "seed", "out"):
        val = getattr(args, key)
        if val is not None:
            raw[key] = val
    return RunConfig.from_dict(raw)


def _emit(stem, payload: dict, csv_text: str) -> None:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=1)
    if stem is None:
        print(text)
        return
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    stem.with_suffix(".json").write_text(text)
    stem.with_suffix(".csv").write_text(csv_text)


def selftest(seed: int, numbers=None, out=None) -> int:
    numbers = numbers or sorted(acceptance.ALL)
    results = []
    for k in numbers:
        res = acceptance.ALL[k](seed)
        print(res.line(), flush=True)
        results.append(res)
    if out:
        Path(out).with_suffix(".json").write_bytes(acceptance.report_bytes(results))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} criteria passed")
    return 0 if passed == len(results) else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.schema:
        print(json.dumps(CONFIG_SCHEMA, indent=2))
        return 0
    if args.mode == "component-selftest" or (args.config is None and args.mode is None):
        numbers = [int(x) for x in args.criteria.split(",")] if args.criteria else None
        seed = acceptance.MASTER_SEED if args.seed is None else args.seed
        return selftest(seed, numbers, args.out)
    if args.config is None:
        print("listfb: --config is required for this mode", file=sys.stderr)
        return 2
    try:
        cfg = _load(args)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(x) for x in exc.absolute_path) or "<root>"
        print(f"listfb: invalid config at {where}: {exc.message}", file=sys.stderr)
        return 2
    except (ValueError, TypeError, OSError) as exc:  # parameter-web violations, unreadable files
        print(f"listfb: invalid config: {exc}", file=sys.stderr)
        return 2

    if cfg.mode == "component-selftest":
        return selftest(cfg.seed, None, cfg.out)
    if cfg.mode == "plan":
        plan = cli_plan(cfg)
        _emit(cfg.out, plan, plan_csv(plan))
        return 0
    if cfg.mode == "sweep":
        reports, summary = cli_sweep(cfg)
        _emit(cfg.out, {"summary": summary, "reports": [json.loads(r.to_json()) for r in reports]},
              summary_csv(summary))
        return 0
    report = cli_run(cfg)
    if cfg.out:
        report.write(cfg.out)
    else:
        print(json.dumps(_jsonable(report.aggregates), sort_keys=True, indent=1))
    return 0


if __name__ == "__main__":
    sys.exit(main())
