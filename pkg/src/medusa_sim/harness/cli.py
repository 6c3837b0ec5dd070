"""Command line: validate, run, compare and replay scenarios.

Exit codes: 0 on success, 1 when the scenario does not validate, 2 when any
run ended with a failed job.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import Iterable, List, Optional, Sequence

from ..simcloud import Trace
from .experiment import compare_schedulers, run_experiment, seeds_for
from .metrics import RunMetrics, compute_metrics, table_columns
from .scenario import Scenario, ScenarioError, load_scenario

EXIT_OK, EXIT_INVALID, EXIT_FAILED = 0, 1, 2


def _write_metrics(out: Path, metrics: Sequence[RunMetrics]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "metrics.jsonl", "w") as fh:
        for m in metrics:
            fh.write(json.dumps(m.as_record(), sort_keys=True) + "\n")
    n = max((m.n_clouds for m in metrics), default=0)
    with open(out / "metrics.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=table_columns(n), restval="")
        writer.writeheader()
        for m in metrics:
            writer.writerow(m.as_row())


def _print_metrics(metrics: Iterable[RunMetrics]) -> None:
    for m in metrics:
        span = "FAILED" if m.failed else f"{m.makespan_s:10.2f}s"
        usage = " ".join(f"{u:.2f}" for u in m.cloud_usage)
        print(f"{m.scenario:>16} {m.scheduler:>11} seed={m.seed:<6} makespan={span} "
              f"extra={m.extra_replicas} usage=[{usage}] correct={m.result_correct}"
              + (f" ({m.failure})" if m.failure else ""))


def _load(path: str, seed: Optional[int]) -> Scenario:
    scenario = load_scenario(Path(path))
    if seed is not None:
        scenario = replace(scenario, seeds=(seed,))
    return scenario


def cmd_validate(args) -> int:
    s = load_scenario(Path(args.scenario))
    print(f"{args.scenario}: ok ({len(s.clouds)} clouds, {len(s.partitions)} partitions, "
          f"f={s.f_config.f}, {len(s.injections)} injections, {len(s.seeds)} seeds)")
    return EXIT_OK


def cmd_run(args) -> int:
    scenario = _load(args.scenario, args.seed)
    if args.scheduler:
        scenario = scenario.with_scheduler(args.scheduler)
    seeds = seeds_for(scenario, args.repetitions)
    results = run_experiment(scenario, seeds=seeds, workers=args.workers, keep_traces=args.out is not None)
    metrics: List[RunMetrics] = [r[0] for r in results] if args.out else results
    if args.out:
        out = Path(args.out)
        _write_metrics(out, metrics)
        (out / "traces").mkdir(parents=True, exist_ok=True)
        for m, text in results:
            (out / "traces" / f"{m.scheduler}-{m.seed}.jsonl").write_text(text)
    _print_metrics(metrics)
    return EXIT_FAILED if any(m.failed for m in metrics) else EXIT_OK


def cmd_compare(args) -> int:
    scenario = _load(args.scenario, args.seed)
    comparisons, metrics = compare_schedulers(scenario, args.repetitions, workers=args.workers)
    rows = [row for c in comparisons for row in c.as_rows()]
    print(f"{'partition_bytes':>15} {'scheduler':>11} {'mean':>9} {'q1':>9} {'median':>9} {'q3':>9} "
          f"{'variance':>10} {'speedup':>7}")
    for r in rows:
        print(f"{r['partition_bytes']:>15} {r['scheduler']:>11} {r['mean']:9.2f} {r['q1']:9.2f} "
              f"{r['median']:9.2f} {r['q3']:9.2f} {r['variance']:10.2f} {r['speedup']:7.2f}")
    if args.out:
        out = Path(args.out)
        _write_metrics(out, metrics)
        with open(out / "summary.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return EXIT_FAILED if any(m.failed for m in metrics) else EXIT_OK


def cmd_replay(args) -> int:
    metrics = [compute_metrics(Trace.from_jsonl(Path(p).read_text())) for p in args.traces]
    for m in metrics:
        print(json.dumps(m.as_record(), sort_keys=True))
    if args.out:
        _write_metrics(Path(args.out), metrics)
    return EXIT_FAILED if any(m.failed for m in metrics) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="medusa-sim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="load and check a scenario file")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)

    for name, func, helptext in (("run", cmd_run, "run the scenario's scheduler over its seeds"),
                                 ("compare", cmd_compare, "paired runs of both schedulers per input size")):
        c = sub.add_parser(name, help=helptext)
        c.add_argument("scenario")
        c.add_argument("-n", "--repetitions", type=int, default=None, help="number of seeded runs")
        c.add_argument("--seed", type=int, default=None, help="use this seed instead of the scenario's list")
        c.add_argument("-o", "--out", default=None, help="directory for metrics tables and traces")
        c.add_argument("-j", "--workers", type=int, default=1, help="parallel worker processes")
        if name == "run":
            c.add_argument("--scheduler", choices=["medusa", "round_robin"], default=None)
        c.set_defaults(func=func)

    r = sub.add_parser("replay", help="recompute metrics from recorded traces")
    r.add_argument("traces", nargs="+")
    r.add_argument("-o", "--out", default=None)
    r.set_defaults(func=cmd_replay)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
