"""Seeded repetitions, training bootstrap and scheduler comparison."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from statistics import fmean
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core import JobSpec, Phase
from ..netmodel import measure
from ..predictor import CloudPredictor, Observation, extract_features
from ..protocol import JobFailed, submit_job
from ..simcloud import Simulation, Trace
from ..simcloud.cloud import simulate_processing
from ..simcloud.engine import event_seed
from .metrics import RUN_HEADER, RunMetrics, compute_metrics
from .scenario import Scenario

SCHEDULERS = ("medusa", "round_robin")


def bootstrap_predictor(scenario: Scenario, sim: Simulation, seed: int) -> CloudPredictor:
    """Give every cloud a training history before the measured run.

    Each iteration runs one vanilla-shaped job per cloud under a freshly drawn
    background load and records one throughput sample per link. Sizes are
    drawn across the scenario's configured range so the fit covers it.
    """
    predictor = CloudPredictor(scenario.simulation.training_window)
    rng = np.random.default_rng(event_seed(seed, "bootstrap"))
    sizes = scenario.sizes() + [p.size_bytes for p in scenario.partitions]
    lo, hi = 0.25 * min(sizes), 1.25 * max(sizes)
    w = scenario.jobs
    sigma = scenario.simulation.measurement_sigma
    for b in range(scenario.training_bootstrap):
        job = JobSpec(f"bootstrap:{b}", Phase.VANILLA, ("bootstrap",), w.map_tasks, w.reduce_tasks)
        for profile in scenario.clouds:
            overhead = profile.background_load.draw(rng)
            size = float(rng.uniform(lo, hi))
            seconds = simulate_processing(job, profile, overhead, rng, size)
            predictor.observe(Observation(extract_features(job, profile, overhead, size), seconds, profile.id),
                              refit=False)
            sim.trace.emit(0.0, "training", job=job.id, cloud=profile.id, input_bytes=size, seconds=seconds)
        for j, i in scenario.links.pairs():
            if not scenario.links.is_down(j, i):
                sim.tracker.record(j, i, measure(scenario.links, j, i, rng, sigma))
    for profile in scenario.clouds:
        if scenario.training_bootstrap >= 2:
            predictor.refit(profile.id)
    return predictor


def round_robin_start(scenario: Scenario, seed: int) -> int:
    if not scenario.simulation.randomize_round_robin_start:
        return 0
    return int(np.random.default_rng(event_seed(seed, "rr-start")).integers(len(scenario.clouds)))


def run_once(scenario: Scenario, seed: int) -> Tuple[RunMetrics, Trace]:
    """One isolated seeded run: bootstrap, then a single measured submission."""
    params = scenario.simulation
    trace = Trace()
    trace.emit(0.0, RUN_HEADER, scenario=scenario.name, seed=int(seed), scheduler=scenario.scheduler,
               window_k=params.window_k, training_window=params.training_window)
    sim = Simulation(scenario.clouds, scenario.links, seed, scenario.injections,
                     detection_timeout=params.detection_timeout, control_latency=params.control_latency,
                     measurement_period=params.measurement_period, measurement_sigma=params.measurement_sigma,
                     window_k=params.window_k, trace=trace)
    predictor = bootstrap_predictor(scenario, sim, seed)
    try:
        submit_job(sim, scenario.partitions, scenario.f_config, scenario.scheduler, predictor,
                   scenario.jobs, round_robin_start(scenario, seed), watchdog=params.watchdog)
    except JobFailed as exc:
        if not trace.of("job_failed"):
            trace.emit(sim.loop.now, "job_failed", job=exc.job, reason=exc.reason)
    return compute_metrics(trace), trace


def _run_seed(args) -> Tuple[RunMetrics, Optional[str]]:
    scenario, seed, keep = args
    metrics, trace = run_once(scenario, seed)
    return metrics, (trace.to_jsonl() if keep else None)


def seeds_for(scenario: Scenario, repetitions: Optional[int] = None) -> List[int]:
    """The scenario's seeds, extended deterministically if more repetitions are asked for."""
    seeds = list(scenario.seeds)
    n = len(seeds) if repetitions is None else repetitions
    if n > len(seeds):
        rng = np.random.default_rng(event_seed(seeds[0], "extra-seeds"))
        seeds += [int(x) for x in rng.integers(0, 2**63, size=n - len(seeds))]
    return seeds[:n]


def run_experiment(scenario: Scenario, repetitions: Optional[int] = None, *, seeds: Optional[Sequence[int]] = None,
                   workers: int = 1, keep_traces: bool = False):
    """Run ``repetitions`` seeded runs; results come back sorted by seed.

    With ``keep_traces`` the return value is a list of ``(metrics, trace_jsonl)``
    pairs instead of bare metrics.
    """
    seed_list = list(seeds) if seeds is not None else seeds_for(scenario, repetitions)
    jobs = [(scenario, s, keep_traces) for s in seed_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_seed, jobs))
    else:
        results = [_run_seed(j) for j in jobs]
    results.sort(key=lambda r: r[0].seed)
    return results if keep_traces else [m for m, _ in results]


@dataclass(frozen=True)
class SchedulerSummary:
    scheduler: str
    partition_bytes: int
    runs: int
    failures: int
    mean: float
    q1: float
    median: float
    q3: float
    variance: float

    def as_row(self) -> Dict[str, object]:
        return dict(self.__dict__)


def summarize(scheduler: str, partition_bytes: int, metrics: Sequence[RunMetrics]) -> SchedulerSummary:
    spans = np.array([m.makespan_s for m in metrics if not m.failed], dtype=float)
    failures = sum(1 for m in metrics if m.failed)
    if spans.size == 0:
        nan = float("nan")
        return SchedulerSummary(scheduler, partition_bytes, len(metrics), failures, nan, nan, nan, nan, nan)
    q1, med, q3 = (float(x) for x in np.percentile(spans, [25, 50, 75]))
    return SchedulerSummary(scheduler, partition_bytes, len(metrics), failures, float(fmean(spans)),
                            q1, med, q3, float(spans.var()))


@dataclass(frozen=True)
class Comparison:
    partition_bytes: int
    medusa: SchedulerSummary
    round_robin: SchedulerSummary

    @property
    def speedup(self) -> float:
        """Round-robin mean makespan over Medusa mean makespan."""
        return self.round_robin.mean / self.medusa.mean

    def as_rows(self) -> List[Dict[str, object]]:
        return [dict(s.as_row(), speedup=self.speedup) for s in (self.medusa, self.round_robin)]


def compare_schedulers(scenario: Scenario, repetitions: Optional[int] = None, *, workers: int = 1,
                       sizes: Optional[Sequence[int]] = None):
    """Paired runs of both schedulers at every configured partition size.

    Returns ``(comparisons, metrics)``: one Comparison per size and every
    per-run RunMetrics, both ordered by size then scheduler then seed.
    """
    seeds = seeds_for(scenario, repetitions)
    comparisons: List[Comparison] = []
    all_metrics: List[RunMetrics] = []
    for size in (sizes or scenario.sizes()):
        sized = scenario.with_partition_size(size)
        per: Dict[str, List[RunMetrics]] = {}
        for name in SCHEDULERS:
            per[name] = run_experiment(sized.with_scheduler(name), seeds=seeds, workers=workers)
            all_metrics.extend(per[name])
        comparisons.append(Comparison(int(size), summarize("medusa", int(size), per["medusa"]),
                                      summarize("round_robin", int(size), per["round_robin"])))
    return comparisons, all_metrics
