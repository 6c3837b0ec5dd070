"""Per-run metrics, computed only from the event trace."""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Tuple

RUN_HEADER = "run"


@dataclass(frozen=True)
class RunMetrics:
    scenario: str
    scheduler: str
    seed: int
    input_bytes: int
    f: int
    n_clouds: int
    makespan_s: Optional[float]
    replicas: Dict[str, int]
    extra_replicas: int
    bytes_copied: int
    cloud_replicas: Tuple[int, ...]
    faults_injected: int
    result_correct: bool
    failed: bool
    failure: Optional[str] = None

    @property
    def cloud_usage(self) -> Tuple[float, ...]:
        total = sum(self.cloud_replicas)
        if total == 0:
            return tuple(0.0 for _ in self.cloud_replicas)
        return tuple(n / total for n in self.cloud_replicas)

    def as_row(self) -> Dict[str, object]:
        """Flat table row; one ``cloud_usage_<i>`` column per cloud."""
        row = {
            "scenario": self.scenario,
            "scheduler": self.scheduler,
            "seed": self.seed,
            "input_bytes": self.input_bytes,
            "makespan_s": self.makespan_s,
            "extra_replicas": self.extra_replicas,
            "bytes_copied": self.bytes_copied,
        }
        for i, u in enumerate(self.cloud_usage):
            row[f"cloud_usage_{i}"] = u
        row["faults_injected"] = self.faults_injected
        row["result_correct"] = self.result_correct
        return row

    def as_record(self) -> Dict[str, object]:
        rec = asdict(self)
        rec["cloud_replicas"] = list(self.cloud_replicas)
        rec["cloud_usage"] = list(self.cloud_usage)
        return rec


def table_columns(n_clouds: int) -> List[str]:
    return (["scenario", "scheduler", "seed", "input_bytes", "makespan_s", "extra_replicas", "bytes_copied"]
            + [f"cloud_usage_{i}" for i in range(n_clouds)] + ["faults_injected", "result_correct"])


def compute_metrics(records: Iterable[dict]) -> RunMetrics:
    """Derive RunMetrics from one run's trace records.

    Records before the ``submit`` event (bootstrap training) are ignored except
    for the ``run`` header, which names the scenario and seed.
    """
    header: Optional[dict] = None
    submit: Optional[dict] = None
    launches: Counter = Counter()
    per_cloud: Counter = Counter()
    bytes_copied = 0
    faults = 0
    result: Optional[dict] = None
    failure: Optional[dict] = None
    for r in records:
        ev = r["event"]
        if ev == RUN_HEADER:
            header = r
            continue
        if ev == "submit":
            submit = r
            continue
        if submit is None:
            continue
        if ev == "replica_launch":
            launches[r["job"]] += 1
            per_cloud[r["cloud"]] += 1
        elif ev in ("copy_validated", "copy_mismatch"):
            bytes_copied += int(r["bytes"])
        elif ev == "fault_fired":
            faults += 1
        elif ev == "result":
            result = r
        elif ev == "job_failed" and failure is None:
            failure = r
    if header is None or submit is None:
        raise ValueError("trace lacks a run header or submit record")
    f = int(submit["f"])
    n = int(submit["clouds"])
    extra = sum(max(0, c - (f + 1)) for c in launches.values())
    failed = result is None
    return RunMetrics(
        scenario=header["scenario"],
        scheduler=submit["scheduler"],
        seed=int(header["seed"]),
        input_bytes=int(submit["input_bytes"]),
        f=f,
        n_clouds=n,
        makespan_s=None if failed else float(result["makespan"]),
        replicas=dict(sorted(launches.items())),
        extra_replicas=extra,
        bytes_copied=bytes_copied,
        cloud_replicas=tuple(per_cloud.get(i, 0) for i in range(n)),
        faults_injected=faults,
        result_correct=bool(result["correct"]) if result else False,
        failed=failed,
        failure=(f"{failure['job']}: {failure['reason']}" if failure else
                 ("no result" if failed else None)),
    )
