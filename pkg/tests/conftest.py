from __future__ import annotations

from typing import List, Tuple

import pytest

MB = 1_000_000

# (label, passed, detail) for every acceptance check that ran
ACCEPTANCE: List[Tuple[str, bool, str]] = []


@pytest.fixture
def acceptance():
    def record(label: str, passed: bool, detail: str = "") -> bool:
        ACCEPTANCE.append((label, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in sorted(ACCEPTANCE, key=lambda r: _order(r[0])):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")


def _order(label: str):
    head = label.split()[0]
    if head.startswith("AC-") and head[3:].isdigit():
        return (int(head[3:]), label)
    return (99, label)


def world(n_clouds: int = 3, f: int = 1, *, mode: str = "malicious", partitions=None, seeds=(1,),
          injections=(), bootstrap: int = 5, scheduler: str = "medusa", name: str = "test-world") -> dict:
    """Small uniform scenario document for tests."""
    clouds = [{"id": i, "cpu_clock_mhz": 2000 + 100 * i, "cpu_cores": 4, "memory_mb": 8192,
               "base_seconds_per_mb": 0.5 + 0.1 * i, "noise_sigma": 0.05,
               "background_load": {"max_running": 1, "max_queued": 1, "max_input_bytes": 50 * MB}}
              for i in range(n_clouds)]
    if partitions is None:
        partitions = [{"id": f"p{i}", "size_bytes": 20 * MB, "home_cloud": i % n_clouds, "content_seed": 100 + i}
                      for i in range(2)]
    return {
        "name": name,
        "clouds": clouds,
        "links": {"default": {"rtt_seconds": 0.02, "true_throughput": 40 * MB}, "noise_sigma": 0.05},
        "partitions": partitions,
        "jobs": {"map_tasks": 4, "reduce_tasks": 1},
        "f_config": {"f": f, "mode": mode},
        "scheduler": scheduler,
        "injections": list(injections),
        "seeds": list(seeds),
        "training_bootstrap": bootstrap,
    }


def doomed(**kw):
    """Only holder of p0 crashes before any copy can finish."""
    doc = world(injections=[{"id": "o", "kind": "outage", "time": 0.01, "cloud": 0}], **kw)
    doc["links"]["default"]["true_throughput"] = 1 * MB
    return doc
