"""Built-in scenario documents used by the examples and the acceptance suite."""
from __future__ import annotations

import copy
from typing import Dict, List, Optional

MB = 1_000_000


def _cloud(cid: int, sec_per_mb: float, cores: int, mhz: float, mem: float, **extra) -> dict:
    doc = {"id": cid, "cpu_clock_mhz": mhz, "cpu_cores": cores, "memory_mb": mem,
           "base_seconds_per_mb": sec_per_mb, "load_penalty": 0.1, "noise_sigma": 0.05,
           "background_load": {"max_running": 2, "max_queued": 1, "max_input_bytes": 500 * MB}}
    doc.update(extra)
    return doc


def heterogeneous(seeds: int = 20) -> dict:
    """Four clouds: cloud 0 is the big one, 0-1 is the fast link, the rest is slow.

    The input lives on clouds 0 and 1, so a location-blind scheduler pays slow
    copies and slow processing on clouds 2 and 3.
    """
    return {
        "name": "heterogeneous",
        "clouds": [
            _cloud(0, 0.8, 16, 3000, 65536),
            _cloud(1, 0.8, 8, 2600, 32768),
            _cloud(2, 1.2, 4, 2000, 8192),
            _cloud(3, 1.2, 4, 2000, 8192),
        ],
        "links": {
            "default": {"rtt_seconds": 0.08, "true_throughput": 10 * MB},
            "noise_sigma": 0.1,
            "pairs": [{"between": [0, 1], "rtt_seconds": 0.01, "true_throughput": 100 * MB}],
        },
        "partitions": [
            {"id": "p0", "size_bytes": 256 * MB, "home_cloud": 0, "content_seed": 11},
            {"id": "p1", "size_bytes": 256 * MB, "home_cloud": 1, "content_seed": 12},
        ],
        "jobs": {"map_tasks": 8, "reduce_tasks": 2, "output_ratio": 0.1,
                 "input_sizes": [64 * MB, 128 * MB, 256 * MB]},
        "f_config": {"f": 1, "mode": "malicious"},
        "scheduler": "medusa",
        "injections": [],
        "seeds": list(range(1, seeds + 1)),
        "training_bootstrap": 30,
    }


def homogeneous(seeds: int = 20) -> dict:
    """Four identical clouds on identical links, one partition per cloud."""
    clouds = [_cloud(i, 0.8, 8, 2600, 32768) for i in range(4)]
    return {
        "name": "homogeneous",
        "clouds": clouds,
        "links": {"default": {"rtt_seconds": 0.02, "true_throughput": 50 * MB}, "noise_sigma": 0.05},
        "partitions": [
            {"id": f"p{i}", "size_bytes": 128 * MB, "home_cloud": i, "content_seed": 20 + i} for i in range(4)
        ],
        "jobs": {"map_tasks": 8, "reduce_tasks": 2, "output_ratio": 0.1,
                 "input_sizes": [64 * MB, 128 * MB]},
        "f_config": {"f": 1, "mode": "malicious"},
        "scheduler": "medusa",
        "injections": [],
        "seeds": list(range(1, seeds + 1)),
        "training_bootstrap": 30,
    }


def fault_variant(base: dict, fault: str, job: str = "vanilla:p0", cloud: Optional[int] = None) -> dict:
    """``base`` with one fault on ``job``: none, arbitrary, malicious or outage.

    Arbitrary faults run in arbitrary-only mode, where the faulty cloud may be
    reused; the other kinds run in malicious mode.
    """
    doc = copy.deepcopy(base)
    doc["name"] = f"{base.get('name', 'scenario')}-{fault}"
    injections: List[Dict] = []
    mode = "malicious"
    if fault == "arbitrary":
        mode = "arbitrary_only"
        injections.append({"id": "arb", "kind": "arbitrary_corruption", "job": job})
    elif fault == "malicious":
        injections.append({"id": "mal", "kind": "malicious_corruption", "job": job})
    elif fault == "outage":
        injections.append({"id": "down", "kind": "outage", "job": job})
    elif fault != "none":
        raise ValueError(f"unknown fault variant {fault!r}")
    if cloud is not None:
        for inj in injections:
            inj["cloud"] = cloud
    doc["injections"] = injections
    doc["f_config"] = dict(doc["f_config"], mode=mode)
    return doc


PRESETS = {"heterogeneous": heterogeneous, "homogeneous": homogeneous}
