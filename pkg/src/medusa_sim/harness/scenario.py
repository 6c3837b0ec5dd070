"""Scenario documents: schema, loading and validation.

A scenario is one JSON or YAML document with the top-level keys ``clouds``,
``links``, ``partitions``, ``jobs``, ``f_config``, ``scheduler``,
``injections``, ``seeds`` and ``training_bootstrap``; ``name`` and
``simulation`` are optional. See ``scenarios/`` for complete examples.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import jsonschema
import yaml

from ..core import ConfigError, DataPartition, Digest, FaultMode, FaultToleranceConfig, JobSpec, Phase, canonical_digest
from ..netmodel import DEFAULT_WINDOW_K, LinkModel
from ..predictor import TRAINING_WINDOW
from ..protocol import GLOBAL_JOB_ID, Workload
from ..simcloud.cloud import BackgroundLoad, CloudProfile
from ..simcloud.faults import FaultInjection, FaultKind, FaultModelViolation, check_fault_model


class ScenarioError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path
        self.message = message


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_int = {"type": "integer"}
_cloud = {"type": "integer", "minimum": 0}

_link_params = {
    "type": "object",
    "properties": {
        "rtt_seconds": _nonneg,
        "true_throughput": _pos,
        "prior_throughput": _pos,
        "down": {"type": "boolean"},
    },
    "additionalProperties": False,
}

SCHEMA: Dict[str, Any] = {
    "type": "object",
    "required": ["clouds", "links", "partitions", "jobs", "f_config", "scheduler", "seeds"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "clouds": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "cpu_clock_mhz", "cpu_cores", "memory_mb", "base_seconds_per_mb"],
                "additionalProperties": False,
                "properties": {
                    "id": _cloud,
                    "cpu_clock_mhz": _pos,
                    "cpu_cores": {"type": "integer", "minimum": 1},
                    "memory_mb": _pos,
                    "base_seconds_per_mb": _pos,
                    "load_penalty": _nonneg,
                    "noise_sigma": _nonneg,
                    "background_load": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "max_running": {"type": "integer", "minimum": 0},
                            "max_queued": {"type": "integer", "minimum": 0},
                            "max_input_bytes": _nonneg,
                        },
                    },
                },
            },
        },
        "links": {
            "type": "object",
            "required": ["default"],
            "additionalProperties": False,
            "properties": {
                "default": {**_link_params, "required": ["rtt_seconds", "true_throughput"]},
                "noise_sigma": _nonneg,
                "pairs": {
                    "type": "array",
                    "items": {
                        **_link_params,
                        "required": ["between"],
                        "properties": {
                            **_link_params["properties"],
                            "between": {"type": "array", "items": _cloud, "minItems": 2, "maxItems": 2},
                            "directed": {"type": "boolean"},
                        },
                    },
                },
            },
        },
        "partitions": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "size_bytes", "home_cloud", "content_seed"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "size_bytes": {"type": "integer", "minimum": 1},
                    "home_cloud": _cloud,
                    "content_seed": _int,
                },
            },
        },
        "jobs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "map_tasks": {"type": "integer", "minimum": 1},
                "reduce_tasks": {"type": "integer", "minimum": 1},
                "global_map_tasks": {"type": "integer", "minimum": 1},
                "global_reduce_tasks": {"type": "integer", "minimum": 1},
                "output_ratio": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "input_sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            },
        },
        "f_config": {
            "type": "object",
            "required": ["f"],
            "additionalProperties": False,
            "properties": {
                "f": {"type": "integer", "minimum": 0},
                "mode": {"enum": [m.value for m in FaultMode]},
            },
        },
        "scheduler": {"enum": ["medusa", "round_robin"]},
        "injections": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "kind"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "kind": {"enum": [k.value for k in FaultKind]},
                    "job": {"type": "string"},
                    "cloud": _cloud,
                    "clouds": {"type": "array", "items": _cloud},
                    "link": {"type": "array", "items": _cloud, "minItems": 2, "maxItems": 2},
                    "time": _nonneg,
                    "count": {"type": "integer", "minimum": 1},
                    "digest": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
                },
            },
        },
        "seeds": {"type": "array", "items": _int, "minItems": 1},
        "training_bootstrap": {"type": "integer", "minimum": 0},
        "simulation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "window_k": {"type": "integer", "minimum": 1},
                "training_window": {"type": "integer", "minimum": 2},
                "detection_timeout": _pos,
                "measurement_period": _pos,
                "measurement_sigma": _nonneg,
                "control_latency": _nonneg,
                "watchdog": _pos,
                "randomize_round_robin_start": {"type": "boolean"},
            },
        },
    },
}


@dataclass(frozen=True)
class SimParams:
    window_k: int = DEFAULT_WINDOW_K
    training_window: int = TRAINING_WINDOW
    detection_timeout: float = 60.0
    measurement_period: float = 30.0
    measurement_sigma: Optional[float] = None
    control_latency: float = 0.05
    watchdog: float = 1e7
    randomize_round_robin_start: bool = True


@dataclass(frozen=True)
class Scenario:
    clouds: Tuple[CloudProfile, ...]
    links: LinkModel
    partitions: Tuple[DataPartition, ...]
    jobs: Workload
    f_config: FaultToleranceConfig
    scheduler: str = "medusa"
    injections: Tuple[FaultInjection, ...] = ()
    seeds: Tuple[int, ...] = (0,)
    training_bootstrap: int = 30
    input_sizes: Tuple[int, ...] = ()
    simulation: SimParams = field(default_factory=SimParams)
    name: str = "scenario"

    @property
    def total_input_bytes(self) -> int:
        return sum(p.size_bytes for p in self.partitions)

    def with_scheduler(self, scheduler: str) -> "Scenario":
        return replace(self, scheduler=scheduler)

    def with_partition_size(self, size_bytes: int) -> "Scenario":
        parts = tuple(replace(p, size_bytes=int(size_bytes)) for p in self.partitions)
        return replace(self, partitions=parts)

    def with_injections(self, injections: Sequence[FaultInjection], mode: Optional[FaultMode] = None) -> "Scenario":
        cfg = self.f_config if mode is None else FaultToleranceConfig(self.f_config.f, mode)
        out = replace(self, injections=tuple(injections), f_config=cfg)
        validate(out)
        return out

    def sizes(self) -> List[int]:
        """Per-partition sizes to sweep; the declared size when no sweep is given."""
        if self.input_sizes:
            return list(self.input_sizes)
        return [max(p.size_bytes for p in self.partitions)]

    def job_specs(self) -> Dict[str, JobSpec]:
        w = self.jobs
        specs = {}
        for p in self.partitions:
            j = JobSpec(f"vanilla:{p.id}", Phase.VANILLA, (p.id,), w.map_tasks, w.reduce_tasks)
            specs[j.id] = j
        g = JobSpec(GLOBAL_JOB_ID, Phase.GLOBAL, tuple(f"out:{j}" for j in specs),
                    w.global_map_tasks, w.global_reduce_tasks)
        specs[g.id] = g
        return specs

    def canonical_digests(self) -> Dict[str, Digest]:
        by_id = {p.id: p for p in self.partitions}
        out = {}
        for jid, spec in self.job_specs().items():
            parts = list(by_id.values()) if spec.phase is Phase.GLOBAL else [by_id[spec.input[0]]]
            out[jid] = canonical_digest(parts, spec)
        return out


def _build_links(doc: dict, n_clouds: int) -> LinkModel:
    default = doc["default"]
    rtt, tput, prior, down = {}, {}, {}, set()
    for j in range(n_clouds):
        for i in range(n_clouds):
            if i == j:
                continue
            rtt[(j, i)] = float(default["rtt_seconds"])
            tput[(j, i)] = float(default["true_throughput"])
            prior[(j, i)] = float(default.get("prior_throughput", default["true_throughput"]))
            if default.get("down"):
                down.add((j, i))
    for k, pair in enumerate(doc.get("pairs", [])):
        a, b = pair["between"]
        path = f"links.pairs.{k}"
        if a == b or a >= n_clouds or b >= n_clouds:
            raise ScenarioError(f"{path}.between", f"invalid pair {a}-{b} for {n_clouds} clouds")
        if pair.get("directed") and "rtt_seconds" in pair:
            raise ScenarioError(f"{path}.rtt_seconds", "round-trip time is symmetric; set it on an undirected pair")
        targets = [(a, b)] if pair.get("directed") else [(a, b), (b, a)]
        for p in targets:
            if "rtt_seconds" in pair:
                rtt[p] = float(pair["rtt_seconds"])
            if "true_throughput" in pair:
                tput[p] = float(pair["true_throughput"])
                if "prior_throughput" not in pair and "prior_throughput" not in default:
                    prior[p] = tput[p]
            if "prior_throughput" in pair:
                prior[p] = float(pair["prior_throughput"])
            if pair.get("down"):
                down.add(p)
            elif pair.get("down") is False:
                down.discard(p)
    return LinkModel(rtt, tput, prior, float(doc.get("noise_sigma", 0.0)), down)


def _build_injection(doc: dict) -> FaultInjection:
    return FaultInjection(
        id=doc["id"],
        kind=FaultKind(doc["kind"]),
        job=doc.get("job"),
        cloud=doc.get("cloud"),
        clouds=frozenset(doc.get("clouds", ())),
        link=tuple(doc["link"]) if "link" in doc else None,
        time=doc.get("time"),
        count=doc.get("count", 1),
        digest=Digest.fromhex(doc["digest"]) if "digest" in doc else None,
    )


def validate(s: Scenario) -> None:
    """Semantic checks beyond the schema; raises ScenarioError with a field path."""
    n = len(s.clouds)
    ids = [c.id for c in s.clouds]
    if sorted(ids) != list(range(n)):
        raise ScenarioError("clouds", f"cloud ids must be dense 0..{n - 1}, got {ids}")
    try:
        s.f_config.check_cloud_count(n)
    except ConfigError as exc:
        raise ScenarioError("f_config.f", str(exc)) from None
    seen = set()
    for k, p in enumerate(s.partitions):
        if p.id in seen:
            raise ScenarioError(f"partitions.{k}.id", f"duplicate partition id {p.id!r}")
        seen.add(p.id)
        if p.home_cloud >= n:
            raise ScenarioError(f"partitions.{k}.home_cloud", f"unknown cloud {p.home_cloud}")
    canon = s.canonical_digests()
    inj_ids = set()
    for k, inj in enumerate(s.injections):
        path = f"injections.{k}"
        if inj.id in inj_ids:
            raise ScenarioError(f"{path}.id", f"duplicate injection id {inj.id!r}")
        inj_ids.add(inj.id)
        for c in ([inj.cloud] if inj.cloud is not None else []) + sorted(inj.clouds) + list(inj.link or ()):
            if c >= n:
                raise ScenarioError(path, f"unknown cloud {c}")
        if inj.job is not None and inj.job not in canon:
            raise ScenarioError(f"{path}.job", f"unknown job {inj.job!r}; jobs are {sorted(canon)}")
        try:
            check_fault_model([inj], s.f_config.f, canon)
        except FaultModelViolation as exc:
            raise ScenarioError(path, str(exc)) from None


def scenario_from_dict(doc: dict) -> Scenario:
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ScenarioError(".".join(str(p) for p in e.absolute_path), e.message)
    try:
        clouds = tuple(
            CloudProfile(
                id=c["id"], cpu_clock_mhz=c["cpu_clock_mhz"], cpu_cores=c["cpu_cores"],
                memory_mb=c["memory_mb"], base_seconds_per_mb=c["base_seconds_per_mb"],
                background_load=BackgroundLoad(**c.get("background_load", {})),
                load_penalty=c.get("load_penalty", 0.1), noise_sigma=c.get("noise_sigma", 0.0),
            )
            for c in sorted(doc["clouds"], key=lambda c: c["id"])
        )
        links = _build_links(doc["links"], len(clouds))
        parts = tuple(DataPartition(p["id"], p["size_bytes"], p["home_cloud"], p["content_seed"])
                      for p in doc["partitions"])
        jobs = dict(doc["jobs"])
        sizes = tuple(jobs.pop("input_sizes", ()))
        fc = doc["f_config"]
        f_config = FaultToleranceConfig(fc["f"], FaultMode(fc.get("mode", FaultMode.MALICIOUS.value)))
        injections = tuple(_build_injection(i) for i in doc.get("injections", []))
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError("", str(exc)) from None
    scenario = Scenario(
        clouds=clouds, links=links, partitions=parts, jobs=Workload(**jobs), f_config=f_config,
        scheduler=doc["scheduler"], injections=injections, seeds=tuple(doc["seeds"]),
        training_bootstrap=doc.get("training_bootstrap", 30), input_sizes=sizes,
        simulation=SimParams(**doc.get("simulation", {})), name=doc.get("name", "scenario"),
    )
    validate(scenario)
    return scenario


def load_scenario(source: Union[str, Path, dict]) -> Scenario:
    """Load and validate a scenario from a dict, a JSON/YAML file path, or document text."""
    if isinstance(source, dict):
        return scenario_from_dict(source)
    is_text = isinstance(source, str) and ("\n" in source or source.lstrip().startswith("{"))
    path = Path("<text>") if is_text else Path(source)
    text = str(source) if is_text else path.read_text()
    try:
        if path.suffix in (".yaml", ".yml") or (is_text and not text.lstrip().startswith("{")):
            doc = yaml.safe_load(text)
        else:
            doc = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ScenarioError("", f"cannot parse scenario: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("", "scenario must be a mapping")
    doc.setdefault("name", "scenario" if is_text else path.stem)
    return scenario_from_dict(doc)
