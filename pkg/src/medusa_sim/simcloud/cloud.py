"""Simulated clouds: capacity profiles, ground-truth processing times, and the cloud actor."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core import CloudId, DataPartition, Digest, JobSpec, canonical_digest
from ..netmodel import lognormal_factor, simulate_transfer
from ..predictor import OverheadSnapshot
from .engine import event_seed
from .mq import Envelope


@dataclass(frozen=True)
class BackgroundLoad:
    """Generator for the random extra jobs other tenants run on a cloud."""

    max_running: int = 0
    max_queued: int = 0
    max_input_bytes: float = 0.0

    def draw(self, rng: np.random.Generator) -> OverheadSnapshot:
        n = int(rng.integers(0, self.max_running + 1)) if self.max_running > 0 else 0
        fractions = tuple(float(x) for x in rng.uniform(0.0, 1.0, size=n))
        sizes = rng.uniform(0.0, self.max_input_bytes, size=n) if self.max_input_bytes > 0 else np.zeros(n)
        queued = int(rng.integers(0, self.max_queued + 1)) if self.max_queued > 0 else 0
        return OverheadSnapshot(fractions, queued, float(sizes.sum()))


@dataclass(frozen=True)
class CloudProfile:
    id: CloudId
    cpu_clock_mhz: float
    cpu_cores: int
    memory_mb: float
    base_seconds_per_mb: float
    background_load: BackgroundLoad = field(default_factory=BackgroundLoad)
    load_penalty: float = 0.1
    noise_sigma: float = 0.0

    def __post_init__(self):
        if min(self.cpu_clock_mhz, self.cpu_cores, self.memory_mb, self.base_seconds_per_mb) <= 0:
            raise ValueError(f"cloud {self.id}: capacity values must be positive")
        if self.load_penalty < 0 or self.noise_sigma < 0:
            raise ValueError(f"cloud {self.id}: load_penalty and noise_sigma must be >= 0")


def nominal_processing_seconds(map_tasks: int, input_bytes: float, cloud: CloudProfile,
                               overhead: OverheadSnapshot) -> float:
    parallel = min(map_tasks, cloud.cpu_cores)
    load = overhead.running + overhead.queued
    return cloud.base_seconds_per_mb * (input_bytes / 1e6) / parallel * (1.0 + cloud.load_penalty * load)


def simulate_processing(job: JobSpec, cloud: CloudProfile, overhead: OverheadSnapshot,
                        rng: np.random.Generator, input_bytes: float) -> float:
    """Ground-truth run time of ``job`` on ``cloud``; hidden from the scheduler.

    Time per MB divided by usable parallelism, inflated linearly by the number
    of other running and queued jobs, times lognormal noise.
    """
    nominal = nominal_processing_seconds(job.map_tasks, input_bytes, cloud, overhead)
    return max(nominal * lognormal_factor(rng, cloud.noise_sigma), 1e-9)


# --- messages --------------------------------------------------------------------


@dataclass(frozen=True)
class CopyRequest:
    copy_id: int
    item_id: str
    size_bytes: float
    digest: Digest
    src: CloudId
    dst: CloudId
    try_no: int = 1
    job: Optional[str] = None


@dataclass(frozen=True)
class CopyDone:
    copy_id: int
    item_id: str
    received: Digest
    src: CloudId
    dst: CloudId
    size_bytes: float


@dataclass(frozen=True)
class RunRequest:
    job: JobSpec
    attempt: int
    partitions: Tuple[DataPartition, ...]
    input_bytes: float


@dataclass(frozen=True)
class JobDone:
    job: str
    attempt: int
    cloud: CloudId
    digest: Digest


@dataclass
class _Running:
    job: str
    attempt: int
    started: float
    duration: float
    input_bytes: float


class SimCloud:
    """Actor standing in for one cloud's resource manager and DistCp.

    ``system`` provides ``loop``, ``mq``, ``link``, ``injector``, ``trace``,
    ``seed`` and ``is_alive(cloud)``.
    """

    def __init__(self, profile: CloudProfile, system):
        self.profile = profile
        self.system = system
        self.alive = True
        self.crashed_at: Optional[float] = None
        self.background = OverheadSnapshot()
        self.running: Dict[Tuple[str, int], _Running] = {}
        self._starting: List[RunRequest] = []

    @property
    def id(self) -> CloudId:
        return self.profile.id

    def crash(self) -> None:
        if self.alive:
            self.alive = False
            self.crashed_at = self.system.loop.now
            self.running.clear()
            self._starting.clear()

    def overhead(self, now: float) -> OverheadSnapshot:
        snap = self.background
        for r in self.running.values():
            frac = min(max((now - r.started) / r.duration, 0.0), 1.0) if r.duration > 0 else 1.0
            snap = snap.plus(running_fraction=frac, input_bytes=r.input_bytes)
        return snap

    # message handling

    def handle(self, env: Envelope) -> None:
        msg = env.payload
        if isinstance(msg, CopyRequest):
            self._start_copy(msg)
        elif isinstance(msg, RunRequest):
            if not self._starting:
                # batch every start delivered at this instant so co-launched
                # replicas see each other as load
                self.system.loop.schedule(0.0, self._start_batch)
            self._starting.append(msg)
        else:
            raise TypeError(f"cloud {self.id} cannot handle {type(msg).__name__}")

    def _start_copy(self, req: CopyRequest) -> None:
        sys = self.system
        seed = event_seed(sys.seed, "transfer", req.item_id, req.src, req.dst, req.copy_id, req.try_no)
        duration = simulate_transfer(sys.link, req.src, req.dst, req.size_bytes, seed)
        if duration is None:
            return  # link down: the copy never finishes
        sys.loop.schedule(duration, self._finish_copy, req)

    def _finish_copy(self, req: CopyRequest) -> None:
        sys = self.system
        if not self.alive or not sys.is_alive(req.src):
            return
        received = sys.injector.on_copy(req, sys.loop.now)
        sys.mq.send(self.id, "proxy", CopyDone(req.copy_id, req.item_id, received, req.src, req.dst, req.size_bytes))

    def _start_batch(self) -> None:
        if not self.alive:
            return
        sys = self.system
        batch, self._starting = self._starting, []
        now = sys.loop.now
        for req in batch:
            self.running[(req.job.id, req.attempt)] = _Running(req.job.id, req.attempt, now, 0.0, req.input_bytes)
        for req in batch:
            key = (req.job.id, req.attempt)
            others = {k: r for k, r in self.running.items() if k != key}
            snap = self.background
            for r in others.values():
                snap = snap.plus(running_fraction=0.0, input_bytes=r.input_bytes)
            rng = np.random.default_rng(event_seed(sys.seed, "proc", req.job.id, self.id, req.attempt))
            duration = simulate_processing(req.job, self.profile, snap, rng, req.input_bytes)
            self.running[key].duration = duration
            sys.loop.schedule(duration, self._finish_run, req)
        for req in batch:
            sys.injector.on_replica_start(req.job.id, self.id, now)

    def _finish_run(self, req: RunRequest) -> None:
        if not self.alive:
            return
        sys = self.system
        self.running.pop((req.job.id, req.attempt), None)
        correct = canonical_digest(req.partitions, req.job)
        digest = sys.injector.on_output(req.job.id, self.id, req.attempt, correct, sys.loop.now)
        sys.mq.send(self.id, "proxy", JobDone(req.job.id, req.attempt, self.id, digest))
