"""The proxy: two-phase replicated execution with deferred extra replicas.

Each phase runs in rounds of three stages. *Replicate* copies inputs to the
chosen clouds and validates every copy against its digest; *Run* launches the
replicas; *Agree* compares output digests. A job is accepted once ``f + 1``
replicas report the same digest; otherwise exactly one more replica is
scheduled and the job goes through another round. The global job starts only
when every vanilla job has been accepted.
"""
from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .core import (
    CloudId, DataItem, DataPartition, Digest, FaultToleranceConfig, JobReplica, JobSpec,
    Phase, ReplicaState, canonical_digest, partition_digest,
)
from .predictor import CloudPredictor, Observation, extract_features
from .scheduler import ExclusionSet, NoCloudAvailable, best_source, make_policy
from .simcloud.cloud import CopyDone, CopyRequest, JobDone, RunRequest
from .simcloud.faults import check_fault_model
from .simcloud.mq import Envelope
from .simcloud.system import Simulation

PROXY = "proxy"
GLOBAL_JOB_ID = "global"


class ProtocolViolation(RuntimeError):
    pass


class JobFailed(RuntimeError):
    def __init__(self, job: str, reason: str):
        super().__init__(f"job {job} failed: {reason}")
        self.job = job
        self.reason = reason


# --- voting ------------------------------------------------------------------------


class DecisionKind(enum.Enum):
    ACCEPT = "accept"
    WAIT = "wait"
    NEED_EXTRA_REPLICA = "need_extra_replica"


@dataclass(frozen=True)
class Decision:
    kind: DecisionKind
    digest: Optional[Digest] = None

    def __str__(self) -> str:
        return self.kind.value


WAIT = Decision(DecisionKind.WAIT)
NEED_EXTRA = Decision(DecisionKind.NEED_EXTRA_REPLICA)


def vote_decision(digests: Sequence[Digest], pending: int, f: int) -> Decision:
    """Decide from the digests reported so far, in report order.

    Accepts the first digest whose multiplicity reaches ``f + 1``. Otherwise
    waits while the ``pending`` replicas could still push some digest (old or
    new) to ``f + 1``, and asks for an extra replica when they cannot.
    """
    counts: Counter = Counter()
    for d in digests:
        counts[d] += 1
        if counts[d] >= f + 1:
            return Decision(DecisionKind.ACCEPT, d)
    best = max(counts.values(), default=0)
    if best + pending >= f + 1:
        return WAIT
    return NEED_EXTRA


class VoteState:
    """Reported output digests of one job, one per (cloud, attempt)."""

    def __init__(self, f: int):
        self.f = f
        self.reports: Dict[Tuple[CloudId, int], Digest] = {}

    def add(self, cloud: CloudId, attempt: int, digest: Digest) -> None:
        key = (cloud, attempt)
        if key in self.reports:
            raise ProtocolViolation(f"duplicate report from cloud {cloud}, attempt {attempt}")
        self.reports[key] = digest

    def digests(self) -> List[Digest]:
        return list(self.reports.values())

    def counts(self) -> Counter:
        return Counter(self.reports.values())

    def clouds(self) -> Set[CloudId]:
        return {c for c, _ in self.reports}

    def decide(self, pending: int) -> Decision:
        return vote_decision(self.digests(), pending, self.f)


class ExecStatus(enum.Enum):
    SCHEDULING = "scheduling"
    AWAITING_OUTPUTS = "awaiting_outputs"
    NEED_EXTRA_REPLICA = "need_extra_replica"
    ACCEPTED = "accepted"
    FAILED = "failed"


@dataclass
class JobExecution:
    job: JobSpec
    f: int
    input_items: Tuple[str, ...]
    input_bytes: float
    replicas: Dict[Tuple[CloudId, int], JobReplica] = field(default_factory=dict)
    votes: VoteState = None
    status: ExecStatus = ExecStatus.SCHEDULING
    accepted: Optional[Digest] = None
    failure: Optional[str] = None
    planned: Dict[CloudId, None] = field(default_factory=dict)
    next_attempt: int = 1

    def __post_init__(self):
        if self.votes is None:
            self.votes = VoteState(self.f)

    @property
    def phase(self) -> Phase:
        return self.job.phase

    @property
    def done(self) -> bool:
        return self.status in (ExecStatus.ACCEPTED, ExecStatus.FAILED)

    def running_clouds(self) -> Set[CloudId]:
        return {r.cloud for r in self.replicas.values() if r.state is ReplicaState.RUNNING}

    def pending_count(self) -> int:
        return sum(1 for r in self.replicas.values() if not r.state.terminal)

    def launch(self, cloud: CloudId) -> JobReplica:
        rep = JobReplica(self.job.id, cloud, self.next_attempt, ReplicaState.RUNNING)
        self.next_attempt += 1
        self.replicas[(cloud, rep.attempt)] = rep
        self.status = ExecStatus.AWAITING_OUTPUTS
        return rep


def collect_and_vote(execution: JobExecution, cloud: CloudId, attempt: int, digest: Digest) -> Decision:
    """Record one replica's output digest and return the job's new decision."""
    key = (cloud, attempt)
    rep = execution.replicas.get(key)
    if rep is None:
        raise ProtocolViolation(f"no replica {execution.job.id}@{cloud}#{attempt}")
    if rep.state is not ReplicaState.RUNNING:
        raise ProtocolViolation(f"replica {execution.job.id}@{cloud}#{attempt} already {rep.state.value}")
    execution.votes.add(cloud, attempt, digest)
    execution.replicas[key] = rep.advance(ReplicaState.FINISHED, digest)
    if execution.accepted is not None:
        return Decision(DecisionKind.ACCEPT, execution.accepted)
    return execution.votes.decide(execution.pending_count())


# --- stage barrier -----------------------------------------------------------------


class Stage(enum.Enum):
    REPLICATE = "replicate"
    RUN = "run"
    AGREE = "agree"


class BarrierOutcome(enum.Enum):
    STAY = "stay"
    ADVANCE = "advance"


@dataclass
class StageBarrier:
    stage: Stage
    pending: Set = field(default_factory=set)


@dataclass(frozen=True)
class BarrierEvent:
    participant: object
    unreachable: bool = False


def run_stage_barrier(barrier: StageBarrier, event: BarrierEvent) -> BarrierOutcome:
    """Remove a finished (or unreachable) participant; advance once nobody is left."""
    if event.participant not in barrier.pending:
        raise ProtocolViolation(f"{event.participant!r} is not pending in stage {barrier.stage.value}")
    barrier.pending.discard(event.participant)
    return BarrierOutcome.ADVANCE if not barrier.pending else BarrierOutcome.STAY


# --- copies ------------------------------------------------------------------------


class CopyOutcome(enum.Enum):
    VALIDATED = "validated"
    DIGEST_MISMATCH = "digest_mismatch"
    TIMEOUT = "timeout"


def validate_copy(expected: Digest, received: Digest) -> CopyOutcome:
    return CopyOutcome.VALIDATED if received == expected else CopyOutcome.DIGEST_MISMATCH


@dataclass
class CopyTask:
    copy_id: int
    item: str
    src: CloudId
    dst: CloudId
    job: str
    try_no: int = 1


# --- proxy -------------------------------------------------------------------------


@dataclass(frozen=True)
class Workload:
    map_tasks: int = 8
    reduce_tasks: int = 2
    output_ratio: float = 0.1
    global_map_tasks: int = 4
    global_reduce_tasks: int = 1


class SchedulerView:
    """What the scheduler may see: estimates and load reports, never ground truth."""

    def __init__(self, proxy: "MedusaProxy"):
        self._proxy = proxy
        self.clouds = proxy.sim.cloud_ids
        self.tracker = proxy.sim.tracker
        self.link = proxy.sim.link

    def predict_proc(self, job: JobSpec, cloud: CloudId, size: float) -> float:
        if job.phase is Phase.GLOBAL:
            return 0.0
        return self._proxy.predictor.predict(cloud, self._proxy.features(job, cloud, size))


class MedusaProxy:
    """Client-side orchestrator; one instance handles one submitted computation."""

    def __init__(self, sim: Simulation, partitions: Sequence[DataPartition], f_config: FaultToleranceConfig,
                 scheduler: str = "medusa", predictor: Optional[CloudPredictor] = None,
                 workload: Workload = Workload(), rr_start: int = 0):
        f_config.check_cloud_count(len(sim.clouds))
        if not partitions:
            raise ValueError("nothing to process")
        self.sim = sim
        self.trace = sim.trace
        self.cfg = f_config
        self.workload = workload
        self.predictor = predictor if predictor is not None else CloudPredictor()
        self.partitions = {p.id: p for p in sorted(partitions, key=lambda p: p.id)}
        for p in self.partitions.values():
            if p.home_cloud not in sim.clouds:
                raise ValueError(f"partition {p.id}: unknown home cloud {p.home_cloud}")
        self.items: Dict[str, DataItem] = {}
        self.holders: Dict[str, Set[CloudId]] = {}
        for p in self.partitions.values():
            self.items[p.id] = DataItem(p.id, p.size_bytes, partition_digest(p))
            self.holders[p.id] = {p.home_cloud}
        self.exclusions = ExclusionSet()
        self.view = SchedulerView(self)
        self.policy = make_policy(scheduler, self.view, rr_start)
        self.execs: Dict[str, JobExecution] = {}
        self.copies: Dict[int, CopyTask] = {}
        self._copy_seq = 0
        self._launch: Dict[Tuple[str, CloudId, int], Tuple[object, float]] = {}
        self.barrier: Optional[StageBarrier] = None
        self.phase: Optional[Phase] = None
        self.round = 0
        self.done = False
        self.result: Optional[Digest] = None
        self.failure: Optional[Tuple[str, str]] = None
        self.submitted_at: Optional[float] = None
        sim.mq.register(PROXY, self._on_message)
        sim.outage_listeners.append(self.handle_outage)

    # helpers

    @property
    def now(self) -> float:
        return self.sim.loop.now

    def _emit(self, event: str, **fields) -> None:
        self.trace.emit(self.now, event, **fields)

    def features(self, job: JobSpec, cloud: CloudId, size: float, extra_queued: int = 0):
        planned = sum(1 for ex in self.execs.values() if cloud in ex.planned)
        snap = self.sim.clouds[cloud].overhead(self.now).plus(queued=planned + extra_queued)
        return extract_features(job, self.sim.profile(cloud), snap, size)

    def canonical(self, job: JobSpec) -> Digest:
        return canonical_digest(self.partitions.values() if job.phase is Phase.GLOBAL
                                else [self.partitions[job.input[0]]], job)

    def _job_partitions(self, job: JobSpec) -> Tuple[DataPartition, ...]:
        if job.phase is Phase.GLOBAL:
            return tuple(self.partitions.values())
        return (self.partitions[job.input[0]],)

    def _excluded(self, job_id: str) -> Set[CloudId]:
        return self.exclusions.for_job(job_id)

    # submission and phases

    def submit(self) -> None:
        self.submitted_at = self.now
        total = sum(p.size_bytes for p in self.partitions.values())
        self._emit("submit", input_bytes=total, f=self.cfg.f, mode=self.cfg.mode.value,
                   scheduler=self.policy.name, clouds=len(self.sim.clouds),
                   jobs=len(self.partitions) + 1)
        self._start_vanilla()

    def _start_vanilla(self) -> None:
        self.phase = Phase.VANILLA
        w = self.workload
        for p in self.partitions.values():
            job = JobSpec(f"vanilla:{p.id}", Phase.VANILLA, (p.id,), w.map_tasks, w.reduce_tasks)
            self.execs[job.id] = JobExecution(job, self.cfg.f, (p.id,), float(p.size_bytes))
        for ex in self._phase_execs():
            p = self.partitions[ex.input_items[0]]
            try:
                clouds, ests = self.policy.initial_vanilla(ex.job, p.home_cloud, ex.input_bytes,
                                                           self.cfg.f, self._excluded(ex.job.id))
            except NoCloudAvailable as exc:
                return self._fail(ex, f"NoCloudAvailable: {exc}")
            self._emit("schedule", job=ex.job.id, kind="initial", clouds=clouds,
                       estimates=[e.as_dict() for e in ests])
            for c in clouds:
                if not self._plan(ex, c):
                    return
        self._begin_replicate()

    def _start_global(self) -> None:
        self.phase = Phase.GLOBAL
        w = self.workload
        outs = tuple(f"out:{ex.job.id}" for ex in self._vanilla_execs())
        size = float(sum(self.items[o].size_bytes for o in outs))
        job = JobSpec(GLOBAL_JOB_ID, Phase.GLOBAL, outs, w.global_map_tasks, w.global_reduce_tasks)
        ex = self.execs[job.id] = JobExecution(job, self.cfg.f, outs, size)
        try:
            clouds, ests = self.policy.initial_global(job, self._output_spec(ex), self.cfg.f,
                                                      self._excluded(job.id))
        except NoCloudAvailable as exc:
            return self._fail(ex, f"NoCloudAvailable: {exc}")
        self._emit("schedule", job=job.id, kind="initial", clouds=clouds,
                   estimates=[e.as_dict() for e in ests])
        for c in clouds:
            if not self._plan(ex, c):
                return
        self._begin_replicate()

    def _phase_execs(self) -> List[JobExecution]:
        return [ex for ex in self.execs.values() if ex.phase is self.phase]

    def _vanilla_execs(self) -> List[JobExecution]:
        return [ex for ex in self.execs.values() if ex.phase is Phase.VANILLA]

    def _output_spec(self, ex: JobExecution):
        return [(frozenset(self.holders[i]), self.items[i].size_bytes) for i in ex.input_items]

    # planning and copies

    def _plan(self, ex: JobExecution, cloud: CloudId) -> bool:
        ex.planned[cloud] = None
        for item in ex.input_items:
            if cloud not in self.holders[item] and not self._copy_pending(item, cloud):
                if not self._start_copy(ex, item, cloud):
                    return False
        return True

    def _copy_pending(self, item: str, dst: CloudId) -> bool:
        return any(t.item == item and t.dst == dst for t in self.copies.values())

    def _start_copy(self, ex: JobExecution, item: str, dst: CloudId, try_no: int = 1) -> bool:
        alive = {h for h in self.holders[item] if h not in self.exclusions.down}
        src, _ = best_source(alive, dst, self.items[item].size_bytes, self.sim.tracker, self.sim.link)
        if src is None:
            self._fail(ex, f"DataLost: no surviving copy of {item}")
            return False
        self._copy_seq += 1
        task = CopyTask(self._copy_seq, item, src, dst, ex.job.id, try_no)
        self.copies[task.copy_id] = task
        if self.barrier is not None and self.barrier.stage is Stage.REPLICATE:
            self.barrier.pending.add(task.copy_id)
        self._send_copy(task)
        return True

    def _send_copy(self, task: CopyTask) -> None:
        it = self.items[task.item]
        self._emit("copy_start", job=task.job, cloud=task.dst, src=task.src, item=task.item,
                   copy=task.copy_id, attempt=task.try_no, stage=Stage.REPLICATE.value)
        self.sim.mq.send(PROXY, task.dst, CopyRequest(task.copy_id, task.item, it.size_bytes, it.digest,
                                                      task.src, task.dst, task.try_no, task.job))

    def _drop_copy(self, task: CopyTask) -> None:
        self.copies.pop(task.copy_id, None)
        if self.barrier is not None and task.copy_id in self.barrier.pending:
            run_stage_barrier(self.barrier, BarrierEvent(task.copy_id, unreachable=True))

    def replicate_partition(self, task: CopyTask, received: Digest) -> CopyOutcome:
        """Check one finished copy and apply the retry/reroute policy."""
        item = self.items[task.item]
        outcome = validate_copy(item.digest, received)
        ex = self.execs[task.job]
        if outcome is CopyOutcome.VALIDATED:
            self.holders[task.item].add(task.dst)
            self._emit("copy_validated", job=task.job, cloud=task.dst, src=task.src, item=task.item,
                       copy=task.copy_id, bytes=item.size_bytes)
            self._drop_copy(task)
            return outcome
        self._emit("copy_mismatch", job=task.job, cloud=task.dst, src=task.src, item=task.item,
                   copy=task.copy_id, attempt=task.try_no, bytes=item.size_bytes)
        if task.try_no == 1:
            task.try_no = 2
            self._send_copy(task)
            return outcome
        # second failure on this path: stop trusting the destination for this job
        self._drop_copy(task)
        self.exclusions.exclude(task.job, task.dst)
        self._emit("copy_reroute", job=task.job, cloud=task.dst, src=task.src, item=task.item)
        self._unplan_and_replace(ex, task.dst)
        return outcome

    def _unplan_and_replace(self, ex: JobExecution, cloud: CloudId) -> None:
        if ex.done or cloud not in ex.planned:
            return
        del ex.planned[cloud]
        for t in [t for t in self.copies.values() if t.job == ex.job.id and t.dst == cloud]:
            self._drop_copy(t)
        self._schedule_extra(ex, reason="replace")

    def _schedule_extra(self, ex: JobExecution, reason: str) -> bool:
        busy = ex.running_clouds() | set(ex.planned)
        try:
            if ex.phase is Phase.GLOBAL:
                est = self.policy.extra(ex.job, self.cfg.mode, busy, ex.votes.clouds(),
                                        self._excluded(ex.job.id), outputs=self._output_spec(ex))
            else:
                item = ex.input_items[0]
                holders = {h for h in self.holders[item] if h not in self.exclusions.down}
                est = self.policy.extra(ex.job, self.cfg.mode, busy, ex.votes.clouds(),
                                        self._excluded(ex.job.id), size=ex.input_bytes, holders=holders)
        except NoCloudAvailable as exc:
            self._fail(ex, f"NoCloudAvailable: {exc}")
            return False
        self._emit("schedule", job=ex.job.id, kind=reason, clouds=[est.cloud], estimates=[est.as_dict()])
        return self._plan(ex, est.cloud)

    # stages

    def _begin_replicate(self) -> None:
        if self.done:
            return
        self.round += 1
        self.barrier = StageBarrier(Stage.REPLICATE, set(self.copies))
        self._emit("stage", stage=Stage.REPLICATE.value, phase=self.phase.value, round=self.round,
                   pending=len(self.barrier.pending))
        self._maybe_advance()

    def _begin_run(self) -> None:
        self.barrier = StageBarrier(Stage.RUN, set())
        launches = []
        for ex in self._phase_execs():
            if ex.done:
                ex.planned.clear()
                continue
            for cloud in list(ex.planned):
                launches.append((ex, cloud))
            ex.planned.clear()
        per_cloud = Counter(c for _, c in launches)
        for ex, cloud in launches:
            rep = ex.launch(cloud)
            feats = self.features(ex.job, cloud, ex.input_bytes, extra_queued=per_cloud[cloud] - 1)
            self._launch[(ex.job.id, cloud, rep.attempt)] = (feats, self.now)
            self.barrier.pending.add((ex.job.id, cloud, rep.attempt))
            self._emit("replica_launch", job=ex.job.id, cloud=cloud, attempt=rep.attempt,
                       phase=ex.phase.value, stage=Stage.RUN.value)
            self.sim.mq.send(PROXY, cloud, RunRequest(ex.job, rep.attempt, self._job_partitions(ex.job),
                                                      ex.input_bytes))
        self._emit("stage", stage=Stage.RUN.value, phase=self.phase.value, round=self.round,
                   pending=len(self.barrier.pending))
        self._maybe_advance()

    def _agree(self) -> None:
        self.barrier = StageBarrier(Stage.AGREE, set())
        self._emit("stage", stage=Stage.AGREE.value, phase=self.phase.value, round=self.round)
        for ex in self._phase_execs():
            if ex.done:
                continue
            decision = ex.votes.decide(ex.pending_count())
            if decision.kind is DecisionKind.ACCEPT:
                self._accept(ex, decision.digest)
                continue
            ex.status = ExecStatus.NEED_EXTRA_REPLICA
            self._emit("need_extra", job=ex.job.id, decision=decision.kind.value,
                       votes={d.short(): n for d, n in sorted(ex.votes.counts().items())})
            if not self._schedule_extra(ex, reason="extra"):
                return
        if self.done:
            return
        if any(not ex.done for ex in self._phase_execs()):
            self._begin_replicate()
        elif self.phase is Phase.VANILLA:
            self._start_global()
        else:
            self._finish()

    def _maybe_advance(self) -> None:
        while not self.done and self.barrier is not None and not self.barrier.pending:
            stage = self.barrier.stage
            if stage is Stage.REPLICATE:
                self._begin_run()
                return
            if stage is Stage.RUN:
                self._agree()
                return
            return

    # message handling

    def _on_message(self, env: Envelope) -> None:
        if self.done:
            return
        msg = env.payload
        if isinstance(msg, CopyDone):
            task = self.copies.get(msg.copy_id)
            if task is None:
                self._emit("protocol_violation", cloud=msg.dst, detail=f"stale copy {msg.copy_id}")
                return
            self.replicate_partition(task, msg.received)
        elif isinstance(msg, JobDone):
            self._on_job_done(msg)
        else:
            raise TypeError(f"proxy cannot handle {type(msg).__name__}")
        self._maybe_advance()

    def _on_job_done(self, msg: JobDone) -> None:
        ex = self.execs.get(msg.job)
        key = (msg.job, msg.cloud, msg.attempt)
        try:
            decision = collect_and_vote(ex, msg.cloud, msg.attempt, msg.digest)
        except (ProtocolViolation, AttributeError) as exc:
            self._emit("protocol_violation", job=msg.job, cloud=msg.cloud, detail=str(exc))
            return
        feats, t0 = self._launch.pop(key)
        elapsed = self.now - t0
        if elapsed > 0:
            self.predictor.observe(Observation(feats, elapsed, msg.cloud))
            self._emit("observation", job=msg.job, cloud=msg.cloud, seconds=elapsed)
        self._emit("replica_output", job=msg.job, cloud=msg.cloud, attempt=msg.attempt,
                   digest=msg.digest.hex(), decision=decision.kind.value, stage=Stage.RUN.value)
        if decision.kind is DecisionKind.ACCEPT and not ex.done:
            self._accept(ex, decision.digest)
        if self.barrier is not None and key in self.barrier.pending:
            run_stage_barrier(self.barrier, BarrierEvent(key))

    def _accept(self, ex: JobExecution, digest: Digest) -> None:
        ex.status = ExecStatus.ACCEPTED
        ex.accepted = digest
        self._emit("job_accepted", job=ex.job.id, digest=digest.hex(), replicas=len(ex.replicas))
        if ex.phase is Phase.VANILLA:
            out_id = f"out:{ex.job.id}"
            size = max(1, int(ex.input_bytes * self.workload.output_ratio))
            self.items[out_id] = DataItem(out_id, size, digest, origin_job=ex.job.id)
            self.holders[out_id] = {c for (c, _), d in ex.votes.reports.items()
                                    if d == digest and c not in self.exclusions.down}
        else:
            self.result = digest

    def _finish(self) -> None:
        ex = self.execs[GLOBAL_JOB_ID]
        correct = self.canonical(ex.job)
        self.done = True
        self._emit("result", job=GLOBAL_JOB_ID, digest=self.result.hex(), canonical=correct.hex(),
                   correct=self.result == correct, makespan=self.now - self.submitted_at)

    def _fail(self, ex: JobExecution, reason: str) -> None:
        if self.done:
            return
        ex.status = ExecStatus.FAILED
        ex.failure = reason
        self.failure = (ex.job.id, reason)
        self.done = True
        self._emit("job_failed", job=ex.job.id, reason=reason)

    # outages

    def handle_outage(self, cloud: CloudId) -> None:
        """Exclude a silent cloud and repair everything that depended on it."""
        if cloud in self.exclusions.down:
            return
        self.exclusions.mark_down(cloud)
        self._emit("outage_detected", cloud=cloud)
        for hs in self.holders.values():
            hs.discard(cloud)
        if self.done or self.phase is None:
            return
        for ex in self._phase_execs():
            for key, rep in list(ex.replicas.items()):
                if rep.cloud == cloud and rep.state is ReplicaState.RUNNING:
                    ex.replicas[key] = rep.advance(ReplicaState.UNREACHABLE)
                    self._launch.pop((ex.job.id, cloud, rep.attempt), None)
                    self._emit("replica_unreachable", job=ex.job.id, cloud=cloud, attempt=rep.attempt)
                    part = (ex.job.id, cloud, rep.attempt)
                    if self.barrier is not None and part in self.barrier.pending:
                        run_stage_barrier(self.barrier, BarrierEvent(part, unreachable=True))
        for task in sorted(self.copies.values(), key=lambda t: t.copy_id):
            if task.copy_id not in self.copies or task.src != cloud or task.dst == cloud:
                continue
            self._drop_copy(task)
            if not self._start_copy(self.execs[task.job], task.item, task.dst, task.try_no):
                return
        for ex in self._phase_execs():
            if cloud in ex.planned:
                self._unplan_and_replace(ex, cloud)
                if self.done:
                    return
        for ex in self._phase_execs():
            if ex.done:
                continue
            for item in ex.input_items:
                if not self.holders[item]:
                    return self._fail(ex, f"DataLost: no surviving copy of {item}")
        self._maybe_advance()


def submit_job(sim: Simulation, partitions: Sequence[DataPartition], f_config: FaultToleranceConfig,
               scheduler: str = "medusa", predictor: Optional[CloudPredictor] = None,
               workload: Workload = Workload(), rr_start: int = 0, watchdog: float = 1e7) -> Digest:
    """Run one full computation and return the accepted digest of the global job.

    Raises:
        FaultModelViolation: an injection could make more than ``f`` replicas
            agree on a wrong output.
        JobFailed: a job ran out of candidate clouds, lost its data, or the
            virtual-time watchdog expired.
    """
    check_fault_model(sim.injector.injections, f_config.f)
    proxy = MedusaProxy(sim, partitions, f_config, scheduler, predictor, workload, rr_start)
    sim.start()
    proxy.submit()
    if not sim.run(lambda: proxy.done, watchdog):
        raise JobFailed("*", f"watchdog expired at t={sim.loop.now}")
    if proxy.failure is not None:
        raise JobFailed(*proxy.failure)
    return proxy.result
