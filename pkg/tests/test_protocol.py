import pytest

from medusa_sim.core import DataPartition, Digest, FaultToleranceConfig, JobSpec, Phase, canonical_digest
from medusa_sim.netmodel import LinkModel
from medusa_sim.protocol import (BarrierEvent, BarrierOutcome, CopyOutcome, DecisionKind, JobExecution, JobFailed,
                                 ProtocolViolation, Stage, StageBarrier, VoteState, collect_and_vote,
                                 run_stage_barrier, submit_job, validate_copy, vote_decision)
from medusa_sim.simcloud import CloudProfile, FaultInjection, FaultKind, Simulation

A, B, C = (Digest.of(x) for x in (b"a", b"b", b"c"))


def sim(n=3, injections=(), seed=1, throughput=50e6, **kw):
    profiles = [CloudProfile(i, 2000, 4, 8192, 0.5) for i in range(n)]
    return Simulation(profiles, LinkModel.uniform(range(n), 0.01, throughput), seed, injections, **kw)


PARTS = [DataPartition("p0", 50_000_000, 0, 1), DataPartition("p1", 50_000_000, 1, 2)]


def oracle():
    return canonical_digest(PARTS, JobSpec("global", Phase.GLOBAL, ("out:vanilla:p0", "out:vanilla:p1"), 4, 1))


def launches(s, job=None):
    return [r for r in s.trace.of("replica_launch") if job is None or r["job"] == job]


def test_vote_examples():
    assert vote_decision([A, A], 0, 1).digest == A
    assert vote_decision([A, B], 0, 1).kind is DecisionKind.NEED_EXTRA_REPLICA
    assert vote_decision([A, B, A], 0, 1).digest == A
    assert vote_decision([A], 1, 1).kind is DecisionKind.WAIT
    assert vote_decision([A, B, C], 1, 2).kind is DecisionKind.NEED_EXTRA_REPLICA
    assert vote_decision([A, B], 2, 2).kind is DecisionKind.WAIT
    assert vote_decision([], 1, 0).kind is DecisionKind.WAIT
    assert vote_decision([B], 0, 0).digest == B


def test_vote_state_rejects_duplicate_reports():
    v = VoteState(1)
    v.add(0, 1, A)
    v.add(0, 2, A)  # a second attempt on the same cloud is a separate replica
    with pytest.raises(ProtocolViolation):
        v.add(0, 1, B)
    assert v.decide(0).digest == A


def test_collect_and_vote_requires_a_running_replica():
    ex = JobExecution(JobSpec("j", Phase.VANILLA, ("p",)), 1, ("p",), 1.0)
    r0, r1 = ex.launch(0), ex.launch(1)
    with pytest.raises(ProtocolViolation):
        collect_and_vote(ex, 2, 9, A)
    assert collect_and_vote(ex, 0, r0.attempt, A).kind is DecisionKind.WAIT
    with pytest.raises(ProtocolViolation):
        collect_and_vote(ex, 0, r0.attempt, A)
    assert collect_and_vote(ex, 1, r1.attempt, B).kind is DecisionKind.NEED_EXTRA_REPLICA
    r2 = ex.launch(2)
    assert collect_and_vote(ex, 2, r2.attempt, A).digest == A


def test_stage_barrier():
    b = StageBarrier(Stage.RUN, {"c1", "c2"})
    assert run_stage_barrier(b, BarrierEvent("c1")) is BarrierOutcome.STAY
    assert run_stage_barrier(b, BarrierEvent("c2")) is BarrierOutcome.ADVANCE
    b = StageBarrier(Stage.RUN, {"c1", "c2"})
    run_stage_barrier(b, BarrierEvent("c1"))
    assert run_stage_barrier(b, BarrierEvent("c2", unreachable=True)) is BarrierOutcome.ADVANCE
    with pytest.raises(ProtocolViolation):
        run_stage_barrier(b, BarrierEvent("c3"))


def test_validate_copy():
    assert validate_copy(A, A) is CopyOutcome.VALIDATED
    assert validate_copy(A, B) is CopyOutcome.DIGEST_MISMATCH


def test_degenerate_single_cloud():
    s = sim(1)
    d = submit_job(s, [DataPartition("p", 1_000_000, 0, 5)], FaultToleranceConfig(0))
    assert len(launches(s)) == 2
    assert d == canonical_digest([DataPartition("p", 1, 0, 5)], JobSpec("global", Phase.GLOBAL, ("out:vanilla:p",), 4, 1))


def test_no_fault_run_f1():
    s = sim(3)
    assert submit_job(s, PARTS, FaultToleranceConfig(1)) == oracle()
    assert len(launches(s)) == 6
    for job in ("vanilla:p0", "vanilla:p1", "global"):
        assert len(launches(s, job)) == 2
    # each partition is copied to exactly f clouds beyond its home
    for item in ("p0", "p1"):
        assert len([r for r in s.trace.of("copy_validated") if r["item"] == item]) == 1
    stages = [r["stage"] for r in s.trace.of("stage")]
    assert stages == ["replicate", "run", "agree"] * 2


def test_corrupted_output_triggers_one_extra_replica():
    s = sim(3, [FaultInjection("x", FaultKind.ARBITRARY_CORRUPTION, job="vanilla:p0")])
    assert submit_job(s, PARTS, FaultToleranceConfig(1)) == oracle()
    assert len(launches(s, "vanilla:p0")) == 3
    assert len(s.trace.of("need_extra")) == 1


def test_single_shot_tamper_is_retried_on_same_link():
    s = sim(3, [FaultInjection("t", FaultKind.TRANSMISSION_TAMPER, cloud=1, job="vanilla:p0")])
    assert submit_job(s, PARTS, FaultToleranceConfig(1)) == oracle()
    mism = s.trace.of("copy_mismatch")
    assert len(mism) == 1 and mism[0]["attempt"] == 1
    ok = [r for r in s.trace.of("copy_validated") if r["copy"] == mism[0]["copy"]]
    assert len(ok) == 1 and ok[0]["cloud"] == 1
    assert not s.trace.of("copy_reroute")


def test_repeated_tamper_reroutes_to_another_cloud():
    s = sim(3, [FaultInjection("t", FaultKind.TRANSMISSION_TAMPER, cloud=1, job="vanilla:p0", count=2)])
    assert submit_job(s, PARTS, FaultToleranceConfig(1)) == oracle()
    assert len(s.trace.of("copy_reroute")) == 1
    p0_clouds = {r["cloud"] for r in launches(s, "vanilla:p0")}
    assert 1 not in p0_clouds and p0_clouds == {0, 2}


def test_outage_of_running_replica_is_replaced_after_detection():
    s = sim(3, [FaultInjection("o", FaultKind.OUTAGE, job="vanilla:p0", cloud=1)], detection_timeout=60.0)
    assert submit_job(s, PARTS, FaultToleranceConfig(1)) == oracle()
    crash = s.trace.of("outage")[0]
    detected = s.trace.of("outage_detected")[0]
    assert detected["t"] == pytest.approx(crash["t"] + 60.0)
    assert s.trace.of("replica_unreachable")
    assert all(r["cloud"] != 1 for r in launches(s) if r["t"] > detected["t"])


def test_outage_of_idle_cloud_only_excludes_it():
    s = sim(4, [FaultInjection("o", FaultKind.OUTAGE, time=0.0, cloud=3)])
    parts = [DataPartition("p0", 1_000_000, 0, 1)]
    submit_job(s, parts, FaultToleranceConfig(1))
    assert not s.trace.of("replica_unreachable")
    assert all(r["cloud"] != 3 for r in launches(s))


def test_outage_of_only_holder_loses_data():
    s = sim(3, [FaultInjection("o", FaultKind.OUTAGE, time=0.01, cloud=0)], throughput=1e6)
    with pytest.raises(JobFailed) as err:
        submit_job(s, PARTS, FaultToleranceConfig(1))
    assert "DataLost" in err.value.reason


def test_too_few_clouds_rejected():
    with pytest.raises(ValueError):
        submit_job(sim(2), PARTS, FaultToleranceConfig(1))


def test_malicious_mode_never_reuses_a_reporter():
    inj = [FaultInjection("m", FaultKind.MALICIOUS_CORRUPTION, job="vanilla:p0")]
    s = sim(4, inj)
    submit_job(s, PARTS, FaultToleranceConfig(1))
    extra = launches(s, "vanilla:p0")[2:]
    assert extra
    for rec in extra:
        earlier = {r["cloud"] for r in s.trace.of("replica_output")
                   if r["job"] == "vanilla:p0" and r["seq"] < rec["seq"]}
        assert rec["cloud"] not in earlier
