import pytest
from hypothesis import given, strategies as st

from medusa_sim.core import (ConfigError, DataPartition, Digest, FaultMode, FaultToleranceConfig, JobReplica,
                             JobSpec, Phase, ReplicaState, canonical_digest, partition_digest, tampered,
                             wrong_digest)


def part(pid, seed=1, home=0):
    return DataPartition(pid, 10, home, seed)


def test_quorum_and_cloud_bound():
    cfg = FaultToleranceConfig(1)
    assert cfg.quorum == 2 and cfg.min_clouds == 3
    cfg.check_cloud_count(3)
    with pytest.raises(ConfigError):
        cfg.check_cloud_count(2)
    assert FaultToleranceConfig(0).min_clouds == 1
    assert FaultToleranceConfig(2, FaultMode.ARBITRARY_ONLY).mode is FaultMode.ARBITRARY_ONLY
    with pytest.raises(ConfigError):
        FaultToleranceConfig(-1)


def test_vanilla_job_reads_one_partition():
    with pytest.raises(ConfigError):
        JobSpec("v", Phase.VANILLA, ("a", "b"))
    with pytest.raises(ConfigError):
        JobSpec("g", Phase.GLOBAL, ())
    JobSpec("g", Phase.GLOBAL, ("a", "b"))


@given(st.permutations(["a", "b", "c", "d"]))
def test_canonical_digest_ignores_partition_order(order):
    job = JobSpec("g", Phase.GLOBAL, ("x",))
    parts = [part(p, seed=i) for i, p in enumerate(["a", "b", "c", "d"])]
    by_id = {p.id: p for p in parts}
    assert canonical_digest([by_id[i] for i in order], job) == canonical_digest(parts, job)


def test_canonical_digest_depends_on_content_and_job():
    j1 = JobSpec("j1", Phase.VANILLA, ("a",))
    j2 = JobSpec("j2", Phase.VANILLA, ("a",))
    assert canonical_digest([part("a", 1)], j1) != canonical_digest([part("a", 2)], j1)
    assert canonical_digest([part("a")], j1) != canonical_digest([part("a")], j2)
    # the home cloud is not content
    assert canonical_digest([part("a", home=0)], j1) == canonical_digest([part("a", home=3)], j1)
    with pytest.raises(ConfigError):
        canonical_digest([], j1)


def test_digest_chunks_are_unambiguous():
    assert Digest.of(b"ab", b"c") != Digest.of(b"a", b"bc")
    d = Digest.of(b"x")
    assert Digest.fromhex(d.hex()) == d
    assert len(d.short()) == 12
    with pytest.raises(ConfigError):
        Digest(b"short")


def test_wrong_and_tampered_digests_differ_from_canonical():
    d = partition_digest(part("a"))
    assert wrong_digest(d, "x") != d
    assert wrong_digest(d, "x") == wrong_digest(d, "x")
    assert wrong_digest(d, "x") != wrong_digest(d, "y")
    assert tampered(d) != d and tampered(tampered(d)) == d


def test_replica_lifecycle():
    r = JobReplica("j", 0, 1)
    assert r.state is ReplicaState.COPYING_DATA
    r = r.advance(ReplicaState.RUNNING)
    d = Digest.of(b"out")
    r = r.advance(ReplicaState.FINISHED, d)
    assert r.state.terminal and r.digest == d
    with pytest.raises(ConfigError):
        r.advance(ReplicaState.RUNNING)
    with pytest.raises(ConfigError):
        JobReplica("j", 0, 0)
    with pytest.raises(ConfigError):
        JobReplica("j", 0, 1, ReplicaState.FINISHED)
