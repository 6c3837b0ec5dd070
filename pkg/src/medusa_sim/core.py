"""Domain types shared by the simulator, scheduler and proxy.

Everything here is an immutable value. Job outputs are represented only by
their digests; the simulator never materializes payload bytes.
"""
from __future__ import annotations

import enum
import hashlib
import struct
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

CloudId = int

DIGEST_SIZE = 32


class FaultMode(enum.Enum):
    ARBITRARY_ONLY = "arbitrary_only"
    MALICIOUS = "malicious"


class Phase(enum.Enum):
    VANILLA = "vanilla"
    GLOBAL = "global"


class ReplicaState(enum.Enum):
    COPYING_DATA = "copying_data"
    RUNNING = "running"
    FINISHED = "finished"
    UNREACHABLE = "unreachable"

    @property
    def terminal(self) -> bool:
        return self in (ReplicaState.FINISHED, ReplicaState.UNREACHABLE)


class ConfigError(ValueError):
    """Raised when a value violates a domain invariant."""


@dataclass(frozen=True)
class FaultToleranceConfig:
    f: int
    mode: FaultMode = FaultMode.MALICIOUS

    def __post_init__(self):
        if self.f < 0:
            raise ConfigError(f"f must be non-negative, got {self.f}")

    @property
    def quorum(self) -> int:
        """Identical outputs needed to accept a result."""
        return self.f + 1

    @property
    def min_clouds(self) -> int:
        return 2 * self.f + 1

    def check_cloud_count(self, n_clouds: int) -> None:
        if n_clouds < self.min_clouds:
            raise ConfigError(
                f"{n_clouds} clouds cannot tolerate f={self.f}; "
                f"at least {self.min_clouds} are required"
            )


@dataclass(frozen=True)
class DataPartition:
    id: str
    size_bytes: int
    home_cloud: CloudId
    content_seed: int

    def __post_init__(self):
        if self.size_bytes <= 0:
            raise ConfigError(f"partition {self.id!r}: size_bytes must be positive")
        if self.home_cloud < 0:
            raise ConfigError(f"partition {self.id!r}: home_cloud must be >= 0")


@dataclass(frozen=True)
class JobSpec:
    id: str
    phase: Phase
    input: Tuple[str, ...]
    map_tasks: int = 1
    reduce_tasks: int = 1

    def __post_init__(self):
        object.__setattr__(self, "input", tuple(self.input))
        if self.map_tasks <= 0 or self.reduce_tasks <= 0:
            raise ConfigError(f"job {self.id!r}: task counts must be positive")
        if not self.input:
            raise ConfigError(f"job {self.id!r}: no input")
        if self.phase is Phase.VANILLA and len(self.input) != 1:
            raise ConfigError(f"vanilla job {self.id!r} must read exactly one partition")


@dataclass(frozen=True, order=True)
class Digest:
    value: bytes

    def __post_init__(self):
        if len(self.value) != DIGEST_SIZE:
            raise ConfigError(f"digest must be {DIGEST_SIZE} bytes")

    @classmethod
    def of(cls, *chunks: bytes) -> "Digest":
        h = hashlib.sha256()
        for chunk in chunks:
            # length-prefix every chunk so concatenation is unambiguous
            h.update(struct.pack(">Q", len(chunk)))
            h.update(chunk)
        return cls(h.digest())

    @classmethod
    def fromhex(cls, text: str) -> "Digest":
        return cls(bytes.fromhex(text))

    def hex(self) -> str:
        return self.value.hex()

    def short(self) -> str:
        return self.value.hex()[:12]

    def __repr__(self) -> str:
        return f"Digest({self.short()})"


@dataclass(frozen=True)
class JobReplica:
    job: str
    cloud: CloudId
    attempt: int
    state: ReplicaState = ReplicaState.COPYING_DATA
    digest: Optional[Digest] = None

    def __post_init__(self):
        if self.attempt < 1:
            raise ConfigError("attempt numbers start at 1")
        if self.state is ReplicaState.FINISHED and self.digest is None:
            raise ConfigError("a finished replica carries its output digest")

    def advance(self, state: ReplicaState, digest: Optional[Digest] = None) -> "JobReplica":
        if self.state.terminal:
            raise ConfigError(
                f"replica {self.job}@{self.cloud}#{self.attempt} is already {self.state.value}"
            )
        return JobReplica(self.job, self.cloud, self.attempt, state, digest)


def _encode_int(value: int) -> bytes:
    return struct.pack(">q", value) if value < 2**63 else struct.pack(">Q", value)


def partition_digest(partition: DataPartition) -> Digest:
    """Digest of a partition's content, used to validate copies."""
    return Digest.of(b"partition", partition.id.encode(), _encode_int(partition.content_seed))


def canonical_digest(partitions: Iterable[DataPartition], job: JobSpec) -> Digest:
    """Digest of the correct output of ``job`` over ``partitions``.

    The result depends only on the sorted partition ids, their content
    seeds and the job id, so the order of ``partitions`` is irrelevant.
    """
    parts = sorted(partitions, key=lambda p: p.id)
    if not parts:
        raise ConfigError(f"job {job.id!r}: canonical digest needs at least one partition")
    chunks = [b"output", job.id.encode()]
    for p in parts:
        chunks.append(p.id.encode())
        chunks.append(_encode_int(p.content_seed))
    return Digest.of(*chunks)


def wrong_digest(canonical: Digest, tag: str) -> Digest:
    """Deterministic incorrect output derived from the canonical one."""
    return Digest.of(b"corrupt", canonical.value, tag.encode())


def tampered(digest: Digest) -> Digest:
    """Flip the low bit of the first byte."""
    raw = bytearray(digest.value)
    raw[0] ^= 0x01
    return Digest(bytes(raw))


@dataclass(frozen=True)
class DataItem:
    """A unit of data the proxy moves between clouds: a partition or a vanilla output."""

    id: str
    size_bytes: int
    digest: Digest
    origin_job: Optional[str] = None
