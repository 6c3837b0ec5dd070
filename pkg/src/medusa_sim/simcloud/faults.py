"""Fault injection: corrupted outputs, collusion, tampered copies and cloud outages."""
from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from ..core import CloudId, Digest, tampered, wrong_digest


class FaultKind(enum.Enum):
    ARBITRARY_CORRUPTION = "arbitrary_corruption"
    MALICIOUS_CORRUPTION = "malicious_corruption"
    COLLUSION = "collusion"
    TRANSMISSION_TAMPER = "transmission_tamper"
    OUTAGE = "outage"


CORRUPTIONS = (FaultKind.ARBITRARY_CORRUPTION, FaultKind.MALICIOUS_CORRUPTION, FaultKind.COLLUSION)


class FaultModelViolation(ValueError):
    """The scenario could make more than f clouds return one identical wrong output."""


@dataclass(frozen=True)
class FaultInjection:
    """One declared fault.

    ``job`` and ``time`` are the two trigger kinds. Corruptions fire on outputs
    of ``job``; with ``cloud`` unset they hit whichever replicas report first.
    An outage fires at ``time``, or when a replica of ``job`` starts on
    ``cloud`` (any cloud when unset). A tamper fires on copies over ``link``
    (``(src, dst)``), or into ``cloud``.
    """

    id: str
    kind: FaultKind
    job: Optional[str] = None
    cloud: Optional[CloudId] = None
    clouds: FrozenSet[CloudId] = frozenset()
    link: Optional[Tuple[CloudId, CloudId]] = None
    time: Optional[float] = None
    count: int = 1
    digest: Optional[Digest] = None

    def __post_init__(self):
        object.__setattr__(self, "clouds", frozenset(self.clouds))
        if self.count < 1:
            raise ValueError(f"injection {self.id}: count must be >= 1")
        if self.kind in CORRUPTIONS and self.job is None:
            raise ValueError(f"injection {self.id}: corruptions need a target job")
        if self.kind is FaultKind.COLLUSION and not self.clouds:
            raise ValueError(f"injection {self.id}: collusion needs a cloud set")
        if self.kind is FaultKind.OUTAGE and self.time is None and self.job is None:
            raise ValueError(f"injection {self.id}: outage needs a time or job trigger")
        if self.kind is FaultKind.OUTAGE and self.time is not None and self.cloud is None:
            raise ValueError(f"injection {self.id}: timed outage needs a cloud")

    def max_identical_wrong_outputs(self) -> int:
        """Upper bound on replicas that can report the same wrong digest because of this injection."""
        if self.kind is FaultKind.ARBITRARY_CORRUPTION:
            return 1  # every firing has its own digest
        if self.kind is FaultKind.MALICIOUS_CORRUPTION:
            return self.count
        if self.kind is FaultKind.COLLUSION:
            return len(self.clouds) * self.count
        return 0


def check_fault_model(injections: Iterable[FaultInjection], f: int,
                      canonical: Optional[Dict[str, Digest]] = None) -> None:
    """Reject scenarios where more than ``f`` replicas could agree on a wrong digest."""
    for inj in injections:
        if inj.kind is FaultKind.COLLUSION and len(inj.clouds) > f:
            raise FaultModelViolation(
                f"injection {inj.id}: collusion of {len(inj.clouds)} clouds exceeds f={f}")
        worst = inj.max_identical_wrong_outputs()
        if worst > f:
            raise FaultModelViolation(
                f"injection {inj.id}: up to {worst} identical wrong outputs for job {inj.job}, f={f}")
        if canonical is not None and inj.digest is not None and inj.job in canonical:
            if inj.digest == canonical[inj.job]:
                raise FaultModelViolation(f"injection {inj.id}: 'wrong' digest equals the correct one")
        if canonical is not None and inj.job is not None and inj.job not in canonical:
            raise ValueError(f"injection {inj.id}: unknown job {inj.job!r}")


@dataclass
class FiredFault:
    injection: str
    kind: str
    t: float
    job: Optional[str] = None
    cloud: Optional[CloudId] = None


class FaultInjector:
    """Applies injections as the simulation runs.

    ``system`` provides ``loop``, ``trace`` and ``crash(cloud)``.
    """

    def __init__(self, injections: Iterable[FaultInjection] = (), system=None):
        self.injections: List[FaultInjection] = list(injections)
        self.system = system
        self.remaining: Dict[Tuple[str, Optional[CloudId]], int] = {}
        self.firings: Dict[str, int] = defaultdict(int)
        self.fired: List[FiredFault] = []
        for inj in self.injections:
            if inj.kind is FaultKind.COLLUSION:
                for c in inj.clouds:
                    self.remaining[(inj.id, c)] = inj.count
            else:
                self.remaining[(inj.id, None)] = inj.count

    def arm(self) -> None:
        """Schedule the time-triggered outages."""
        for inj in self.injections:
            if inj.kind is FaultKind.OUTAGE and inj.time is not None:
                self.system.loop.schedule_at(inj.time, self._outage, inj, inj.cloud)

    def _take(self, inj: FaultInjection, cloud: Optional[CloudId]) -> bool:
        key = (inj.id, cloud if inj.kind is FaultKind.COLLUSION else None)
        left = self.remaining.get(key, 0)
        if left <= 0:
            return False
        self.remaining[key] = left - 1
        self.firings[inj.id] += 1
        return True

    def _record(self, inj: FaultInjection, t: float, job=None, cloud=None, **extra) -> None:
        self.fired.append(FiredFault(inj.id, inj.kind.value, t, job, cloud))
        if self.system is not None:
            self.system.trace.emit(t, "fault_fired", injection=inj.id, kind=inj.kind.value,
                                   job=job, cloud=cloud, **extra)

    def on_output(self, job: str, cloud: CloudId, attempt: int, correct: Digest, t: float) -> Digest:
        for inj in self.injections:
            if inj.kind not in CORRUPTIONS or inj.job != job:
                continue
            if inj.kind is FaultKind.COLLUSION:
                if cloud not in inj.clouds:
                    continue
            elif inj.cloud is not None and inj.cloud != cloud:
                continue
            if not self._take(inj, cloud):
                continue
            if inj.digest is not None:
                bad = inj.digest
            elif inj.kind is FaultKind.ARBITRARY_CORRUPTION:
                bad = wrong_digest(correct, f"{inj.id}#{self.firings[inj.id]}")
            else:
                bad = wrong_digest(correct, inj.id)
            self._record(inj, t, job=job, cloud=cloud, attempt=attempt)
            return bad
        return correct

    def on_copy(self, req, t: float) -> Digest:
        for inj in self.injections:
            if inj.kind is not FaultKind.TRANSMISSION_TAMPER:
                continue
            if inj.link is not None and tuple(inj.link) != (req.src, req.dst):
                continue
            if inj.cloud is not None and inj.cloud != req.dst:
                continue
            if inj.job is not None and inj.job != req.job:
                continue
            if not self._take(inj, None):
                continue
            self._record(inj, t, job=req.job, cloud=req.dst, src=req.src, item=req.item_id)
            return tampered(req.digest)
        return req.digest

    def on_replica_start(self, job: str, cloud: CloudId, t: float) -> None:
        for inj in self.injections:
            if inj.kind is not FaultKind.OUTAGE or inj.time is not None or inj.job != job:
                continue
            if inj.cloud is not None and inj.cloud != cloud:
                continue
            self._outage(inj, cloud)

    def _outage(self, inj: FaultInjection, cloud: CloudId) -> None:
        if not self.system.is_alive(cloud) or not self._take(inj, None):
            return
        self._record(inj, self.system.loop.now, cloud=cloud)
        self.system.crash(cloud)
