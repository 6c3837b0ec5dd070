"""Greedy cloud selection for replicas, plus the round-robin baseline.

The selection functions are pure: they take an ``estimate`` callable mapping a
candidate cloud to a :class:`ScheduleEstimate` and never touch simulator state.
:class:`MedusaPolicy` and :class:`RoundRobinPolicy` bind them to live state
for the proxy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Collection, Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from .core import CloudId, FaultMode, JobSpec
from .netmodel import LinkDown, LinkModel, ThroughputTracker, estimate_transmission_time


class NoCloudAvailable(RuntimeError):
    pass


class Excluded(LookupError):
    pass


@dataclass(frozen=True)
class ScheduleEstimate:
    cloud: CloudId
    seconds: float
    t_trans: float = 0.0
    t_proc: float = 0.0
    source: Optional[CloudId] = None

    def as_dict(self) -> dict:
        return {"cloud": self.cloud, "seconds": self.seconds, "t_trans": self.t_trans,
                "t_proc": self.t_proc, "source": self.source}


Estimator = Callable[[CloudId], ScheduleEstimate]


@dataclass
class ExclusionSet:
    """Clouds barred from further replicas, per job, plus clouds known to be down."""

    per_job: Dict[str, Set[CloudId]] = field(default_factory=dict)
    down: Set[CloudId] = field(default_factory=set)

    def exclude(self, job: str, cloud: CloudId) -> None:
        self.per_job.setdefault(job, set()).add(cloud)

    def mark_down(self, cloud: CloudId) -> None:
        self.down.add(cloud)

    def for_job(self, job: str) -> Set[CloudId]:
        return self.down | self.per_job.get(job, set())

    def is_excluded(self, job: str, cloud: CloudId) -> bool:
        return cloud in self.down or cloud in self.per_job.get(job, ())


def best_source(holders: Iterable[CloudId], dest: CloudId, size_bytes: float,
                tracker: ThroughputTracker, link: LinkModel) -> Tuple[Optional[CloudId], float]:
    """Cheapest holder to copy from; ``(dest, 0.0)`` when dest already holds the data."""
    holders = sorted(holders)
    if dest in holders:
        return dest, 0.0
    best: Tuple[Optional[CloudId], float] = (None, math.inf)
    for j in holders:
        try:
            t = estimate_transmission_time(tracker, link, j, dest, size_bytes)
        except LinkDown:
            continue
        if t < best[1]:
            best = (j, t)
    return best


def estimate_t1(job: JobSpec, candidate: CloudId, source: CloudId, tracker: ThroughputTracker,
                link: LinkModel, t_proc: float, size_bytes: float,
                excluded: Collection[CloudId] = (), holds_input: bool = False) -> ScheduleEstimate:
    """Transfer time from ``source`` plus predicted processing time on ``candidate``.

    A candidate that already holds the input (its home, or a validated copy)
    pays no transfer.
    """
    if candidate in excluded:
        raise Excluded(f"cloud {candidate} is excluded for job {job.id}")
    if holds_input or candidate == source:
        t_trans = 0.0
        source = candidate
    else:
        t_trans = estimate_transmission_time(tracker, link, source, candidate, size_bytes)
    return ScheduleEstimate(candidate, t_trans + t_proc, t_trans, t_proc, source)


OutputSpec = Union[Mapping[CloudId, float], Sequence[Tuple[Collection[CloudId], float]]]


def _normalize_outputs(outputs: OutputSpec) -> List[Tuple[frozenset, float]]:
    if isinstance(outputs, Mapping):
        return [(frozenset({j}), float(s)) for j, s in sorted(outputs.items())]
    return [(frozenset(h), float(s)) for h, s in outputs]


def estimate_t2(candidate: CloudId, outputs: OutputSpec, tracker: ThroughputTracker,
                link: LinkModel, t_proc: float = 0.0) -> ScheduleEstimate:
    """Slowest of the parallel transfers of outputs ``candidate`` lacks, plus ``t_proc``.

    ``outputs`` is either ``{holder_cloud: size}`` or a sequence of
    ``(holders, size)`` pairs; each output is fetched from its cheapest holder.
    """
    worst = 0.0
    worst_src = None
    for holders, size in _normalize_outputs(outputs):
        src, t = best_source(holders, candidate, size, tracker, link)
        if src is None:
            raise LinkDown(f"no reachable holder for an output needed at cloud {candidate}")
        if t > worst:
            worst, worst_src = t, src
    return ScheduleEstimate(candidate, worst + t_proc, worst, t_proc, worst_src)


def _usable_estimates(candidates: Iterable[CloudId], estimate: Estimator) -> List[ScheduleEstimate]:
    out = []
    for c in candidates:
        try:
            out.append(estimate(c))
        except (LinkDown, Excluded):
            continue
    return out


def _order(estimates: List[ScheduleEstimate]) -> List[ScheduleEstimate]:
    return sorted(estimates, key=lambda e: (e.seconds, e.cloud))


def select_phase1_clouds(home: CloudId, f: int, clouds: Iterable[CloudId],
                         excluded: Collection[CloudId], estimate: Estimator) -> List[CloudId]:
    """Home cloud followed by the ``f`` cheapest other clouds, cheapest first."""
    chosen, _ = select_phase1_with_estimates(home, f, clouds, excluded, estimate)
    return chosen


def select_phase1_with_estimates(home, f, clouds, excluded, estimate):
    if home in excluded:
        raise NoCloudAvailable(f"home cloud {home} is unavailable")
    others = [c for c in clouds if c != home and c not in excluded]
    ranked = _order(_usable_estimates(others, estimate))
    if len(ranked) < f:
        raise NoCloudAvailable(f"need {f} clouds besides home {home}, only {len(ranked)} usable")
    picked = ranked[:f]
    return [home] + [e.cloud for e in picked], picked


def select_phase2_clouds(f: int, clouds: Iterable[CloudId], excluded: Collection[CloudId],
                         estimate: Estimator) -> List[CloudId]:
    chosen, _ = select_phase2_with_estimates(f, clouds, excluded, estimate)
    return chosen


def select_phase2_with_estimates(f, clouds, excluded, estimate):
    ranked = _order(_usable_estimates([c for c in clouds if c not in excluded], estimate))
    if len(ranked) < f + 1:
        raise NoCloudAvailable(f"need {f + 1} clouds for the global job, only {len(ranked)} usable")
    picked = ranked[: f + 1]
    return [e.cloud for e in picked], picked


def extra_candidates(clouds: Iterable[CloudId], mode: FaultMode, running: Collection[CloudId],
                     reported: Collection[CloudId], excluded: Collection[CloudId]) -> List[CloudId]:
    """Clouds allowed to host one more replica of a job after a disagreement.

    Clouds still running the job are skipped. In malicious mode any cloud that
    already returned an output for the job is untrusted and skipped as well.
    """
    barred = set(running) | set(excluded)
    if mode is FaultMode.MALICIOUS:
        barred |= set(reported)
    return [c for c in clouds if c not in barred]


def select_extra_replica(clouds: Iterable[CloudId], mode: FaultMode, running: Collection[CloudId],
                         reported: Collection[CloudId], excluded: Collection[CloudId],
                         estimate: Estimator) -> ScheduleEstimate:
    candidates = extra_candidates(clouds, mode, running, reported, excluded)
    ranked = _order(_usable_estimates(candidates, estimate))
    if not ranked:
        raise NoCloudAvailable("no cloud left to run an extra replica")
    return ranked[0]


class RoundRobinCursor:
    """Global circular cursor shared by every job of a run.

    After each pick the cursor sits just past the last cloud handed out, so
    with nothing excluded it advances by ``f + 1`` per job.
    """

    def __init__(self, clouds: Sequence[CloudId], start: int = 0):
        self.clouds = list(clouds)
        self.position = start % len(self.clouds) if self.clouds else 0

    def take(self, n: int, excluded: Collection[CloudId] = ()) -> List[CloudId]:
        picked: List[CloudId] = []
        pos = self.position
        for _ in range(len(self.clouds)):
            c = self.clouds[pos]
            pos = (pos + 1) % len(self.clouds)
            if c in excluded:
                continue
            picked.append(c)
            if len(picked) == n:
                self.position = pos
                return picked
        raise NoCloudAvailable(f"round-robin needs {n} clouds, only {len(picked)} available")


def round_robin_select(cursor: RoundRobinCursor, f: int, excluded: Collection[CloudId] = ()) -> List[CloudId]:
    return cursor.take(f + 1, excluded)


# --- policies bound to live proxy state -------------------------------------------


class MedusaPolicy:
    """Greedy placement driven by throughput estimates and per-cloud regressions.

    Args:
        view: object exposing the proxy's knowledge (see ``protocol.SchedulerView``):
            ``clouds``, ``tracker``, ``link``, ``predict_proc(job, cloud, size)``.
    """

    name = "medusa"

    def __init__(self, view):
        self.view = view

    def _t1(self, job: JobSpec, size: float, holders: Collection[CloudId], excluded) -> Estimator:
        v = self.view

        def est(cloud: CloudId) -> ScheduleEstimate:
            if cloud in excluded:
                raise Excluded(f"cloud {cloud} excluded")
            src, t_trans = best_source(holders, cloud, size, v.tracker, v.link)
            if src is None:
                raise LinkDown(f"no route to cloud {cloud}")
            t_proc = v.predict_proc(job, cloud, size)
            return ScheduleEstimate(cloud, t_trans + t_proc, t_trans, t_proc, src)

        return est

    def _t2(self, outputs, excluded) -> Estimator:
        v = self.view

        def est(cloud: CloudId) -> ScheduleEstimate:
            if cloud in excluded:
                raise Excluded(f"cloud {cloud} excluded")
            return estimate_t2(cloud, outputs, v.tracker, v.link)

        return est

    def initial_vanilla(self, job, home, size, f, excluded):
        return select_phase1_with_estimates(home, f, self.view.clouds, excluded,
                                            self._t1(job, size, {home}, excluded))

    def initial_global(self, job, outputs, f, excluded):
        return select_phase2_with_estimates(f, self.view.clouds, excluded, self._t2(outputs, excluded))

    def extra(self, job, mode, running, reported, excluded, *, size=None, holders=(), outputs=None):
        if outputs is not None:
            est = self._t2(outputs, excluded)
        else:
            est = self._t1(job, size, holders, excluded)
        return select_extra_replica(self.view.clouds, mode, running, reported, excluded, est)


class RoundRobinPolicy:
    """Baseline: replicas go to clouds in circular order, ignoring data location and speed."""

    name = "round_robin"

    def __init__(self, view, start: int = 0):
        self.view = view
        self.cursor = RoundRobinCursor(view.clouds, start)

    def initial_vanilla(self, job, home, size, f, excluded):
        picked = round_robin_select(self.cursor, f, excluded)
        return picked, [ScheduleEstimate(c, 0.0) for c in picked]

    def initial_global(self, job, outputs, f, excluded):
        picked = round_robin_select(self.cursor, f, excluded)
        return picked, [ScheduleEstimate(c, 0.0) for c in picked]

    def extra(self, job, mode, running, reported, excluded, *, size=None, holders=(), outputs=None):
        allowed = set(extra_candidates(self.view.clouds, mode, running, reported, excluded))
        barred = [c for c in self.view.clouds if c not in allowed]
        return ScheduleEstimate(self.cursor.take(1, barred)[0], 0.0)


def make_policy(name: str, view, start: int = 0):
    if name == "medusa":
        return MedusaPolicy(view)
    if name == "round_robin":
        return RoundRobinPolicy(view, start)
    raise ValueError(f"unknown scheduler {name!r}")
