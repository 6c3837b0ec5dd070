"""One isolated simulated multi-cloud world: clock, MQ, clouds, links, faults."""
from __future__ import annotations

from typing import Callable, Dict, Iterable, List, Optional

import numpy as np

from ..core import CloudId
from ..netmodel import DEFAULT_WINDOW_K, LinkModel, ThroughputTracker, measure
from .cloud import CloudProfile, SimCloud
from .engine import EventLoop, Trace, event_seed
from .faults import FaultInjection, FaultInjector
from .mq import Envelope, MessageQueue

DEFAULT_DETECTION_TIMEOUT = 60.0
DEFAULT_MEASUREMENT_PERIOD = 30.0
DEFAULT_CONTROL_LATENCY = 0.05


class Simulation:
    """Holds every piece of simulated state for a single seeded run.

    Outage detection: when a cloud crashes, listeners registered in
    ``outage_listeners`` are told ``detection_timeout`` seconds later (the
    heartbeat goes silent). A message sent to a dead cloud triggers the same
    notification one window after the send.
    """

    def __init__(self, profiles: Iterable[CloudProfile], link: LinkModel, seed: int = 0,
                 injections: Iterable[FaultInjection] = (), *,
                 detection_timeout: float = DEFAULT_DETECTION_TIMEOUT,
                 control_latency: float = DEFAULT_CONTROL_LATENCY,
                 measurement_period: Optional[float] = DEFAULT_MEASUREMENT_PERIOD,
                 measurement_sigma: Optional[float] = None,
                 window_k: int = DEFAULT_WINDOW_K,
                 trace: Optional[Trace] = None):
        self.seed = int(seed)
        self.loop = EventLoop()
        self.trace = trace if trace is not None else Trace()
        self.link = link
        self.detection_timeout = detection_timeout
        self.measurement_period = measurement_period
        self.measurement_sigma = measurement_sigma
        self.mq = MessageQueue(self.loop, control_latency, detection_timeout, on_timeout=self._on_timeout)
        self.clouds: Dict[CloudId, SimCloud] = {}
        for p in sorted(profiles, key=lambda p: p.id):
            cloud = SimCloud(p, self)
            self.clouds[p.id] = cloud
            self.mq.register(p.id, cloud.handle, (lambda c=cloud: c.alive))
        ids = sorted(self.clouds)
        if ids != list(range(len(ids))):
            raise ValueError(f"cloud ids must be dense 0..{len(ids) - 1}, got {ids}")
        self.tracker = ThroughputTracker(window_k)
        self.injector = FaultInjector(injections, self)
        self.outage_listeners: List[Callable[[CloudId], None]] = []
        self._measure_tick = 0

    @property
    def cloud_ids(self) -> List[CloudId]:
        return sorted(self.clouds)

    def profile(self, cloud: CloudId) -> CloudProfile:
        return self.clouds[cloud].profile

    def is_alive(self, cloud: CloudId) -> bool:
        return self.clouds[cloud].alive

    def draw_background(self) -> None:
        for cid, cloud in self.clouds.items():
            rng = np.random.default_rng(event_seed(self.seed, "background", cid))
            cloud.background = cloud.profile.background_load.draw(rng)

    def crash(self, cloud: CloudId) -> None:
        c = self.clouds[cloud]
        if not c.alive:
            return
        c.crash()
        self.trace.emit(self.loop.now, "outage", cloud=cloud)
        self.loop.schedule(self.detection_timeout, self._notify_outage, cloud)

    def _notify_outage(self, cloud: CloudId) -> None:
        for listener in list(self.outage_listeners):
            listener(cloud)

    def _on_timeout(self, env: Envelope) -> None:
        if isinstance(env.dst, int):
            self._notify_outage(env.dst)

    def start(self) -> None:
        self.draw_background()
        self.injector.arm()
        if self.measurement_period:
            self.loop.schedule(self.measurement_period, self._measure)

    def _measure(self) -> None:
        self._measure_tick += 1
        for j, i in self.link.pairs():
            if self.link.is_down(j, i) or not (self.is_alive(j) and self.is_alive(i)):
                continue
            rng = np.random.default_rng(event_seed(self.seed, "measure", self._measure_tick, j, i))
            self.tracker.record(j, i, measure(self.link, j, i, rng, self.measurement_sigma))
        self.loop.schedule(self.measurement_period, self._measure)

    def run(self, stop: Callable[[], bool], watchdog: float) -> bool:
        """Advance until ``stop()`` holds; False if the watchdog time ran out first."""
        self.loop.run(until=watchdog, stop=stop)
        return stop()
