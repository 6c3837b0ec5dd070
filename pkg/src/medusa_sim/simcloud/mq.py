"""In-process reliable message queue between the proxy and the clouds.

Each ordered (sender, receiver) pair is a FIFO channel with exactly-once
delivery. A message to an endpoint that is down is never delivered; instead
the sender's timeout handler fires one detection window after the send.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Dict, Hashable, Optional, Tuple

from .engine import EventLoop

Address = Hashable


@dataclass(frozen=True)
class Envelope:
    msg_id: int
    src: Address
    dst: Address
    payload: Any
    sent_at: float


class MessageQueue:
    def __init__(self, loop: EventLoop, latency: float = 0.0, detection_timeout: float = 60.0,
                 on_timeout: Optional[Callable[[Envelope], None]] = None):
        if latency < 0 or detection_timeout <= 0:
            raise ValueError("latency must be >= 0 and detection_timeout > 0")
        self.loop = loop
        self.latency = latency
        self.detection_timeout = detection_timeout
        self.on_timeout = on_timeout
        self._handlers: Dict[Address, Callable[[Envelope], None]] = {}
        self._alive: Dict[Address, Callable[[], bool]] = {}
        self._last_delivery: Dict[Tuple[Address, Address], float] = {}
        self._next_id = 0
        self.delivered: list = []
        self.record_deliveries = False

    def register(self, address: Address, handler: Callable[[Envelope], None],
                 is_up: Callable[[], bool] = lambda: True) -> None:
        self._handlers[address] = handler
        self._alive[address] = is_up

    def is_up(self, address: Address) -> bool:
        return self._alive[address]()

    def send(self, src: Address, dst: Address, payload: Any, latency: Optional[float] = None) -> Envelope:
        if dst not in self._handlers:
            raise KeyError(f"unknown endpoint {dst!r}")
        self._next_id += 1
        env = Envelope(self._next_id, src, dst, payload, self.loop.now)
        if not self.is_up(dst):
            self._hold(env)
            return env
        delay = self.latency if latency is None else latency
        when = max(self.loop.now + delay, self._last_delivery.get((src, dst), 0.0))
        self._last_delivery[(src, dst)] = when
        self.loop.schedule_at(when, self._deliver, env)
        return env

    def _hold(self, env: Envelope) -> None:
        if self.on_timeout is not None:
            self.loop.schedule_at(env.sent_at + self.detection_timeout, self.on_timeout, env)

    def _deliver(self, env: Envelope) -> None:
        if not self.is_up(env.dst):
            self._hold(env)
            return
        if self.record_deliveries:
            self.delivered.append((self.loop.now, env.msg_id, env.src, env.dst))
        self._handlers[env.dst](env)


def enqueue_message(mq: MessageQueue, src: Address, dst: Address, payload: Any) -> Envelope:
    return mq.send(src, dst, payload)
