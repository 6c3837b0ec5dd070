"""Virtual-clock discrete-event loop and the append-only event trace."""
from __future__ import annotations

import heapq
import json
import zlib
from typing import Any, Callable, Iterable, List, Optional


class EventLoop:
    """Executes callbacks in ``(time, sequence)`` order.

    Events scheduled for the same instant run in the order they were
    scheduled. The clock never moves backwards.
    """

    def __init__(self):
        self.now = 0.0
        self._seq = 0
        self._queue: list = []
        self.executed = 0

    def schedule_at(self, when: float, fn: Callable, *args) -> int:
        if when < self.now:
            raise ValueError(f"cannot schedule in the past ({when} < {self.now})")
        self._seq += 1
        heapq.heappush(self._queue, (when, self._seq, fn, args))
        return self._seq

    def schedule(self, delay: float, fn: Callable, *args) -> int:
        if delay < 0:
            raise ValueError("delay must be non-negative")
        return self.schedule_at(self.now + delay, fn, *args)

    def pending(self) -> int:
        return len(self._queue)

    def peek_time(self) -> Optional[float]:
        return self._queue[0][0] if self._queue else None

    def step(self) -> bool:
        if not self._queue:
            return False
        when, _, fn, args = heapq.heappop(self._queue)
        self.now = when
        self.executed += 1
        fn(*args)
        return True

    def run(self, until: Optional[float] = None, stop: Optional[Callable[[], bool]] = None) -> None:
        while self._queue:
            if stop is not None and stop():
                return
            if until is not None and self._queue[0][0] > until:
                self.now = until
                return
            self.step()


class Trace:
    """Ordered structured records of everything that happened in a run."""

    def __init__(self, records: Optional[Iterable[dict]] = None):
        self.records: List[dict] = list(records or [])

    def emit(self, t: float, event: str, **fields: Any) -> dict:
        rec = {"seq": len(self.records), "t": t, "event": event}
        rec.update({k: v for k, v in fields.items() if v is not None})
        self.records.append(rec)
        return rec

    def of(self, event: str) -> List[dict]:
        return [r for r in self.records if r["event"] == event]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in self.records)

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        return cls(json.loads(line) for line in text.splitlines() if line.strip())


def event_seed(run_seed: int, *keys) -> List[int]:
    """Seed material for one random draw, stable across scheduling decisions.

    Keys may be ints or strings; strings are folded through CRC-32.
    """
    out = [run_seed & 0xFFFFFFFFFFFFFFFF]
    for k in keys:
        if isinstance(k, str):
            out.append(zlib.crc32(k.encode()))
        elif k is None:
            out.append(0xFFFFFFFF)
        else:
            out.append(int(k) & 0xFFFFFFFFFFFFFFFF)
    return out
