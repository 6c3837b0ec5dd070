"""Pairwise link state and transfer-time estimation.

The proxy never sees ``true_throughput``; it only sees the samples recorded
in a :class:`ThroughputTracker`. The simulator uses the ground truth to decide
how long a transfer actually takes.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, Iterator, Optional, Tuple

import numpy as np

from .core import CloudId

Pair = Tuple[CloudId, CloudId]

DEFAULT_WINDOW_K = 10


class NoMeasurement(LookupError):
    pass


class LinkDown(RuntimeError):
    pass


@dataclass
class LinkModel:
    """RTT, ground-truth throughput and cold-start priors for every ordered pair.

    Args:
        rtt_seconds: round-trip time per ordered pair. Must be symmetric.
        true_throughput: bytes/s actually achieved by transfers.
        prior_throughput: bytes/s assumed by the estimator before any sample
            exists. Defaults to ``true_throughput`` when omitted.
        noise_sigma: sigma of the multiplicative lognormal noise applied to
            simulated transfer durations.
        down: ordered pairs whose transfers never complete.
    """

    rtt_seconds: Dict[Pair, float]
    true_throughput: Dict[Pair, float]
    prior_throughput: Dict[Pair, float] = field(default_factory=dict)
    noise_sigma: float = 0.0
    down: set = field(default_factory=set)

    def __post_init__(self):
        for pair, rtt in self.rtt_seconds.items():
            if not math.isfinite(rtt) or rtt < 0:
                raise ValueError(f"rtt for {pair} must be finite and >= 0")
            back = self.rtt_seconds.get((pair[1], pair[0]))
            if back is not None and back != rtt:
                raise ValueError(f"rtt must be symmetric: {pair} has {rtt}, reverse has {back}")
        for pair, tput in self.true_throughput.items():
            if not math.isfinite(tput) or tput <= 0:
                raise ValueError(f"throughput for {pair} must be finite and > 0")
        for pair in self.true_throughput:
            self.prior_throughput.setdefault(pair, self.true_throughput[pair])
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    @classmethod
    def uniform(cls, clouds, rtt: float, throughput: float, noise_sigma: float = 0.0) -> "LinkModel":
        pairs = [(j, i) for j in clouds for i in clouds if j != i]
        return cls(
            rtt_seconds={p: rtt for p in pairs},
            true_throughput={p: throughput for p in pairs},
            noise_sigma=noise_sigma,
        )

    def pairs(self) -> Iterator[Pair]:
        return iter(sorted(self.true_throughput))

    def is_down(self, j: CloudId, i: CloudId) -> bool:
        return (j, i) in self.down

    def rtt(self, j: CloudId, i: CloudId) -> float:
        return self.rtt_seconds.get((j, i), 0.0)

    def prior(self, j: CloudId, i: CloudId) -> float:
        try:
            return self.prior_throughput[(j, i)]
        except KeyError:
            raise NoMeasurement(f"no prior throughput for link {j}->{i}") from None


class ThroughputTracker:
    """Keeps the ``k`` most recent throughput samples per ordered pair."""

    def __init__(self, window_k: int = DEFAULT_WINDOW_K):
        if window_k < 1:
            raise ValueError("window_k must be positive")
        self.window_k = window_k
        self._samples: Dict[Pair, Deque[float]] = {}

    def record(self, j: CloudId, i: CloudId, value: float) -> "ThroughputTracker":
        if j == i:
            raise ValueError(f"cannot measure a link from cloud {j} to itself")
        if not value > 0 or not math.isfinite(value):
            raise ValueError(f"throughput sample must be positive, got {value!r}")
        buf = self._samples.get((j, i))
        if buf is None:
            buf = self._samples[(j, i)] = deque(maxlen=self.window_k)
        buf.append(float(value))
        return self

    def samples(self, j: CloudId, i: CloudId) -> Tuple[float, ...]:
        return tuple(self._samples.get((j, i), ()))

    def estimate(self, j: CloudId, i: CloudId) -> float:
        buf = self._samples.get((j, i))
        if not buf:
            raise NoMeasurement(f"no throughput samples for link {j}->{i}")
        return math.fsum(buf) / len(buf)

    def snapshot(self) -> "ThroughputTracker":
        copy = ThroughputTracker(self.window_k)
        copy._samples = {p: deque(buf, maxlen=self.window_k) for p, buf in self._samples.items()}
        return copy


def record_measurement(tracker: ThroughputTracker, j: CloudId, i: CloudId, value: float) -> ThroughputTracker:
    return tracker.record(j, i, value)


def estimated_throughput(tracker: ThroughputTracker, j: CloudId, i: CloudId) -> float:
    """Mean of the retained samples for ``j -> i``; raises NoMeasurement if none."""
    return tracker.estimate(j, i)


def estimate_transmission_time(
    tracker: ThroughputTracker,
    link: LinkModel,
    j: CloudId,
    i: CloudId,
    size_bytes: float,
) -> float:
    """Half the RTT plus size over the windowed throughput estimate.

    Falls back to the link's prior throughput when no sample exists yet.
    """
    if j == i:
        raise ValueError("source and destination must differ")
    if size_bytes < 0:
        raise ValueError("size must be non-negative")
    if link.is_down(j, i):
        raise LinkDown(f"link {j}->{i} is down")
    try:
        tput = tracker.estimate(j, i)
    except NoMeasurement:
        tput = link.prior(j, i)
    return link.rtt(j, i) / 2.0 + size_bytes / tput


def lognormal_factor(rng: np.random.Generator, sigma: float) -> float:
    if sigma == 0:
        return 1.0
    return float(rng.lognormal(0.0, sigma))


def simulate_transfer(
    link: LinkModel,
    j: CloudId,
    i: CloudId,
    size_bytes: float,
    rng_seed,
) -> Optional[float]:
    """Ground-truth transfer duration, or ``None`` if the link is down.

    ``rng_seed`` is anything :func:`numpy.random.default_rng` accepts, so the
    same seed always yields the same duration.
    """
    if link.is_down(j, i):
        return None
    nominal = link.rtt(j, i) / 2.0 + size_bytes / link.true_throughput[(j, i)]
    rng = np.random.default_rng(rng_seed)
    return nominal * lognormal_factor(rng, link.noise_sigma)


def measure(link: LinkModel, j: CloudId, i: CloudId, rng: np.random.Generator, sigma: Optional[float] = None) -> float:
    """One noisy bandwidth probe of ``j -> i`` (stand-in for an iperf run)."""
    s = link.noise_sigma if sigma is None else sigma
    return link.true_throughput[(j, i)] * lognormal_factor(rng, s)
