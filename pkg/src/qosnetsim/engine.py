"""Deterministic discrete-event core: simulation clock, event queue, RNG streams.

Events fire in (time, schedule-order) order, so two runs that schedule the
same events in the same order replay identically.  Randomness comes only from
named streams derived from (run seed, stream name), which keeps every source
independent: adding a stream never perturbs draws on existing ones.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np


class SimulationError(Exception):
    """Base error for simulator faults."""


class CausalityError(SimulationError):
    """Raised when an event is scheduled before the current clock."""


class RngStream:
    """Reproducible random stream identified by (seed, name).

    Uses the counter-based Philox generator keyed by the run seed plus a
    SHA-256 digest of the stream name, so the sequence for a given
    (name, seed) pair is identical across runs and platforms.
    """

    def __init__(self, name: str, seed: int):
        if not name:
            raise ValueError("stream name must be non-empty")
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.name = name
        self.seed = seed
        digest = hashlib.sha256(name.encode("utf-8")).digest()
        words = [int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)]
        ss = np.random.SeedSequence([seed, *words])
        self._gen = np.random.Generator(np.random.Philox(ss))

    def random(self) -> float:
        """Uniform draw in [0, 1)."""
        return float(self._gen.random())

    def uniform(self, low: float, high: float) -> float:
        if high < low:
            raise ValueError("uniform bounds out of order")
        return low + (high - low) * self.random()

    def exponential(self, mean: float) -> float:
        """Inverse-CDF exponential draw; strictly positive."""
        if mean <= 0:
            raise ValueError("exponential mean must be > 0")
        u = self.random()
        while u == 0.0:  # keeps u in (0, 1) so -ln(u) stays finite and > 0
            u = self.random()
        return -mean * math.log(u)


def sample_exponential(stream: RngStream, mean: float) -> float:
    return stream.exponential(mean)


def sample_constant(value: float) -> float:
    if value < 0:
        raise ValueError("constant sample must be >= 0")
    return value


class EventHandle:
    """Cancellable reference to a scheduled event (simple tombstone)."""

    __slots__ = ("cancelled",)

    def __init__(self) -> None:
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True


@dataclass(frozen=True)
class RunSummary:
    events_fired: int
    clock: float


class Engine:
    """Event queue and clock for one simulation run."""

    def __init__(self, seed: int = 1):
        self.now = 0.0
        self.seed = seed
        self._heap: List[Tuple[float, int, EventHandle, Callable[[], None]]] = []
        self._seq = 0
        self._fired = 0
        self._streams: Dict[str, RngStream] = {}

    def stream(self, name: str) -> RngStream:
        """Named stream for this run's seed; one instance per name."""
        st = self._streams.get(name)
        if st is None:
            st = RngStream(name, self.seed)
            self._streams[name] = st
        return st

    def schedule_at(self, fire_time: float, action: Callable[[], None]) -> EventHandle:
        if fire_time < self.now:
            raise CausalityError(
                f"cannot schedule at t={fire_time:.9f} before clock t={self.now:.9f}"
            )
        handle = EventHandle()
        self._seq += 1
        heapq.heappush(self._heap, (fire_time, self._seq, handle, action))
        return handle

    def schedule_in(self, delay: float, action: Callable[[], None]) -> EventHandle:
        if delay < 0:
            raise CausalityError(f"cannot schedule with negative delay {delay!r}")
        return self.schedule_at(self.now + delay, action)

    def run_until(self, t_end: float) -> RunSummary:
        """Fire every event with fire_time <= t_end, then set clock to t_end."""
        if t_end < self.now:
            raise CausalityError("run_until target precedes the clock")
        heap = self._heap
        while heap and heap[0][0] <= t_end:
            fire_time, _, handle, action = heapq.heappop(heap)
            if handle.cancelled:
                continue
            self.now = fire_time
            self._fired += 1
            action()
        self.now = t_end
        return RunSummary(events_fired=self._fired, clock=self.now)

    def pending(self) -> int:
        return sum(1 for _, _, h, _ in self._heap if not h.cancelled)
