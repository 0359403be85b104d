"""DSCP classification, RED, and the queuing disciplines (FIFO, PQ, WFQ).

WFQ is realized as deficit weighted round robin over the class queues, with
one refinement used by production schedulers: the top-rank (EF) queue is
served at strict priority ahead of the round robin.  Without that stage a
round-robin scheduler gives a sparse EF flow the same latency as any other
sparse flow, which defeats the point of marking it EF.  EF load is assumed
light (no policer), so the stage cannot starve the round robin in practice.

Buffering is accounted in bytes per class queue: each queue owns a capacity
of buffer_limit bytes, and RED thresholds are fractions of that capacity.
A packet held by the transmitter is outside its queue and not counted.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .engine import RngStream
from .traffic import DSCP_BY_CLASS, RANK_BY_CLASS, TRAFFIC_CLASSES, Packet

DISCIPLINES = ("fifo", "pq", "wfq")

ACCEPTED = "accepted"
DROP_RED = "red"
DROP_OVERFLOW = "overflow"

DEFAULT_WEIGHTS = {"voice": 40, "video": 30, "database": 20, "ftp": 10}
QUANTUM_BYTES_PER_WEIGHT = 150


class ClassifierTable:
    """DSCP -> (class, rank) map with a default class for unknown marks."""

    def __init__(self, entries: Dict[int, Tuple[str, int]], default_class: str = "ftp"):
        ranks = [rank for _, rank in entries.values()]
        if len(set(ranks)) != len(ranks):
            raise ValueError("classifier ranks must be distinct")
        if default_class not in {cls for cls, _ in entries.values()}:
            raise ValueError("default class must appear in the table")
        self.entries = dict(entries)
        self.default_class = default_class
        self._by_class = {cls: rank for cls, rank in entries.values()}

    @classmethod
    def standard(cls) -> "ClassifierTable":
        return cls({DSCP_BY_CLASS[c]: (c, RANK_BY_CLASS[c]) for c in TRAFFIC_CLASSES})

    def classify(self, packet: Packet) -> str:
        entry = self.entries.get(packet.dscp)
        return entry[0] if entry else self.default_class

    def rank_of(self, traffic_class: str) -> int:
        return self._by_class[traffic_class]

    def classes_by_rank(self) -> List[str]:
        return [cls for cls, _ in sorted(self.entries.values(), key=lambda e: e[1])]


@dataclass
class RedParams:
    enabled: bool = True
    weight: float = 0.002
    max_p: float = 0.1
    min_frac: float = 0.25
    max_frac: float = 0.75
    mean_pkt_bytes: int = 1500

    def validate(self) -> None:
        if not (0 < self.weight <= 1):
            raise ValueError("red weight must be in (0, 1]")
        if not (0 < self.max_p <= 1):
            raise ValueError("red max_p must be in (0, 1]")
        if not (0 < self.min_frac < self.max_frac <= 1):
            raise ValueError("red thresholds need 0 < min_frac < max_frac <= 1")
        if self.mean_pkt_bytes <= 0:
            raise ValueError("red mean packet size must be > 0")


class RedState:
    """Average-queue estimator plus the drop decision for one class queue."""

    def __init__(self, params: RedParams, capacity_bytes: int, typical_tx_s: float):
        params.validate()
        self.params = params
        self.min_th = params.min_frac * capacity_bytes
        self.max_th = params.max_frac * capacity_bytes
        self.typical_tx_s = typical_tx_s
        self.avg = 0.0
        self.count = 0
        self.idle_since: Optional[float] = 0.0
        self.max_avg_seen = 0.0

    def update_avg(self, queue_bytes: int, now: float) -> float:
        """EWMA update at packet arrival; idle time decays the average."""
        w = self.params.weight
        if queue_bytes > 0:
            self.avg = (1.0 - w) * self.avg + w * queue_bytes
        elif self.idle_since is not None and self.typical_tx_s > 0:
            m = (now - self.idle_since) / self.typical_tx_s
            if m > 0:
                self.avg *= (1.0 - w) ** m
        if self.avg > self.max_avg_seen:
            self.max_avg_seen = self.avg
        return self.avg

    def mark_busy(self) -> None:
        self.idle_since = None

    def mark_idle(self, now: float) -> None:
        self.idle_since = now

    def base_probability(self, avg: Optional[float] = None) -> float:
        """p_b ramps linearly from 0 at min_th to max_p at max_th."""
        a = self.avg if avg is None else avg
        if a < self.min_th:
            return 0.0
        if a >= self.max_th:
            return 1.0
        return self.params.max_p * (a - self.min_th) / (self.max_th - self.min_th)

    def decide(self, stream: RngStream) -> bool:
        """True means drop.  Call after update_avg."""
        if self.avg < self.min_th:
            self.count = 0
            return False
        if self.avg >= self.max_th:
            self.count = 0
            return True
        p_b = self.base_probability()
        denom = 1.0 - self.count * p_b
        if denom <= 0:
            self.count = 0
            return True
        p_a = p_b / denom
        if stream.random() < p_a:
            self.count = 0
            return True
        self.count += 1
        return False


class ClassQueue:
    """FIFO byte-accounted queue for one traffic class."""

    __slots__ = ("traffic_class", "rank", "weight", "quantum", "deficit",
                 "capacity", "red", "_pkts", "bytes_held", "peak_bytes",
                 "interval_peak")

    def __init__(self, traffic_class: str, rank: int, weight: int, quantum: int,
                 capacity: int, red: Optional[RedState]):
        if capacity <= 0:
            raise ValueError("queue capacity must be > 0 bytes")
        if weight <= 0 or quantum <= 0:
            raise ValueError("weight and quantum must be > 0")
        self.traffic_class = traffic_class
        self.rank = rank
        self.weight = weight
        self.quantum = quantum
        self.deficit = 0
        self.capacity = capacity
        self.red = red
        self._pkts: deque[Packet] = deque()
        self.bytes_held = 0
        self.peak_bytes = 0
        self.interval_peak = 0

    def __len__(self) -> int:
        return len(self._pkts)

    def head(self) -> Optional[Packet]:
        return self._pkts[0] if self._pkts else None

    def push(self, packet: Packet) -> None:
        self._pkts.append(packet)
        self.bytes_held += packet.size_bytes
        if self.bytes_held > self.peak_bytes:
            self.peak_bytes = self.bytes_held
        if self.bytes_held > self.interval_peak:
            self.interval_peak = self.bytes_held

    def pop(self) -> Packet:
        packet = self._pkts.popleft()
        self.bytes_held -= packet.size_bytes
        return packet

    def take_interval_peak(self) -> int:
        """High-water mark since the previous call; resets to the current fill."""
        peak = self.interval_peak
        self.interval_peak = self.bytes_held
        return peak


class QosInterface:
    """Egress queues plus scheduler state for one link direction.

    enqueue() runs classification, the RED decision, then the byte-capacity
    check, in that order.  next_packet() pops one packet per the discipline;
    the owning transmitter is responsible for pacing and timestamps.
    """

    def __init__(
        self,
        name: str,
        discipline: str,
        buffer_limit_bytes: int,
        link_rate_bps: float,
        classifier: Optional[ClassifierTable] = None,
        weights: Optional[Dict[str, int]] = None,
        quantum_bytes_per_weight: int = QUANTUM_BYTES_PER_WEIGHT,
        red_params: Optional[RedParams] = None,
        red_streams: Optional[Dict[str, RngStream]] = None,
    ):
        if discipline not in DISCIPLINES:
            raise ValueError(f"unknown discipline {discipline!r}")
        self.name = name
        self.discipline = discipline
        self.buffer_limit_bytes = buffer_limit_bytes
        self.classifier = classifier or ClassifierTable.standard()
        self.weights = dict(weights or DEFAULT_WEIGHTS)
        self.red_params = red_params or RedParams(enabled=False)
        self._red_streams = red_streams or {}
        if self.red_params.enabled:
            missing = [
                c for c in (classifier or ClassifierTable.standard()).classes_by_rank()
                if c not in self._red_streams
            ]
            if missing:
                raise ValueError(
                    f"RED is enabled on {name!r} but there is no random stream "
                    f"for: {', '.join(missing)}"
                )

        typical_tx_s = (
            self.red_params.mean_pkt_bytes * 8.0 / link_rate_bps if link_rate_bps > 0 else 0.0
        )
        self.queues: Dict[str, ClassQueue] = {}
        for cls in self.classifier.classes_by_rank():
            weight = self.weights.get(cls, 1)
            red = (
                RedState(self.red_params, buffer_limit_bytes, typical_tx_s)
                if self.red_params.enabled
                else None
            )
            self.queues[cls] = ClassQueue(
                traffic_class=cls,
                rank=self.classifier.rank_of(cls),
                weight=weight,
                quantum=weight * quantum_bytes_per_weight,
                capacity=buffer_limit_bytes,
                red=red,
            )
        self._rank_order = [self.queues[c] for c in self.classifier.classes_by_rank()]
        self._drr = self._rank_order[1:]
        # DWRR visit state: the queue currently holding the round, or None
        # when the scheduler must advance to the next backlogged one.
        self._visit: Optional[ClassQueue] = None
        self._cursor = 0

        self.accepted_packets = 0
        self.dropped = {DROP_RED: 0, DROP_OVERFLOW: 0}
        self.dropped_bytes = {DROP_RED: 0, DROP_OVERFLOW: 0}

    # -- enqueue path ------------------------------------------------------

    def enqueue(self, packet: Packet, now: float) -> str:
        """Returns ACCEPTED, DROP_RED, or DROP_OVERFLOW."""
        cls = self.classifier.classify(packet)
        packet.traffic_class = cls
        queue = self.queues[cls]

        if queue.red is not None:
            queue.red.update_avg(queue.bytes_held, now)
            queue.red.mark_busy()
            if queue.red.decide(self._red_streams[cls]):
                self.dropped[DROP_RED] += 1
                self.dropped_bytes[DROP_RED] += packet.size_bytes
                return DROP_RED

        if queue.bytes_held + packet.size_bytes > queue.capacity:
            self.dropped[DROP_OVERFLOW] += 1
            self.dropped_bytes[DROP_OVERFLOW] += packet.size_bytes
            return DROP_OVERFLOW

        packet.enqueued_at = now
        queue.push(packet)
        self.accepted_packets += 1
        return ACCEPTED

    # -- dequeue path ------------------------------------------------------

    def next_packet(self, now: float) -> Optional[Packet]:
        if self.discipline == "pq":
            packet = self._dequeue_pq()
        elif self.discipline == "wfq":
            packet = self._dequeue_wfq()
        else:
            packet = self._dequeue_fifo()
        if packet is not None:
            queue = self.queues[packet.traffic_class]
            if queue.red is not None and queue.bytes_held == 0:
                queue.red.mark_idle(now)
        return packet

    def _dequeue_fifo(self) -> Optional[Packet]:
        # Single logical queue: serve the oldest head across all classes.
        best = None
        for queue in self._rank_order:
            head = queue.head()
            if head is None:
                continue
            if best is None or head.enqueued_at < best.head().enqueued_at or (
                head.enqueued_at == best.head().enqueued_at and head.pid < best.head().pid
            ):
                best = queue
        return best.pop() if best is not None else None

    def _dequeue_pq(self) -> Optional[Packet]:
        for queue in self._rank_order:
            if len(queue):
                return queue.pop()
        return None

    def _dequeue_wfq(self) -> Optional[Packet]:
        ef = self._rank_order[0]
        if len(ef):
            return ef.pop()
        drr = self._drr
        if not any(len(q) for q in drr):
            return None
        guard = 0
        while True:
            if self._visit is None:
                self._visit = self._advance(drr)
                self._visit.deficit += self._visit.quantum
            queue = self._visit
            head = queue.head()
            if head is not None and head.size_bytes <= queue.deficit:
                queue.deficit -= head.size_bytes
                packet = queue.pop()
                if not len(queue):
                    queue.deficit = 0
                    self._visit = None
                return packet
            # Visit over: either the queue emptied or the deficit ran out.
            if not len(queue):
                queue.deficit = 0
            self._visit = None
            guard += 1
            if guard > 1_000_000:
                raise RuntimeError("DWRR failed to make progress")

    def _advance(self, drr: List[ClassQueue]) -> ClassQueue:
        n = len(drr)
        for step in range(1, n + 1):
            candidate = drr[(self._cursor + step) % n]
            if len(candidate):
                self._cursor = (self._cursor + step) % n
                return candidate
        raise RuntimeError("advance called with no backlogged queue")

    # -- inspection --------------------------------------------------------

    def buffer_used(self) -> int:
        return sum(q.bytes_held for q in self._rank_order)

    def backlog(self) -> int:
        return sum(len(q) for q in self._rank_order)

    def class_bytes(self) -> Dict[str, int]:
        return {q.traffic_class: q.bytes_held for q in self._rank_order}

    def take_interval_peaks(self) -> Dict[str, int]:
        return {q.traffic_class: q.take_interval_peak() for q in self._rank_order}


def transmission_time_s(size_bytes: int, link_rate_bps: float) -> float:
    if link_rate_bps <= 0:
        raise ValueError("link rate must be > 0")
    return size_bytes * 8.0 / link_rate_bps
