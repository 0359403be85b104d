"""Metric collection, windowed statistics, and deterministic CSV export.

Series written to metrics.csv, all per traffic class unless noted:

    queuing_delay            seconds, one sample per packet leaving the
                             monitored interface's queue
    queue_delay_variation    seconds^2, population variance of queuing-delay
                             samples per window
    e2e_delay                seconds, one sample per delivered application
                             unit (packet; frame for video)
    packet_delay_variation   seconds^2, windowed variance of e2e samples
    traffic_drop_bps         bits/second dropped per window (zeros included)
    traffic_drop_total_bytes cumulative dropped bytes, one closing row
    buffer_usage_bytes       monitored-interface queue occupancy: the
                             high-water mark of each class queue within each
                             sampling tick (queues often fill and drain
                             between ticks, so instantaneous samples alias)
    throughput_Bps           delivered bytes/second per window at the
                             configured observer sinks (zeros included)

Rows keep warm-up samples and flag them in the warmup column; summary.csv
(class,metric,mean,max,p95) is recomputed from the exported rows so a reader
re-deriving it from the CSV gets identical numbers.  Two runs with the same
scenario and seed produce byte-identical files.

Video end-to-end samples are per frame, not per segment: the delay is taken
at the last delivered segment of each frame, which is what a conferencing
endpoint experiences and what keeps a loss-free run's delay variation at its
true floor.  Sparse classes use a wider variance window (variance over one
sample is meaningless), configurable per class.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .engine import SimulationError

CSV_HEADER = "time_s,class,metric,value,warmup"
SUMMARY_HEADER = "class,metric,mean,max,p95"

QUEUING_DELAY = "queuing_delay"
QUEUE_DELAY_VARIATION = "queue_delay_variation"
E2E_DELAY = "e2e_delay"
PACKET_DELAY_VARIATION = "packet_delay_variation"
TRAFFIC_DROP_BPS = "traffic_drop_bps"
TRAFFIC_DROP_TOTAL = "traffic_drop_total_bytes"
BUFFER_USAGE = "buffer_usage_bytes"
THROUGHPUT = "throughput_Bps"

# Variances of small delays need more places than the standard six.
_WIDE_METRICS = {QUEUE_DELAY_VARIATION, PACKET_DELAY_VARIATION}


def format_time(t: float) -> str:
    return f"{t:.6f}"


def format_value(metric: str, value: float) -> str:
    return f"{value:.12f}" if metric in _WIDE_METRICS else f"{value:.6f}"


def delay_variation(samples: List[float]) -> float:
    """Population variance in seconds^2; requires at least one sample."""
    n = len(samples)
    if n == 0:
        raise ValueError("variance of an empty window is undefined")
    mean = math.fsum(samples) / n
    return math.fsum((s - mean) ** 2 for s in samples) / n


def percentile_95(sorted_values: List[float]) -> float:
    """Nearest-rank p95 over an already sorted, non-empty list."""
    idx = math.ceil(0.95 * len(sorted_values)) - 1
    return sorted_values[max(0, idx)]


@dataclass
class MetricsConfig:
    warmup_s: float = 10.0
    duration_s: float = 300.0
    window_s: float = 1.0
    class_window_s: Dict[str, float] = field(default_factory=dict)
    buffer_tick_s: float = 0.1

    def window_for(self, traffic_class: str) -> float:
        return self.class_window_s.get(traffic_class, self.window_s)


class _FrameTracker:
    """Tracks delivery of multi-segment units so video delay is per frame."""

    __slots__ = ("open_units",)

    def __init__(self) -> None:
        # unit_id -> [created_at, last_delivery, delivered_count, total]
        self.open_units: Dict[Tuple[str, int], List[float]] = {}

    def record(self, key: Tuple[str, int], created_at: float, delivered_at: float,
               unit_count: int) -> None:
        entry = self.open_units.get(key)
        if entry is None:
            self.open_units[key] = [created_at, delivered_at, 1, unit_count]
        else:
            entry[1] = delivered_at
            entry[2] += 1

    def pop_complete(self, key: Tuple[str, int]) -> Optional[Tuple[float, float]]:
        entry = self.open_units.get(key)
        if entry is not None and entry[2] >= entry[3]:
            del self.open_units[key]
            return entry[0], entry[1]
        return None

    def drain(self) -> List[Tuple[Tuple[str, int], float, float]]:
        out = [(key, e[0], e[1]) for key, e in self.open_units.items()]
        self.open_units.clear()
        return sorted(out, key=lambda item: item[2])


class Collector:
    """Accumulates raw samples during a run and writes the output files."""

    def __init__(self, config: MetricsConfig):
        self.config = config
        self.queuing: Dict[str, List[Tuple[float, float]]] = {}
        self.e2e: Dict[str, List[Tuple[float, float]]] = {}
        self.drops: Dict[str, List[Tuple[float, int]]] = {}
        self.deliveries: Dict[str, List[Tuple[float, int]]] = {}
        self.buffer_samples: Dict[str, List[Tuple[float, int]]] = {}
        self.frames = _FrameTracker()

        self.counters = {
            "emitted_packets": {}, "emitted_bytes": {},
            "delivered_packets": {}, "delivered_bytes": {},
            "dropped_red_packets": {}, "dropped_red_bytes": {},
            "dropped_overflow_packets": {}, "dropped_overflow_bytes": {},
            "blocked_packets": {}, "blocked_bytes": {},
        }
        self.delivered_bytes_by_node: Dict[str, int] = {}
        self.delivered_bytes_by_source: Dict[str, int] = {}
        self.final_state: Dict[str, int] = {}
        self.peak_queue_bytes: Dict[str, int] = {}
        self.red_max_avg: Dict[str, float] = {}

    # -- recording ---------------------------------------------------------

    def _bump(self, counter: str, traffic_class: str, packets: int, bytes_: int) -> None:
        table_p = self.counters[counter + "_packets"]
        table_b = self.counters[counter + "_bytes"]
        table_p[traffic_class] = table_p.get(traffic_class, 0) + packets
        table_b[traffic_class] = table_b.get(traffic_class, 0) + bytes_

    def record_emit(self, traffic_class: str, size_bytes: int) -> None:
        self._bump("emitted", traffic_class, 1, size_bytes)

    def record_queuing_delay(self, traffic_class: str, delay_s: float, now: float) -> None:
        if delay_s < 0:
            raise SimulationError(
                f"negative queuing delay {delay_s!r} for class {traffic_class}"
            )
        self.queuing.setdefault(traffic_class, []).append((now, delay_s))

    def record_delivery(self, packet, now: float, observed: bool) -> None:
        cls = packet.traffic_class
        self._bump("delivered", cls, 1, packet.size_bytes)
        node_total = self.delivered_bytes_by_node.get(packet.dst, 0)
        self.delivered_bytes_by_node[packet.dst] = node_total + packet.size_bytes
        src_total = self.delivered_bytes_by_source.get(packet.src, 0)
        self.delivered_bytes_by_source[packet.src] = src_total + packet.size_bytes
        if not observed:
            return
        self.deliveries.setdefault(cls, []).append((now, packet.size_bytes))
        if packet.unit_count > 1:
            key = (f"{cls}:{packet.src}", packet.unit_id)
            self.frames.record(key, packet.created_at, now, packet.unit_count)
            done = self.frames.pop_complete(key)
            if done is not None:
                created, last = done
                self._record_e2e(cls, last - created, last)
        else:
            self._record_e2e(cls, now - packet.created_at, now)

    def _record_e2e(self, traffic_class: str, delay_s: float, now: float) -> None:
        if delay_s < 0:
            raise SimulationError("negative end-to-end delay")
        self.e2e.setdefault(traffic_class, []).append((now, delay_s))

    def record_drop(self, traffic_class: str, size_bytes: int, reason: str, now: float) -> None:
        self._bump("dropped_" + reason, traffic_class, 1, size_bytes)
        self.drops.setdefault(traffic_class, []).append((now, size_bytes))

    def record_blocked(self, traffic_class: str, size_bytes: int) -> None:
        self._bump("blocked", traffic_class, 1, size_bytes)

    def record_buffer_usage(self, traffic_class: str, bytes_held: int, now: float) -> None:
        series = self.buffer_samples.setdefault(traffic_class, [])
        if series and series[-1][0] == now:
            series[-1] = (now, bytes_held)  # keep the last value per instant
        else:
            series.append((now, bytes_held))

    def finalize(self, now: float) -> None:
        """Close out incomplete multi-segment units (truncated frames)."""
        for (clskey, _unit), created, last in self.frames.drain():
            cls = clskey.split(":", 1)[0]
            self._record_e2e(cls, last - created, last)
        self.e2e = {cls: sorted(v) for cls, v in self.e2e.items()}

    # -- derived series ----------------------------------------------------

    def _window_count(self, window_s: float) -> int:
        return int(math.floor(self.config.duration_s / window_s + 1e-9))

    def _variance_series(self, samples: List[Tuple[float, float]],
                         traffic_class: str) -> List[Tuple[float, float]]:
        w = self.config.window_for(traffic_class)
        count = self._window_count(w)
        buckets: Dict[int, List[float]] = {}
        for t, v in samples:
            idx = int(t / w)
            if idx < count:
                buckets.setdefault(idx, []).append(v)
        return [
            ((idx + 1) * w, delay_variation(vals))
            for idx, vals in sorted(buckets.items())
        ]

    def _rate_series(self, samples: List[Tuple[float, int]], traffic_class: str,
                     to_bits: bool) -> List[Tuple[float, float]]:
        w = self.config.window_for(traffic_class)
        count = self._window_count(w)
        totals = [0] * count
        for t, b in samples:
            idx = int(t / w)
            if idx < count:
                totals[idx] += b
        scale = (8.0 if to_bits else 1.0) / w
        return [((idx + 1) * w, total * scale) for idx, total in enumerate(totals)]

    def build_rows(self) -> List[Tuple[str, str, float, float]]:
        """All (metric, class, time, value) rows, deterministically ordered."""
        rows: List[Tuple[str, str, float, float]] = []

        for cls, samples in self.queuing.items():
            rows.extend((QUEUING_DELAY, cls, t, v) for t, v in samples)
            rows.extend(
                (QUEUE_DELAY_VARIATION, cls, t, v)
                for t, v in self._variance_series(samples, cls)
            )
        for cls, samples in self.e2e.items():
            rows.extend((E2E_DELAY, cls, t, v) for t, v in samples)
            rows.extend(
                (PACKET_DELAY_VARIATION, cls, t, v)
                for t, v in self._variance_series(samples, cls)
            )
        drop_classes = set(self.drops) | set(self.deliveries) | set(self.queuing)
        for cls in sorted(drop_classes):
            samples = self.drops.get(cls, [])
            rows.extend(
                (TRAFFIC_DROP_BPS, cls, t, v)
                for t, v in self._rate_series(samples, cls, to_bits=True)
            )
            cumulative = float(sum(b for _, b in samples))
            rows.append((TRAFFIC_DROP_TOTAL, cls, self.config.duration_s, cumulative))
        for cls, samples in self.deliveries.items():
            rows.extend(
                (THROUGHPUT, cls, t, v)
                for t, v in self._rate_series(samples, cls, to_bits=False)
            )
        for cls, samples in self.buffer_samples.items():
            rows.extend((BUFFER_USAGE, cls, t, float(v)) for t, v in samples)

        rows.sort(key=lambda r: (r[0], r[1], r[2]))
        return rows

    # -- export ------------------------------------------------------------

    def export_csv(self, path: str) -> None:
        warmup = self.config.warmup_s
        lines = [CSV_HEADER]
        for metric, cls, t, value in self.build_rows():
            flag = "1" if t < warmup or (metric in _WINDOWED and t <= warmup) else "0"
            lines.append(
                f"{format_time(t)},{cls},{metric},{format_value(metric, value)},{flag}"
            )
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    def export_summary(self, csv_path: str, summary_path: str) -> None:
        """Summaries recomputed from the exported CSV text, so they match it."""
        table: Dict[Tuple[str, str], List[float]] = {}
        with open(csv_path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise SimulationError(f"unexpected CSV header {header!r}")
            for line in fh:
                time_s, cls, metric, value, warmup = line.rstrip("\n").split(",")
                if warmup == "1" or metric == TRAFFIC_DROP_TOTAL:
                    continue
                table.setdefault((cls, metric), []).append(float(value))
        lines = [SUMMARY_HEADER]
        for (cls, metric), values in sorted(table.items()):
            values.sort()
            mean = math.fsum(values) / len(values)
            cells = (mean, values[-1], percentile_95(values))
            formatted = ",".join(format_value(metric, v) for v in cells)
            lines.append(f"{cls},{metric},{formatted}")
        with open(summary_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    def export_stats(self, path: str, extra: Optional[dict] = None) -> None:
        stats = {
            "counters": {k: dict(sorted(v.items())) for k, v in sorted(self.counters.items())},
            "delivered_bytes_by_node": dict(sorted(self.delivered_bytes_by_node.items())),
            "delivered_bytes_by_source": dict(sorted(self.delivered_bytes_by_source.items())),
            "peak_queue_bytes": dict(sorted(self.peak_queue_bytes.items())),
            "red_max_avg": {k: round(v, 6) for k, v in sorted(self.red_max_avg.items())},
            "final_state": dict(sorted(self.final_state.items())),
        }
        if extra:
            stats.update(extra)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(stats, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def export_all(self, out_dir: str, extra_stats: Optional[dict] = None) -> None:
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, "metrics.csv")
        self.export_csv(csv_path)
        self.export_summary(csv_path, os.path.join(out_dir, "summary.csv"))
        self.export_stats(os.path.join(out_dir, "stats.json"), extra_stats)


_WINDOWED = {QUEUE_DELAY_VARIATION, PACKET_DELAY_VARIATION, TRAFFIC_DROP_BPS, THROUGHPUT}


def load_summary(path: str) -> Dict[Tuple[str, str], Tuple[float, float, float]]:
    """summary.csv -> {(class, metric): (mean, max, p95)}."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != SUMMARY_HEADER:
            raise ValueError(f"unexpected summary header {header!r}")
        for line in fh:
            cls, metric, mean, mx, p95 = line.rstrip("\n").split(",")
            out[(cls, metric)] = (float(mean), float(mx), float(p95))
    return out
