"""Traffic classes, packet type, and the four application source models.

Classes and their DiffServ code points:

    voice     EF    0b101110   rank 0 (highest)
    video     AF41  0b100010   rank 1
    database  AF21  0b010010   rank 2
    ftp       DF    0b000000   rank 3 (best effort)

Voice is a G.711 stream: one 200-byte packet (160-byte payload plus a flat
40-byte header covering RTP/UDP/IP) every 20 ms.  Video emits one fixed-size
frame per tick, segmented at the MTU.  Database and ftp are open-loop
Poisson-style sources, one independent RNG stream per user.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

from .engine import RngStream

VOICE = "voice"
VIDEO = "video"
DATABASE = "database"
FTP = "ftp"

TRAFFIC_CLASSES = (VOICE, VIDEO, DATABASE, FTP)

DSCP_BY_CLASS = {
    VOICE: 0b101110,
    VIDEO: 0b100010,
    DATABASE: 0b010010,
    FTP: 0b000000,
}

RANK_BY_CLASS = {VOICE: 0, VIDEO: 1, DATABASE: 2, FTP: 3}

HEADER_BYTES = 40


def dscp_for_class(traffic_class: str) -> int:
    try:
        return DSCP_BY_CLASS[traffic_class]
    except KeyError:
        raise ValueError(f"unknown traffic class {traffic_class!r}") from None


@dataclass
class Packet:
    """One on-wire packet; size_bytes is what links and buffers account."""

    pid: int
    traffic_class: str
    dscp: int
    size_bytes: int
    payload_bytes: int
    src: str
    dst: str
    created_at: float
    unit_id: int = 0
    unit_seq: int = 0
    unit_count: int = 1
    enqueued_at: Optional[float] = None
    dequeued_at: Optional[float] = None
    delivered_at: Optional[float] = None
    encapsulated: bool = False
    outer_dst: Optional[str] = None

    def __post_init__(self) -> None:
        if self.size_bytes <= 0:
            raise ValueError("packet size must be > 0 bytes")
        if self.payload_bytes < 0 or self.payload_bytes > self.size_bytes:
            raise ValueError("payload must fit inside the packet")

    @property
    def route_dst(self) -> str:
        return self.outer_dst if self.encapsulated and self.outer_dst else self.dst


def segment_payload(total_bytes: int, mtu_payload: int) -> List[int]:
    """Split a payload into MTU-sized chunks; the sum is conserved."""
    if total_bytes <= 0:
        raise ValueError("cannot segment an empty payload")
    if mtu_payload <= 0:
        raise ValueError("mtu payload must be > 0")
    full, rest = divmod(total_bytes, mtu_payload)
    sizes = [mtu_payload] * full
    if rest:
        sizes.append(rest)
    return sizes


class IdAllocator:
    """Run-wide packet id counter shared by all sources."""

    def __init__(self) -> None:
        self._next = 0

    def take(self) -> int:
        pid = self._next
        self._next += 1
        return pid


@dataclass
class VoiceSource:
    """Periodic G.711 talker: fixed packet, fixed cadence."""

    src: str
    dst: str
    ids: IdAllocator
    frame_interval_s: float = 0.020
    payload_bytes: int = 160
    start_time: float = 0.0
    _unit: int = field(default=0, repr=False)

    traffic_class = VOICE

    def emit(self, now: float) -> List[Packet]:
        pkt = Packet(
            pid=self.ids.take(),
            traffic_class=VOICE,
            dscp=DSCP_BY_CLASS[VOICE],
            size_bytes=self.payload_bytes + HEADER_BYTES,
            payload_bytes=self.payload_bytes,
            src=self.src,
            dst=self.dst,
            created_at=now,
            unit_id=self._unit,
        )
        self._unit += 1
        return [pkt]

    def delay_to_next(self) -> float:
        return self.frame_interval_s


@dataclass
class VideoSource:
    """Fixed-rate conferencing stream: one frame per tick, segmented at MTU.

    Frame payload = width * height * bits_per_pixel / 8; every segment gets
    its own 40-byte header, so the on-wire frame is frame_bytes + 40 * n.
    """

    src: str
    dst: str
    ids: IdAllocator
    frame_rate_fps: float = 10.0
    width_px: int = 128
    height_px: int = 120
    bits_per_pixel: int = 9
    mtu_payload: int = 1460
    start_time: float = 0.0
    _unit: int = field(default=0, repr=False)

    traffic_class = VIDEO

    @property
    def frame_bytes(self) -> int:
        bits = self.width_px * self.height_px * self.bits_per_pixel
        if bits % 8:
            raise ValueError("frame size must be a whole number of bytes")
        return bits // 8

    def emit(self, now: float) -> List[Packet]:
        sizes = segment_payload(self.frame_bytes, self.mtu_payload)
        count = len(sizes)
        frame = self._unit
        self._unit += 1
        return [
            Packet(
                pid=self.ids.take(),
                traffic_class=VIDEO,
                dscp=DSCP_BY_CLASS[VIDEO],
                size_bytes=size + HEADER_BYTES,
                payload_bytes=size,
                src=self.src,
                dst=self.dst,
                created_at=now,
                unit_id=frame,
                unit_seq=seq,
                unit_count=count,
            )
            for seq, size in enumerate(sizes)
        ]

    def delay_to_next(self) -> float:
        return 1.0 / self.frame_rate_fps


@dataclass
class DatabaseSource:
    """One database user: fixed-size transactions, exponential spacing."""

    src: str
    dst: str
    ids: IdAllocator
    stream: RngStream = None  # type: ignore[assignment]
    payload_bytes: int = 200
    inter_arrival_mean_s: float = 30.0
    start_time: float = 0.0
    _unit: int = field(default=0, repr=False)

    traffic_class = DATABASE

    def emit(self, now: float) -> List[Packet]:
        pkt = Packet(
            pid=self.ids.take(),
            traffic_class=DATABASE,
            dscp=DSCP_BY_CLASS[DATABASE],
            size_bytes=self.payload_bytes + HEADER_BYTES,
            payload_bytes=self.payload_bytes,
            src=self.src,
            dst=self.dst,
            created_at=now,
            unit_id=self._unit,
        )
        self._unit += 1
        return [pkt]

    def delay_to_next(self) -> float:
        return self.stream.exponential(self.inter_arrival_mean_s)


@dataclass
class FtpSource:
    """One ftp user: exponential file sizes, exponential request spacing.

    File size is rounded up to at least one byte, then segmented at the MTU;
    every segment carries a 40-byte header.
    """

    src: str
    dst: str
    ids: IdAllocator
    stream: RngStream = None  # type: ignore[assignment]
    file_size_mean_bytes: float = 1000.0
    inter_request_mean_s: float = 3600.0
    mtu_payload: int = 1460
    start_time: float = 0.0
    _unit: int = field(default=0, repr=False)

    traffic_class = FTP

    def draw_file_size(self) -> int:
        return max(1, math.ceil(self.stream.exponential(self.file_size_mean_bytes)))

    def emit(self, now: float) -> List[Packet]:
        sizes = segment_payload(self.draw_file_size(), self.mtu_payload)
        count = len(sizes)
        unit = self._unit
        self._unit += 1
        return [
            Packet(
                pid=self.ids.take(),
                traffic_class=FTP,
                dscp=DSCP_BY_CLASS[FTP],
                size_bytes=size + HEADER_BYTES,
                payload_bytes=size,
                src=self.src,
                dst=self.dst,
                created_at=now,
                unit_id=unit,
                unit_seq=seq,
                unit_count=count,
            )
            for seq, size in enumerate(sizes)
        ]

    def delay_to_next(self) -> float:
        return self.stream.exponential(self.inter_request_mean_s)
