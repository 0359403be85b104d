"""Event-driven packet forwarding over a built network.

A packet's lifecycle:

1. A source emits it at its origin node.
2. At each node, if the node is the destination the packet is delivered;
   otherwise the node's processing delay (if any) elapses, the VPN gate is
   applied when the node is a tunnel entry, and the packet joins the egress
   queue toward its next hop.
3. Each port transmits one packet at a time: serialization at the port rate,
   then propagation to the peer node, where the cycle repeats.
4. If the delivery node hosts a ReplyServer, the request additionally earns
   a reply packet that re-enters the network once the server's FIFO service
   queue has paced it out.

Queuing delay is sampled on one designated "monitored" port, which is also
the port whose per-class buffer occupancy is sampled on a fixed tick.  Every
other event (emission, delivery, drop, block) is recorded wherever it occurs,
so packet and byte conservation can be checked across a whole run.
"""

from __future__ import annotations

from collections import deque
from typing import Deque, Dict, Optional, Sequence, Set, Tuple

from .engine import Engine, SimulationError
from .metrics import Collector
from .qdisc import ACCEPTED
from .topology import Network, Port, VpnTunnel
from .traffic import HEADER_BYTES, IdAllocator, Packet, dscp_for_class


class ReplyServer:
    """Answers each request delivered to its node with one paced reply.

    Replies keep the request's traffic class, are addressed back to the
    requester, and leave through a single FIFO service queue at
    service_rate_bps.  The queue is unbounded, so when combined request
    arrivals exceed the service rate, every requester's reply rate shrinks
    to its share of the arrival mix.
    """

    def __init__(self, node: str, service_rate_bps: float, reply_bytes: int,
                 ids: IdAllocator) -> None:
        if service_rate_bps <= 0:
            raise ValueError("server service rate must be > 0")
        if reply_bytes <= HEADER_BYTES:
            raise ValueError(f"reply_bytes must exceed the {HEADER_BYTES}-byte header")
        self.node = node
        self.service_rate_bps = service_rate_bps
        self.reply_bytes = reply_bytes
        self.ids = ids
        self.pending: Deque[Tuple[str, str]] = deque()
        self.busy = False
        self._unit = 0

    @property
    def service_time_s(self) -> float:
        return self.reply_bytes * 8.0 / self.service_rate_bps

    def build_reply(self, requester: str, traffic_class: str, now: float) -> Packet:
        pkt = Packet(
            pid=self.ids.take(),
            traffic_class=traffic_class,
            dscp=dscp_for_class(traffic_class),
            size_bytes=self.reply_bytes,
            payload_bytes=self.reply_bytes - HEADER_BYTES,
            src=self.node,
            dst=requester,
            created_at=now,
            unit_id=self._unit,
        )
        self._unit += 1
        return pkt


class Simulation:
    """Wires sources, a network, and a collector onto one event engine."""

    def __init__(
        self,
        engine: Engine,
        network: Network,
        sources: Sequence,
        collector: Collector,
        monitored_port: Optional[Tuple[str, str]] = None,
        tunnel: Optional[VpnTunnel] = None,
        servers: Optional[Dict[str, ReplyServer]] = None,
        observed_sources: Optional[Set[str]] = None,
        observed_nodes: Optional[Set[str]] = None,
    ) -> None:
        self.engine = engine
        self.network = network
        self.sources = list(sources)
        self.collector = collector
        self.tunnel = tunnel
        self.servers = dict(servers) if servers else {}
        self.observed_sources = observed_sources
        self.observed_nodes = observed_nodes
        self.monitored = monitored_port
        self.monitored_iface = (
            network.port(*monitored_port).interface if monitored_port else None
        )
        # Packets in flight outside any queue: being processed by a node,
        # serialized onto a link, or propagating toward the next node.
        self._wire_packets = 0
        self._via_tunnel_cache: Dict[str, bool] = {}
        network.compute_routes()
        if tunnel is not None:
            for name in (tunnel.entry, tunnel.exit):
                if name not in network.nodes:
                    raise SimulationError(f"tunnel endpoint {name!r} is not in the network")
        for name in self.servers:
            if name not in network.nodes:
                raise SimulationError(f"server node {name!r} is not in the network")

    # -- run loop ------------------------------------------------------------

    def run(self) -> Collector:
        for source in self.sources:
            self.engine.schedule_at(source.start_time, lambda s=source: self._fire_source(s))
        if self.monitored_iface is not None:
            self.engine.schedule_at(0.0, self._sample_buffers)
        summary = self.engine.run_until(self.collector.config.duration_s)
        self.collector.finalize(self.engine.now)
        self._record_final_state(summary.events_fired)
        return self.collector

    def _fire_source(self, source) -> None:
        now = self.engine.now
        for packet in source.emit(now):
            self.collector.record_emit(packet.traffic_class, packet.size_bytes)
            self._arrive(packet, packet.src)
        self.engine.schedule_in(source.delay_to_next(), lambda s=source: self._fire_source(s))

    def _sample_buffers(self) -> None:
        now = self.engine.now
        for cls, peak in self.monitored_iface.take_interval_peaks().items():
            self.collector.record_buffer_usage(cls, peak, now)
        next_at = now + self.collector.config.buffer_tick_s
        if next_at <= self.collector.config.duration_s + 1e-9:
            self.engine.schedule_at(next_at, self._sample_buffers)

    # -- per-hop handling ------------------------------------------------------

    def _arrive(self, packet: Packet, node_name: str) -> None:
        now = self.engine.now
        if packet.encapsulated and node_name == packet.outer_dst:
            self.tunnel.decapsulate(packet)
        if node_name == packet.dst:
            if packet.encapsulated:
                raise SimulationError(
                    f"packet {packet.pid} reached {node_name!r} still encapsulated"
                )
            packet.delivered_at = now
            observed = (
                (self.observed_sources is None or packet.src in self.observed_sources)
                and (self.observed_nodes is None or node_name in self.observed_nodes)
            )
            self.collector.record_delivery(packet, now, observed)
            server = self.servers.get(node_name)
            if server is not None:
                self._queue_reply(server, packet)
            return
        node = self.network.nodes[node_name]
        if node.processing_delay_s > 0.0:
            self._wire_packets += 1
            self.engine.schedule_in(
                node.processing_delay_s,
                lambda p=packet, n=node_name: self._end_processing(p, n),
            )
        else:
            self._forward(packet, node_name)

    def _end_processing(self, packet: Packet, node_name: str) -> None:
        self._wire_packets -= 1
        self._forward(packet, node_name)

    # -- request serving ---------------------------------------------------------

    def _queue_reply(self, server: ReplyServer, request: Packet) -> None:
        server.pending.append((request.src, request.traffic_class))
        if not server.busy:
            server.busy = True
            self.engine.schedule_in(
                server.service_time_s, lambda s=server: self._finish_reply(s)
            )

    def _finish_reply(self, server: ReplyServer) -> None:
        requester, traffic_class = server.pending.popleft()
        reply = server.build_reply(requester, traffic_class, self.engine.now)
        self.collector.record_emit(reply.traffic_class, reply.size_bytes)
        self._forward(reply, server.node)
        if server.pending:
            self.engine.schedule_in(
                server.service_time_s, lambda s=server: self._finish_reply(s)
            )
        else:
            server.busy = False

    def _forward(self, packet: Packet, node_name: str) -> None:
        tunnel = self.tunnel
        if (
            tunnel is not None
            and node_name == tunnel.entry
            and not packet.encapsulated
            and self._routes_via_exit(packet.dst)
        ):
            if tunnel.permits(packet):
                tunnel.encapsulate(packet)
            else:
                self.collector.record_blocked(packet.traffic_class, packet.size_bytes)
                return
        next_hop = self.network.next_hop(node_name, packet.route_dst)
        self._enqueue(self.network.port(node_name, next_hop), packet)

    def _routes_via_exit(self, dst: str) -> bool:
        """True when the path from the tunnel entry to dst crosses the exit."""
        cached = self._via_tunnel_cache.get(dst)
        if cached is None:
            hops = self.network.path(self.tunnel.entry, dst)
            cached = self.tunnel.exit in hops[1:]
            self._via_tunnel_cache[dst] = cached
        return cached

    def _enqueue(self, port: Port, packet: Packet) -> None:
        now = self.engine.now
        status = port.interface.enqueue(packet, now)
        if status != ACCEPTED:
            self.collector.record_drop(packet.traffic_class, packet.size_bytes, status, now)
            return
        if not port.busy:
            self._start_transmission(port)

    def _start_transmission(self, port: Port) -> None:
        now = self.engine.now
        packet = port.interface.next_packet(now)
        if packet is None:
            port.busy = False
            return
        port.busy = True
        packet.dequeued_at = now
        if (port.src, port.dst) == self.monitored:
            self.collector.record_queuing_delay(
                packet.traffic_class, now - packet.enqueued_at, now
            )
        self._wire_packets += 1
        self.engine.schedule_in(
            port.transmission_time_s(packet.size_bytes),
            lambda p=port, k=packet: self._complete_transmission(p, k),
        )

    def _complete_transmission(self, port: Port, packet: Packet) -> None:
        self.engine.schedule_in(
            port.propagation_s,
            lambda k=packet, n=port.dst: self._arrive_wire(k, n),
        )
        self._start_transmission(port)

    def _arrive_wire(self, packet: Packet, node_name: str) -> None:
        self._wire_packets -= 1
        self._arrive(packet, node_name)

    # -- end-of-run accounting -------------------------------------------------

    def _record_final_state(self, events_fired: int) -> None:
        if self.monitored_iface is not None:
            for cls, queue in self.monitored_iface.queues.items():
                self.collector.peak_queue_bytes[cls] = queue.peak_bytes
                if queue.red is not None:
                    self.collector.red_max_avg[cls] = queue.red.max_avg_seen
        queued = sum(port.interface.backlog() for port in self.network.ports.values())
        self.collector.final_state = {
            "events_fired": events_fired,
            "in_flight_packets": self._wire_packets,
            "pending_replies": sum(len(s.pending) for s in self.servers.values()),
            "queued_packets": queued,
        }
