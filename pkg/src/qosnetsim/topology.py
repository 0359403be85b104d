"""Network structure: nodes, duplex links, static routing, and VPN tunneling.

A network is a set of named nodes joined by full-duplex links.  Each link
direction is modelled as a :class:`Port` that owns the egress queue
(:class:`~qosnetsim.qdisc.QosInterface`) and the transmitter for that
direction, so the two directions of a link never contend with each other.

Routing is static shortest-hop.  Routes are computed once per run with a
breadth-first search that visits neighbours in sorted name order, which makes
path selection independent of insertion order and therefore reproducible.

Nodes may carry a per-packet processing delay.  This is how middleboxes are
expressed: a firewall that spends 0.5 ms inspecting each packet, or a provider
cloud that adds 1 ms of forwarding latency, are plain nodes with a nonzero
``processing_delay_s``.

A :class:`VpnTunnel` encapsulates permitted traffic at its entry node (adding
header overhead and rerouting the packet toward the tunnel exit) and restores
the original packet at the exit.  Admission is governed by an explicit grant
table of ``(source, destination, traffic class)`` triples; transit traffic
arriving at the entry node without a matching grant is rejected there.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Tuple

from .engine import SimulationError
from .qdisc import QosInterface
from .traffic import TRAFFIC_CLASSES, Packet

NODE_KINDS = ("host", "router", "server", "firewall", "cloud")

VPN_OVERHEAD_BYTES = 60


class TopologyError(SimulationError):
    """Structural problem: unknown node, duplicate element, missing route."""


@dataclass
class Node:
    name: str
    kind: str = "host"
    processing_delay_s: float = 0.0

    def __post_init__(self) -> None:
        if not self.name:
            raise TopologyError("node name must be non-empty")
        if self.kind not in NODE_KINDS:
            raise TopologyError(
                f"unknown node kind {self.kind!r} for {self.name!r}; "
                f"expected one of {', '.join(NODE_KINDS)}"
            )
        if self.processing_delay_s < 0:
            raise TopologyError(f"negative processing delay on {self.name!r}")


class Port:
    """One direction of a link: egress queue plus transmitter state."""

    __slots__ = ("src", "dst", "rate_bps", "propagation_s", "interface", "busy")

    def __init__(self, src: str, dst: str, rate_bps: float, propagation_s: float,
                 interface: QosInterface) -> None:
        if rate_bps <= 0:
            raise TopologyError(f"port {src}->{dst} needs a positive rate")
        if propagation_s < 0:
            raise TopologyError(f"port {src}->{dst} has negative propagation delay")
        self.src = src
        self.dst = dst
        self.rate_bps = rate_bps
        self.propagation_s = propagation_s
        self.interface = interface
        self.busy = False

    @property
    def name(self) -> str:
        return f"{self.src}->{self.dst}"

    def transmission_time_s(self, size_bytes: int) -> float:
        return size_bytes * 8.0 / self.rate_bps


class Network:
    """Nodes, directional ports, and shortest-hop next-hop tables."""

    def __init__(self) -> None:
        self.nodes: Dict[str, Node] = {}
        self.ports: Dict[Tuple[str, str], Port] = {}
        self._adjacency: Dict[str, List[str]] = {}
        self._next_hop: Dict[Tuple[str, str], str] = {}
        self._routes_current = False

    def add_node(self, node: Node) -> Node:
        if node.name in self.nodes:
            raise TopologyError(f"duplicate node {node.name!r}")
        self.nodes[node.name] = node
        self._adjacency[node.name] = []
        self._routes_current = False
        return node

    def add_link(self, a: str, b: str, *, rate_bps: float, propagation_s: float,
                 iface_ab: QosInterface, iface_ba: QosInterface) -> None:
        for name in (a, b):
            if name not in self.nodes:
                raise TopologyError(f"link references unknown node {name!r}")
        if a == b:
            raise TopologyError(f"self-link on {a!r}")
        if (a, b) in self.ports or (b, a) in self.ports:
            raise TopologyError(f"duplicate link between {a!r} and {b!r}")
        self.ports[(a, b)] = Port(a, b, rate_bps, propagation_s, iface_ab)
        self.ports[(b, a)] = Port(b, a, rate_bps, propagation_s, iface_ba)
        self._adjacency[a].append(b)
        self._adjacency[b].append(a)
        self._routes_current = False

    def port(self, src: str, dst: str) -> Port:
        try:
            return self.ports[(src, dst)]
        except KeyError:
            raise TopologyError(f"no port {src!r} -> {dst!r}") from None

    def neighbors(self, name: str) -> List[str]:
        if name not in self._adjacency:
            raise TopologyError(f"unknown node {name!r}")
        return sorted(self._adjacency[name])

    def compute_routes(self) -> None:
        """Breadth-first shortest-hop routing from every node.

        Neighbours are expanded in sorted order so equal-length paths resolve
        the same way on every run.
        """
        self._next_hop.clear()
        for origin in self.nodes:
            parent: Dict[str, str] = {origin: origin}
            frontier = deque([origin])
            while frontier:
                here = frontier.popleft()
                for peer in self.neighbors(here):
                    if peer not in parent:
                        parent[peer] = here
                        frontier.append(peer)
            for dest, via in parent.items():
                if dest == origin:
                    continue
                hop = dest
                while parent[hop] != origin:
                    hop = parent[hop]
                self._next_hop[(origin, dest)] = hop
        self._routes_current = True

    def next_hop(self, src: str, dst: str) -> str:
        if not self._routes_current:
            self.compute_routes()
        try:
            return self._next_hop[(src, dst)]
        except KeyError:
            raise TopologyError(f"no route from {src!r} to {dst!r}") from None

    def path(self, src: str, dst: str) -> List[str]:
        """Full hop sequence from src to dst, both endpoints included."""
        hops = [src]
        here = src
        while here != dst:
            here = self.next_hop(here, dst)
            hops.append(here)
        return hops


class VpnTunnel:
    """Site-to-site tunnel with per-flow admission.

    Packets admitted at the entry grow by ``overhead_bytes`` of encapsulation
    header and are routed toward the exit node, where the original size and
    destination-based routing are restored.  Admission compares the packet's
    ``(src, dst, traffic_class)`` triple against the grant table; everything
    else arriving in transit at the entry node is rejected.
    """

    def __init__(self, entry: str, exit: str,
                 grants: Iterable[Tuple[str, str, str]],
                 overhead_bytes: int = VPN_OVERHEAD_BYTES) -> None:
        if entry == exit:
            raise TopologyError("tunnel entry and exit must differ")
        if overhead_bytes < 0:
            raise TopologyError("tunnel overhead must be non-negative")
        self.entry = entry
        self.exit = exit
        self.overhead_bytes = overhead_bytes
        self.grants: FrozenSet[Tuple[str, str, str]] = frozenset(grants)
        for _, _, traffic_class in self.grants:
            if traffic_class not in TRAFFIC_CLASSES:
                raise TopologyError(
                    f"tunnel grant references unknown class {traffic_class!r}"
                )

    def permits(self, packet: Packet) -> bool:
        return (packet.src, packet.dst, packet.traffic_class) in self.grants

    def encapsulate(self, packet: Packet) -> Packet:
        if packet.encapsulated:
            raise SimulationError(f"packet {packet.pid} is already encapsulated")
        packet.size_bytes += self.overhead_bytes
        packet.encapsulated = True
        packet.outer_dst = self.exit
        return packet

    def decapsulate(self, packet: Packet) -> Packet:
        if not packet.encapsulated:
            raise SimulationError(f"packet {packet.pid} is not encapsulated")
        packet.size_bytes -= self.overhead_bytes
        packet.encapsulated = False
        packet.outer_dst = None
        return packet
