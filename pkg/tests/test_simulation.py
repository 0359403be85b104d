"""End-to-end forwarding, reply pacing, and tunnel gating on tiny networks."""

import pytest

from qosnetsim.engine import Engine
from qosnetsim.metrics import Collector, MetricsConfig
from qosnetsim.qdisc import ClassifierTable, QosInterface
from qosnetsim.simulation import ReplyServer, Simulation
from qosnetsim.topology import Network, Node, VpnTunnel
from qosnetsim.traffic import IdAllocator, Packet, dscp_for_class

RATE = 1e6
PROP = 1e-5


class ScriptedSource:
    """Emits pre-built packets on a fixed timetable."""

    def __init__(self, emissions):
        # emissions: [(time_s, [packets])], strictly increasing times
        self.emissions = list(emissions)
        self.start_time = self.emissions[0][0]
        self._i = 0

    def emit(self, now):
        batch = self.emissions[self._i][1]
        self._i += 1
        return batch

    def delay_to_next(self):
        if self._i < len(self.emissions):
            return self.emissions[self._i][0] - self.emissions[self._i - 1][0]
        return 1e9  # parks the source past any test horizon


def iface(name):
    return QosInterface(name=name, discipline="fifo",
                        buffer_limit_bytes=1_000_000, link_rate_bps=RATE,
                        classifier=ClassifierTable.standard())


def build_network(nodes, links):
    net = Network()
    for name, kind, *rest in nodes:
        delay = rest[0] if rest else 0.0
        net.add_node(Node(name, kind, processing_delay_s=delay))
    for a, b in links:
        net.add_link(a, b, rate_bps=RATE, propagation_s=PROP,
                     iface_ab=iface(f"{a}->{b}"), iface_ba=iface(f"{b}->{a}"))
    return net


def chain(processing=0.0):
    return build_network(
        [("h1", "host"), ("r1", "router", processing), ("srv", "server")],
        [("h1", "r1"), ("r1", "srv")])


def mk_packet(ids, cls="voice", size=200, src="h1", dst="srv", created=0.0):
    return Packet(pid=ids.take(), traffic_class=cls, dscp=dscp_for_class(cls),
                  size_bytes=size, payload_bytes=size - 40, src=src, dst=dst,
                  created_at=created)


def run_sim(net, sources, duration=5.0, monitored=None, tunnel=None,
            servers=None):
    engine = Engine(seed=7)
    collector = Collector(MetricsConfig(warmup_s=0.0, duration_s=duration,
                                        window_s=1.0))
    sim = Simulation(engine, net, sources, collector,
                     monitored_port=monitored, tunnel=tunnel, servers=servers)
    sim.run()
    return collector


def tx(size_bytes):
    return size_bytes * 8.0 / RATE


def test_two_hop_delivery_timing():
    ids = IdAllocator()
    src = ScriptedSource([(0.0, [mk_packet(ids)])])
    col = run_sim(chain(), [src])
    assert col.counters["delivered_packets"]["voice"] == 1
    t, delay = col.e2e["voice"][0]
    expected = 2 * (tx(200) + PROP)
    assert delay == pytest.approx(expected, abs=1e-12)
    assert t == pytest.approx(expected, abs=1e-12)


def test_router_processing_delay_adds_to_e2e():
    ids = IdAllocator()
    src = ScriptedSource([(0.0, [mk_packet(ids)])])
    col = run_sim(chain(processing=0.002), [src])
    _, delay = col.e2e["voice"][0]
    assert delay == pytest.approx(2 * (tx(200) + PROP) + 0.002, abs=1e-12)


def test_second_packet_waits_for_the_wire():
    ids = IdAllocator()
    p1, p2 = mk_packet(ids), mk_packet(ids)
    src = ScriptedSource([(0.0, [p1, p2])])
    col = run_sim(chain(), [src], monitored=("h1", "r1"))
    samples = col.queuing["voice"]
    assert [round(d, 9) for _, d in samples] == [0.0, round(tx(200), 9)]
    # the sample lands at dequeue time
    assert samples[1][0] == pytest.approx(tx(200), abs=1e-12)
    # p1 is on the wire by the time p2 enqueues, so the peak is one packet
    assert col.peak_queue_bytes["voice"] == 200


def test_delivery_books_bytes_by_node_and_source():
    ids = IdAllocator()
    src = ScriptedSource([(0.0, [mk_packet(ids), mk_packet(ids, cls="database",
                                                           size=240)])])
    col = run_sim(chain(), [src])
    assert col.delivered_bytes_by_node == {"srv": 440}
    assert col.delivered_bytes_by_source == {"h1": 440}


# -- reply serving -----------------------------------------------------------

def fan_in():
    return build_network(
        [("h1", "host"), ("h2", "host"), ("srv", "server")],
        [("h1", "srv"), ("h2", "srv")])


def test_replies_are_paced_by_the_service_queue():
    ids = IdAllocator()
    server = ReplyServer("srv", service_rate_bps=RATE, reply_bytes=500, ids=ids)
    s1 = ScriptedSource([(0.0, [mk_packet(ids, cls="database", size=240,
                                          src="h1")])])
    s2 = ScriptedSource([(0.0, [mk_packet(ids, cls="database", size=240,
                                          src="h2")])])
    col = run_sim(fan_in(), [s1, s2], servers={"srv": server})
    # both requests land together at t0; replies leave 4 ms apart
    t0 = tx(240) + PROP
    reply_leg = tx(500) + PROP
    times = sorted(t for t, _ in col.e2e["database"])
    assert times[0] == pytest.approx(t0, abs=1e-12)                # h1 request
    assert times[1] == pytest.approx(t0, abs=1e-12)                # h2 request
    assert times[2] == pytest.approx(t0 + 0.004 + reply_leg, abs=1e-12)
    assert times[3] == pytest.approx(t0 + 0.008 + reply_leg, abs=1e-12)
    assert col.delivered_bytes_by_node == {"h1": 500, "h2": 500, "srv": 480}
    assert col.counters["emitted_packets"]["database"] == 4


def test_reply_keeps_the_request_class():
    ids = IdAllocator()
    server = ReplyServer("srv", service_rate_bps=RATE, reply_bytes=500, ids=ids)
    src = ScriptedSource([(0.0, [mk_packet(ids, cls="ftp", size=240)])])
    col = run_sim(chain(), [src], servers={"srv": server})
    assert col.counters["delivered_packets"]["ftp"] == 2
    assert col.delivered_bytes_by_node["h1"] == 500


def test_unserved_requests_stay_pending():
    ids = IdAllocator()
    # 50 s per reply: nothing has left the service queue by t=5
    server = ReplyServer("srv", service_rate_bps=80.0, reply_bytes=500, ids=ids)
    emissions = [(0.1 * k, [mk_packet(ids, cls="database", size=240,
                                      created=0.1 * k)]) for k in range(3)]
    col = run_sim(chain(), [ScriptedSource(emissions)], servers={"srv": server})
    assert col.final_state["pending_replies"] == 3
    assert col.counters["delivered_packets"]["database"] == 3  # requests only


def test_reply_server_validation():
    ids = IdAllocator()
    with pytest.raises(ValueError):
        ReplyServer("srv", service_rate_bps=0.0, reply_bytes=500, ids=ids)
    with pytest.raises(ValueError):
        ReplyServer("srv", service_rate_bps=RATE, reply_bytes=40, ids=ids)


# -- tunnel gating -----------------------------------------------------------

def tunnel_net():
    net = build_network(
        [("h1", "host"), ("h2", "host"), ("r1", "router"), ("r2", "router"),
         ("srv", "server")],
        [("h1", "r1"), ("h2", "r1"), ("r1", "r2"), ("r2", "srv")])
    tun = VpnTunnel(entry="r1", exit="r2", grants=[("h1", "srv", "database")])
    return net, tun


def test_granted_flow_crosses_encapsulated():
    ids = IdAllocator()
    net, tun = tunnel_net()
    src = ScriptedSource([(0.0, [mk_packet(ids, cls="database", size=240)])])
    col = run_sim(net, [src], tunnel=tun)
    # middle hop serializes 240 + 60 overhead bytes; edges carry 240
    _, delay = col.e2e["database"][0]
    assert delay == pytest.approx(2 * tx(240) + tx(300) + 3 * PROP, abs=1e-12)
    assert col.delivered_bytes_by_node == {"srv": 240}  # size restored at exit


def test_ungranted_flow_is_blocked_at_the_entry():
    ids = IdAllocator()
    net, tun = tunnel_net()
    src = ScriptedSource([(0.0, [mk_packet(ids, cls="ftp", size=240)])])
    col = run_sim(net, [src], tunnel=tun)
    assert col.counters["blocked_packets"]["ftp"] == 1
    assert col.counters["blocked_bytes"]["ftp"] == 240
    assert col.counters["delivered_packets"].get("ftp", 0) == 0


def test_traffic_not_routed_through_the_exit_is_not_gated():
    ids = IdAllocator()
    net, tun = tunnel_net()
    # h1 -> h2 stays on r1's access side, so the gate never applies
    src = ScriptedSource([(0.0, [mk_packet(ids, cls="ftp", size=240,
                                           dst="h2")])])
    col = run_sim(net, [src], tunnel=tun)
    assert col.counters["delivered_packets"]["ftp"] == 1
    assert col.counters["blocked_packets"].get("ftp", 0) == 0


def test_reply_to_a_granted_requester_is_blocked_without_its_own_grant():
    # grants are directional triples: the reverse path needs its own entry
    ids = IdAllocator()
    net = build_network(
        [("h1", "host"), ("r1", "router"), ("r2", "router"), ("srv", "server")],
        [("h1", "r1"), ("r1", "r2"), ("r2", "srv")])
    tun = VpnTunnel(entry="r2", exit="r1", grants=[("srv", "h1", "database")])
    server = ReplyServer("srv", service_rate_bps=RATE, reply_bytes=500, ids=ids)
    src = ScriptedSource([(0.0, [mk_packet(ids, cls="database", size=240)])])
    col = run_sim(net, [src], tunnel=tun, servers={"srv": server})
    assert col.delivered_bytes_by_node == {"srv": 240, "h1": 500}


# -- conservation ------------------------------------------------------------

def test_every_packet_is_accounted_for_at_the_end():
    ids = IdAllocator()
    emissions = [(0.01 * k, [mk_packet(ids, created=0.01 * k),
                             mk_packet(ids, cls="ftp", size=1500,
                                       created=0.01 * k)])
                 for k in range(20)]
    col = run_sim(chain(), [ScriptedSource(emissions)], duration=10.0)
    emitted = sum(col.counters["emitted_packets"].values())
    delivered = sum(col.counters["delivered_packets"].values())
    dropped = (sum(col.counters["dropped_red_packets"].values())
               + sum(col.counters["dropped_overflow_packets"].values()))
    blocked = sum(col.counters["blocked_packets"].values())
    leftover = (col.final_state["in_flight_packets"]
                + col.final_state["queued_packets"]
                + col.final_state["pending_replies"])
    assert emitted == delivered + dropped + blocked + leftover
    assert leftover == 0  # horizon is far past the last arrival


def test_final_state_counts_packets_still_queued():
    ids = IdAllocator()
    # ten 1500-byte packets at t=0 need 120 ms of wire; stop at 50 ms
    burst = [mk_packet(ids, cls="ftp", size=1500) for _ in range(10)]
    col = run_sim(chain(), [ScriptedSource([(0.0, burst)])], duration=0.05)
    leftover = (col.final_state["in_flight_packets"]
                + col.final_state["queued_packets"])
    assert leftover > 0
    emitted = sum(col.counters["emitted_packets"].values())
    delivered = sum(col.counters["delivered_packets"].values())
    assert emitted == delivered + leftover
