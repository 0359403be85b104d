"""Seed-deterministic discrete-event simulator for QoS experiments.

The package models a small DiffServ-enabled enterprise network: classed
traffic sources (voice, video, database, ftp), priority and weighted-fair
egress scheduling with optional RED, static shortest-hop routing, and an
optional VPN tunnel.  Runs write per-class delay, jitter, loss, buffer, and
throughput series as CSV plus a JSON counter dump, all reproducible from a
single integer seed.
"""

from .engine import Engine, RngStream, SimulationError
from .metrics import Collector, MetricsConfig, load_summary
from .qdisc import ClassifierTable, QosInterface, RedParams
from .scenario import (
    ConfigDoc,
    Scenario,
    ScenarioError,
    build_runtime,
    list_presets,
    load_scenario_file,
    load_scenario_text,
    parse_config,
    run_preset,
    run_scenario,
    scenario_to_doc,
)
from .simulation import ReplyServer, Simulation
from .topology import Network, Node, TopologyError, VpnTunnel
from .traffic import (
    DATABASE,
    FTP,
    TRAFFIC_CLASSES,
    VIDEO,
    VOICE,
    Packet,
)

__version__ = "0.1.0"

__all__ = [
    "Collector",
    "ConfigDoc",
    "ClassifierTable",
    "DATABASE",
    "Engine",
    "FTP",
    "MetricsConfig",
    "Network",
    "Node",
    "Packet",
    "QosInterface",
    "RedParams",
    "ReplyServer",
    "RngStream",
    "Scenario",
    "ScenarioError",
    "Simulation",
    "SimulationError",
    "TopologyError",
    "TRAFFIC_CLASSES",
    "VIDEO",
    "VOICE",
    "VpnTunnel",
    "build_runtime",
    "list_presets",
    "load_scenario_file",
    "load_scenario_text",
    "load_summary",
    "parse_config",
    "run_preset",
    "run_scenario",
    "scenario_to_doc",
    "__version__",
]
