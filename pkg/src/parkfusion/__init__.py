"""Desk-scale simulation of a multi-sensor parking barrier fleet.

The package splits into sensing (ir, inertial, detection), the node state
machine (node, power), the uplink wire format (protocol, transport), the
business service (cloud, api), and the scenario-driven simulator
(scenario, sim, report, cli).
"""

from .cloud import CloudConfig, CloudService
from .node import NodeConfig, OccupancyState, SpaceNode
from .protocol import TelemetryMessage, decode, encode
from .scenario import Scenario, load_scenario, parse_scenario
from .sim import RunResult, run_scenario

__version__ = "0.1.0"

__all__ = [
    "CloudConfig",
    "CloudService",
    "NodeConfig",
    "OccupancyState",
    "RunResult",
    "Scenario",
    "SpaceNode",
    "TelemetryMessage",
    "decode",
    "encode",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
    "__version__",
]
