"""Deterministic discrete-event simulator for a fleet of barrier nodes.

Ground truth per space (ranger distance, vehicle presence, lighting,
occlusion, link quality, device tilt, impacts) is derived from the scenario
events. Nodes wake on their own schedule (polls, pending verdicts,
heartbeats) plus extra samples during infrared transients so ramps are seen
at sensor resolution; a quiescent space is sampled exactly on its polling
period. Everything is driven by one seeded RNG family, so a (scenario, seed)
pair reproduces bit-identical metrics.
"""

from __future__ import annotations

import bisect
import heapq
import json
import logging
import math
import random
from dataclasses import dataclass, field

from . import protocol
from .cloud import CloudConfig, CloudService
from .detection import ConfidenceProfile, DetectorConfig, SceneTruth, SyntheticDetector
from .inertial import AccelSample
from .ir import distance_to_voltage
from .node import MODES, NodeConfig, SensorFrame, SpaceNode
from .power import savings_vs_always_on
from .protocol import FrameDecoder
from .scenario import Scenario, ScenarioError, SpaceSpec

logger = logging.getLogger(__name__)

VACANT_DISTANCE_CM = 150.0
TRANSIENT_SAMPLE_MS = 500
SWEEP_PERIOD_MS = 5_000


# -- ground truth ------------------------------------------------------------


@dataclass
class _VehicleStay:
    arrive_t: int
    arrive_ramp: int
    dist: float
    depart_t: int | None = None
    depart_ramp: int = 0

    def settled_t(self) -> int:
        return self.arrive_t + self.arrive_ramp


class SpaceEnvironment:
    """Physical truth for one space over the scenario timeline."""

    def __init__(self, space_id: str, events: list, baseline_cm: float = VACANT_DISTANCE_CM):
        self.space_id = space_id
        self.baseline_cm = baseline_cm
        self.stays: list[_VehicleStay] = []
        self.pedestrians: list[tuple[int, int, float]] = []
        self.impacts: dict[int, float] = {}
        self._light: list[tuple[int, str]] = []
        self._occluded: list[tuple[int, bool]] = []
        self._loss: list[tuple[int, float]] = []
        self._tilt: list[tuple[int, float]] = []
        current: _VehicleStay | None = None
        for ev in events:
            if ev.kind == "vehicle_arrive":
                if current is not None:
                    raise ScenarioError(
                        f"space {space_id}: vehicle_arrive at {ev.t} while a vehicle is present"
                    )
                current = _VehicleStay(ev.t, ev.params["ramp_ms"], ev.params["dist"])
            elif ev.kind == "vehicle_depart":
                if current is None:
                    raise ScenarioError(
                        f"space {space_id}: vehicle_depart at {ev.t} with no vehicle present"
                    )
                if ev.t < current.settled_t():
                    raise ScenarioError(
                        f"space {space_id}: vehicle_depart at {ev.t} during the arrival ramp"
                    )
                current.depart_t = ev.t
                current.depart_ramp = ev.params["ramp_ms"]
                self.stays.append(current)
                current = None
            elif ev.kind == "pedestrian":
                self.pedestrians.append((ev.t, ev.t + ev.params["dwell_ms"], ev.params["dist"]))
            elif ev.kind == "impact":
                self.impacts[ev.t] = ev.params["g"]
            elif ev.kind == "tilt":
                self._tilt.append((ev.t, ev.params["deg"]))
            elif ev.kind == "light":
                self._light.append((ev.t, ev.params["cond"]))
            elif ev.kind == "occlusion":
                self._occluded.append((ev.t, ev.params["state"] == "on"))
            elif ev.kind == "link_loss":
                self._loss.append((ev.t, ev.params["p"]))
        if current is not None:
            self.stays.append(current)  # stays to the end of the scenario

    @staticmethod
    def _step_lookup(steps: list[tuple[int, object]], t: int, default):
        # steps are in event order, which is already sorted by time.
        idx = bisect.bisect_right([s[0] for s in steps], t) - 1
        return steps[idx][1] if idx >= 0 else default

    def light(self, t: int) -> str:
        return self._step_lookup(self._light, t, "day")

    def occluded(self, t: int) -> bool:
        return self._step_lookup(self._occluded, t, False)

    def loss_probability(self, t: int) -> float:
        return self._step_lookup(self._loss, t, 0.0)

    def tilt_deg(self, t: int) -> float:
        return self._step_lookup(self._tilt, t, 0.0)

    def vehicle_present(self, t: int) -> bool:
        for stay in self.stays:
            end = math.inf if stay.depart_t is None else stay.depart_t
            if stay.settled_t() <= t < end:
                return True
        return False

    def _vehicle_distance(self, t: int) -> float:
        for stay in self.stays:
            if t < stay.arrive_t:
                continue
            if t < stay.settled_t():
                frac = (t - stay.arrive_t) / stay.arrive_ramp if stay.arrive_ramp else 1.0
                return self.baseline_cm + (stay.dist - self.baseline_cm) * frac
            if stay.depart_t is None or t < stay.depart_t:
                return stay.dist
            if t < stay.depart_t + stay.depart_ramp:
                frac = (t - stay.depart_t) / stay.depart_ramp if stay.depart_ramp else 1.0
                return stay.dist + (self.baseline_cm - stay.dist) * frac
        return self.baseline_cm

    def ir_distance(self, t: int) -> float:
        dist = self._vehicle_distance(t)
        for start, end, ped_dist in self.pedestrians:
            if start <= t < end:
                dist = min(dist, ped_dist)
        return dist

    def scene(self, t: int) -> SceneTruth:
        return SceneTruth(
            vehicle_present=self.vehicle_present(t),
            light=self.light(t),
            occluded=self.occluded(t),
        )

    def transient_times(self, sample_ms: int) -> list[int]:
        """Wakeups that let the ranger see ramps at sensor resolution."""
        times: set[int] = set()

        def ramp(t0: int, t1: int):
            t = t0
            while t < t1:
                times.add(t)
                t += sample_ms
            times.add(t1)

        for stay in self.stays:
            ramp(stay.arrive_t, stay.settled_t())
            if stay.depart_t is not None:
                ramp(stay.depart_t, stay.depart_t + stay.depart_ramp)
                # A few extra samples after the ramp so the release threshold
                # is crossed without waiting for the slow poll cadence.
                ramp(stay.depart_t + stay.depart_ramp,
                     stay.depart_t + stay.depart_ramp + 4 * sample_ms)
        for start, end, _ in self.pedestrians:
            ramp(start, end + 4 * sample_ms)
        for t in self.impacts:
            times.add(t)
        for t, _ in self._tilt:
            times.add(t)
        return sorted(times)


# -- node configuration from scenario ----------------------------------------

_OVERRIDE_KEYS = {
    "trigger_cm": ("trigger_threshold_cm", float),
    "release_cm": ("release_threshold_cm", float),
    "window": ("window_size", int),
    "slew_cm": ("slew_limit_cm", float),
    "k": ("max_failed_confirms", int),
    "m": ("vacate_polls", int),
    "lookback_ms": ("impact_lookback_ms", int),
    "poll_vacant_ms": ("vacant_poll_ms", int),
    "poll_occupied_ms": ("occupied_poll_ms", int),
    "heartbeat_ms": ("heartbeat_interval_ms", int),
    "tilt_alarm_deg": ("tilt_alarm_threshold_deg", float),
    "impact_g": ("impact_threshold_g", float),
    "conf_threshold": ("occupancy_conf_threshold", float),
    "tilt_alarm_interval_ms": ("tilt_alarm_interval_ms", int),
}

_FLAG_KEYS = {
    "critical_bias": "critical_bias_enabled",
    "poll_reruns_vision": "poll_reruns_vision",
}


def build_node_config(spec: SpaceSpec, scn: Scenario, mode_override: str | None = None) -> NodeConfig:
    kwargs: dict = {
        "space_id": spec.space_id,
        "terminal_id": f"t-{spec.space_id}",
        "roi": spec.roi,
        "mode": mode_override or spec.mode,
        "profile": scn.profile,
    }
    detector_kwargs: dict = {}
    merged = dict(scn.node_overrides)
    merged.update(spec.overrides)
    for key, raw in merged.items():
        if key in _OVERRIDE_KEYS:
            name, cast = _OVERRIDE_KEYS[key]
            kwargs[name] = cast(raw)
        elif key in _FLAG_KEYS:
            if raw not in ("on", "off"):
                raise ScenarioError(f"{key} must be on or off, got {raw!r}")
            kwargs[_FLAG_KEYS[key]] = raw == "on"
        elif key == "latency_ms":
            detector_kwargs["simulated_latency_ms"] = int(raw)
        elif key == "mode":
            pass  # handled on the space line
        else:
            raise ScenarioError(f"unknown node override {key!r}")
    if mode_override is not None and mode_override not in MODES:
        raise ScenarioError(f"mode override must be one of {MODES}")
    if detector_kwargs:
        kwargs["detector"] = DetectorConfig(**detector_kwargs)
    return NodeConfig(**kwargs)


# -- cloud sinks ---------------------------------------------------------------


class EmbeddedSink:
    """Direct in-process cloud, driven on the simulated clock."""

    def __init__(self, service: CloudService | None = None):
        self.service = service or CloudService()

    def register(self, sid: str, tid: str, now: int) -> None:
        self.service.register_space(sid, tid, now)

    def submit(self, msg: protocol.TelemetryMessage, now: int) -> bool:
        return self.service.submit(msg, now)["applied"]

    def sweep(self, now: int) -> None:
        self.service.sweep(now)

    def counters(self) -> dict:
        return dict(self.service.counters)

    def final_spaces(self) -> dict:
        return {
            row["space_id"]: {"occupied": row["occupied"], "reason": row["reason"]}
            for row in self.service.list_spaces()
        }

    def orders_summary(self) -> dict:
        rows = self.service.list_orders()
        fees = sum(r["fee"] for r in rows if r["fee"] is not None)
        return {
            "opened": len(rows),
            "closed": sum(1 for r in rows if not r["open"]),
            "fees_total": round(fees, 2),
        }

    def alarms_summary(self) -> dict:
        rows = self.service.list_alarms()
        by_kind: dict[str, int] = {}
        for r in rows:
            by_kind[r["kind"]] = by_kind.get(r["kind"], 0) + 1
        return {
            "total": len(rows),
            "open": sum(1 for r in rows if r["state"] != "resolved"),
            "by_kind": by_kind,
        }

    def flip_latencies(self) -> list[int]:
        return list(self.service.flip_latencies_ms)


class HttpSink:
    """Bridge to a live cloud instance over its HTTP API."""

    def __init__(self, base_url: str):
        import requests

        self._requests = requests
        self.base_url = base_url.rstrip("/")
        self.session = requests.Session()

    def _post(self, path: str, body: dict) -> dict:
        url = f"{self.base_url}/api/v1{path}"
        # One retry on transport error, then give up on the message.
        for attempt in (0, 1):
            try:
                resp = self.session.post(url, json=body, timeout=10)
                break
            except self._requests.RequestException:
                if attempt:
                    raise
        resp.raise_for_status()
        return resp.json()

    def _get(self, path: str) -> dict | list:
        resp = self.session.get(f"{self.base_url}/api/v1{path}", timeout=10)
        resp.raise_for_status()
        return resp.json()

    def register(self, sid: str, tid: str, now: int) -> None:
        self._post("/spaces", {"space_id": sid, "terminal_id": tid})

    def submit(self, msg: protocol.TelemetryMessage, now: int) -> bool:
        path = "/heartbeats" if msg.type == protocol.HEARTBEAT else "/reports"
        return bool(self._post(path, msg.to_payload_dict()).get("applied"))

    def sweep(self, now: int) -> None:
        pass  # the live server sweeps on its own clock

    def counters(self) -> dict:
        return dict(self._get("/metrics")["counters"])

    def final_spaces(self) -> dict:
        return {
            row["space_id"]: {"occupied": row["occupied"], "reason": row["reason"]}
            for row in self._get("/spaces")
        }

    def orders_summary(self) -> dict:
        rows = self._get("/orders")
        fees = sum(r["fee"] for r in rows if r["fee"] is not None)
        return {
            "opened": len(rows),
            "closed": sum(1 for r in rows if not r["open"]),
            "fees_total": round(fees, 2),
        }

    def alarms_summary(self) -> dict:
        rows = self._get("/alarms")
        by_kind: dict[str, int] = {}
        for r in rows:
            by_kind[r["kind"]] = by_kind.get(r["kind"], 0) + 1
        return {
            "total": len(rows),
            "open": sum(1 for r in rows if r["state"] != "resolved"),
            "by_kind": by_kind,
        }

    def flip_latencies(self) -> list[int]:
        return []


class Gateway:
    """Decodes the byte stream coming off the link and forwards messages."""

    def __init__(self, sink, budget: int = protocol.PAYLOAD_BUDGET):
        self.sink = sink
        self.decoder = FrameDecoder(budget)
        self.delivered = 0
        self.corrupt = 0
        self.rejected = 0

    def feed(self, data: bytes, now: int) -> None:
        messages, issues = self.decoder.push(data)
        # Garbage gaps between frames are not whole lost frames; everything
        # else (bad CRC, undecodable payload) costs exactly one frame.
        self.corrupt += sum(1 for i in issues if i.kind != protocol.BAD_MAGIC)
        for msg in messages:
            try:
                self.sink.submit(msg, now)
                self.delivered += 1
            except Exception:
                logger.exception("sink rejected message")
                self.rejected += 1


# -- run ------------------------------------------------------------------------


@dataclass
class RunResult:
    scenario: Scenario
    metrics: dict
    nodes: dict = field(default_factory=dict)
    environments: dict = field(default_factory=dict)
    state_changes: dict = field(default_factory=dict)
    emissions: dict = field(default_factory=dict)
    sink: object | None = None

    def metrics_json(self) -> str:
        return json.dumps(self.metrics, sort_keys=True, indent=2) + "\n"


def _round6(x: float) -> float:
    return round(float(x), 6)


def _percentile(values: list[int], q: float) -> float:
    if not values:
        return 0.0
    ordered = sorted(values)
    rank = max(1, math.ceil(q * len(ordered)))
    return float(ordered[rank - 1])


def run_scenario(
    scn: Scenario,
    mode_override: str | None = None,
    sink=None,
    sweep_period_ms: int = SWEEP_PERIOD_MS,
    transient_sample_ms: int = TRANSIENT_SAMPLE_MS,
) -> RunResult:
    """Run a parsed scenario to completion and assemble the metrics report."""
    if mode_override is not None and mode_override not in MODES:
        raise ScenarioError(f"mode override must be one of {MODES}")
    sink = sink or EmbeddedSink()
    embedded = isinstance(sink, EmbeddedSink)

    events_by_space: dict[str, list] = {s.space_id: [] for s in scn.spaces}
    for ev in scn.events:
        events_by_space[ev.space_id].append(ev)

    nodes: dict[str, SpaceNode] = {}
    envs: dict[str, SpaceEnvironment] = {}
    link_rngs: dict[str, random.Random] = {}
    gateway = Gateway(sink)
    confusion = {s.space_id: {"tp": 0, "fp": 0, "fn": 0, "tn": 0} for s in scn.spaces}
    state_changes: dict[str, list] = {s.space_id: [] for s in scn.spaces}
    emissions: dict[str, list] = {s.space_id: [] for s in scn.spaces}
    sent = 0
    dropped = 0

    heap: list = []
    counter = 0

    def push(t: int, priority: int, sid: str | None):
        nonlocal counter
        if t <= scn.duration_ms:
            heapq.heappush(heap, (t, priority, counter, sid))
            counter += 1

    for spec in scn.spaces:
        cfg = build_node_config(spec, scn, mode_override)
        env = SpaceEnvironment(spec.space_id, events_by_space[spec.space_id])
        detector = SyntheticDetector(
            config=cfg.detector,
            profile=cfg.profile,
            roi=cfg.roi,
            rng=random.Random(f"{scn.seed}:{spec.space_id}:detector"),
        )
        node = SpaceNode(cfg, detector=detector)
        nodes[spec.space_id] = node
        envs[spec.space_id] = env
        link_rngs[spec.space_id] = random.Random(f"{scn.seed}:{spec.space_id}:link")
        sink.register(spec.space_id, cfg.terminal_id, 0)
        push(node.next_wakeup(), 0, spec.space_id)
        for t in env.transient_times(transient_sample_ms):
            push(t, 0, spec.space_id)

    if embedded:
        for t in range(sweep_period_ms, scn.duration_ms + 1, sweep_period_ms):
            push(t, 1, None)

    while heap:
        t, priority, _, sid = heapq.heappop(heap)
        if sid is None:
            sink.sweep(t)
            continue
        node = nodes[sid]
        if node.last_step_t is not None and node.last_step_t >= t:
            continue  # duplicate wakeup for this instant
        env = envs[sid]
        tilt = env.tilt_deg(t)
        mag = env.impacts.get(t, 1.0)
        accel = AccelSample(
            t=t,
            ax=math.sin(math.radians(tilt)) * mag,
            ay=0.0,
            az=math.cos(math.radians(tilt)) * mag,
        )
        frame = SensorFrame(
            t=t,
            ir_voltage=distance_to_voltage(node.cfg.calibration, min(env.ir_distance(t), node.cfg.calibration.max_range_cm)),
            accel=accel,
            scene=env.scene(t),
        )
        prev_state = node.state
        out = node.step(t, frame)
        if node.state != prev_state:
            state_changes[sid].append((t, node.state.value))
        if node.poll_times and node.poll_times[-1] == t:
            truth = env.vehicle_present(t)
            believed = node.occupied
            key = ("tp" if truth else "fp") if believed else ("fn" if truth else "tn")
            confusion[sid][key] += 1
        for msg in out:
            emissions[sid].append((t, msg.type))
            frame_bytes = protocol.encode(msg)
            sent += 1
            if link_rngs[sid].random() < env.loss_probability(t):
                dropped += 1
                continue
            gateway.feed(frame_bytes, t)
        push(node.next_wakeup(), 0, sid)

    for node in nodes.values():
        node.ledger.advance(scn.duration_ms)
    if embedded:
        sink.sweep(scn.duration_ms)

    metrics = _build_metrics(scn, nodes, sink, confusion, sent, dropped, gateway)
    return RunResult(
        scenario=scn,
        metrics=metrics,
        nodes=nodes,
        environments=envs,
        state_changes=state_changes,
        emissions=emissions,
        sink=sink,
    )


def _build_metrics(scn, nodes, sink, confusion, sent, dropped, gateway) -> dict:
    counters = sink.counters()
    applied = counters.get("reports_applied", 0) + counters.get("heartbeats", 0) + counters.get("alarms_in", 0)
    duplicates = (
        counters.get("reports_duplicate", 0)
        + counters.get("heartbeats_stale", 0)
        + counters.get("alarms_duplicate", 0)
    )
    latencies = sink.flip_latencies()
    power_model = next(iter(nodes.values())).cfg.power if nodes else None
    per_node_power = {}
    for sid in sorted(nodes):
        node = nodes[sid]
        ledger = node.ledger
        if ledger.coverage_end > ledger.start_ms:
            avg = ledger.average_power()
            duty = ledger.detector_duty()
            energy = ledger.energy_joules()
        else:
            avg, duty, energy = node.cfg.power.standby_w, 0.0, 0.0
        per_node_power[sid] = {
            "average_w": _round6(avg),
            "detector_duty": _round6(duty),
            "energy_j": _round6(energy),
        }
    fleet_avg = (
        sum(p["average_w"] for p in per_node_power.values()) / len(per_node_power)
        if per_node_power else 0.0
    )
    totals = {"tp": 0, "fp": 0, "fn": 0, "tn": 0}
    for counts in confusion.values():
        for k in totals:
            totals[k] += counts[k]
    final = sink.final_spaces()
    node_final = {
        sid: {
            "node_state": nodes[sid].state.value,
            "reason": nodes[sid].reason(),
            "business_occ": final.get(sid, {}).get("occupied", False),
            "business_reason": final.get(sid, {}).get("reason", "none"),
        }
        for sid in sorted(nodes)
    }
    return {
        "seed": scn.seed,
        "duration_ms": scn.duration_ms,
        "messages": {
            "sent": sent,
            "dropped": dropped,
            "corrupt": gateway.corrupt,
            "delivered": gateway.delivered,
            "applied": applied,
            "duplicate": duplicates,
            "rejected": gateway.rejected + counters.get("rejected", 0),
        },
        "latency_ms": {
            "count": len(latencies),
            "mean": _round6(sum(latencies) / len(latencies)) if latencies else 0.0,
            "p50": _percentile(latencies, 0.50),
            "p95": _percentile(latencies, 0.95),
            "max": float(max(latencies)) if latencies else 0.0,
        },
        "power": {
            "per_node": per_node_power,
            "fleet_average_w": _round6(fleet_avg),
            "savings_vs_always_on": _round6(
                savings_vs_always_on(fleet_avg, power_model)
            ) if power_model and per_node_power else 0.0,
        },
        "occupancy": {
            "per_space": {sid: dict(confusion[sid]) for sid in sorted(confusion)},
            "totals": totals,
        },
        "detector": {
            "total_invocations": sum(n.detector_invocations for n in nodes.values()),
            "per_space": {sid: nodes[sid].detector_invocations for sid in sorted(nodes)},
        },
        "final": node_final,
        "orders": sink.orders_summary(),
        "alarms": sink.alarms_summary(),
    }
