"""Cloud-side business state: spaces, orders, alarms, node health.

The service is an idempotent reducer over telemetry messages. Reports are
ordered by the (seq, conf) key and replayed duplicates are no-ops; occupancy
only flips after a candidate state persists across a time window or across
consecutive applied reports. Every externally driven mutation is appended to
a line-delimited JSON event log so a crashed instance can rebuild exactly by
replaying it.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field

from . import protocol

ALARM_KINDS = ("tilt", "obstructed", "offline", "illegal_parking")
ALARM_OPEN = "open"
ALARM_ACKED = "acknowledged"
ALARM_RESOLVED = "resolved"

# Alarm kinds the system itself may resolve without an operator ack.
AUTO_CLEAR_KINDS = ("tilt", "offline")


class CloudError(ValueError):
    pass


class RegistrationError(CloudError):
    pass


class UnknownEntityError(CloudError):
    pass


class BillingError(CloudError):
    pass


class AlarmTransitionError(CloudError):
    pass


@dataclass(frozen=True)
class CloudConfig:
    persistence_window_ms: int = 10_000
    persistence_reports: int = 2
    heartbeat_interval_ms: int = 30_000
    offline_missed_threshold: int = 3
    illegal_parking_grace_ms: int = 300_000
    billing_rate_per_min: float = 0.05

    def __post_init__(self):
        if self.persistence_window_ms < 0:
            raise CloudError("persistence_window_ms must be >= 0")
        if self.persistence_reports < 1:
            raise CloudError("persistence_reports must be >= 1")
        if self.heartbeat_interval_ms <= 0:
            raise CloudError("heartbeat_interval_ms must be positive")
        if self.offline_missed_threshold < 1:
            raise CloudError("offline_missed_threshold must be >= 1")
        if self.billing_rate_per_min < 0:
            raise CloudError("billing_rate_per_min must be >= 0")


@dataclass
class Order:
    order_id: str
    space_id: str
    open_ts: int
    rate_per_min: float
    close_ts: int | None = None
    fee: float | None = None

    @property
    def open(self) -> bool:
        return self.close_ts is None


def close_order(order: Order, close_ts: int, rate_per_min: float | None = None) -> Order:
    """Close an order and bill whole started minutes."""
    if not order.open:
        raise BillingError(f"order {order.order_id} already closed")
    if close_ts < order.open_ts:
        raise BillingError("close_ts precedes open_ts")
    rate = order.rate_per_min if rate_per_min is None else rate_per_min
    minutes = math.ceil((close_ts - order.open_ts) / 60_000)
    order.close_ts = close_ts
    order.fee = round(rate * minutes, 2)
    return order


@dataclass
class Alarm:
    alarm_id: str
    space_id: str
    kind: str
    severity: str
    raised_ts: int
    state: str = ALARM_OPEN
    ack_by: str | None = None
    ack_ts: int | None = None
    resolved_by: str | None = None
    resolved_ts: int | None = None

    @property
    def active(self) -> bool:
        return self.state in (ALARM_OPEN, ALARM_ACKED)


def alarm_transition(alarm: Alarm, action: str, operator: str, now: int) -> Alarm:
    """Lifecycle: open -> acknowledged -> resolved; resolve may skip ack."""
    if action == "ack":
        if alarm.state != ALARM_OPEN:
            raise AlarmTransitionError(f"cannot ack alarm in state {alarm.state}")
        alarm.state = ALARM_ACKED
        alarm.ack_by = operator
        alarm.ack_ts = now
    elif action == "resolve":
        if alarm.state == ALARM_RESOLVED:
            raise AlarmTransitionError("alarm already resolved")
        alarm.state = ALARM_RESOLVED
        alarm.resolved_by = operator
        alarm.resolved_ts = now
    else:
        raise AlarmTransitionError(f"unknown action {action!r}")
    return alarm


@dataclass
class NodeHealth:
    terminal_id: str
    last_seen_ts: int
    status: str = "online"
    missed: int = 0
    last_power_w: float = 0.0
    last_tilt_deg: float = 0.0


@dataclass
class _Pending:
    candidate_occ: bool
    first_seen_ts: int
    first_report_ts: int
    count: int = 1


@dataclass
class BusinessSpaceRecord:
    space_id: str
    terminal_id: str
    business_occ: bool = False
    reason: str = "none"
    last_seq: int = -1
    last_conf: float = -1.0
    last_report_ts: int = 0
    last_rsn: str = "none"
    last_dist_cm: float = 0.0
    last_tilt_deg: float = 0.0
    last_power_w: float = 0.0
    business_since: int = 0
    pending: _Pending | None = None
    open_order_id: str | None = None
    illegal_flagged: bool = False
    last_alarm_seq: int = -1
    last_alarm_conf: float = -1.0

    @property
    def last_key(self) -> tuple[int, float]:
        return (self.last_seq, self.last_conf)

    @property
    def last_alarm_key(self) -> tuple[int, float]:
        return (self.last_alarm_seq, self.last_alarm_conf)


class EventLog:
    """Append-only line-delimited JSON log."""

    def __init__(self, path: str):
        self.path = path
        self._fh = open(path, "a", encoding="utf-8")

    def append(self, entry: dict) -> None:
        self._fh.write(json.dumps(entry, separators=(",", ":"), sort_keys=True) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    @staticmethod
    def read(path: str) -> list[dict]:
        entries = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    entries.append(json.loads(line))
        return entries


class CloudService:
    """Single business-state reducer. All mutations take the service lock,
    which linearizes per-space updates and gives cross-space reads a
    consistent snapshot."""

    def __init__(self, config: CloudConfig | None = None, log: EventLog | None = None):
        self.config = config or CloudConfig()
        self.log = log
        self.spaces: dict[str, BusinessSpaceRecord] = {}
        self.orders: dict[str, Order] = {}
        self.alarms: dict[str, Alarm] = {}
        self.health: dict[str, NodeHealth] = {}
        self.counters = {
            "reports_applied": 0,
            "reports_duplicate": 0,
            "heartbeats": 0,
            "heartbeats_stale": 0,
            "alarms_in": 0,
            "alarms_duplicate": 0,
            "rejected": 0,
        }
        self.flip_latencies_ms: list[int] = []
        self._order_n = 0
        self._alarm_n = 0
        self._lock = threading.RLock()
        self._replaying = False

    # -- logging -----------------------------------------------------------

    def _log(self, entry: dict) -> None:
        if self.log is not None and not self._replaying:
            self.log.append(entry)

    # -- registration ------------------------------------------------------

    def register_space(self, space_id: str, terminal_id: str, now: int) -> BusinessSpaceRecord:
        with self._lock:
            rec = self.spaces.get(space_id)
            if rec is not None:
                return rec
            rec = BusinessSpaceRecord(space_id=space_id, terminal_id=terminal_id)
            self.spaces[space_id] = rec
            # Seed health at registration so a terminal that never manages a
            # single heartbeat still ages into offline.
            if terminal_id not in self.health:
                self.health[terminal_id] = NodeHealth(
                    terminal_id=terminal_id, last_seen_ts=now
                )
            self._log({"ev": "register", "t": now, "sid": space_id, "tid": terminal_id})
            return rec

    # -- ingest ------------------------------------------------------------

    def submit(self, msg: protocol.TelemetryMessage, now: int) -> dict:
        """Apply one decoded message; returns {applied, effects}."""
        with self._lock:
            self._log({"ev": "msg", "t": now, "msg": msg.to_payload_dict()})
            return self._submit_locked(msg, now)

    def _submit_locked(self, msg: protocol.TelemetryMessage, now: int) -> dict:
        if msg.type == protocol.HEARTBEAT:
            return self._heartbeat(msg, now)
        rec = self.spaces.get(msg.sid)
        if rec is None:
            self.counters["rejected"] += 1
            raise RegistrationError(f"unknown space {msg.sid!r}")
        if msg.type == protocol.REPORT:
            return self._apply_report(rec, msg, now)
        return self._ingest_alarm(rec, msg, now)

    def _apply_report(self, rec: BusinessSpaceRecord, msg: protocol.TelemetryMessage, now: int) -> dict:
        key = (msg.seq, msg.conf)
        if key <= rec.last_key:
            self.counters["reports_duplicate"] += 1
            return {"applied": False, "effects": []}
        rec.last_seq, rec.last_conf = key
        rec.last_report_ts = msg.ts
        rec.last_rsn = msg.rsn
        rec.last_dist_cm = msg.dist
        rec.last_tilt_deg = msg.tilt
        rec.last_power_w = msg.pwr
        self.counters["reports_applied"] += 1
        effects: list[dict] = []
        if msg.occ == rec.business_occ:
            rec.pending = None
            if rec.business_occ:
                rec.reason = msg.rsn
        else:
            if rec.pending is not None and rec.pending.candidate_occ == msg.occ:
                rec.pending.count += 1
            else:
                rec.pending = _Pending(msg.occ, now, msg.ts)
            pend = rec.pending
            if (
                pend.count >= self.config.persistence_reports
                or now - pend.first_seen_ts >= self.config.persistence_window_ms
            ):
                effects.extend(self._flip(rec, msg.occ, msg.rsn, now))
        return {"applied": True, "effects": effects}

    def _flip(self, rec: BusinessSpaceRecord, occ: bool, reason: str, now: int) -> list[dict]:
        first_report_ts = rec.pending.first_report_ts if rec.pending else now
        rec.pending = None
        rec.business_occ = occ
        rec.business_since = now
        rec.illegal_flagged = False
        effects = [{"kind": "occupancy_flip", "space_id": rec.space_id, "occ": occ}]
        self.flip_latencies_ms.append(max(0, now - first_report_ts))
        if occ:
            rec.reason = reason
            self._order_n += 1
            order = Order(
                order_id=f"o-{self._order_n}",
                space_id=rec.space_id,
                open_ts=now,
                rate_per_min=self.config.billing_rate_per_min,
            )
            self.orders[order.order_id] = order
            rec.open_order_id = order.order_id
            effects.append({"kind": "order_opened", "order_id": order.order_id})
        else:
            rec.reason = "none"
            if rec.open_order_id is not None:
                order = self.orders[rec.open_order_id]
                close_order(order, now)
                rec.open_order_id = None
                effects.append(
                    {"kind": "order_closed", "order_id": order.order_id, "fee": order.fee}
                )
        return effects

    def _heartbeat(self, msg: protocol.TelemetryMessage, now: int) -> dict:
        hb = self.health.get(msg.tid)
        effects: list[dict] = []
        if hb is None:
            hb = NodeHealth(terminal_id=msg.tid, last_seen_ts=now)
            self.health[msg.tid] = hb
        elif now <= hb.last_seen_ts:
            # Receive time did not advance: a redelivered or replayed
            # heartbeat. Applying it would resurrect an offline node from
            # stale evidence, so it is a no-op.
            self.counters["heartbeats_stale"] += 1
            return {"applied": False, "effects": []}
        self.counters["heartbeats"] += 1
        was_offline = hb.status == "offline"
        hb.last_seen_ts = now
        hb.missed = 0
        hb.status = "online"
        hb.last_power_w = msg.pwr
        hb.last_tilt_deg = msg.tilt
        if was_offline:
            cleared = self._resolve_auto(self._spaces_of(msg.tid), "offline", now)
            effects.extend({"kind": "alarm_cleared", "alarm_id": a} for a in cleared)
        return {"applied": True, "effects": effects}

    def _ingest_alarm(self, rec: BusinessSpaceRecord, msg: protocol.TelemetryMessage, now: int) -> dict:
        # Alarm messages ride the same per-terminal sequence stream as
        # reports, so the same monotone key makes redelivery and log replay
        # no-ops (a resolved alarm must never re-open from an old message).
        key = (msg.seq, msg.conf)
        if key <= rec.last_alarm_key:
            self.counters["alarms_duplicate"] += 1
            return {"applied": False, "effects": []}
        rec.last_alarm_seq, rec.last_alarm_conf = key
        self.counters["alarms_in"] += 1
        effects: list[dict] = []
        if msg.akind == "tilt" and msg.sev == "info":
            cleared = self._resolve_auto([rec.space_id], "tilt", now)
            effects.extend({"kind": "alarm_cleared", "alarm_id": a} for a in cleared)
        else:
            alarm = self._raise_alarm(rec.space_id, msg.akind, msg.sev, now)
            if alarm is not None:
                effects.append({"kind": "alarm_raised", "alarm_id": alarm.alarm_id})
        return {"applied": True, "effects": effects}

    def _spaces_of(self, terminal_id: str) -> list[str]:
        return sorted(
            rec.space_id for rec in self.spaces.values() if rec.terminal_id == terminal_id
        )

    def _active_alarm(self, space_id: str, kind: str) -> Alarm | None:
        for alarm in self.alarms.values():
            if alarm.space_id == space_id and alarm.kind == kind and alarm.active:
                return alarm
        return None

    def _raise_alarm(self, space_id: str, kind: str, severity: str, now: int) -> Alarm | None:
        # At most one active alarm per (space, kind); a re-raise refreshes nothing.
        if self._active_alarm(space_id, kind) is not None:
            return None
        self._alarm_n += 1
        alarm = Alarm(
            alarm_id=f"a-{self._alarm_n}",
            space_id=space_id,
            kind=kind,
            severity=severity,
            raised_ts=now,
        )
        self.alarms[alarm.alarm_id] = alarm
        return alarm

    def _resolve_auto(self, space_ids: list[str], kind: str, now: int) -> list[str]:
        cleared = []
        for sid in space_ids:
            alarm = self._active_alarm(sid, kind)
            if alarm is not None:
                alarm.state = ALARM_RESOLVED
                alarm.resolved_by = "auto"
                alarm.resolved_ts = now
                cleared.append(alarm.alarm_id)
        return cleared

    # -- operator actions ----------------------------------------------------

    def ack_alarm(self, alarm_id: str, operator: str, now: int) -> Alarm:
        with self._lock:
            alarm = self.alarms.get(alarm_id)
            if alarm is None:
                raise UnknownEntityError(f"unknown alarm {alarm_id!r}")
            alarm_transition(alarm, "ack", operator, now)
            self._log({"ev": "ack", "t": now, "id": alarm_id, "op": operator})
            return alarm

    def resolve_alarm(self, alarm_id: str, operator: str, now: int) -> Alarm:
        with self._lock:
            alarm = self.alarms.get(alarm_id)
            if alarm is None:
                raise UnknownEntityError(f"unknown alarm {alarm_id!r}")
            alarm_transition(alarm, "resolve", operator, now)
            self._log({"ev": "resolve", "t": now, "id": alarm_id, "op": operator})
            return alarm

    # -- periodic sweep ------------------------------------------------------

    def sweep(self, now: int) -> list[dict]:
        """Health check, pending-window evaluation, long-stay policy."""
        with self._lock:
            self._log({"ev": "sweep", "t": now})
            return self._sweep_locked(now)

    def _sweep_locked(self, now: int) -> list[dict]:
        effects: list[dict] = []
        for tid in sorted(self.health):
            hb = self.health[tid]
            hb.missed = max(0, (now - hb.last_seen_ts) // self.config.heartbeat_interval_ms)
            if hb.missed >= self.config.offline_missed_threshold and hb.status == "online":
                hb.status = "offline"
                for sid in self._spaces_of(tid) or [tid]:
                    alarm = self._raise_alarm(sid, "offline", "warn", now)
                    if alarm is not None:
                        effects.append({"kind": "alarm_raised", "alarm_id": alarm.alarm_id})
        for sid in sorted(self.spaces):
            rec = self.spaces[sid]
            pend = rec.pending
            if pend is not None and now - pend.first_seen_ts >= self.config.persistence_window_ms:
                # The candidate went uncontradicted for the whole window.
                effects.extend(self._flip(rec, pend.candidate_occ, rec.last_rsn, now))
            if (
                rec.business_occ
                and rec.reason == "collision"
                and not rec.illegal_flagged
                and now - rec.business_since > self.config.illegal_parking_grace_ms
            ):
                alarm = self._raise_alarm(sid, "illegal_parking", "critical", now)
                if alarm is not None:
                    # flag the episode only when an alarm actually went out;
                    # a raise suppressed by a still-open previous alarm must
                    # retry once the operator resolves it
                    rec.illegal_flagged = True
                    effects.append({"kind": "alarm_raised", "alarm_id": alarm.alarm_id})
        return effects

    # -- queries -------------------------------------------------------------

    def space_summary(self, space_id: str) -> dict:
        with self._lock:
            rec = self.spaces.get(space_id)
            if rec is None:
                raise RegistrationError(f"unknown space {space_id!r}")
            return self._space_dict(rec)

    def _space_dict(self, rec: BusinessSpaceRecord) -> dict:
        return {
            "space_id": rec.space_id,
            "terminal_id": rec.terminal_id,
            "occupied": rec.business_occ,
            "reason": rec.reason,
            "last_seq": rec.last_seq,
            "last_conf": rec.last_conf,
            "last_report_ts": rec.last_report_ts,
            "last_dist_cm": rec.last_dist_cm,
            "last_tilt_deg": rec.last_tilt_deg,
            "last_power_w": rec.last_power_w,
            "business_since": rec.business_since,
            "open_order_id": rec.open_order_id,
            "open_alarms": sorted(
                a.alarm_id for a in self.alarms.values()
                if a.space_id == rec.space_id and a.active
            ),
        }

    def list_spaces(self) -> list[dict]:
        with self._lock:
            return [self._space_dict(self.spaces[sid]) for sid in sorted(self.spaces)]

    def list_alarms(self, state: str | None = None) -> list[dict]:
        with self._lock:
            out = []
            for aid in sorted(self.alarms, key=lambda a: int(a.split("-")[1])):
                alarm = self.alarms[aid]
                if state is not None and alarm.state != state:
                    continue
                out.append(self._alarm_dict(alarm))
            return out

    @staticmethod
    def _alarm_dict(alarm: Alarm) -> dict:
        return {
            "alarm_id": alarm.alarm_id,
            "space_id": alarm.space_id,
            "kind": alarm.kind,
            "severity": alarm.severity,
            "state": alarm.state,
            "raised_ts": alarm.raised_ts,
            "ack_by": alarm.ack_by,
            "ack_ts": alarm.ack_ts,
            "resolved_by": alarm.resolved_by,
            "resolved_ts": alarm.resolved_ts,
        }

    def list_orders(self, space_id: str | None = None) -> list[dict]:
        with self._lock:
            out = []
            for oid in sorted(self.orders, key=lambda o: int(o.split("-")[1])):
                order = self.orders[oid]
                if space_id is not None and order.space_id != space_id:
                    continue
                out.append({
                    "order_id": order.order_id,
                    "space_id": order.space_id,
                    "open_ts": order.open_ts,
                    "close_ts": order.close_ts,
                    "fee": order.fee,
                    "open": order.open,
                })
            return out

    def list_nodes(self) -> list[dict]:
        with self._lock:
            return [
                {
                    "terminal_id": tid,
                    "status": self.health[tid].status,
                    "last_seen_ts": self.health[tid].last_seen_ts,
                    "missed": self.health[tid].missed,
                    "last_power_w": self.health[tid].last_power_w,
                    "last_tilt_deg": self.health[tid].last_tilt_deg,
                }
                for tid in sorted(self.health)
            ]

    def metrics(self) -> dict:
        with self._lock:
            total = len(self.spaces)
            occupied = sum(1 for r in self.spaces.values() if r.business_occ)
            powers = [h.last_power_w for _, h in sorted(self.health.items())]
            return {
                "spaces": total,
                "occupied": occupied,
                "occupancy_rate": (occupied / total) if total else 0.0,
                "open_alarms": sum(1 for a in self.alarms.values() if a.active),
                "avg_reported_power_w": (sum(powers) / len(powers)) if powers else 0.0,
                "orders_open": sum(1 for o in self.orders.values() if o.open),
                "orders_closed": sum(1 for o in self.orders.values() if not o.open),
                "counters": dict(self.counters),
            }

    # -- replay ---------------------------------------------------------------

    def snapshot(self) -> dict:
        """Canonical business state (ingest counters excluded)."""
        with self._lock:
            return {
                "spaces": {
                    sid: {
                        **self._space_dict(rec),
                        "pending": (
                            None if rec.pending is None else [
                                rec.pending.candidate_occ,
                                rec.pending.first_seen_ts,
                                rec.pending.first_report_ts,
                                rec.pending.count,
                            ]
                        ),
                        "last_rsn": rec.last_rsn,
                        "illegal_flagged": rec.illegal_flagged,
                        "last_alarm_key": [rec.last_alarm_seq, rec.last_alarm_conf],
                    }
                    for sid, rec in sorted(self.spaces.items())
                },
                "orders": self.list_orders(),
                "alarms": self.list_alarms(),
                "nodes": self.list_nodes(),
                "order_n": self._order_n,
                "alarm_n": self._alarm_n,
            }

    def replay(self, entries: list[dict]) -> dict:
        """Re-apply logged events; invalid replayed actions are counted, not fatal."""
        stats = {"entries": 0, "errors": 0}
        with self._lock:
            self._replaying = True
            try:
                for entry in entries:
                    stats["entries"] += 1
                    try:
                        self._replay_one(entry)
                    except CloudError:
                        stats["errors"] += 1
            finally:
                self._replaying = False
        return stats

    def _replay_one(self, entry: dict) -> None:
        ev = entry.get("ev")
        now = entry.get("t", 0)
        if ev == "register":
            self.register_space(entry["sid"], entry["tid"], now)
        elif ev == "msg":
            msg = protocol.TelemetryMessage.from_dict(entry["msg"])
            self._submit_locked(msg, now)
        elif ev == "ack":
            alarm = self.alarms.get(entry["id"])
            if alarm is None:
                raise AlarmTransitionError(f"unknown alarm {entry['id']!r}")
            alarm_transition(alarm, "ack", entry["op"], now)
        elif ev == "resolve":
            alarm = self.alarms.get(entry["id"])
            if alarm is None:
                raise AlarmTransitionError(f"unknown alarm {entry['id']!r}")
            alarm_transition(alarm, "resolve", entry["op"], now)
        elif ev == "sweep":
            self._sweep_locked(now)
        else:
            raise CloudError(f"unknown log entry kind {ev!r}")


def replay_from_log(path: str, config: CloudConfig | None = None) -> tuple[CloudService, dict]:
    service = CloudService(config=config)
    stats = service.replay(EventLog.read(path))
    return service, stats
