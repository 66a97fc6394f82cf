"""Compact framed telemetry for a low-rate radio uplink.

Frame layout: 0xA5 0x5A | u16 LE payload length | JSON payload | u16 BE CRC.
CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection) over the payload
bytes only. Payloads are short-key JSON in a fixed key order with floats cut
to three decimals; the whole payload must fit the radio budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields

MAGIC = b"\xa5\x5a"
PAYLOAD_BUDGET = 240
FRAME_OVERHEAD = 6  # magic + length + crc

REPORT = "report"
HEARTBEAT = "heartbeat"
ALARM = "alarm"

RSN_VALUES = ("none", "ir", "visual", "collision")
AKIND_VALUES = ("tilt", "obstructed", "offline")
SEV_VALUES = ("info", "warn", "critical")

# Serialization order; also the full closed set of payload keys.
_FIELD_ORDER = ("type", "sid", "tid", "seq", "ts", "occ", "conf", "rsn", "dist", "tilt", "pwr", "akind", "sev")

_REQUIRED = {
    REPORT: ("type", "sid", "tid", "seq", "ts", "occ", "conf", "rsn", "dist", "tilt", "pwr"),
    HEARTBEAT: ("type", "sid", "tid", "seq", "ts", "tilt", "pwr"),
    ALARM: ("type", "sid", "tid", "seq", "ts", "tilt", "pwr", "akind", "sev"),
}

BAD_MAGIC = "bad_magic"
CRC_MISMATCH = "crc_mismatch"
MALFORMED_JSON = "malformed_json"
SCHEMA_VIOLATION = "schema_violation"


class ProtocolError(ValueError):
    pass


class SchemaError(ProtocolError):
    pass


def _q3(x):
    return None if x is None else round(float(x), 3)


@dataclass(frozen=True)
class TelemetryMessage:
    type: str
    sid: str
    tid: str
    seq: int
    ts: int
    occ: bool | None = None
    conf: float | None = None
    rsn: str | None = None
    dist: float | None = None
    tilt: float | None = None
    pwr: float | None = None
    akind: str | None = None
    sev: str | None = None

    def __post_init__(self):
        for name in ("conf", "dist", "tilt", "pwr"):
            object.__setattr__(self, name, _q3(getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        if self.type not in _REQUIRED:
            raise SchemaError(f"unknown message type {self.type!r}")
        required = _REQUIRED[self.type]
        for name in _FIELD_ORDER:
            value = getattr(self, name)
            if name in required:
                if value is None:
                    raise SchemaError(f"{self.type} requires field {name!r}")
            elif value is not None:
                raise SchemaError(f"field {name!r} not allowed on {self.type}")
        if not self.sid or not self.tid:
            raise SchemaError("sid and tid must be non-empty")
        if not isinstance(self.seq, int) or isinstance(self.seq, bool) or self.seq < 0:
            raise SchemaError("seq must be a non-negative integer")
        if not isinstance(self.ts, int) or isinstance(self.ts, bool) or self.ts < 0:
            raise SchemaError("ts must be a non-negative integer")
        if self.occ is not None and not isinstance(self.occ, bool):
            raise SchemaError("occ must be boolean")
        if self.conf is not None and not 0.0 <= self.conf <= 1.0:
            raise SchemaError("conf must be in [0, 1]")
        if self.rsn is not None and self.rsn not in RSN_VALUES:
            raise SchemaError(f"rsn must be one of {RSN_VALUES}")
        if self.dist is not None and self.dist < 0:
            raise SchemaError("dist must be non-negative")
        if self.tilt is not None and not 0.0 <= self.tilt <= 180.0:
            raise SchemaError("tilt must be in [0, 180]")
        if self.pwr is not None and self.pwr < 0:
            raise SchemaError("pwr must be non-negative")
        if self.akind is not None and self.akind not in AKIND_VALUES:
            raise SchemaError(f"akind must be one of {AKIND_VALUES}")
        if self.sev is not None and self.sev not in SEV_VALUES:
            raise SchemaError(f"sev must be one of {SEV_VALUES}")

    def to_payload_dict(self) -> dict:
        out = {}
        for name in _FIELD_ORDER:
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TelemetryMessage":
        if not isinstance(data, dict):
            raise SchemaError("payload must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SchemaError(f"unknown fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise SchemaError(str(exc)) from exc


def report(sid, tid, seq, ts, occ, conf, rsn, dist, tilt, pwr) -> TelemetryMessage:
    return TelemetryMessage(REPORT, sid, tid, seq, ts, occ=occ, conf=conf, rsn=rsn,
                            dist=dist, tilt=tilt, pwr=pwr)


def heartbeat(sid, tid, seq, ts, tilt, pwr) -> TelemetryMessage:
    return TelemetryMessage(HEARTBEAT, sid, tid, seq, ts, tilt=tilt, pwr=pwr)


def alarm(sid, tid, seq, ts, tilt, pwr, akind, sev) -> TelemetryMessage:
    return TelemetryMessage(ALARM, sid, tid, seq, ts, tilt=tilt, pwr=pwr,
                            akind=akind, sev=sev)


def _make_crc_table(poly=0x1021):
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ poly) & 0xFFFF if crc & 0x8000 else (crc << 1) & 0xFFFF
        table.append(crc)
    return tuple(table)


_CRC_TABLE = _make_crc_table()


def crc16_ccitt(data: bytes, init: int = 0xFFFF) -> int:
    crc = init
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC_TABLE[((crc >> 8) ^ b) & 0xFF]
    return crc


def encode(msg: TelemetryMessage, budget: int = PAYLOAD_BUDGET) -> bytes:
    payload = json.dumps(msg.to_payload_dict(), separators=(",", ":")).encode("utf-8")
    if len(payload) > budget:
        raise ProtocolError(f"payload is {len(payload)} bytes, exceeds budget of {budget}")
    return (
        MAGIC
        + len(payload).to_bytes(2, "little")
        + payload
        + crc16_ccitt(payload).to_bytes(2, "big")
    )


@dataclass(frozen=True)
class DecodeIssue:
    kind: str
    offset: int
    detail: str = ""


def decode(data: bytes, budget: int = PAYLOAD_BUDGET) -> tuple[list[TelemetryMessage], int, list[DecodeIssue]]:
    """Scan a byte stream for frames.

    Returns (messages, consumed, issues). Bytes are consumed up to the last
    position that cannot belong to a future frame; a partial trailing frame
    stays in the stream. Corrupt frames are skipped with an issue record and
    scanning resynchronizes on the next magic.
    """
    messages: list[TelemetryMessage] = []
    issues: list[DecodeIssue] = []
    i = 0
    n = len(data)
    consumed = 0
    while True:
        idx = data.find(MAGIC, i)
        if idx == -1:
            # Trailing garbage; keep a lone final 0xA5 as a possible magic start.
            end = n
            if n > i and data[n - 1] == MAGIC[0]:
                end = n - 1
            if end > i:
                issues.append(DecodeIssue(BAD_MAGIC, i, "no frame marker in garbage"))
            consumed = end
            break
        if idx > i:
            issues.append(DecodeIssue(BAD_MAGIC, i, "skipped bytes before frame marker"))
        if idx + 4 > n:
            consumed = idx
            break
        length = int.from_bytes(data[idx + 2:idx + 4], "little")
        if length > budget:
            # Not a plausible frame; treat the marker as a false sync.
            issues.append(DecodeIssue(BAD_MAGIC, idx, f"implausible length {length}"))
            i = idx + 2
            consumed = i
            continue
        total = 4 + length + 2
        if idx + total > n:
            consumed = idx
            break
        payload = data[idx + 4:idx + 4 + length]
        crc_recv = int.from_bytes(data[idx + 4 + length:idx + total], "big")
        if crc16_ccitt(payload) != crc_recv:
            issues.append(DecodeIssue(CRC_MISMATCH, idx, "crc check failed"))
            i = idx + 2
            consumed = i
            continue
        try:
            obj = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            issues.append(DecodeIssue(MALFORMED_JSON, idx, str(exc)))
            i = idx + total
            consumed = i
            continue
        try:
            if not isinstance(obj, dict):
                raise SchemaError("payload must be a JSON object")
            messages.append(TelemetryMessage.from_dict(obj))
        except SchemaError as exc:
            issues.append(DecodeIssue(SCHEMA_VIOLATION, idx, str(exc)))
        i = idx + total
        consumed = i
    return messages, consumed, issues


class FrameDecoder:
    """Stateful wrapper for incremental delivery (serial chunks, TCP, ...)."""

    def __init__(self, budget: int = PAYLOAD_BUDGET):
        self.budget = budget
        self._buf = bytearray()

    def push(self, chunk: bytes) -> tuple[list[TelemetryMessage], list[DecodeIssue]]:
        self._buf.extend(chunk)
        messages, consumed, issues = decode(bytes(self._buf), self.budget)
        del self._buf[:consumed]
        return messages, issues

    @property
    def pending(self) -> int:
        return len(self._buf)
