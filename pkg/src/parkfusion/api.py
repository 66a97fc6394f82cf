"""HTTP JSON API over the cloud service (versioned under /api/v1).

Endpoints:
    POST /api/v1/spaces               register a space {space_id, terminal_id}
    POST /api/v1/reports              decoded report or alarm message body
    POST /api/v1/heartbeats           decoded heartbeat message body
    GET  /api/v1/spaces               space summaries
    GET  /api/v1/spaces/{id}          one space
    GET  /api/v1/alarms[?state=open]  alarms
    POST /api/v1/alarms/{id}/ack      {operator}
    POST /api/v1/alarms/{id}/resolve  {operator}
    GET  /api/v1/orders[?space=s1]    orders
    GET  /api/v1/nodes                node health
    GET  /api/v1/metrics              aggregate metrics
    POST /api/v1/sweep                run one health/window sweep now

The server clock is authoritative for receive times; payload timestamps are
display metadata only.
"""

from __future__ import annotations

import json
import logging
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from . import protocol
from .cloud import (
    AlarmTransitionError,
    CloudError,
    CloudService,
    RegistrationError,
    UnknownEntityError,
)

logger = logging.getLogger(__name__)

API_PREFIX = "/api/v1"


def wall_clock_ms() -> int:
    return int(time.time() * 1000)


class CloudApiServer:
    """Threaded HTTP front end; safe to run inside tests on port 0."""

    def __init__(self, service: CloudService, host: str = "127.0.0.1", port: int = 0,
                 clock=wall_clock_ms):
        self.service = service
        self.clock = clock
        handler = _make_handler(self)
        self._httpd = ThreadingHTTPServer((host, port), handler)
        self._thread: threading.Thread | None = None
        self._sweeper: threading.Thread | None = None
        self._stop = threading.Event()

    @property
    def host(self) -> str:
        return self._httpd.server_address[0]

    @property
    def port(self) -> int:
        return self._httpd.server_address[1]

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self, sweep_period_s: float | None = None) -> None:
        # short poll interval so stop() returns promptly
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True
        )
        self._thread.start()
        if sweep_period_s:
            self._sweeper = threading.Thread(
                target=self._sweep_loop, args=(sweep_period_s,), daemon=True
            )
            self._sweeper.start()

    def _sweep_loop(self, period_s: float) -> None:
        while not self._stop.wait(period_s):
            try:
                self.service.sweep(self.clock())
            except Exception:
                logger.exception("sweep failed")

    def stop(self) -> None:
        self._stop.set()
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def serve_forever(self) -> None:
        self._httpd.serve_forever(poll_interval=0.05)


_ALARM_ACTION_RE = re.compile(r"^/alarms/([^/]+)/(ack|resolve)$")
_SPACE_RE = re.compile(r"^/spaces/([^/]+)$")


def _make_handler(server: CloudApiServer):
    service = server.service
    clock = server.clock

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):
            logger.debug("http: " + fmt, *args)

        def _send(self, code: int, body: dict | list) -> None:
            data = json.dumps(body).encode("utf-8")
            self.send_response(code)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            # the operator console may be served from another origin
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(data)

        def do_OPTIONS(self):
            # CORS preflight for cross-origin POSTs with a JSON body
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Max-Age", "600")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def _error(self, code: int, message: str) -> None:
            self._send(code, {"error": message})

        def _read_json(self):
            length = int(self.headers.get("Content-Length") or 0)
            raw = self.rfile.read(length) if length else b""
            if not raw:
                return None
            return json.loads(raw.decode("utf-8"))

        def _route(self) -> tuple[str, dict]:
            parsed = urlparse(self.path)
            if not parsed.path.startswith(API_PREFIX):
                return "", {}
            query = {k: v[-1] for k, v in parse_qs(parsed.query).items()}
            return parsed.path[len(API_PREFIX):] or "/", query

        def do_GET(self):
            path, query = self._route()
            if not path:
                return self._error(404, "unknown path")
            try:
                if path == "/spaces":
                    return self._send(200, service.list_spaces())
                m = _SPACE_RE.match(path)
                if m:
                    return self._send(200, service.space_summary(m.group(1)))
                if path == "/alarms":
                    return self._send(200, service.list_alarms(query.get("state")))
                if path == "/orders":
                    return self._send(200, service.list_orders(query.get("space")))
                if path == "/nodes":
                    return self._send(200, service.list_nodes())
                if path == "/metrics":
                    return self._send(200, service.metrics())
                return self._error(404, "unknown path")
            except RegistrationError as exc:
                return self._error(404, str(exc))
            except CloudError as exc:
                return self._error(400, str(exc))

        def do_POST(self):
            path, _ = self._route()
            if not path:
                return self._error(404, "unknown path")
            try:
                body = self._read_json()
            except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                return self._error(400, f"invalid JSON body: {exc}")
            now = clock()
            try:
                if path == "/spaces":
                    if not isinstance(body, dict) or "space_id" not in body or "terminal_id" not in body:
                        return self._error(400, "body must carry space_id and terminal_id")
                    rec = service.register_space(body["space_id"], body["terminal_id"], now)
                    return self._send(200, {"space_id": rec.space_id, "terminal_id": rec.terminal_id})
                if path in ("/reports", "/heartbeats"):
                    if not isinstance(body, dict):
                        return self._error(400, "body must be a message object")
                    try:
                        msg = protocol.TelemetryMessage.from_dict(body)
                    except protocol.SchemaError as exc:
                        return self._error(400, str(exc))
                    if path == "/heartbeats" and msg.type != protocol.HEARTBEAT:
                        return self._error(400, "endpoint accepts heartbeat messages only")
                    if path == "/reports" and msg.type == protocol.HEARTBEAT:
                        return self._error(400, "heartbeats go to /heartbeats")
                    result = service.submit(msg, now)
                    return self._send(200, result)
                m = _ALARM_ACTION_RE.match(path)
                if m:
                    alarm_id, action = m.group(1), m.group(2)
                    operator = (body or {}).get("operator", "")
                    if not operator:
                        return self._error(400, "operator is required")
                    if action == "ack":
                        alarm = service.ack_alarm(alarm_id, operator, now)
                    else:
                        alarm = service.resolve_alarm(alarm_id, operator, now)
                    return self._send(200, service._alarm_dict(alarm))
                if path == "/sweep":
                    effects = service.sweep(now)
                    return self._send(200, {"effects": effects})
                return self._error(404, "unknown path")
            except (RegistrationError, UnknownEntityError) as exc:
                return self._error(404, str(exc))
            except AlarmTransitionError as exc:
                return self._error(409, str(exc))
            except CloudError as exc:
                return self._error(400, str(exc))

    return Handler
