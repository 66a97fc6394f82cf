"""Line-oriented scenario scripts for the simulator.

Grammar (one directive per line, '#' starts a comment):

    seed 42
    duration 600000
    detector day_mean=0.85 night_mean=0.30 clutter_rate=0.02 ...
    node trigger_cm=80 release_cm=90 mode=full ...
    space s1 roi=10,10,120,100 mode=full [key=value ...]
    at 1000 s1 vehicle_arrive [dist=40] [ramp_ms=3000]
    at 60000 s1 vehicle_depart [ramp_ms=3000]
    at 5000 s1 pedestrian [dist=60] [dwell_ms=1500]
    at 7000 s1 impact [g=3.0]
    at 8000 s1 tilt deg=30
    at 0 s1 light cond=night
    at 0 s1 link_loss p=0.1
    at 0 s1 occlusion state=on

Events may appear in any order; they are sorted by time. Every event must
name a declared space.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .detection import ConfidenceProfile, SpaceRoi

EVENT_KINDS = (
    "vehicle_arrive",
    "vehicle_depart",
    "pedestrian",
    "impact",
    "tilt",
    "light",
    "link_loss",
    "occlusion",
)

_MODES = ("full", "vision_only", "no_inertial", "ir_only")


class ScenarioError(ValueError):
    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class ScenarioEvent:
    t: int
    space_id: str
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SpaceSpec:
    space_id: str
    roi: SpaceRoi
    mode: str = "full"
    overrides: dict = field(default_factory=dict)


@dataclass
class Scenario:
    seed: int = 0
    duration_ms: int = 60_000
    spaces: list = field(default_factory=list)
    events: list = field(default_factory=list)
    profile: ConfidenceProfile = ConfidenceProfile()
    node_overrides: dict = field(default_factory=dict)

    def space_ids(self) -> list[str]:
        return [s.space_id for s in self.spaces]


def _parse_kv(tokens: list[str], line_no: int) -> dict:
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ScenarioError(f"expected key=value, got {tok!r}", line_no)
        key, _, value = tok.partition("=")
        if not key or not value:
            raise ScenarioError(f"expected key=value, got {tok!r}", line_no)
        out[key] = value
    return out


def _num(value: str, line_no: int, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ScenarioError(f"{key} must be numeric, got {value!r}", line_no) from None


def _int(value: str, line_no: int, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ScenarioError(f"{key} must be an integer, got {value!r}", line_no) from None


_EVENT_PARAM_DEFAULTS = {
    "vehicle_arrive": {"dist": 40.0, "ramp_ms": 3000},
    "vehicle_depart": {"ramp_ms": 3000},
    "pedestrian": {"dist": 60.0, "dwell_ms": 1500},
    "impact": {"g": 3.0},
    "tilt": {},
    "light": {},
    "link_loss": {},
    "occlusion": {},
}


def _parse_event(t: int, space_id: str, kind: str, kv: dict, line_no: int) -> ScenarioEvent:
    if kind not in EVENT_KINDS:
        raise ScenarioError(f"unknown event kind {kind!r}", line_no)
    params = dict(_EVENT_PARAM_DEFAULTS[kind])
    for key, raw in kv.items():
        if kind == "vehicle_arrive" and key == "dist":
            params["dist"] = _num(raw, line_no, key)
        elif kind in ("vehicle_arrive", "vehicle_depart") and key == "ramp_ms":
            params["ramp_ms"] = _int(raw, line_no, key)
        elif kind == "pedestrian" and key == "dist":
            params["dist"] = _num(raw, line_no, key)
        elif kind == "pedestrian" and key == "dwell_ms":
            params["dwell_ms"] = _int(raw, line_no, key)
        elif kind == "impact" and key == "g":
            params["g"] = _num(raw, line_no, key)
        elif kind == "tilt" and key == "deg":
            params["deg"] = _num(raw, line_no, key)
        elif kind == "light" and key == "cond":
            if raw not in ("day", "night"):
                raise ScenarioError(f"light cond must be day or night, got {raw!r}", line_no)
            params["cond"] = raw
        elif kind == "link_loss" and key == "p":
            params["p"] = _num(raw, line_no, key)
        elif kind == "occlusion" and key == "state":
            if raw not in ("on", "off"):
                raise ScenarioError(f"occlusion state must be on or off, got {raw!r}", line_no)
            params["state"] = raw
        else:
            raise ScenarioError(f"{kind} does not take parameter {key!r}", line_no)
    if kind == "tilt" and "deg" not in params:
        raise ScenarioError("tilt requires deg=<degrees>", line_no)
    if kind == "light" and "cond" not in params:
        raise ScenarioError("light requires cond=day|night", line_no)
    if kind == "link_loss" and "p" not in params:
        raise ScenarioError("link_loss requires p=<probability>", line_no)
    if kind == "occlusion" and "state" not in params:
        raise ScenarioError("occlusion requires state=on|off", line_no)
    if kind == "tilt" and not 0.0 <= params["deg"] <= 180.0:
        raise ScenarioError("tilt deg must be in [0, 180]", line_no)
    if kind == "link_loss" and not 0.0 <= params["p"] <= 1.0:
        raise ScenarioError("link_loss p must be in [0, 1]", line_no)
    if kind == "impact" and params["g"] <= 0:
        raise ScenarioError("impact g must be positive", line_no)
    if kind == "pedestrian" and params["dwell_ms"] <= 0:
        raise ScenarioError("pedestrian dwell_ms must be positive", line_no)
    if kind in ("vehicle_arrive", "vehicle_depart") and params["ramp_ms"] < 0:
        raise ScenarioError("ramp_ms must be >= 0", line_no)
    return ScenarioEvent(t=t, space_id=space_id, kind=kind, params=params)


_PROFILE_KEYS = {
    "day_mean", "day_sd", "night_mean", "night_sd",
    "clutter_rate", "clutter_mean", "clutter_sd",
}


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; raises ScenarioError with the offending line."""
    scn = Scenario()
    seen_spaces: dict[str, SpaceSpec] = {}
    events: list[ScenarioEvent] = []
    profile_kv: dict = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        head = tokens[0]
        if head == "seed":
            if len(tokens) != 2:
                raise ScenarioError("seed takes exactly one value", line_no)
            scn.seed = _int(tokens[1], line_no, "seed")
        elif head == "duration":
            if len(tokens) != 2:
                raise ScenarioError("duration takes exactly one value", line_no)
            scn.duration_ms = _int(tokens[1], line_no, "duration")
            if scn.duration_ms <= 0:
                raise ScenarioError("duration must be positive", line_no)
        elif head == "detector":
            kv = _parse_kv(tokens[1:], line_no)
            for key, raw in kv.items():
                if key not in _PROFILE_KEYS:
                    raise ScenarioError(f"unknown detector parameter {key!r}", line_no)
                profile_kv[key] = _num(raw, line_no, key)
        elif head == "node":
            scn.node_overrides.update(_parse_kv(tokens[1:], line_no))
        elif head == "space":
            if len(tokens) < 2:
                raise ScenarioError("space requires an id", line_no)
            space_id = tokens[1]
            if space_id in seen_spaces:
                raise ScenarioError(f"space {space_id!r} declared twice", line_no)
            kv = _parse_kv(tokens[2:], line_no)
            if "roi" not in kv:
                raise ScenarioError("space requires roi=x,y,w,h", line_no)
            parts = kv.pop("roi").split(",")
            if len(parts) != 4:
                raise ScenarioError("roi must be x,y,w,h", line_no)
            try:
                x, y, w, h = (float(p) for p in parts)
            except ValueError:
                raise ScenarioError("roi components must be numeric", line_no) from None
            if w <= 0 or h <= 0:
                raise ScenarioError("roi width and height must be positive", line_no)
            mode = kv.pop("mode", "full")
            if mode not in _MODES:
                raise ScenarioError(f"mode must be one of {_MODES}", line_no)
            spec = SpaceSpec(space_id, SpaceRoi(x, y, w, h), mode=mode, overrides=kv)
            seen_spaces[space_id] = spec
            scn.spaces.append(spec)
        elif head == "at":
            if len(tokens) < 4:
                raise ScenarioError("at requires: at <ms> <space> <kind> [k=v ...]", line_no)
            t = _int(tokens[1], line_no, "time")
            if t < 0:
                raise ScenarioError("event time must be >= 0", line_no)
            space_id = tokens[2]
            if space_id not in seen_spaces:
                raise ScenarioError(f"event references undeclared space {space_id!r}", line_no)
            kind = tokens[3]
            kv = _parse_kv(tokens[4:], line_no)
            events.append(_parse_event(t, space_id, kind, kv, line_no))
        else:
            raise ScenarioError(f"unknown directive {head!r}", line_no)
    if not scn.spaces:
        raise ScenarioError("scenario declares no spaces")
    events.sort(key=lambda e: (e.t, e.space_id, e.kind))
    scn.events = events
    if profile_kv:
        scn.profile = ConfidenceProfile(**profile_kv)
    return scn


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario(fh.read())
