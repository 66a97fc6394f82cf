"""Accelerometer ingest: tilt estimate, impact detection, tilt alarm edges.

Tilt is the angle between the measured gravity vector and the device z axis,
trusted only while the magnitude sits in the quasi-static band. Impacts are
magnitude excursions well past 1 g and are remembered for a lookback window
so a later fusion decision can consult them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

IMPACT = "impact"
TILT_ALARM_ON = "tilt_alarm_on"
TILT_ALARM_OFF = "tilt_alarm_off"


@dataclass(frozen=True)
class AccelSample:
    t: int
    ax: float
    ay: float
    az: float

    def magnitude(self) -> float:
        return math.sqrt(self.ax * self.ax + self.ay * self.ay + self.az * self.az)


@dataclass
class InertialState:
    impact_threshold_g: float = 1.5
    tilt_alarm_threshold_deg: float = 25.0
    quasi_static_low_g: float = 0.8
    quasi_static_high_g: float = 1.2
    tilt_deg: float | None = None
    last_impact_t: int | None = None
    tilt_alarm_active: bool = False


def ingest_sample(state: InertialState, sample: AccelSample) -> set[str]:
    """Feed one sample; returns the set of events it produced.

    Events: "impact", "tilt_alarm_on", "tilt_alarm_off". A zero-magnitude
    sample carries no gravity direction and is ignored outright.
    """
    mag = sample.magnitude()
    if mag == 0.0:
        return set()
    events: set[str] = set()
    if abs(mag - 1.0) > state.impact_threshold_g:
        state.last_impact_t = sample.t
        events.add(IMPACT)
    if state.quasi_static_low_g <= mag <= state.quasi_static_high_g:
        cos_t = min(max(sample.az / mag, -1.0), 1.0)
        state.tilt_deg = math.degrees(math.acos(cos_t))
        if state.tilt_deg > state.tilt_alarm_threshold_deg and not state.tilt_alarm_active:
            state.tilt_alarm_active = True
            events.add(TILT_ALARM_ON)
        elif state.tilt_deg <= state.tilt_alarm_threshold_deg and state.tilt_alarm_active:
            state.tilt_alarm_active = False
            events.add(TILT_ALARM_OFF)
    return events


def impact_within(state: InertialState, now: int, lookback_ms: int = 10_000) -> bool:
    """True when an impact was recorded at most lookback_ms before now."""
    if state.last_impact_t is None:
        return False
    return 0 <= now - state.last_impact_t <= lookback_ms
