"""Analog infrared ranger: calibration lookup, smoothing, hysteresis trigger.

The ranger's voltage response is non-monotonic: voltage rises as an object
approaches, peaks at a known distance, then falls again inside the dead zone.
A single voltage therefore maps to up to two candidate distances (one per
branch). Disambiguation uses the last smoothed distance: readings do not
teleport across the peak between consecutive samples.
"""

from __future__ import annotations

import statistics
from collections import deque
from dataclasses import dataclass, field


class CalibrationError(ValueError):
    pass


RISING = "rising"
FALLING = "falling"


@dataclass(frozen=True)
class IrCalibration:
    """Two-branch voltage/distance table.

    Both branches are (volts, cm) points sorted by ascending distance. The far
    branch covers distances at or beyond the response peak (voltage strictly
    decreasing with distance), the near branch covers the dead zone below the
    peak (voltage strictly increasing with distance). The branches must meet
    at the peak point.
    """

    far_branch: tuple[tuple[float, float], ...]
    near_branch: tuple[tuple[float, float], ...]
    max_range_cm: float

    def __post_init__(self):
        far = tuple(tuple(p) for p in self.far_branch)
        near = tuple(tuple(p) for p in self.near_branch)
        object.__setattr__(self, "far_branch", far)
        object.__setattr__(self, "near_branch", near)
        if len(far) < 2 or len(near) < 2:
            raise CalibrationError("each branch needs at least two points")
        for branch, name in ((far, "far"), (near, "near")):
            dists = [d for _, d in branch]
            if any(b <= a for a, b in zip(dists, dists[1:])):
                raise CalibrationError(f"{name} branch distances must strictly ascend")
        far_volts = [v for v, _ in far]
        if any(b >= a for a, b in zip(far_volts, far_volts[1:])):
            raise CalibrationError("far branch voltage must strictly decrease with distance")
        near_volts = [v for v, _ in near]
        if any(b <= a for a, b in zip(near_volts, near_volts[1:])):
            raise CalibrationError("near branch voltage must strictly increase with distance")
        if far[0] != near[-1]:
            raise CalibrationError("branches must share the peak point")
        if self.max_range_cm < far[-1][1]:
            raise CalibrationError("max_range_cm below far branch coverage")

    @property
    def peak_voltage(self) -> float:
        return self.far_branch[0][0]

    @property
    def peak_distance_cm(self) -> float:
        return self.far_branch[0][1]

    @property
    def min_voltage(self) -> float:
        return min(self.far_branch[-1][0], self.near_branch[0][0])


# Values mimic a common analog IR ranger; configuration, not constants.
DEFAULT_CALIBRATION = IrCalibration(
    far_branch=((3.1, 6.0), (2.3, 10.0), (1.3, 20.0), (0.75, 40.0), (0.4, 80.0)),
    near_branch=((1.0, 0.0), (2.0, 3.0), (3.1, 6.0)),
    max_range_cm=80.0,
)

# Node deployments use a wider far branch so the release threshold (90 cm by
# default) is inside the decodable range; the short table above tops out at
# the sensor datasheet's 80 cm.
WIDE_CALIBRATION = IrCalibration(
    far_branch=(
        (3.1, 6.0),
        (2.3, 10.0),
        (1.3, 20.0),
        (0.75, 40.0),
        (0.4, 80.0),
        (0.25, 120.0),
    ),
    near_branch=((1.0, 0.0), (2.0, 3.0), (3.1, 6.0)),
    max_range_cm=120.0,
)


def _interp_by_voltage(branch: tuple[tuple[float, float], ...], v: float) -> float:
    # Branch voltage is monotone; clamp outside the covered span.
    lo = min(branch[0][0], branch[-1][0])
    hi = max(branch[0][0], branch[-1][0])
    v = min(max(v, lo), hi)
    pts = sorted(branch, key=lambda p: p[0])
    for (v0, d0), (v1, d1) in zip(pts, pts[1:]):
        if v0 <= v <= v1:
            if v1 == v0:
                return d0
            return d0 + (v - v0) * (d1 - d0) / (v1 - v0)
    return pts[-1][1]


def branch_candidates(calib: IrCalibration, v: float) -> tuple[float, float | None]:
    """Return (far_cm, near_cm) candidate distances for a voltage.

    The far candidate always exists: voltages beyond the table clamp to the
    peak distance on the high side and to the far-branch end on the low side.
    The dead zone cannot produce a voltage below its own floor, so the near
    candidate is None there instead of a clamped guess.
    """
    far_d = _interp_by_voltage(calib.far_branch, v)
    if v < calib.near_branch[0][0]:
        return far_d, None
    return far_d, _interp_by_voltage(calib.near_branch, v)


@dataclass
class IrFilterState:
    """Sliding median window with a per-reading slew clamp."""

    window_size: int = 5
    slew_limit_cm: float = 50.0
    window: deque = field(default_factory=deque)
    last_smoothed: float | None = None

    def __post_init__(self):
        if self.window_size < 1:
            raise CalibrationError("window_size must be >= 1")
        if self.slew_limit_cm <= 0:
            raise CalibrationError("slew_limit_cm must be positive")
        self.window = deque(self.window, maxlen=self.window_size)


def voltage_to_distance(calib: IrCalibration, v: float, state: IrFilterState) -> float:
    """Corrected distance for a raw voltage.

    Out-of-range voltages clamp to the nearest table endpoint. When both
    branches offer a candidate, the one closer to the last smoothed distance
    wins; without history the far branch wins (objects enter from far away).
    """
    far_d, near_d = branch_candidates(calib, v)
    if near_d is None or state.last_smoothed is None:
        return far_d
    if abs(near_d - state.last_smoothed) < abs(far_d - state.last_smoothed):
        return near_d
    return far_d


def distance_to_voltage(calib: IrCalibration, d: float) -> float:
    """Forward model used by simulations: distance to expected voltage."""
    if d < 0:
        raise CalibrationError("distance must be non-negative")
    if d >= calib.peak_distance_cm:
        pts = calib.far_branch
    else:
        pts = calib.near_branch
    lo, hi = pts[0][1], pts[-1][1]
    d = min(max(d, lo), hi)
    for (v0, d0), (v1, d1) in zip(pts, pts[1:]):
        if d0 <= d <= d1:
            if d1 == d0:
                return v0
            return v0 + (d - d0) * (v1 - v0) / (d1 - d0)
    return pts[-1][0]


def smooth(state: IrFilterState, raw_cm: float) -> float:
    """Clamp a raw reading against the slew limit, then window-median it."""
    if state.last_smoothed is not None:
        lo = state.last_smoothed - state.slew_limit_cm
        hi = state.last_smoothed + state.slew_limit_cm
        raw_cm = min(max(raw_cm, lo), hi)
    state.window.append(raw_cm)
    med = float(statistics.median(state.window))
    state.last_smoothed = med
    return med


def apply_critical_bias(
    distance_cm: float,
    trigger_threshold_cm: float,
    band_cm: float = 5.0,
    bias_cm: float = 2.0,
) -> float:
    """Bias borderline readings toward the triggered side of the threshold.

    Within +/- band_cm of the trigger threshold the corrected distance is
    pulled bias_cm closer, so marginal returns wake the confirmation stage
    instead of flickering below it.
    """
    if abs(distance_cm - trigger_threshold_cm) <= band_cm:
        return distance_cm - bias_cm
    return distance_cm


@dataclass
class IrTrigger:
    """Hysteresis comparator on the smoothed distance."""

    trigger_threshold_cm: float = 80.0
    release_threshold_cm: float = 90.0
    triggered: bool = False

    def __post_init__(self):
        if self.release_threshold_cm <= self.trigger_threshold_cm:
            raise CalibrationError("release threshold must exceed trigger threshold")


def update_trigger(trig: IrTrigger, smoothed_cm: float) -> str | None:
    """Advance the trigger; returns "rising", "falling", or None."""
    if not trig.triggered and smoothed_cm < trig.trigger_threshold_cm:
        trig.triggered = True
        return RISING
    if trig.triggered and smoothed_cm >= trig.release_threshold_cm:
        trig.triggered = False
        return FALLING
    return None
