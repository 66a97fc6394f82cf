"""Edge fusion node: infrared trigger, visual confirmation, inertial fallback.

Occupancy state machine, asymmetric by design: the cheap infrared stage runs
on every wakeup and gates the expensive camera stage; the inertial stage
breaks ties when vision cannot confirm what the ranger insists is there.

Transition sketch (full mode):

    Vacant     --rising IR edge-------------------> Sensing (detector starts)
    Sensing    --vehicle seen---------------------> OccupiedVisual
    Sensing    --miss + impact in lookback + IR----> OccupiedCollision
    Sensing    --miss + IR released---------------> Vacant
    Sensing    --K consecutive misses, IR held----> Vacant (+ obstructed alarm)
    Occupied*  --M consecutive polls w/ IR released
                 and no vehicle seen--------------> Vacant

Sensing occupies real time: the verdict lands simulated_latency_ms after the
detector is started and the power ledger is charged for that window.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

from . import protocol
from .detection import (
    ConfidenceProfile,
    DetectorConfig,
    SceneTruth,
    SpaceRoi,
    SyntheticDetector,
    VisionVerdict,
    run_pipeline,
)
from .inertial import (
    IMPACT,
    TILT_ALARM_OFF,
    TILT_ALARM_ON,
    AccelSample,
    InertialState,
    impact_within,
    ingest_sample,
)
from .ir import (
    RISING,
    WIDE_CALIBRATION,
    IrCalibration,
    IrFilterState,
    IrTrigger,
    apply_critical_bias,
    smooth,
    update_trigger,
    voltage_to_distance,
)
from .power import CAMERA, INFERENCE, PowerLedger, PowerModel


class OccupancyState(enum.Enum):
    VACANT = "vacant"
    SENSING = "sensing"
    OCCUPIED_VISUAL = "occupied_visual"
    OCCUPIED_COLLISION = "occupied_collision"
    OCCUPIED_IR = "occupied_ir"


OCCUPIED_STATES = (
    OccupancyState.OCCUPIED_VISUAL,
    OccupancyState.OCCUPIED_COLLISION,
    OccupancyState.OCCUPIED_IR,
)

_REASON_FOR_STATE = {
    OccupancyState.VACANT: "none",
    OccupancyState.SENSING: "none",
    OccupancyState.OCCUPIED_VISUAL: "visual",
    OccupancyState.OCCUPIED_COLLISION: "collision",
    OccupancyState.OCCUPIED_IR: "ir",
}

MODE_FULL = "full"
MODE_VISION_ONLY = "vision_only"
MODE_NO_INERTIAL = "no_inertial"
MODE_IR_ONLY = "ir_only"
MODES = (MODE_FULL, MODE_VISION_ONLY, MODE_NO_INERTIAL, MODE_IR_ONLY)


class NodeConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NodeConfig:
    space_id: str
    terminal_id: str
    roi: SpaceRoi = SpaceRoi(100.0, 100.0, 200.0, 160.0)
    mode: str = MODE_FULL
    vacant_poll_ms: int = 5_000
    occupied_poll_ms: int = 10_000
    max_failed_confirms: int = 3
    vacate_polls: int = 2
    impact_lookback_ms: int = 10_000
    tilt_alarm_interval_ms: int = 60_000
    heartbeat_interval_ms: int = 30_000
    occupancy_conf_threshold: float = 0.25
    poll_reruns_vision: bool = True
    critical_bias_enabled: bool = True
    critical_band_cm: float = 5.0
    critical_bias_cm: float = 2.0
    trigger_threshold_cm: float = 80.0
    release_threshold_cm: float = 90.0
    window_size: int = 5
    slew_limit_cm: float = 50.0
    calibration: IrCalibration = WIDE_CALIBRATION
    detector: DetectorConfig = DetectorConfig()
    profile: ConfidenceProfile = ConfidenceProfile()
    impact_threshold_g: float = 1.5
    tilt_alarm_threshold_deg: float = 25.0
    power: PowerModel = PowerModel()

    def __post_init__(self):
        if self.mode not in MODES:
            raise NodeConfigError(f"mode must be one of {MODES}")
        if self.vacant_poll_ms <= 0 or self.occupied_poll_ms <= 0:
            raise NodeConfigError("poll periods must be positive")
        if self.max_failed_confirms < 1:
            raise NodeConfigError("max_failed_confirms must be >= 1")
        if self.vacate_polls < 1:
            raise NodeConfigError("vacate_polls must be >= 1")

    @property
    def ir_enabled(self) -> bool:
        return self.mode != MODE_VISION_ONLY

    @property
    def vision_enabled(self) -> bool:
        return self.mode != MODE_IR_ONLY

    @property
    def inertial_fallback_enabled(self) -> bool:
        return self.mode == MODE_FULL


@dataclass(frozen=True)
class SensorFrame:
    """One time-stamped sample bundle delivered to the node."""

    t: int
    ir_voltage: float
    accel: AccelSample | None = None
    scene: SceneTruth = SceneTruth()


@dataclass
class _PendingVerdict:
    ready_t: int
    verdict: VisionVerdict


class SpaceNode:
    """State and behavior of one barrier terminal watching one space."""

    def __init__(self, cfg: NodeConfig, detector=None, start_ms: int = 0):
        self.cfg = cfg
        self.state = OccupancyState.VACANT
        self.filter = IrFilterState(window_size=cfg.window_size, slew_limit_cm=cfg.slew_limit_cm)
        self.trigger = IrTrigger(cfg.trigger_threshold_cm, cfg.release_threshold_cm)
        self.inertial = InertialState(
            impact_threshold_g=cfg.impact_threshold_g,
            tilt_alarm_threshold_deg=cfg.tilt_alarm_threshold_deg,
        )
        self.ledger = PowerLedger(cfg.power, start_ms=start_ms)
        self.detector = detector
        self.seq = 0
        self.failed_confirms = 0
        self.vacate_streak = 0
        self.next_poll_t = start_ms
        self.next_heartbeat_t = start_ms + cfg.heartbeat_interval_ms
        self.pending: _PendingVerdict | None = None
        self.last_conf = 0.0
        self.last_step_t: int | None = None
        self.last_tilt_alarm_t: int | None = None
        self.ir_samples = 0
        self.ir_sample_times: list[int] = []
        self.poll_times: list[int] = []
        self.detector_invocations = 0
        self.detector_times: list[int] = []
        self.dropped_frames = 0

    # -- helpers -----------------------------------------------------------

    @property
    def occupied(self) -> bool:
        return self.state in OCCUPIED_STATES

    def reason(self) -> str:
        return _REASON_FOR_STATE[self.state]

    def next_wakeup(self) -> int:
        candidates = [self.next_poll_t, self.next_heartbeat_t]
        if self.pending is not None:
            candidates.append(self.pending.ready_t)
        return min(candidates)

    def poll_period_ms(self) -> int:
        if self.occupied:
            return self.cfg.occupied_poll_ms
        return self.cfg.vacant_poll_ms

    def schedule_next(self, now: int) -> int:
        return now + self.poll_period_ms()

    def _next_seq(self) -> int:
        self.seq += 1
        return self.seq

    def average_power_w(self) -> float:
        if self.ledger.coverage_end <= self.ledger.start_ms:
            return self.cfg.power.standby_w
        return self.ledger.average_power()

    def build_report(self, now: int) -> protocol.TelemetryMessage:
        return protocol.report(
            sid=self.cfg.space_id,
            tid=self.cfg.terminal_id,
            seq=self._next_seq(),
            ts=now,
            occ=self.occupied,
            conf=min(max(self.last_conf, 0.0), 1.0),
            rsn=self.reason(),
            dist=self.filter.last_smoothed if self.filter.last_smoothed is not None else self.cfg.calibration.max_range_cm,
            tilt=self.inertial.tilt_deg or 0.0,
            pwr=self.average_power_w(),
        )

    def _build_heartbeat(self, now: int) -> protocol.TelemetryMessage:
        return protocol.heartbeat(
            sid=self.cfg.space_id,
            tid=self.cfg.terminal_id,
            seq=self._next_seq(),
            ts=now,
            tilt=self.inertial.tilt_deg or 0.0,
            pwr=self.average_power_w(),
        )

    def _build_alarm(self, now: int, akind: str, sev: str) -> protocol.TelemetryMessage:
        return protocol.alarm(
            sid=self.cfg.space_id,
            tid=self.cfg.terminal_id,
            seq=self._next_seq(),
            ts=now,
            tilt=self.inertial.tilt_deg or 0.0,
            pwr=self.average_power_w(),
            akind=akind,
            sev=sev,
        )

    def _frame_valid(self, now: int, frame: SensorFrame) -> bool:
        if not math.isfinite(frame.ir_voltage):
            return False
        if frame.accel is not None and not all(
            math.isfinite(v) for v in (frame.accel.ax, frame.accel.ay, frame.accel.az)
        ):
            return False
        if self.last_step_t is not None and now < self.last_step_t:
            return False
        return True

    def _start_detection(self, now: int, scene: SceneTruth) -> None:
        boxes = self.detector.detect(scene)
        verdict = run_pipeline(boxes, self.cfg.roi, self.cfg.detector, self.cfg.occupancy_conf_threshold)
        latency = self.cfg.detector.simulated_latency_ms
        self.pending = _PendingVerdict(now + latency, verdict)
        if latency > 0:
            self.ledger.charge(CAMERA, now, now + latency)
            self.ledger.charge(INFERENCE, now, now + latency)
        self.detector_invocations += 1
        self.detector_times.append(now)

    def _transition(self, new_state: OccupancyState, now: int) -> None:
        self.state = new_state
        self.failed_confirms = 0
        self.vacate_streak = 0
        if new_state == OccupancyState.VACANT:
            self.last_conf = 0.0
        # A fresh state starts a fresh polling interval.
        self.next_poll_t = self.schedule_next(now)

    # -- main step ---------------------------------------------------------

    def step(self, now: int, frame: SensorFrame) -> list[protocol.TelemetryMessage]:
        """Process one wakeup; returns the messages to put on the wire."""
        if not self._frame_valid(now, frame):
            self.dropped_frames += 1
            return []
        self.last_step_t = now
        self.ledger.advance(now)
        out: list[protocol.TelemetryMessage] = []
        state_before = self.state

        # Inertial stage first: impacts must be on record before fusion looks.
        inertial_events: set[str] = set()
        if frame.accel is not None:
            inertial_events = ingest_sample(self.inertial, frame.accel)

        # Infrared stage.
        edge = None
        if self.cfg.ir_enabled:
            dist = voltage_to_distance(self.cfg.calibration, frame.ir_voltage, self.filter)
            if self.cfg.critical_bias_enabled:
                dist = apply_critical_bias(
                    dist,
                    self.cfg.trigger_threshold_cm,
                    self.cfg.critical_band_cm,
                    self.cfg.critical_bias_cm,
                )
            smoothed = smooth(self.filter, dist)
            edge = update_trigger(self.trigger, smoothed)
        self.ir_samples += 1
        self.ir_sample_times.append(now)

        is_poll = now >= self.next_poll_t
        if is_poll:
            self.poll_times.append(now)

        # Decide whether the camera stage wakes.
        want_detect = False
        if self.cfg.vision_enabled:
            if self.cfg.ir_enabled and edge == RISING and self.state == OccupancyState.VACANT:
                want_detect = True
            if is_poll:
                if self.cfg.mode == MODE_VISION_ONLY:
                    want_detect = True
                elif self.state == OccupancyState.SENSING:
                    want_detect = True
                elif self.occupied and self.cfg.poll_reruns_vision:
                    want_detect = True
        if want_detect and self.pending is None:
            self._start_detection(now, frame.scene)
            # Only an armed trigger enters the confirmation state; routine
            # vision-only probes stay Vacant until a verdict lands.
            if self.state == OccupancyState.VACANT and edge == RISING:
                self._transition(OccupancyState.SENSING, now)

        # Infrared-only mode decides straight off the trigger.
        if self.cfg.mode == MODE_IR_ONLY:
            if self.state == OccupancyState.VACANT and self.trigger.triggered:
                self._transition(OccupancyState.OCCUPIED_IR, now)
            elif self.state == OccupancyState.OCCUPIED_IR and not self.trigger.triggered:
                self._transition(OccupancyState.VACANT, now)

        # Consume a due verdict.
        if self.pending is not None and now >= self.pending.ready_t:
            verdict = self.pending.verdict
            self.pending = None
            self.last_conf = verdict.best_confidence
            if self.state == OccupancyState.SENSING:
                if verdict.vehicle_present:
                    self._transition(OccupancyState.OCCUPIED_VISUAL, now)
                elif (
                    self.cfg.inertial_fallback_enabled
                    and self.cfg.ir_enabled
                    and self.trigger.triggered
                    and impact_within(self.inertial, now, self.cfg.impact_lookback_ms)
                ):
                    self._transition(OccupancyState.OCCUPIED_COLLISION, now)
                elif self.cfg.ir_enabled and not self.trigger.triggered:
                    # The trigger retracted while we were looking; stand down.
                    self._transition(OccupancyState.VACANT, now)
                elif not self.cfg.ir_enabled:
                    self._transition(OccupancyState.VACANT, now)
                else:
                    self.failed_confirms += 1
                    if self.failed_confirms >= self.cfg.max_failed_confirms:
                        out.append(self._build_alarm(now, "obstructed", "info"))
                        self._transition(OccupancyState.VACANT, now)
            elif self.occupied and self.state != OccupancyState.OCCUPIED_IR:
                ir_released = (not self.cfg.ir_enabled) or (not self.trigger.triggered)
                if ir_released and not verdict.vehicle_present:
                    self.vacate_streak += 1
                    if self.vacate_streak >= self.cfg.vacate_polls:
                        self._transition(OccupancyState.VACANT, now)
                else:
                    self.vacate_streak = 0
            elif (
                self.state == OccupancyState.VACANT
                and self.cfg.mode == MODE_VISION_ONLY
                and verdict.vehicle_present
            ):
                self._transition(OccupancyState.OCCUPIED_VISUAL, now)

        # Tilt alarms go out immediately, with a re-send rate limit while held.
        if TILT_ALARM_ON in inertial_events:
            out.append(self._build_alarm(now, "tilt", "warn"))
            self.last_tilt_alarm_t = now
        elif (
            self.inertial.tilt_alarm_active
            and self.last_tilt_alarm_t is not None
            and now - self.last_tilt_alarm_t >= self.cfg.tilt_alarm_interval_ms
        ):
            out.append(self._build_alarm(now, "tilt", "warn"))
            self.last_tilt_alarm_t = now
        if TILT_ALARM_OFF in inertial_events:
            # Info severity signals the condition cleared.
            out.append(self._build_alarm(now, "tilt", "info"))

        if self.state != state_before:
            out.append(self.build_report(now))
        elif is_poll and self.occupied:
            out.append(self.build_report(now))

        if now >= self.next_heartbeat_t:
            out.append(self._build_heartbeat(now))
            self.next_heartbeat_t = now + self.cfg.heartbeat_interval_ms

        if is_poll and self.next_poll_t <= now:
            # Not already rescheduled by a transition this step.
            self.next_poll_t = self.schedule_next(now)

        return out

    def clone(self) -> "SpaceNode":
        """Cheap structural copy for exhaustive state-space exploration."""
        twin = SpaceNode(self.cfg, detector=self.detector, start_ms=self.ledger.start_ms)
        twin.state = self.state
        twin.filter = IrFilterState(
            window_size=self.cfg.window_size,
            slew_limit_cm=self.cfg.slew_limit_cm,
            window=list(self.filter.window),
            last_smoothed=self.filter.last_smoothed,
        )
        twin.trigger = replace(self.trigger)
        twin.inertial = replace(self.inertial)
        twin.seq = self.seq
        twin.failed_confirms = self.failed_confirms
        twin.vacate_streak = self.vacate_streak
        twin.next_poll_t = self.next_poll_t
        twin.next_heartbeat_t = self.next_heartbeat_t
        if self.pending is not None:
            twin.pending = _PendingVerdict(self.pending.ready_t, self.pending.verdict)
        twin.last_conf = self.last_conf
        twin.last_step_t = self.last_step_t
        twin.last_tilt_alarm_t = self.last_tilt_alarm_t
        twin.ledger = self.ledger  # shared on purpose: exploration ignores power
        return twin
