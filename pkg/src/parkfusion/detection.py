"""Post-network vision pipeline and the synthetic detector behind it.

Everything downstream of the (simulated) network forward pass lives here:
confidence filtering, greedy per-class NMS, and the region-of-interest
occupancy decision. The synthetic detector stands in for a real single-class
vehicle model and draws its confidences from configurable per-lighting
distributions so day/night behavior can be studied deterministically.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

VEHICLE_CLASS = 0

DAY = "day"
NIGHT = "night"


class DetectionConfigError(ValueError):
    pass


def head_filters(classes: int) -> int:
    """Output filter count of a 3-anchor detection head for `classes` classes."""
    if classes < 1:
        raise DetectionConfigError("classes must be >= 1")
    return (classes + 5) * 3


@dataclass(frozen=True)
class DetBox:
    """Axis-aligned box: top-left corner plus width/height, in pixels."""

    x: float
    y: float
    w: float
    h: float
    confidence: float
    class_id: int = VEHICLE_CLASS

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def area(self) -> float:
        return max(self.w, 0.0) * max(self.h, 0.0)


@dataclass(frozen=True)
class SpaceRoi:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise DetectionConfigError("zone needs positive width and height")

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px <= self.x + self.w and self.y <= py <= self.y + self.h


@dataclass(frozen=True)
class VisionVerdict:
    vehicle_present: bool
    best_confidence: float
    boxes_kept: int


@dataclass(frozen=True)
class DetectorConfig:
    input_size: int = 416
    classes: int = 1
    conf_threshold: float = 0.25
    nms_threshold: float = 0.50
    simulated_latency_ms: int = 700

    def __post_init__(self):
        if self.classes < 1:
            raise DetectionConfigError("classes must be >= 1")
        if not 0.0 <= self.conf_threshold <= 1.0:
            raise DetectionConfigError("conf_threshold must be in [0, 1]")
        if not 0.0 <= self.nms_threshold <= 1.0:
            raise DetectionConfigError("nms_threshold must be in [0, 1]")
        if self.input_size < 1:
            raise DetectionConfigError("input_size must be positive")
        if self.simulated_latency_ms < 0:
            raise DetectionConfigError("simulated_latency_ms must be >= 0")


def filter_confidence(boxes: list[DetBox], threshold: float) -> list[DetBox]:
    # Inclusive: a box exactly at the threshold survives.
    return [b for b in boxes if b.confidence >= threshold]


def iou(a: DetBox, b: DetBox) -> float:
    ix = max(a.x, b.x)
    iy = max(a.y, b.y)
    ix2 = min(a.x + a.w, b.x + b.w)
    iy2 = min(a.y + a.h, b.y + b.h)
    iw = max(ix2 - ix, 0.0)
    ih = max(iy2 - iy, 0.0)
    inter = iw * ih
    union = a.area() + b.area() - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def nms_greedy(boxes: list[DetBox], iou_threshold: float) -> list[DetBox]:
    """Greedy per-class NMS; ties in confidence resolve by input order."""
    order = sorted(range(len(boxes)), key=lambda i: (-boxes[i].confidence, i))
    kept: list[DetBox] = []
    for i in order:
        cand = boxes[i]
        clash = any(
            k.class_id == cand.class_id and iou(k, cand) > iou_threshold for k in kept
        )
        if not clash:
            kept.append(cand)
    return kept


def decide_occupancy(
    kept: list[DetBox], roi: SpaceRoi, conf_threshold: float = 0.25
) -> VisionVerdict:
    """Occupancy verdict: any vehicle box whose center falls inside the ROI.

    best_confidence reports the best vehicle-in-ROI confidence even when it
    sits below the decision threshold, so fallback logic can still see how
    close the detector came.
    """
    best = 0.0
    present = False
    for b in kept:
        if b.class_id != VEHICLE_CLASS:
            continue
        cx, cy = b.center()
        if not roi.contains(cx, cy):
            continue
        best = max(best, b.confidence)
        if b.confidence >= conf_threshold:
            present = True
    return VisionVerdict(vehicle_present=present, best_confidence=best, boxes_kept=len(kept))


@dataclass(frozen=True)
class SceneTruth:
    """Ground-truth scene descriptor handed to the synthetic detector."""

    vehicle_present: bool = False
    light: str = DAY
    occluded: bool = False


@dataclass(frozen=True)
class ConfidenceProfile:
    """Per-condition confidence distributions for the synthetic detector."""

    day_mean: float = 0.85
    day_sd: float = 0.05
    night_mean: float = 0.30
    night_sd: float = 0.10
    clutter_rate: float = 0.02
    clutter_mean: float = 0.15
    clutter_sd: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.clutter_rate <= 1.0:
            raise DetectionConfigError("clutter_rate must be in [0, 1]")


@dataclass
class SyntheticDetector:
    """Deterministic stand-in for the vehicle detector.

    Given the same seed and scene sequence it returns the same boxes. A
    visible vehicle yields one box roughly centered in the ROI with a
    confidence drawn from the lighting-appropriate distribution; occlusion
    suppresses the vehicle box entirely. Independent low-confidence clutter
    boxes appear at the configured per-frame rate.
    """

    config: DetectorConfig
    profile: ConfidenceProfile
    roi: SpaceRoi
    rng: random.Random = field(default_factory=lambda: random.Random(0))

    def _clipped_gauss(self, mean: float, sd: float) -> float:
        return min(max(self.rng.gauss(mean, sd), 0.0), 1.0)

    def detect(self, scene: SceneTruth) -> list[DetBox]:
        boxes: list[DetBox] = []
        if scene.vehicle_present and not scene.occluded:
            if scene.light == NIGHT:
                conf = self._clipped_gauss(self.profile.night_mean, self.profile.night_sd)
            else:
                conf = self._clipped_gauss(self.profile.day_mean, self.profile.day_sd)
            w = self.roi.w * 0.6
            h = self.roi.h * 0.6
            jx = self.rng.uniform(-0.05, 0.05) * self.roi.w
            jy = self.rng.uniform(-0.05, 0.05) * self.roi.h
            cx = self.roi.x + self.roi.w / 2.0 + jx
            cy = self.roi.y + self.roi.h / 2.0 + jy
            boxes.append(DetBox(cx - w / 2.0, cy - h / 2.0, w, h, conf, VEHICLE_CLASS))
        if self.rng.random() < self.profile.clutter_rate:
            size = self.config.input_size
            w = self.rng.uniform(0.05, 0.25) * size
            h = self.rng.uniform(0.05, 0.25) * size
            x = self.rng.uniform(0.0, size - w)
            y = self.rng.uniform(0.0, size - h)
            conf = self._clipped_gauss(self.profile.clutter_mean, self.profile.clutter_sd)
            boxes.append(DetBox(x, y, w, h, conf, VEHICLE_CLASS))
        return boxes


def run_pipeline(
    boxes: list[DetBox],
    roi: SpaceRoi,
    config: DetectorConfig,
    occupancy_conf_threshold: float = 0.25,
) -> VisionVerdict:
    """Confidence filter -> NMS -> ROI occupancy decision."""
    kept = nms_greedy(filter_confidence(boxes, config.conf_threshold), config.nms_threshold)
    return decide_occupancy(kept, roi, occupancy_conf_threshold)
