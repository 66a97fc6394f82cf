"""Hierarchical power accounting for a duty-cycled sensing node.

The node always pays a base controller draw plus the infrared stage; the
camera and the inference stage are switched on only for the windows the
ledger is explicitly charged for. Average power over an interval is the
time-weighted sum of whichever components were active.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

CAMERA = "camera"
INFERENCE = "inference"

_CHARGEABLE = (CAMERA, INFERENCE)


class PowerAccountingError(ValueError):
    pass


@dataclass(frozen=True)
class PowerModel:
    """Component draws in watts.

    always_on_w is the reference draw of a node that never duty-cycles; it is
    a measured whole-system figure, not the sum of the component draws, and
    the two deliberately disagree by the glue losses.
    """

    base_w: float = 0.8
    ir_standby_w: float = 0.12
    camera_w: float = 1.2
    inference_w: float = 1.8
    always_on_w: float = 4.02

    def __post_init__(self):
        for name in ("base_w", "ir_standby_w", "camera_w", "inference_w", "always_on_w"):
            if getattr(self, name) < 0:
                raise PowerAccountingError(f"{name} must be non-negative")

    @property
    def standby_w(self) -> float:
        return self.base_w + self.ir_standby_w

    @property
    def full_active_w(self) -> float:
        return self.base_w + self.ir_standby_w + self.camera_w + self.inference_w

    def component_w(self, component: str) -> float:
        if component == CAMERA:
            return self.camera_w
        if component == INFERENCE:
            return self.inference_w
        raise PowerAccountingError(f"unknown component {component!r}")


@dataclass
class PowerLedger:
    """Time-ordered record of component activity starting at start_ms.

    Charges for a component must not move backwards in time; overlapping
    charges for the same component are merged. Coverage extends to the
    latest of advance() and the furthest charge, and averages may only be
    taken inside covered time.
    """

    model: PowerModel
    start_ms: int = 0
    _intervals: dict = field(default_factory=dict)
    _frontier: dict = field(default_factory=dict)
    _coverage_end: int = field(default=0)

    def __post_init__(self):
        self._coverage_end = self.start_ms
        for c in _CHARGEABLE:
            self._intervals.setdefault(c, [])
            self._frontier.setdefault(c, self.start_ms)

    @property
    def coverage_end(self) -> int:
        return self._coverage_end

    def advance(self, now_ms: int) -> None:
        """Extend coverage to now_ms (standby draw fills uncharged time)."""
        if now_ms > self._coverage_end:
            self._coverage_end = now_ms

    def charge(self, component: str, from_ms: int, to_ms: int) -> None:
        """Mark a component active on [from_ms, to_ms)."""
        self.model.component_w(component)
        if to_ms <= from_ms:
            raise PowerAccountingError("zero or negative length charge window")
        if from_ms < self._frontier[component]:
            raise PowerAccountingError(
                f"charge for {component} regresses before its frontier"
            )
        spans = self._intervals[component]
        if spans and from_ms <= spans[-1][1]:
            spans[-1] = (spans[-1][0], max(spans[-1][1], to_ms))
        else:
            spans.append((from_ms, to_ms))
        self._frontier[component] = max(self._frontier[component], from_ms)
        if to_ms > self._coverage_end:
            self._coverage_end = to_ms

    def _overlap(self, component: str, from_ms: int, to_ms: int) -> int:
        total = 0
        for s, e in self._intervals[component]:
            total += max(0, min(e, to_ms) - max(s, from_ms))
        return total

    def active_time(self, component: str, from_ms: int | None = None, to_ms: int | None = None) -> int:
        """Milliseconds the component was active inside the window."""
        from_ms = self.start_ms if from_ms is None else from_ms
        to_ms = self._coverage_end if to_ms is None else to_ms
        return self._overlap(component, from_ms, to_ms)

    def segments(self) -> list[tuple[int, int, frozenset]]:
        """Contiguous (start, end, active components) view over coverage."""
        cuts = {self.start_ms, self._coverage_end}
        for spans in self._intervals.values():
            for s, e in spans:
                cuts.add(s)
                cuts.add(e)
        points = sorted(t for t in cuts if self.start_ms <= t <= self._coverage_end)
        out = []
        for a, b in zip(points, points[1:]):
            active = frozenset(
                c for c in _CHARGEABLE if self._overlap(c, a, b) == b - a
            )
            out.append((a, b, active))
        return out

    def average_power(self, from_ms: int | None = None, to_ms: int | None = None) -> float:
        """Time-weighted average watts over [from_ms, to_ms)."""
        from_ms = self.start_ms if from_ms is None else from_ms
        to_ms = self._coverage_end if to_ms is None else to_ms
        if to_ms <= from_ms:
            raise PowerAccountingError("empty averaging window")
        if from_ms < self.start_ms or to_ms > self._coverage_end:
            raise PowerAccountingError("averaging window outside ledger coverage")
        dur = to_ms - from_ms
        energy = self.model.standby_w * dur
        for c in _CHARGEABLE:
            energy += self.model.component_w(c) * self._overlap(c, from_ms, to_ms)
        return energy / dur

    def energy_joules(self, from_ms: int | None = None, to_ms: int | None = None) -> float:
        from_ms = self.start_ms if from_ms is None else from_ms
        to_ms = self._coverage_end if to_ms is None else to_ms
        return self.average_power(from_ms, to_ms) * (to_ms - from_ms) / 1000.0

    def detector_duty(self) -> float:
        """Fraction of covered time with the inference stage active."""
        dur = self._coverage_end - self.start_ms
        if dur <= 0:
            return 0.0
        return self._overlap(INFERENCE, self.start_ms, self._coverage_end) / dur


def savings_vs_always_on(average_w: float, model: PowerModel) -> float:
    """Fractional saving of an average draw against the always-on figure."""
    if model.always_on_w <= 0:
        raise PowerAccountingError("always_on_w must be positive")
    if average_w < 0 or not math.isfinite(average_w):
        raise PowerAccountingError("average_w must be finite and non-negative")
    return (model.always_on_w - average_w) / model.always_on_w
