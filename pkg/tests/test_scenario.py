import pytest

from parkfusion.detection import ConfidenceProfile
from parkfusion.scenario import (
    Scenario,
    ScenarioError,
    load_scenario,
    parse_scenario,
)


GOOD = """
# comment line
seed 42
duration 90000

space s1 roi=100,100,200,160
space s2 roi=0,0,50,50 mode=ir_only trigger_cm=70

at 5000 s1 vehicle_arrive dist=40 ramp_ms=3000
at 40000 s1 vehicle_depart
at 12000 s2 pedestrian
at 1000 s1 light cond=night
"""


class TestParsing:
    def test_parses_directives(self):
        scn = parse_scenario(GOOD)
        assert scn.seed == 42
        assert scn.duration_ms == 90000
        assert scn.space_ids() == ["s1", "s2"]

    def test_space_line_carries_mode_and_overrides(self):
        scn = parse_scenario(GOOD)
        s2 = scn.spaces[1]
        assert s2.mode == "ir_only"
        assert s2.overrides == {"trigger_cm": "70"}
        assert (s2.roi.x, s2.roi.y, s2.roi.w, s2.roi.h) == (0, 0, 50, 50)

    def test_events_sorted_by_time(self):
        scn = parse_scenario(GOOD)
        times = [e.t for e in scn.events]
        assert times == sorted(times)

    def test_event_defaults_applied(self):
        scn = parse_scenario(GOOD)
        ped = next(e for e in scn.events if e.kind == "pedestrian")
        assert ped.params == {"dist": 60.0, "dwell_ms": 1500}
        dep = next(e for e in scn.events if e.kind == "vehicle_depart")
        assert dep.params == {"ramp_ms": 3000}

    def test_detector_directive(self):
        scn = parse_scenario("seed 1\nduration 1000\ndetector night_mean=0.1 night_sd=0.02\nspace a roi=0,0,10,10\n")
        assert scn.profile == ConfidenceProfile(night_mean=0.1, night_sd=0.02)

    def test_node_directive_sets_global_overrides(self):
        scn = parse_scenario("seed 1\nduration 1000\nnode window=3 k=2\nspace a roi=0,0,10,10\n")
        assert scn.node_overrides == {"window": "3", "k": "2"}

    def test_comments_and_blank_lines_ignored(self):
        scn = parse_scenario("# top\n\nseed 5\nduration 1\nspace a roi=0,0,1,1\n# tail\n")
        assert isinstance(scn, Scenario)


class TestErrors:
    def check(self, text, fragment):
        with pytest.raises(ScenarioError) as exc:
            parse_scenario(text)
        assert fragment in str(exc.value)

    def test_unknown_directive(self):
        self.check("wibble 3\n", "line 1")

    def test_duplicate_space(self):
        self.check("space a roi=0,0,1,1\nspace a roi=0,0,1,1\n", "declared twice")

    def test_event_for_unknown_space(self):
        self.check("space a roi=0,0,1,1\nat 0 b impact\n", "undeclared space")

    def test_unknown_event_kind(self):
        self.check("space a roi=0,0,1,1\nat 0 a teleport\n", "teleport")

    def test_missing_required_param(self):
        self.check("space a roi=0,0,1,1\nat 0 a tilt\n", "deg")

    def test_tilt_range_checked(self):
        self.check("space a roi=0,0,1,1\nat 0 a tilt deg=200\n", "deg")

    def test_link_loss_probability_range(self):
        self.check("space a roi=0,0,1,1\nat 0 a link_loss p=1.5\n", "p")

    def test_light_condition_enum(self):
        self.check("space a roi=0,0,1,1\nat 0 a light cond=dusk\n", "cond")

    def test_occlusion_state_enum(self):
        self.check("space a roi=0,0,1,1\nat 0 a occlusion state=maybe\n", "state")

    def test_roi_needs_four_numbers(self):
        self.check("space a roi=1,2,3\n", "roi")

    def test_roi_extent_positive(self):
        self.check("space a roi=0,0,0,5\n", "roi")

    def test_negative_event_time(self):
        self.check("space a roi=0,0,1,1\nat -5 a impact\n", "time")

    def test_bad_duration(self):
        self.check("duration potato\n", "duration")

    def test_error_carries_line_number(self):
        with pytest.raises(ScenarioError) as exc:
            parse_scenario("seed 1\nduration 100\nspace a roi=bad\n")
        assert str(exc.value).startswith("line 3")


def test_load_scenario_round_trip(tmp_path):
    p = tmp_path / "s.scn"
    p.write_text(GOOD)
    scn = load_scenario(str(p))
    assert scn.seed == 42 and len(scn.events) == 4
