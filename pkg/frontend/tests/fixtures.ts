// Canned API responses for the three canonical tile situations:
// an occupied space with a pending alarm, a vacant space, and a space
// whose terminal is offline. Shapes mirror GET /spaces, /nodes, /alarms.

import type { Alarm, NodeHealth, Space } from "../src/types.js";

export const NOW = 1_700_000_120_000;

function space(overrides: Partial<Space> & Pick<Space, "space_id" | "terminal_id">): Space {
  return {
    occupied: false,
    reason: "none",
    last_seq: 0,
    last_conf: 0,
    last_report_ts: null,
    last_dist_cm: null,
    last_tilt_deg: null,
    last_power_w: null,
    business_since: null,
    open_order_id: null,
    open_alarms: [],
    ...overrides,
  };
}

function node(tid: string, status: "online" | "offline", missed = 0): NodeHealth {
  return {
    terminal_id: tid,
    status,
    last_seen_ts: NOW - (status === "offline" ? 95_000 : 4_000),
    missed,
    last_power_w: 0.95,
    last_tilt_deg: 0.4,
  };
}

export const SPACES: Space[] = [
  space({
    space_id: "p1",
    terminal_id: "t-p1",
    occupied: true,
    reason: "collision",
    last_seq: 9,
    last_conf: 0.1,
    business_since: NOW - 400_000,
    open_order_id: "o-1",
    open_alarms: ["a-1"],
  }),
  space({ space_id: "p2", terminal_id: "t-p2" }),
  space({
    space_id: "p3",
    terminal_id: "t-p3",
    occupied: true,
    reason: "visual",
    last_seq: 4,
    last_conf: 0.91,
    business_since: NOW - 60_000,
    open_order_id: "o-2",
  }),
];

export const NODES: NodeHealth[] = [
  node("t-p1", "online"),
  node("t-p2", "online"),
  node("t-p3", "offline", 3),
];

export const ALARMS: Alarm[] = [
  {
    alarm_id: "a-1",
    space_id: "p1",
    kind: "illegal_parking",
    severity: "critical",
    state: "open",
    raised_ts: NOW - 30_000,
    ack_by: null,
    ack_ts: null,
    resolved_by: null,
    resolved_ts: null,
  },
];
