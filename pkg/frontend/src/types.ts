// Response shapes of the cloud HTTP API (GET /api/v1/...). The console
// never derives business facts from these; it only maps them to pixels.

export interface Space {
  space_id: string;
  terminal_id: string;
  occupied: boolean;
  reason: string;
  last_seq: number;
  last_conf: number;
  last_report_ts: number | null;
  last_dist_cm: number | null;
  last_tilt_deg: number | null;
  last_power_w: number | null;
  business_since: number | null;
  open_order_id: string | null;
  open_alarms: string[];
}

export type AlarmState = "open" | "acknowledged" | "resolved";
export type Severity = "info" | "warn" | "critical";

export interface Alarm {
  alarm_id: string;
  space_id: string;
  kind: string;
  severity: Severity;
  state: AlarmState;
  raised_ts: number;
  ack_by: string | null;
  ack_ts: number | null;
  resolved_by: string | null;
  resolved_ts: number | null;
}

export interface NodeHealth {
  terminal_id: string;
  status: "online" | "offline";
  last_seen_ts: number | null;
  missed: number;
  last_power_w: number | null;
  last_tilt_deg: number | null;
}

export interface Metrics {
  spaces: number;
  occupied: number;
  occupancy_rate: number;
  open_alarms: number;
  avg_reported_power_w: number;
  orders_open: number;
  orders_closed: number;
  counters: Record<string, number>;
}
