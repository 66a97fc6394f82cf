// Pure HTML builders. Keeping these free of DOM calls makes the render
// layer testable as plain string functions.

import type { SpaceTile } from "./tiles.js";
import { fmtAge } from "./tiles.js";
import type { Alarm, Metrics, NodeHealth } from "./types.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

// ── Parking map ─────────────────────────────────────────────────────────

export function tileHtml(tile: SpaceTile): string {
  const badge = tile.alarmCount > 0 ? `<span class="badge">${tile.alarmCount}</span>` : "";
  const status = tile.offline ? "offline" : escapeHtml(tile.reason);
  return (
    `<div class="tile ${tile.color}" data-space="${escapeHtml(tile.spaceId)}">` +
    `<div class="tile-head"><span class="tile-id">${escapeHtml(tile.spaceId)}</span>${badge}</div>` +
    `<div class="tile-reason">${status}</div>` +
    `<div class="tile-age">${fmtAge(tile.ageMs)}</div>` +
    `</div>`
  );
}

export function mapHtml(tiles: SpaceTile[]): string {
  if (tiles.length === 0) return `<div class="empty">no spaces registered</div>`;
  return tiles.map(tileHtml).join("");
}

// ── Alarm triage ────────────────────────────────────────────────────────

const SEVERITY_RANK: Record<string, number> = { critical: 0, warn: 1, info: 2 };

/** Unresolved alarms, most urgent first: severity, then open before acknowledged, then newest. */
export function triageOrder(alarms: Alarm[]): Alarm[] {
  return alarms
    .filter((a) => a.state !== "resolved")
    .sort((a, b) => {
      const sev = (SEVERITY_RANK[a.severity] ?? 3) - (SEVERITY_RANK[b.severity] ?? 3);
      if (sev !== 0) return sev;
      if (a.state !== b.state) return a.state === "open" ? -1 : 1;
      return b.raised_ts - a.raised_ts;
    });
}

export function alarmRowHtml(alarm: Alarm, nowMs: number): string {
  const id = escapeHtml(alarm.alarm_id);
  const ackDisabled = alarm.state !== "open" ? " disabled" : "";
  const ackedBy = alarm.ack_by ? ` by ${escapeHtml(alarm.ack_by)}` : "";
  return (
    `<tr data-alarm="${id}">` +
    `<td><span class="sev ${alarm.severity}">${alarm.severity}</span></td>` +
    `<td>${escapeHtml(alarm.kind)}</td>` +
    `<td>${escapeHtml(alarm.space_id)}</td>` +
    `<td>${escapeHtml(alarm.state)}${ackedBy}</td>` +
    `<td>${fmtAge(Math.max(0, nowMs - alarm.raised_ts))}</td>` +
    `<td>` +
    `<button data-action="ack" data-alarm="${id}"${ackDisabled}>ack</button> ` +
    `<button data-action="resolve" data-alarm="${id}">resolve</button>` +
    `</td>` +
    `</tr>`
  );
}

export function alarmTableHtml(alarms: Alarm[], nowMs: number): string {
  const rows = triageOrder(alarms);
  if (rows.length === 0) return `<div class="empty">no open alarms</div>`;
  return (
    `<table class="alarms"><thead><tr>` +
    `<th>sev</th><th>kind</th><th>space</th><th>state</th><th>raised</th><th></th>` +
    `</tr></thead><tbody>` +
    rows.map((a) => alarmRowHtml(a, nowMs)).join("") +
    `</tbody></table>`
  );
}

// ── Dashboard ───────────────────────────────────────────────────────────

export function metricsHtml(m: Metrics): string {
  const pct = (m.occupancy_rate * 100).toFixed(0);
  const power = m.avg_reported_power_w.toFixed(2);
  const panel = (label: string, value: string) =>
    `<div class="panel"><div class="panel-value">${value}</div><div class="panel-label">${label}</div></div>`;
  return (
    panel("spaces", String(m.spaces)) +
    panel("occupancy", `${pct}%`) +
    panel("open alarms", String(m.open_alarms)) +
    panel("avg power", `${power} W`) +
    panel("orders open", String(m.orders_open)) +
    panel("orders closed", String(m.orders_closed))
  );
}

export function countersHtml(m: Metrics): string {
  const keys = Object.keys(m.counters).sort();
  return keys
    .map((k) => `<span class="counter">${escapeHtml(k)}=${m.counters[k]}</span>`)
    .join(" ");
}

// ── Node health ─────────────────────────────────────────────────────────

export function nodesHtml(nodes: NodeHealth[], nowMs: number): string {
  if (nodes.length === 0) return `<div class="empty">no terminals</div>`;
  return nodes
    .map((n) => {
      const power = n.last_power_w === null ? "?" : n.last_power_w.toFixed(2);
      const seen = fmtAge(n.last_seen_ts === null ? null : Math.max(0, nowMs - n.last_seen_ts));
      return (
        `<div class="node ${n.status}">` +
        `<span class="dot"></span>` +
        `<span class="node-id">${escapeHtml(n.terminal_id)}</span>` +
        `<span class="node-meta">${n.status}, ${power} W, seen ${seen}</span>` +
        `</div>`
      );
    })
    .join("");
}

export function staleBannerHtml(staleResources: string[]): string {
  if (staleResources.length === 0) return "";
  return (
    `<div class="stale-banner">API unreachable for ${staleResources
      .map(escapeHtml)
      .join(", ")}; showing last known state</div>`
  );
}
