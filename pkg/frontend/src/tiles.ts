import type { Alarm, NodeHealth, Space } from "./types.js";

export type TileColor = "green" | "red" | "amber" | "gray";

export interface SpaceTile {
  spaceId: string;
  color: TileColor;
  reason: string;
  alarmCount: number;
  ageMs: number | null;
  occupied: boolean;
  offline: boolean;
}

/**
 * Color precedence is total and deterministic: offline beats alarm beats
 * occupancy. Every input combination lands on exactly one of the four
 * colors; nothing here interprets business state beyond reading the
 * fields the server already decided.
 */
export function tileColor(offline: boolean, alarmPending: boolean, occupied: boolean): TileColor {
  if (offline) return "gray";
  if (alarmPending) return "amber";
  return occupied ? "red" : "green";
}

/** Join the three API snapshots into one tile per space, sorted by id. */
export function deriveTiles(
  spaces: Space[],
  nodes: NodeHealth[],
  alarms: Alarm[],
  nowMs: number,
): SpaceTile[] {
  const nodeByTid = new Map<string, NodeHealth>();
  for (const n of nodes) nodeByTid.set(n.terminal_id, n);

  // an alarm stays "pending" until an operator resolves it
  const pendingBySpace = new Map<string, number>();
  for (const a of alarms) {
    if (a.state === "resolved") continue;
    pendingBySpace.set(a.space_id, (pendingBySpace.get(a.space_id) ?? 0) + 1);
  }

  const tiles: SpaceTile[] = [];
  for (const s of spaces) {
    const node = nodeByTid.get(s.terminal_id);
    // a terminal the health list has never heard of cannot be presumed alive
    const offline = node === undefined || node.status === "offline";
    const alarmCount = pendingBySpace.get(s.space_id) ?? 0;
    const seen = node?.last_seen_ts ?? null;
    tiles.push({
      spaceId: s.space_id,
      color: tileColor(offline, alarmCount > 0, s.occupied),
      reason: s.occupied ? s.reason : "vacant",
      alarmCount,
      ageMs: seen === null ? null : Math.max(0, nowMs - seen),
      occupied: s.occupied,
      offline,
    });
  }
  tiles.sort((a, b) => a.spaceId.localeCompare(b.spaceId));
  return tiles;
}

export function fmtAge(ageMs: number | null): string {
  if (ageMs === null) return "never seen";
  const s = Math.floor(ageMs / 1000);
  if (s < 60) return `${s}s ago`;
  const m = Math.floor(s / 60);
  if (m < 60) return `${m}m ago`;
  const h = Math.floor(m / 60);
  return `${h}h ago`;
}
