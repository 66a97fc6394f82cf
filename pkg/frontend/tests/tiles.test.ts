import { describe, expect, it } from "vitest";

import { deriveTiles, fmtAge, tileColor } from "../src/tiles.js";
import type { Alarm } from "../src/types.js";
import { ALARMS, NODES, NOW, SPACES } from "./fixtures.js";

describe("tile colors from the fixed fixtures", () => {
  const tiles = deriveTiles(SPACES, NODES, ALARMS, NOW);
  const byId = new Map(tiles.map((t) => [t.spaceId, t]));

  it("occupied space with a pending alarm renders amber", () => {
    const t = byId.get("p1")!;
    expect(t.color).toBe("amber");
    expect(t.alarmCount).toBe(1);
    expect(t.occupied).toBe(true);
  });

  it("vacant space renders green", () => {
    const t = byId.get("p2")!;
    expect(t.color).toBe("green");
    expect(t.reason).toBe("vacant");
  });

  it("offline terminal renders gray regardless of occupancy", () => {
    const t = byId.get("p3")!;
    expect(t.color).toBe("gray");
    expect(t.offline).toBe(true);
    expect(t.occupied).toBe(true);
  });

  it("tiles come out sorted by space id", () => {
    expect(tiles.map((t) => t.spaceId)).toEqual(["p1", "p2", "p3"]);
  });
});

describe("color precedence", () => {
  it("is total over every input combination", () => {
    for (const offline of [false, true]) {
      for (const alarm of [false, true]) {
        for (const occupied of [false, true]) {
          const c = tileColor(offline, alarm, occupied);
          if (offline) expect(c).toBe("gray");
          else if (alarm) expect(c).toBe("amber");
          else expect(c).toBe(occupied ? "red" : "green");
        }
      }
    }
  });

  it("occupied without alarms renders red", () => {
    expect(tileColor(false, false, true)).toBe("red");
  });

  it("acknowledged alarms still count as pending", () => {
    const acked: Alarm[] = [{ ...ALARMS[0]!, state: "acknowledged", ack_by: "op" }];
    const tiles = deriveTiles(SPACES, NODES, acked, NOW);
    expect(tiles.find((t) => t.spaceId === "p1")!.color).toBe("amber");
  });

  it("resolved alarms stop counting", () => {
    const resolved: Alarm[] = [
      { ...ALARMS[0]!, state: "resolved", resolved_by: "op", resolved_ts: NOW },
    ];
    const tiles = deriveTiles(SPACES, NODES, resolved, NOW);
    // occupied, no pending alarm, node online
    expect(tiles.find((t) => t.spaceId === "p1")!.color).toBe("red");
  });

  it("a terminal missing from the health list is treated as offline", () => {
    const tiles = deriveTiles(SPACES, [], ALARMS, NOW);
    for (const t of tiles) expect(t.color).toBe("gray");
  });
});

describe("age formatting", () => {
  it("steps through seconds, minutes, hours", () => {
    expect(fmtAge(2_000)).toBe("2s ago");
    expect(fmtAge(59_999)).toBe("59s ago");
    expect(fmtAge(60_000)).toBe("1m ago");
    expect(fmtAge(3_599_000)).toBe("59m ago");
    expect(fmtAge(7_200_000)).toBe("2h ago");
  });

  it("never-seen terminals say so", () => {
    expect(fmtAge(null)).toBe("never seen");
  });

  it("tile age comes from the node last_seen timestamp", () => {
    const tiles = deriveTiles(SPACES, NODES, ALARMS, NOW);
    expect(tiles.find((t) => t.spaceId === "p2")!.ageMs).toBe(4_000);
  });
});
