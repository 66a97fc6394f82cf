// End-to-end checks against a real cloud instance: the test boots the
// Python server as a child process, drives state through the same HTTP
// API the console uses, and exercises the triage round trip.

import { spawn, type ChildProcessWithoutNullStreams } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, CloudClient } from "../src/client.js";
import { deriveTiles } from "../src/tiles.js";

let server: ChildProcessWithoutNullStreams;
let client: CloudClient;

function reportBody(sid: string, seq: number, occ: boolean) {
  return {
    type: "report",
    sid,
    tid: `t-${sid}`,
    seq,
    ts: seq * 1000,
    occ,
    conf: occ ? 0.93 : 0.0,
    rsn: occ ? "visual" : "none",
    dist: occ ? 38.0 : 120.0,
    tilt: 0.5,
    pwr: 1.01,
  };
}

function alarmBody(sid: string, seq: number, akind: string, sev: string) {
  return {
    type: "alarm",
    sid,
    tid: `t-${sid}`,
    seq,
    ts: seq * 1000,
    tilt: akind === "tilt" ? 27.0 : 0.5,
    pwr: 1.01,
    akind,
    sev,
  };
}

beforeAll(async () => {
  server = spawn("python3", ["-m", "parkfusion.cli", "cloud", "serve", "--listen", "127.0.0.1:0"]);
  const url = await new Promise<string>((resolve, reject) => {
    let buf = "";
    const timer = setTimeout(() => reject(new Error(`server never came up: ${buf}`)), 15000);
    server.stdout.on("data", (chunk: Buffer) => {
      buf += chunk.toString();
      const m = buf.match(/listening on (http:\/\/\S+)/);
      if (m) {
        clearTimeout(timer);
        resolve(m[1]!);
      }
    });
    server.on("exit", (code) => reject(new Error(`server exited early (${code}): ${buf}`)));
  });
  client = new CloudClient(url);
});

afterAll(async () => {
  server.kill("SIGINT");
  await new Promise((resolve) => server.on("exit", resolve));
});

describe("alarm triage round trip", () => {
  it("ack and resolve reflect the server state, never a guess", async () => {
    await client.registerSpace("g1", "t-g1");
    const submit = await client.submitReport(alarmBody("g1", 1, "tilt", "warn"));
    expect(submit.applied).toBe(true);

    const open = (await client.alarms()).filter((a) => a.space_id === "g1");
    expect(open).toHaveLength(1);
    expect(open[0]!.kind).toBe("tilt");
    expect(open[0]!.state).toBe("open");

    const acked = await client.ackAlarm(open[0]!.alarm_id, "op-console");
    expect(acked.state).toBe("acknowledged");
    expect(acked.ack_by).toBe("op-console");
    expect(acked.ack_ts).not.toBeNull();

    // the acknowledgement persisted server-side, not just in the response
    const listed = (await client.alarms()).find((a) => a.alarm_id === acked.alarm_id);
    expect(listed!.state).toBe("acknowledged");
    expect(listed!.ack_by).toBe("op-console");

    const resolved = await client.resolveAlarm(acked.alarm_id, "op-console");
    expect(resolved.state).toBe("resolved");
  });

  it("surfaces an illegal transition verbatim as a 409", async () => {
    await client.registerSpace("g2", "t-g2");
    await client.submitReport(alarmBody("g2", 1, "obstructed", "info"));
    const alarm = (await client.alarms()).find(
      (a) => a.space_id === "g2" && a.state !== "resolved",
    );
    expect(alarm).toBeDefined();

    await client.resolveAlarm(alarm!.alarm_id, "op-a");
    const again = client.resolveAlarm(alarm!.alarm_id, "op-b");
    const err = await again.then(
      () => null,
      (e: unknown) => e,
    );
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect((err as ApiError).message.length).toBeGreaterThan(0);
  });
});

describe("live tiles", () => {
  it("maps server state to amber and green without local business logic", async () => {
    await client.registerSpace("g3", "t-g3");
    await client.registerSpace("g4", "t-g4");

    // two agreeing reports flip occupancy server-side
    await client.submitReport(reportBody("g3", 1, true));
    await client.submitReport(reportBody("g3", 2, true));
    await client.submitReport(alarmBody("g3", 3, "tilt", "warn"));

    const [spaces, nodes, alarms] = await Promise.all([
      client.spaces(),
      client.nodes(),
      client.alarms(),
    ]);
    const tiles = deriveTiles(spaces, nodes, alarms, Date.now());
    const byId = new Map(tiles.map((t) => [t.spaceId, t]));

    expect(byId.get("g3")!.color).toBe("amber");
    expect(byId.get("g3")!.occupied).toBe(true);
    expect(byId.get("g4")!.color).toBe("green");
  });

  it("tracks the metrics snapshot", async () => {
    const m = await client.metrics();
    expect(m.spaces).toBeGreaterThanOrEqual(4);
    expect(m.occupied).toBeGreaterThanOrEqual(1);
    expect(m.counters.reports_applied).toBeGreaterThanOrEqual(2);
  });
});
