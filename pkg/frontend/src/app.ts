/**
 * Console wiring: four pollers (spaces, nodes, alarms, metrics) on one
 * 5 s cadence, a per-alarm action queue, and innerHTML renders into the
 * page shell. Everything shown is a function of the latest server
 * responses; the only client-side inputs are the operator name field
 * and button clicks.
 */

import { ApiError, CloudClient } from "./client.js";
import { AlarmActionQueue } from "./actions.js";
import { ResourcePoller } from "./poll.js";
import { deriveTiles } from "./tiles.js";
import {
  alarmTableHtml,
  countersHtml,
  mapHtml,
  metricsHtml,
  nodesHtml,
  staleBannerHtml,
} from "./render.js";
import type { Alarm, Metrics, NodeHealth, Space } from "./types.js";

const POLL_MS = 5000;

export class ConsoleApp {
  private readonly spaces: ResourcePoller<Space[]>;
  private readonly nodes: ResourcePoller<NodeHealth[]>;
  private readonly alarms: ResourcePoller<Alarm[]>;
  private readonly metrics: ResourcePoller<Metrics>;
  private readonly queue = new AlarmActionQueue();
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly doc: Document,
    private readonly client: CloudClient,
    private readonly now: () => number = () => Date.now(),
  ) {
    this.spaces = new ResourcePoller("spaces", () => client.spaces(), now);
    this.nodes = new ResourcePoller("nodes", () => client.nodes(), now);
    this.alarms = new ResourcePoller("alarms", () => client.alarms(), now);
    this.metrics = new ResourcePoller("metrics", () => client.metrics(), now);
  }

  start(pollMs: number = POLL_MS): void {
    const alarmPane = this.doc.getElementById("alarms");
    alarmPane?.addEventListener("click", (ev) => this.onAlarmClick(ev));
    const endpoint = this.doc.getElementById("endpoint");
    if (endpoint) endpoint.textContent = this.client.baseUrl;
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), pollMs);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  /** One poll round; each poller skips itself if its fetch is still pending. */
  async refresh(): Promise<void> {
    await Promise.all([
      this.spaces.tick(),
      this.nodes.tick(),
      this.alarms.tick(),
      this.metrics.tick(),
    ]);
    this.render();
  }

  render(): void {
    const now = this.now();
    const set = (id: string, html: string) => {
      const el = this.doc.getElementById(id);
      if (el) el.innerHTML = html;
    };

    const stale: string[] = [];
    for (const p of [this.spaces, this.nodes, this.alarms, this.metrics]) {
      if (p.stale) stale.push(p.name);
    }
    set("stale", staleBannerHtml(stale));

    if (this.spaces.snapshot && this.nodes.snapshot && this.alarms.snapshot) {
      const tiles = deriveTiles(
        this.spaces.snapshot,
        this.nodes.snapshot,
        this.alarms.snapshot,
        now,
      );
      set("map", mapHtml(tiles));
    }
    if (this.alarms.snapshot) set("alarms", alarmTableHtml(this.alarms.snapshot, now));
    if (this.nodes.snapshot) set("nodes", nodesHtml(this.nodes.snapshot, now));
    if (this.metrics.snapshot) {
      set("metrics", metricsHtml(this.metrics.snapshot));
      set("counters", countersHtml(this.metrics.snapshot));
    }
  }

  private operator(): string {
    const input = this.doc.getElementById("operator") as HTMLInputElement | null;
    const name = input?.value.trim();
    return name || "console";
  }

  private onAlarmClick(ev: Event): void {
    const target = ev.target as HTMLElement | null;
    const button = target?.closest("button[data-action]");
    if (!button) return;
    const action = button.getAttribute("data-action");
    const alarmId = button.getAttribute("data-alarm");
    if (!action || !alarmId) return;
    const operator = this.operator();
    const call =
      action === "ack"
        ? () => this.client.ackAlarm(alarmId, operator)
        : () => this.client.resolveAlarm(alarmId, operator);
    void this.queue
      .run(alarmId, call)
      .then((updated) => {
        // show exactly what the server answered, then let polling reconcile
        this.applyServerAlarm(updated);
        this.render();
      })
      .catch((err) => {
        const msg = err instanceof ApiError ? err.message : String(err);
        this.toast(msg);
      });
  }

  applyServerAlarm(updated: Alarm): void {
    const list = this.alarms.snapshot;
    if (!list) return;
    const i = list.findIndex((a) => a.alarm_id === updated.alarm_id);
    if (i >= 0) list[i] = updated;
  }

  private toast(message: string): void {
    const host = this.doc.getElementById("toasts");
    if (!host) return;
    const el = this.doc.createElement("div");
    el.className = "toast";
    el.textContent = message;
    host.appendChild(el);
    setTimeout(() => el.remove(), 6000);
  }
}
