import type { Alarm, Metrics, NodeHealth, Space } from "./types.js";

/** Error body of a non-2xx API response, message passed through verbatim. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Thin typed wrapper over the cloud HTTP API. Configuration is the base URL. */
export class CloudClient {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + "/api/v1" + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await res.text();
    let data: unknown = null;
    try {
      data = text ? JSON.parse(text) : null;
    } catch {
      // non-JSON bodies fall through to the status check below
    }
    if (!res.ok) {
      const msg =
        data && typeof data === "object" && "error" in data
          ? String((data as { error: unknown }).error)
          : `${res.status} ${res.statusText}`;
      throw new ApiError(res.status, msg);
    }
    return data as T;
  }

  spaces(): Promise<Space[]> {
    return this.request("GET", "/spaces");
  }

  nodes(): Promise<NodeHealth[]> {
    return this.request("GET", "/nodes");
  }

  alarms(): Promise<Alarm[]> {
    return this.request("GET", "/alarms");
  }

  metrics(): Promise<Metrics> {
    return this.request("GET", "/metrics");
  }

  ackAlarm(alarmId: string, operator: string): Promise<Alarm> {
    return this.request("POST", `/alarms/${encodeURIComponent(alarmId)}/ack`, { operator });
  }

  resolveAlarm(alarmId: string, operator: string): Promise<Alarm> {
    return this.request("POST", `/alarms/${encodeURIComponent(alarmId)}/resolve`, { operator });
  }

  // Ingest-side calls, used by tooling and tests rather than the page.

  registerSpace(spaceId: string, terminalId: string): Promise<{ space_id: string }> {
    return this.request("POST", "/spaces", { space_id: spaceId, terminal_id: terminalId });
  }

  submitReport(body: Record<string, unknown>): Promise<{ applied: boolean }> {
    return this.request("POST", "/reports", body);
  }

  sweep(): Promise<{ effects: unknown[] }> {
    return this.request("POST", "/sweep", {});
  }
}
