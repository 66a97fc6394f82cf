/**
 * One poller per API resource. At most one request is in flight per
 * resource: a tick that arrives while the previous fetch is still
 * pending is skipped, not queued. On failure the last good snapshot is
 * retained and the resource is flagged stale.
 */
export class ResourcePoller<T> {
  snapshot: T | null = null;
  stale = false;
  lastError: string | null = null;
  fetchedAt: number | null = null;
  private inFlight = false;

  constructor(
    readonly name: string,
    private readonly fetchFn: () => Promise<T>,
    private readonly now: () => number = () => Date.now(),
  ) {}

  /** Returns false when skipped because a fetch is already running. */
  async tick(): Promise<boolean> {
    if (this.inFlight) return false;
    this.inFlight = true;
    try {
      this.snapshot = await this.fetchFn();
      this.fetchedAt = this.now();
      this.stale = false;
      this.lastError = null;
    } catch (err) {
      this.stale = true;
      this.lastError = err instanceof Error ? err.message : String(err);
    } finally {
      this.inFlight = false;
    }
    return true;
  }
}
