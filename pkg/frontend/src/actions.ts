/**
 * Serializes operator actions per alarm: a second click on the same
 * alarm waits for the first round trip to settle, while actions on
 * different alarms proceed independently. A failed action never blocks
 * the ones queued behind it.
 */
export class AlarmActionQueue {
  private tails = new Map<string, Promise<unknown>>();

  run<T>(alarmId: string, action: () => Promise<T>): Promise<T> {
    const tail = this.tails.get(alarmId) ?? Promise.resolve();
    const next = tail.then(action, action);
    const settled = next.then(
      () => undefined,
      () => undefined,
    );
    this.tails.set(alarmId, settled);
    settled.then(() => {
      if (this.tails.get(alarmId) === settled) this.tails.delete(alarmId);
    });
    return next;
  }
}
