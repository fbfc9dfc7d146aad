/** View model: the single funnel between network/input events and rendering.
 *
 * Renders only from the latest snapshot; frames older than what is already
 * held are dropped.  Malformed messages are counted and skipped, never
 * thrown.
 */

import { serverMsg, StateSnapshot } from "./protocol";

export type ConnectionStatus = "disconnected" | "connecting" | "connected";

export interface RunSummary {
  reason: string;
  metrics: Record<string, unknown>;
}

export class ViewModel {
  status: ConnectionStatus = "disconnected";
  session = "";
  scenarios: string[] = [];
  snapshot: StateSnapshot | null = null;
  lastRun: RunSummary | null = null;
  lastError = "";
  droppedFrames = 0;
  malformedMessages = 0;

  onConnected(): void {
    this.status = "connected";
  }

  onDisconnected(): void {
    this.status = "disconnected";
    this.session = "";
  }

  /** Apply one raw server message (already JSON-parsed). */
  apply(raw: unknown): void {
    const parsed = serverMsg.safeParse(raw);
    if (!parsed.success) {
      this.malformedMessages += 1;
      return;
    }
    const msg = parsed.data;
    switch (msg.type) {
      case "hello":
        this.session = msg.session;
        break;
      case "scenario_list":
        this.scenarios = msg.scenarios;
        break;
      case "state_snapshot":
        if (this.snapshot !== null && msg.step < this.snapshot.step) {
          this.droppedFrames += 1; // stale frame: render only the latest
          return;
        }
        this.snapshot = msg;
        break;
      case "run_ended":
        this.lastRun = { reason: msg.reason, metrics: msg.metrics };
        break;
      case "start":
      case "reset":
        this.snapshot = null; // a new stream restarts the step clock
        this.lastRun = null;
        break;
      case "config_update":
        break;
      case "error":
        this.lastError = `${msg.code}: ${msg.reason}`;
        break;
    }
  }
}

/** Exponential reconnect backoff: 0.5 s, 1 s, 2 s, ... capped at 15 s. */
export function reconnectDelayMs(attempt: number): number {
  const base = 500 * 2 ** Math.max(attempt, 0);
  return Math.min(base, 15_000);
}
