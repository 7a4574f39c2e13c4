// Console state: telemetry ingestion, pending-command bookkeeping,
// connection status. Pure logic, no DOM.

import { Ring } from "./ring.js";
import {
  Response,
  TelemetryFrame,
  parseResponse,
  parseTelemetry,
} from "./protocol.js";

export const TRAIL_CAPACITY = 2000;
export const ACK_TIMEOUT_MS = 2000;

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface PendingCommand {
  cmdId: number;
  sentAt: number;
  label: string;
}

export class ConsoleState {
  status: ConnectionStatus = "disconnected";
  latest: TelemetryFrame | null = null;
  trail = new Ring<{ x: number; y: number }>(TRAIL_CAPACITY);
  legHistory = new Ring<{ t: number; front: number; back: number }>(600);
  malformedFrames = 0;
  framesReceived = 0;
  pending: PendingCommand[] = [];
  lastResponse: Response | null = null;
  lastError: string | null = null;

  /** Handle one incoming message; returns what it was. */
  onMessage(text: string, now: number): "telemetry" | "response" | "malformed" {
    const frame = parseTelemetry(text);
    if (frame) {
      this.latest = frame;
      this.framesReceived += 1;
      this.trail.push({ x: frame.x_cm, y: frame.y_cm });
      this.legHistory.push({
        t: frame.t,
        front: frame.front_leg_x_cm,
        back: frame.back_leg_x_cm,
      });
      return "telemetry";
    }
    const resp = parseResponse(text);
    if (resp) {
      this.pending = this.pending.filter((p) => p.cmdId !== resp.cmd_id);
      this.lastResponse = resp;
      this.lastError = resp.type === "err" ? resp.code : null;
      return "response";
    }
    this.malformedFrames += 1;
    return "malformed";
  }

  markSent(cmdId: number, label: string, now: number): void {
    this.pending.push({ cmdId, sentAt: now, label });
  }

  /** Commands unacknowledged past the timeout (warning indicator). */
  overdue(now: number): PendingCommand[] {
    return this.pending.filter((p) => now - p.sentAt > ACK_TIMEOUT_MS);
  }

  setStatus(status: ConnectionStatus): void {
    this.status = status;
    if (status !== "connected") this.pending = [];
  }
}
