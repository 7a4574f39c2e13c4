// Live link to the twin: WebSocket with automatic reconnect/backoff and
// monotonically increasing command ids. The socket constructor is
// injectable so the logic runs under test without a browser.

import { CommandFields, CommandType, encodeCommand } from "./protocol.js";
import { ConsoleState } from "./state.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface LinkOptions {
  socketFactory?: SocketFactory;
  schedule?: (cb: () => void, ms: number) => unknown;
  now?: () => number;
  backoffMs?: number[];
}

const DEFAULT_BACKOFF = [500, 1000, 2000, 4000, 8000];

export class ConsoleLink {
  private socket: SocketLike | null = null;
  private nextCmdId = 1;
  private retries = 0;
  private lastDelay = 0;
  private closed = false;
  private readonly factory: SocketFactory;
  private readonly schedule: (cb: () => void, ms: number) => unknown;
  private readonly now: () => number;
  private readonly backoff: number[];

  constructor(
    readonly url: string,
    readonly state: ConsoleState,
    opts: LinkOptions = {},
  ) {
    this.factory = opts.socketFactory
      ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.schedule = opts.schedule ?? ((cb, ms) => setTimeout(cb, ms));
    this.now = opts.now ?? (() => Date.now());
    this.backoff = opts.backoffMs ?? DEFAULT_BACKOFF;
  }

  connect(): void {
    if (this.closed) return;
    this.state.setStatus("connecting");
    const sock = this.factory(this.url);
    this.socket = sock;
    sock.onopen = () => {
      this.retries = 0;
      this.lastDelay = this.backoff[0];
      this.state.setStatus("connected");
    };
    sock.onmessage = (ev) => {
      this.state.onMessage(String(ev.data), this.now());
    };
    sock.onerror = () => {
      // onclose follows; nothing else to do here
    };
    sock.onclose = () => {
      if (this.socket !== sock) return;
      this.socket = null;
      this.state.setStatus("disconnected");
      if (this.closed) return;
      const wait = this.backoff[Math.min(this.retries, this.backoff.length - 1)];
      this.retries += 1;
      this.lastDelay = wait;
      this.schedule(() => this.connect(), wait);
    };
  }

  /** Delay of the most recently scheduled reconnect attempt. */
  get retryDelayMs(): number {
    return this.lastDelay || this.backoff[0];
  }

  /** Send one command; returns its cmd_id, or null when offline. */
  send(type: CommandType, fields: CommandFields = {}, label?: string): number | null {
    if (!this.socket || this.state.status !== "connected") return null;
    const cmdId = this.nextCmdId++;
    this.socket.send(encodeCommand(type, cmdId, fields));
    this.state.markSent(cmdId, label ?? type, this.now());
    return cmdId;
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
