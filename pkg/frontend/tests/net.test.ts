import { describe, expect, it } from "vitest";
import { ConsoleLink, SocketLike } from "../src/net.js";
import { ConsoleState } from "../src/state.js";
import { CONTROL_DEBOUNCE_MS, debounce } from "../src/debounce.js";
import { LIMITS, clampTo } from "../src/limits.js";

class FakeSocket implements SocketLike {
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  send(data: string) { this.sent.push(data); }
  close() { this.onclose?.(); }
}

class FakeTimers {
  queue: { cb: () => void; at: number }[] = [];
  now = 0;
  schedule = (cb: () => void, ms: number) => {
    this.queue.push({ cb, at: this.now + ms });
    return this.queue.length;
  };
  advance(ms: number) {
    this.now += ms;
    const due = this.queue.filter((q) => q.at <= this.now);
    this.queue = this.queue.filter((q) => q.at > this.now);
    due.forEach((q) => q.cb());
  }
}

function makeLink() {
  const sockets: FakeSocket[] = [];
  const timers = new FakeTimers();
  const state = new ConsoleState();
  const link = new ConsoleLink("ws://test/ws", state, {
    socketFactory: () => {
      const s = new FakeSocket();
      sockets.push(s);
      return s;
    },
    schedule: timers.schedule,
    now: () => timers.now,
    backoffMs: [100, 200, 400],
  });
  return { link, state, sockets, timers };
}

describe("ConsoleLink", () => {
  it("reports connection lifecycle", () => {
    const { link, state, sockets } = makeLink();
    link.connect();
    expect(state.status).toBe("connecting");
    sockets[0].onopen!();
    expect(state.status).toBe("connected");
  });

  it("assigns strictly increasing cmd_ids and tracks pending", () => {
    const { link, state, sockets } = makeLink();
    link.connect();
    sockets[0].onopen!();
    const id1 = link.send("start");
    const id2 = link.send("set_gait", { freq_hz: 4 });
    expect(id1).toBe(1);
    expect(id2).toBe(2);
    expect(sockets[0].sent).toEqual([
      '{"type":"start","cmd_id":1}',
      '{"type":"set_gait","cmd_id":2,"freq_hz":4}',
    ]);
    expect(state.pending.map((p) => p.cmdId)).toEqual([1, 2]);
  });

  it("refuses to send while offline", () => {
    const { link } = makeLink();
    expect(link.send("start")).toBeNull();
  });

  it("reconnects with growing backoff after drops", () => {
    const { link, state, sockets, timers } = makeLink();
    link.connect();
    sockets[0].onopen!();
    sockets[0].onclose!();
    expect(state.status).toBe("disconnected");
    timers.advance(100);
    expect(sockets).toHaveLength(2);
    sockets[1].onclose!();          // refused again
    expect(link.retryDelayMs).toBe(200);
    timers.advance(200);
    expect(sockets).toHaveLength(3);
    sockets[2].onopen!();
    expect(state.status).toBe("connected");
    expect(link.retryDelayMs).toBe(100);  // backoff resets on success
  });

  it("routes incoming frames into the state", () => {
    const { link, state, sockets } = makeLink();
    link.connect();
    sockets[0].onopen!();
    sockets[0].onmessage!({
      data: '{"type":"telemetry","t":1,"x_cm":0,"y_cm":0,"heading_rad":0,' +
        '"v_cm_s":0,"front_leg_x_cm":4,"back_leg_x_cm":-4,' +
        '"mode":"idle","thermal_budget":1}',
    });
    expect(state.latest!.mode).toBe("idle");
    sockets[0].onmessage!({ data: "garbage" });
    expect(state.malformedFrames).toBe(1);
  });

  it("stops reconnecting once closed", () => {
    const { link, sockets, timers } = makeLink();
    link.connect();
    sockets[0].onopen!();
    link.close();
    timers.advance(5000);
    expect(sockets).toHaveLength(1);
  });
});

describe("debounce", () => {
  it("collapses a burst into one trailing call", () => {
    const timers = new FakeTimers();
    const calls: number[] = [];
    const fn = debounce(
      (v: number) => calls.push(v),
      CONTROL_DEBOUNCE_MS,
      timers.schedule,
      () => { timers.queue = []; },
    );
    fn(1); fn(2); fn(3);
    timers.advance(CONTROL_DEBOUNCE_MS + 1);
    expect(calls).toEqual([3]);
  });
});

describe("range clamping mirrors the firmware", () => {
  it("never produces a value the twin would reject", () => {
    expect(clampTo("freq_hz", 50)).toBe(LIMITS.freq_hz.max);
    expect(clampTo("freq_hz", 0)).toBe(LIMITS.freq_hz.min);
    expect(clampTo("offset", -7)).toBe(-1);
    expect(clampTo("offset", 0.25)).toBe(0.25);
    expect(clampTo("payload_g", 1e9)).toBe(200);
    expect(clampTo("duty", Number.NaN)).toBe(LIMITS.duty.min);
  });
});
