import { describe, expect, it } from "vitest";
import { encodeCommand, parseResponse, parseTelemetry } from "../src/protocol.js";

const FRAME = {
  type: "telemetry", t: 1.5, x_cm: 3.2, y_cm: -0.4, heading_rad: 0.02,
  v_cm_s: 3.71, front_leg_x_cm: 7.5, back_leg_x_cm: -0.6,
  mode: "walking", thermal_budget: 0.93,
};

describe("parseTelemetry", () => {
  it("accepts a well-formed frame", () => {
    const f = parseTelemetry(JSON.stringify(FRAME));
    expect(f).not.toBeNull();
    expect(f!.v_cm_s).toBe(3.71);
    expect(f!.mode).toBe("walking");
  });

  it("rejects garbage, wrong types, and unknown modes", () => {
    expect(parseTelemetry("{nope")).toBeNull();
    expect(parseTelemetry('"just a string"')).toBeNull();
    expect(parseTelemetry(JSON.stringify({ ...FRAME, mode: "flying" }))).toBeNull();
    expect(parseTelemetry(JSON.stringify({ ...FRAME, v_cm_s: "fast" }))).toBeNull();
    expect(parseTelemetry(JSON.stringify({ ...FRAME, t: Infinity }))).toBeNull();
    const missing: Record<string, unknown> = { ...FRAME };
    delete missing["x_cm"];
    expect(parseTelemetry(JSON.stringify(missing))).toBeNull();
  });

  it("ignores acks", () => {
    expect(parseTelemetry('{"type":"ack","cmd_id":1,"state":"idle"}')).toBeNull();
  });
});

describe("parseResponse", () => {
  it("parses acks and errs", () => {
    expect(parseResponse('{"type":"ack","cmd_id":4,"state":"walking"}'))
      .toEqual({ type: "ack", cmd_id: 4, state: "walking" });
    expect(parseResponse('{"type":"err","cmd_id":5,"code":"cooldown_active"}'))
      .toEqual({ type: "err", cmd_id: 5, code: "cooldown_active" });
  });

  it("rejects everything else", () => {
    expect(parseResponse(JSON.stringify(FRAME))).toBeNull();
    expect(parseResponse("[]")).toBeNull();
    expect(parseResponse("{bad")).toBeNull();
  });
});

describe("encodeCommand", () => {
  it("matches the wire format exactly", () => {
    expect(encodeCommand("start", 1)).toBe('{"type":"start","cmd_id":1}');
    expect(encodeCommand("set_gait", 2, { freq_hz: 4.0, phase: "out_of_phase" }))
      .toBe('{"type":"set_gait","cmd_id":2,"freq_hz":4,"phase":"out_of_phase"}');
  });

  it("keeps field order stable regardless of input order", () => {
    const line = encodeCommand("set_env", 3, {
      medium: "water", surface: "foam", slope_deg: 2,
    });
    expect(line).toBe(
      '{"type":"set_env","cmd_id":3,"surface":"foam","slope_deg":2,"medium":"water"}',
    );
  });
});
