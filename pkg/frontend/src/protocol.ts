// Wire protocol: newline-delimited JSON, mirroring the twin's server.

export interface TelemetryFrame {
  t: number;
  x_cm: number;
  y_cm: number;
  heading_rad: number;
  v_cm_s: number;
  front_leg_x_cm: number;
  back_leg_x_cm: number;
  mode: "idle" | "walking" | "swimming" | "cooldown";
  thermal_budget: number;
}

export interface Ack {
  type: "ack";
  cmd_id: number;
  state: string;
}

export interface Err {
  type: "err";
  cmd_id: number;
  code: string;
}

export type Response = Ack | Err;

export type CommandType =
  | "set_gait"
  | "set_coil_offset"
  | "set_env"
  | "start"
  | "stop"
  | "reset";

export interface CommandFields {
  freq_hz?: number;
  duty?: number;
  phase?: "out_of_phase" | "in_phase";
  amplitude?: number;
  offset?: number;
  surface?: string;
  slope_deg?: number;
  payload_g?: number;
  medium?: "ground" | "water";
}

const MODES = new Set(["idle", "walking", "swimming", "cooldown"]);
const NUMERIC_FIELDS: (keyof TelemetryFrame)[] = [
  "t", "x_cm", "y_cm", "heading_rad", "v_cm_s",
  "front_leg_x_cm", "back_leg_x_cm", "thermal_budget",
];

export function parseTelemetry(text: string): TelemetryFrame | null {
  let obj: Record<string, unknown>;
  try {
    obj = JSON.parse(text);
  } catch {
    return null;
  }
  if (!obj || obj["type"] !== "telemetry") return null;
  for (const key of NUMERIC_FIELDS) {
    const v = obj[key];
    if (typeof v !== "number" || !Number.isFinite(v)) return null;
  }
  if (!MODES.has(obj["mode"] as string)) return null;
  return obj as unknown as TelemetryFrame;
}

export function parseResponse(text: string): Response | null {
  let obj: Record<string, unknown>;
  try {
    obj = JSON.parse(text);
  } catch {
    return null;
  }
  if (!obj) return null;
  if (obj["type"] === "ack" && typeof obj["cmd_id"] === "number") {
    return obj as unknown as Ack;
  }
  if (obj["type"] === "err" && typeof obj["cmd_id"] === "number") {
    return obj as unknown as Err;
  }
  return null;
}

// Field order matches the twin's encoder: type, cmd_id, then payload.
export function encodeCommand(
  type: CommandType,
  cmdId: number,
  fields: CommandFields = {},
): string {
  const obj: Record<string, unknown> = { type, cmd_id: cmdId };
  const order: (keyof CommandFields)[] = [
    "freq_hz", "duty", "phase", "amplitude",
    "offset", "surface", "slope_deg", "payload_g", "medium",
  ];
  for (const key of order) {
    const v = fields[key];
    if (v !== undefined) obj[key] = v;
  }
  return JSON.stringify(obj);
}
