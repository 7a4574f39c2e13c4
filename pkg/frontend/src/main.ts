// DOM wiring for the teleop console.

import { CONTROL_DEBOUNCE_MS, debounce } from "./debounce.js";
import { LIMITS, MEDIA, PHASES, SURFACES, clampTo } from "./limits.js";
import { ConsoleLink } from "./net.js";
import { budgetColor, drawLegStrip, drawScene, followTarget, Viewport } from "./render.js";
import { ConsoleState } from "./state.js";

const state = new ConsoleState();
const url = `ws://${location.host || "127.0.0.1:8090"}/ws`;
const link = new ConsoleLink(url, state);

const $ = <T extends HTMLElement>(id: string) =>
  document.getElementById(id) as T;

const canvas = $("view") as unknown as HTMLCanvasElement;
const strip = $("legstrip") as unknown as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const stripCtx = strip.getContext("2d")!;
let view: Viewport = {
  width: canvas.width,
  height: canvas.height,
  cmPerPx: 0.2,
  centerX: 0,
  centerY: 0,
};

function sendGait() {
  link.send("set_gait", {
    freq_hz: clampTo("freq_hz", Number(($("freq") as HTMLInputElement).value)),
    duty: clampTo("duty", Number(($("duty") as HTMLInputElement).value)),
    amplitude: clampTo(
      "amplitude", Number(($("amplitude") as HTMLInputElement).value)),
    phase: ($("phase") as HTMLSelectElement).value as "out_of_phase" | "in_phase",
  }, "set_gait");
}

function sendOffset() {
  link.send("set_coil_offset", {
    offset: clampTo("offset", Number(($("offset") as HTMLInputElement).value)),
  }, "set_coil_offset");
}

function sendEnv() {
  link.send("set_env", {
    surface: ($("surface") as HTMLSelectElement).value,
    slope_deg: clampTo(
      "slope_deg", Number(($("slope") as HTMLInputElement).value)),
    payload_g: clampTo(
      "payload_g", Number(($("payload") as HTMLInputElement).value)),
    medium: ($("medium") as HTMLSelectElement).value as "ground" | "water",
  }, "set_env");
}

const gaitDebounced = debounce(sendGait, CONTROL_DEBOUNCE_MS);
const offsetDebounced = debounce(sendOffset, CONTROL_DEBOUNCE_MS);
const envDebounced = debounce(sendEnv, CONTROL_DEBOUNCE_MS);

function bind() {
  for (const id of ["freq", "duty", "amplitude", "phase"]) {
    $(id).addEventListener("input", () => {
      echoSliders();
      gaitDebounced();
    });
  }
  $("offset").addEventListener("input", () => {
    echoSliders();
    offsetDebounced();
  });
  $("offset").addEventListener("dblclick", () => {
    ($("offset") as HTMLInputElement).value = "0";
    echoSliders();
    offsetDebounced();
  });
  for (const id of ["surface", "slope", "payload", "medium"]) {
    $(id).addEventListener("change", envDebounced);
  }
  $("start").addEventListener("click", () => link.send("start", {}, "start"));
  $("stop").addEventListener("click", () => link.send("stop", {}, "stop"));
  $("reset").addEventListener("click", () => {
    link.send("reset", {}, "reset");
    state.trail.clear();
  });

  const surface = $("surface") as HTMLSelectElement;
  for (const name of SURFACES) {
    surface.add(new Option(name, name));
  }
  const medium = $("medium") as HTMLSelectElement;
  for (const name of MEDIA) medium.add(new Option(name, name));
  const phase = $("phase") as HTMLSelectElement;
  for (const name of PHASES) phase.add(new Option(name, name));

  const freq = $("freq") as HTMLInputElement;
  freq.min = String(LIMITS.freq_hz.min);
  freq.max = String(LIMITS.freq_hz.max);
}

function echoSliders() {
  $("freq-echo").textContent =
    Number(($("freq") as HTMLInputElement).value).toFixed(1) + " Hz";
  $("offset-echo").textContent =
    Number(($("offset") as HTMLInputElement).value).toFixed(2);
  $("duty-echo").textContent =
    Number(($("duty") as HTMLInputElement).value).toFixed(2);
  $("amplitude-echo").textContent =
    Number(($("amplitude") as HTMLInputElement).value).toFixed(2);
}

function repaint() {
  const frame = state.latest;
  if (frame) view = followTarget(view, frame.x_cm, frame.y_cm);
  drawScene(ctx, view, state.trail, frame);
  drawLegStrip(stripCtx, strip.width, strip.height, state.legHistory);

  $("status").textContent = state.status;
  $("status").className = "pill " + state.status;
  if (frame) {
    $("speed").textContent = frame.v_cm_s.toFixed(2) + " cm/s";
    $("mode").textContent = frame.mode;
    $("pose").textContent =
      `x ${frame.x_cm.toFixed(1)} cm   y ${frame.y_cm.toFixed(1)} cm   ` +
      `heading ${(frame.heading_rad * 180 / Math.PI).toFixed(1)} deg`;
    const bar = $("budget-bar");
    bar.style.width = `${Math.round(frame.thermal_budget * 100)}%`;
    bar.style.background = budgetColor(frame.thermal_budget, frame.mode);
    ($("start") as HTMLButtonElement).disabled = frame.mode === "cooldown";
  }
  $("dropped").textContent = String(state.malformedFrames);
  const overdue = state.overdue(Date.now());
  const err = state.lastError;
  $("warnings").textContent = overdue.length
    ? `no ack for ${overdue.map((p) => p.label).join(", ")}`
    : err ?? "";
  requestAnimationFrame(repaint);
}

bind();
echoSliders();
link.connect();
requestAnimationFrame(repaint);
