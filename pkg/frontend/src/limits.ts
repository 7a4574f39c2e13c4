// Client-side mirror of the firmware's accepted ranges: the console
// never sends a value the twin would reject.

export const LIMITS = {
  freq_hz: { min: 0.1, max: 20.0 },
  duty: { min: 0.05, max: 1.0 },
  amplitude: { min: 0.05, max: 1.0 },
  offset: { min: -1.0, max: 1.0 },
  slope_deg: { min: -30.0, max: 30.0 },
  payload_g: { min: 0.0, max: 200.0 },
} as const;

export type LimitName = keyof typeof LIMITS;

export function clampTo(name: LimitName, value: number): number {
  const { min, max } = LIMITS[name];
  if (!Number.isFinite(value)) return min;
  return Math.min(max, Math.max(min, value));
}

export const SURFACES = ["plastic_table", "paper", "foam", "office_tile"] as const;
export const MEDIA = ["ground", "water"] as const;
export const PHASES = ["out_of_phase", "in_phase"] as const;
