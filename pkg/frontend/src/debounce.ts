// Trailing debounce: rapid widget wiggles collapse into one command per
// quiet window.

export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
  schedule: (cb: () => void, ms: number) => unknown = setTimeout,
  cancel: (handle: unknown) => void = (h) =>
    clearTimeout(h as ReturnType<typeof setTimeout>),
): (...args: A) => void {
  let handle: unknown = null;
  return (...args: A) => {
    if (handle !== null) cancel(handle);
    handle = schedule(() => {
      handle = null;
      fn(...args);
    }, waitMs);
  };
}

export const CONTROL_DEBOUNCE_MS = 100;
