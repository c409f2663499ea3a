/** Epoch/day helpers. All timestamps are UTC epoch seconds; days are
 * "YYYY-MM-DD" in UTC, matching the service's day index. */

export const DAY_S = 86400;

export function dayBounds(day: string): [number, number] {
  const m = /^(\d{4})-(\d{2})-(\d{2})$/.exec(day);
  if (!m) throw new Error(`bad day ${day}`);
  const start =
    Date.UTC(Number(m[1]), Number(m[2]) - 1, Number(m[3])) / 1000;
  return [start, start + DAY_S];
}

export function fmtClock(ts: number): string {
  const d = new Date(ts * 1000);
  const hh = String(d.getUTCHours()).padStart(2, "0");
  const mm = String(d.getUTCMinutes()).padStart(2, "0");
  const ss = String(d.getUTCSeconds()).padStart(2, "0");
  return ss === "00" ? `${hh}:${mm}` : `${hh}:${mm}:${ss}`;
}

export function fmtInterval(ts_start: number, ts_end: number): string {
  return `${fmtClock(ts_start)}–${fmtClock(ts_end)} UTC`;
}
