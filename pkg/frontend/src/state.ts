/** Client view state and its invariants. Pure data, no DOM, no fetch. */

import type { AnnotationDraft, DayEntry, SeriesFilters } from "./api.js";
import { dayBounds } from "./format.js";

export const CHANNELS = [
  "temp_c",
  "i_r_a",
  "i_s_a",
  "i_t_a",
  "acc_x_g",
  "acc_y_g",
  "acc_z_g",
] as const;
export type Channel = (typeof CHANNELS)[number];

export const OVERLAYS = ["annotations", "detections", "firings"] as const;
export type Overlay = (typeof OVERLAYS)[number];

export class ViewState {
  days: DayEntry[] = [];
  selectedDay: string | null = null;
  filters: SeriesFilters = {
    operation: null,
    tool: null,
    material: null,
    access: null,
  };
  visibleChannels = new Set<Channel>(CHANNELS);
  overlays = new Set<Overlay>(OVERLAYS);
  draft: AnnotationDraft | null = null;

  /** The selected day must exist in the store's day index. */
  selectDay(day: string): void {
    if (!this.days.some((d) => d.day === day)) {
      throw new Error(`day ${day} is not in the day index`);
    }
    this.selectedDay = day;
    this.draft = null;
  }

  /** A draft interval must lie within the displayed day and be non-empty. */
  setDraft(draft: AnnotationDraft): void {
    if (this.selectedDay === null) {
      throw new Error("no day selected");
    }
    const [lo, hi] = dayBounds(this.selectedDay);
    if (!(draft.ts_start < draft.ts_end)) {
      throw new Error("draft interval is empty");
    }
    if (draft.ts_start < lo || draft.ts_end > hi) {
      throw new Error(`draft must lie within ${this.selectedDay}`);
    }
    this.draft = draft;
  }

  clearDraft(): void {
    this.draft = null;
  }

  toggleChannel(ch: Channel, on: boolean): void {
    if (on) this.visibleChannels.add(ch);
    else this.visibleChannels.delete(ch);
  }

  toggleOverlay(ov: Overlay, on: boolean): void {
    if (on) this.overlays.add(ov);
    else this.overlays.delete(ov);
  }
}
