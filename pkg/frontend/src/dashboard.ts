/**
 * Dashboard orchestration: one day on screen at a time.
 *
 * Day-granular loading keeps payloads bounded and mirrors how experts review
 * the plant: pick a day, see every channel over the same time axis, overlay
 * detections, firings, and annotations, then check the cause/risk matrix for
 * what the anomalies imply. On any fetch failure the data sections are
 * cleared before the error banner shows, so a stale chart can never be
 * mistaken for current state.
 */

import type {
  AnnotationRec,
  AssessmentRow,
  DetectionRow,
  MatrixRow,
  Sample,
} from "./api.js";
import { ApiClient, ApiError } from "./api.js";
import { renderAnnotationPanel } from "./annotate.js";
import { renderDayCharts } from "./charts.js";
import { dayBounds } from "./format.js";
import { renderMatrix } from "./matrix.js";
import type { Channel, Overlay } from "./state.js";
import { CHANNELS, OVERLAYS, ViewState } from "./state.js";

const FILTER_KEYS = ["operation", "tool", "material", "access"] as const;
type FilterKey = (typeof FILTER_KEYS)[number];

const CHANNEL_LABELS: Record<Channel, string> = {
  temp_c: "temp",
  i_r_a: "I R",
  i_s_a: "I S",
  i_t_a: "I T",
  acc_x_g: "acc X",
  acc_y_g: "acc Y",
  acc_z_g: "acc Z",
};

interface DayData {
  samples: Sample[];
  detections: DetectionRow[];
  assessments: AssessmentRow[];
  annotations: AnnotationRec[];
  matrixRows: MatrixRow[];
  configLines: string[];
}

/** 404 from detections/assessments means no completed run covers the day;
 * that is an empty overlay, not a failure. */
async function orEmpty<T>(p: Promise<T[]>): Promise<T[]> {
  try {
    return await p;
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) return [];
    throw err;
  }
}

export class Dashboard {
  readonly state = new ViewState();
  private data: DayData | null = null;

  private readonly daySelect: HTMLSelectElement;
  private readonly filterSelects: Record<FilterKey, HTMLSelectElement>;
  private readonly errorBanner: HTMLElement;
  private readonly chartsEl: HTMLElement;
  private readonly annotationsEl: HTMLElement;
  private readonly matrixEl: HTMLElement;
  private readonly statsEl: HTMLElement;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {
    root.replaceChildren();
    root.classList.add("dashboard");

    const topbar = document.createElement("header");
    topbar.className = "topbar";
    const title = document.createElement("h1");
    title.textContent = "millguard";
    topbar.appendChild(title);

    const dayLabel = document.createElement("label");
    dayLabel.className = "control";
    const daySpan = document.createElement("span");
    daySpan.textContent = "day";
    this.daySelect = document.createElement("select");
    this.daySelect.id = "day-select";
    dayLabel.append(daySpan, this.daySelect);
    topbar.appendChild(dayLabel);

    this.filterSelects = {} as Record<FilterKey, HTMLSelectElement>;
    for (const key of FILTER_KEYS) {
      const label = document.createElement("label");
      label.className = "control";
      const span = document.createElement("span");
      span.textContent = key;
      const sel = document.createElement("select");
      sel.id = `filter-${key}`;
      label.append(span, sel);
      topbar.appendChild(label);
      this.filterSelects[key] = sel;
      sel.addEventListener("change", () => {
        this.state.filters[key] = sel.value || null;
        void this.refetchSeries();
      });
    }

    const channelBox = document.createElement("span");
    channelBox.className = "toggles";
    for (const ch of CHANNELS) {
      channelBox.appendChild(
        this.makeToggle(`channel-${ch}`, CHANNEL_LABELS[ch], true, (on) => {
          this.state.toggleChannel(ch, on);
          this.renderCharts();
        }),
      );
    }
    topbar.appendChild(channelBox);

    const overlayBox = document.createElement("span");
    overlayBox.className = "toggles";
    for (const ov of OVERLAYS) {
      overlayBox.appendChild(
        this.makeToggle(`overlay-${ov}`, ov, true, (on) => {
          this.state.toggleOverlay(ov as Overlay, on);
          this.renderCharts();
        }),
      );
    }
    topbar.appendChild(overlayBox);
    root.appendChild(topbar);

    this.errorBanner = document.createElement("div");
    this.errorBanner.id = "error-banner";
    this.errorBanner.className = "error-banner";
    this.errorBanner.hidden = true;
    root.appendChild(this.errorBanner);

    this.statsEl = document.createElement("div");
    this.statsEl.id = "day-stats";
    this.statsEl.className = "day-stats";
    root.appendChild(this.statsEl);

    const main = document.createElement("main");
    this.chartsEl = document.createElement("section");
    this.chartsEl.id = "charts";
    this.annotationsEl = document.createElement("section");
    this.annotationsEl.id = "annotation-panel";
    this.matrixEl = document.createElement("section");
    this.matrixEl.id = "matrix-panel";
    main.append(this.chartsEl, this.annotationsEl, this.matrixEl);
    root.appendChild(main);

    this.daySelect.addEventListener("change", () => {
      try {
        this.state.selectDay(this.daySelect.value);
      } catch (err) {
        this.showError(String(err instanceof Error ? err.message : err));
        return;
      }
      this.resetFilters();
      void this.loadDay();
    });
  }

  private makeToggle(
    id: string,
    label: string,
    checked: boolean,
    onChange: (on: boolean) => void,
  ): HTMLLabelElement {
    const wrap = document.createElement("label");
    wrap.className = "toggle";
    const box = document.createElement("input");
    box.type = "checkbox";
    box.id = id;
    box.checked = checked;
    box.addEventListener("change", () => onChange(box.checked));
    const span = document.createElement("span");
    span.textContent = label;
    wrap.append(box, span);
    return wrap;
  }

  async init(): Promise<void> {
    try {
      this.state.days = await this.api.days();
    } catch (err) {
      this.failHard(err);
      return;
    }
    this.daySelect.replaceChildren();
    for (const d of this.state.days) {
      const opt = document.createElement("option");
      opt.value = d.day;
      opt.textContent = `${d.day} (${d.samples} samples)`;
      this.daySelect.appendChild(opt);
    }
    if (this.state.days.length === 0) {
      this.statsEl.textContent = "no data ingested yet";
      return;
    }
    const first = this.state.days[0]!.day;
    this.daySelect.value = first;
    this.state.selectDay(first);
    await this.loadDay();
  }

  private resetFilters(): void {
    for (const key of FILTER_KEYS) this.state.filters[key] = null;
  }

  private showError(msg: string): void {
    this.errorBanner.textContent = msg;
    this.errorBanner.hidden = false;
  }

  private clearError(): void {
    this.errorBanner.hidden = true;
    this.errorBanner.textContent = "";
  }

  /** Error path for anything that leaves the screen unrepresentative:
   * wipe the data sections first, then surface the message. */
  private failHard(err: unknown): void {
    this.data = null;
    this.chartsEl.replaceChildren();
    this.annotationsEl.replaceChildren();
    this.matrixEl.replaceChildren();
    this.statsEl.textContent = "";
    this.showError(
      err instanceof ApiError
        ? err.detail
        : String(err instanceof Error ? err.message : err),
    );
  }

  async loadDay(): Promise<void> {
    const day = this.state.selectedDay;
    if (day === null) return;
    this.clearError();
    let data: DayData;
    try {
      const [samples, detections, assessments, annotations, matrixRows, configLines] =
        await Promise.all([
          this.api.series(day, this.state.filters),
          orEmpty(this.api.detectionsForDay(day)),
          orEmpty(this.api.assessmentsForDay(day)),
          this.api.annotationsForDay(day),
          this.api.matrix(),
          this.api.criteriaConfigLines(),
        ]);
      data = { samples, detections, assessments, annotations, matrixRows, configLines };
    } catch (err) {
      this.failHard(err);
      return;
    }
    this.data = data;
    const unfiltered = FILTER_KEYS.every((k) => this.state.filters[k] === null);
    if (unfiltered) this.rebuildFilterOptions(data.samples);
    this.renderAll();
  }

  /** Filter changes re-request /series only; overlays are window-aligned
   * and do not depend on the context filters. */
  private async refetchSeries(): Promise<void> {
    const day = this.state.selectedDay;
    if (day === null || this.data === null) return;
    this.clearError();
    try {
      this.data.samples = await this.api.series(day, this.state.filters);
    } catch (err) {
      this.failHard(err);
      return;
    }
    this.renderCharts();
    this.renderStats();
  }

  private rebuildFilterOptions(samples: Sample[]): void {
    for (const key of FILTER_KEYS) {
      const values = [...new Set(samples.map((s) => s[key]))].sort();
      const sel = this.filterSelects[key];
      sel.replaceChildren();
      const all = document.createElement("option");
      all.value = "";
      all.textContent = "(all)";
      sel.appendChild(all);
      for (const v of values) {
        const opt = document.createElement("option");
        opt.value = v;
        opt.textContent = v;
        sel.appendChild(opt);
      }
      sel.value = this.state.filters[key] ?? "";
    }
  }

  private renderAll(): void {
    this.renderCharts();
    this.renderAnnotations();
    this.renderMatrixPanel();
    this.renderStats();
  }

  private renderStats(): void {
    if (this.data === null || this.state.selectedDay === null) return;
    const anomalous = this.data.detections.filter(
      (d) => d.predicted_class !== "Normal",
    ).length;
    const assessed = this.data.assessments.filter(
      (a) => a.ranking.length > 0,
    ).length;
    this.statsEl.textContent =
      `${this.data.samples.length} samples · ` +
      `${anomalous} detected anomaly windows · ` +
      `${assessed} risk-assessed`;
  }

  private renderCharts(): void {
    if (this.data === null || this.state.selectedDay === null) return;
    const [x0, x1] = dayBounds(this.state.selectedDay);
    renderDayCharts(
      this.chartsEl,
      {
        day: this.state.selectedDay,
        x0,
        x1,
        samples: this.data.samples,
        detections: this.data.detections,
        assessments: this.data.assessments,
        annotations: this.data.annotations,
        configLines: this.data.configLines,
      },
      this.state,
    );
  }

  private renderAnnotations(): void {
    if (this.data === null) return;
    renderAnnotationPanel(this.annotationsEl, {
      state: this.state,
      api: this.api,
      annotations: this.data.annotations,
      onMutated: async () => {
        if (this.state.selectedDay === null || this.data === null) return;
        this.data.annotations = await this.api.annotationsForDay(
          this.state.selectedDay,
        );
        this.renderAnnotations();
        this.renderCharts();
      },
      showError: (msg) => this.showError(msg),
    });
  }

  private renderMatrixPanel(): void {
    if (this.data === null) return;
    this.matrixEl.replaceChildren();
    const heading = document.createElement("h2");
    heading.textContent = "Cause / risk matrix";
    this.matrixEl.appendChild(heading);
    const body = document.createElement("div");
    body.id = "matrix-body";
    this.matrixEl.appendChild(body);
    renderMatrix(
      body,
      this.data.matrixRows,
      this.data.detections,
      this.data.assessments,
    );
  }
}

export function createDashboard(root: HTMLElement, api: ApiClient): Dashboard {
  return new Dashboard(root, api);
}
