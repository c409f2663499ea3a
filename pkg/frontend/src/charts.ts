/**
 * Synchronized SVG channel charts for one day.
 *
 * Every chart shares the same x-domain (the selected day's bounds), so a
 * vertical position means the same instant in all of them. Overlay layers
 * are kept separate: model detections render as shaded bands, rule-criteria
 * firings as a marker strip, annotations as outlined spans. Each layer can
 * be reproduced with one service call, and each element carries the source
 * timestamps in data attributes.
 */

import type {
  AnnotationRec,
  AssessmentRow,
  DetectionRow,
  Sample,
} from "./api.js";
import { fmtClock, fmtInterval } from "./format.js";
import type { Channel, ViewState } from "./state.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const W = 1000;
const H = 150;
const PAD_L = 52;
const PAD_R = 10;
const PAD_T = 14;
const PAD_B = 20;

interface TraceSpec {
  key: Channel;
  label: string;
  color: string;
}

interface GroupSpec {
  id: string;
  title: string;
  unit: string;
  traces: TraceSpec[];
}

export const CHART_GROUPS: GroupSpec[] = [
  {
    id: "temperature",
    title: "Temperature",
    unit: "°C",
    traces: [{ key: "temp_c", label: "temp", color: "#c0392b" }],
  },
  {
    id: "current",
    title: "Phase current",
    unit: "A",
    traces: [
      { key: "i_r_a", label: "R", color: "#1f77b4" },
      { key: "i_s_a", label: "S", color: "#2ca02c" },
      { key: "i_t_a", label: "T", color: "#9467bd" },
    ],
  },
  {
    id: "vibration",
    title: "Vibration",
    unit: "g",
    traces: [
      { key: "acc_x_g", label: "X", color: "#e67e22" },
      { key: "acc_y_g", label: "Y", color: "#16a085" },
      { key: "acc_z_g", label: "Z", color: "#7f8c8d" },
    ],
  },
];

/** Criterion token -> criteria-config key prefixes, to surface the
 * configured thresholds in firing tooltips. */
const CRITERION_CONFIG_PREFIX: Record<string, string[]> = {
  TempGradient: ["temp_gradient."],
  CurrentPeakCount: ["current_peak_count."],
  CurrentWithoutVibration: ["current.", "vibration.vib_rms_min"],
  VibrationWithoutCurrent_C: ["current.", "vibration.vib_rms_min"],
  ExcessVibration: ["vibration.vib_rms_max"],
  VibrationWithoutCurrent_V: ["current.", "vibration.vib_rms_min"],
  SpindleRpmRise: ["spindle_rpm_rise."],
  OutOfHoursUse: ["calendar."],
  ZeroDrop: ["zero_drop."],
  CurrentIntensityChange: ["current_intensity_change."],
};

export interface ChartData {
  day: string;
  x0: number;
  x1: number;
  samples: Sample[];
  detections: DetectionRow[];
  assessments: AssessmentRow[];
  annotations: AnnotationRec[];
  configLines: string[];
}

function el<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number> = {},
): SVGElementTagNameMap[K] {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, String(v));
  }
  return node;
}

function withTitle(node: SVGElement, text: string): void {
  const t = document.createElementNS(SVG_NS, "title");
  t.textContent = text;
  node.appendChild(t);
}

/** Break a sample run into contiguous segments; the plant stops logging
 * outside schedule blocks and a polyline must not bridge those gaps. */
function segments(samples: Sample[], maxGapS = 10): Sample[][] {
  const out: Sample[][] = [];
  let cur: Sample[] = [];
  let prev: number | null = null;
  for (const s of samples) {
    if (prev !== null && s.ts - prev > maxGapS) {
      if (cur.length) out.push(cur);
      cur = [];
    }
    cur.push(s);
    prev = s.ts;
  }
  if (cur.length) out.push(cur);
  return out;
}

/** Min/max decimation: one (min, max) pair per time bucket keeps spikes
 * visible while bounding the polyline size for a full day of 1 Hz data. */
function decimate(
  seg: Sample[],
  key: Channel,
  bucketS: number,
): Array<[number, number]> {
  if (seg.length <= 2 || bucketS <= 1) {
    return seg.map((s) => [s.ts, s[key]]);
  }
  const pts: Array<[number, number]> = [];
  let b0 = seg[0]!.ts;
  let lo: Sample = seg[0]!;
  let hi: Sample = seg[0]!;
  const flush = () => {
    if (lo.ts <= hi.ts) {
      pts.push([lo.ts, lo[key]]);
      if (hi.ts !== lo.ts) pts.push([hi.ts, hi[key]]);
    } else {
      pts.push([hi.ts, hi[key]]);
      pts.push([lo.ts, lo[key]]);
    }
  };
  for (const s of seg) {
    if (s.ts - b0 >= bucketS) {
      flush();
      b0 = s.ts;
      lo = s;
      hi = s;
      continue;
    }
    if (s[key] < lo[key]) lo = s;
    if (s[key] > hi[key]) hi = s;
  }
  flush();
  return pts;
}

function configLinesFor(tokens: string[], configLines: string[]): string[] {
  const out: string[] = [];
  for (const tok of tokens) {
    for (const prefix of CRITERION_CONFIG_PREFIX[tok] ?? []) {
      for (const ln of configLines) {
        if (ln.startsWith(prefix) && !out.includes(ln)) out.push(ln);
      }
    }
  }
  return out;
}

function scoresFor(ws: number, assessments: AssessmentRow[]): string[] {
  const row = assessments.find((a) => a.window_start === ws);
  if (!row || row.ranking.length === 0) return [];
  return row.ranking.map(
    (r) => `${r.risk} score ${r.mean_score.toFixed(3)} (support ${r.support})`,
  );
}

function renderGroup(
  spec: GroupSpec,
  data: ChartData,
  state: ViewState,
): HTMLElement {
  const box = document.createElement("figure");
  box.className = "chart";
  box.dataset.group = spec.id;

  const caption = document.createElement("figcaption");
  caption.textContent = `${spec.title} (${spec.unit})`;
  box.appendChild(caption);

  const svg = el("svg", {
    viewBox: `0 0 ${W} ${H}`,
    preserveAspectRatio: "none",
    role: "img",
  });
  svg.dataset.x0 = String(data.x0);
  svg.dataset.x1 = String(data.x1);

  const x = (ts: number) =>
    PAD_L + ((ts - data.x0) / (data.x1 - data.x0)) * (W - PAD_L - PAD_R);

  const visible = spec.traces.filter((t) => state.visibleChannels.has(t.key));

  // y-domain across visible traces, padded so flat lines stay off the frame
  let yLo = Infinity;
  let yHi = -Infinity;
  for (const t of visible) {
    for (const s of data.samples) {
      const v = s[t.key];
      if (v < yLo) yLo = v;
      if (v > yHi) yHi = v;
    }
  }
  if (!isFinite(yLo)) {
    yLo = 0;
    yHi = 1;
  }
  if (yHi - yLo < 1e-9) {
    yLo -= 0.5;
    yHi += 0.5;
  }
  const span = yHi - yLo;
  yLo -= span * 0.06;
  yHi += span * 0.06;
  const y = (v: number) =>
    H - PAD_B - ((v - yLo) / (yHi - yLo)) * (H - PAD_T - PAD_B);

  // frame and hour ticks
  svg.appendChild(
    el("rect", {
      class: "frame",
      x: PAD_L,
      y: PAD_T,
      width: W - PAD_L - PAD_R,
      height: H - PAD_T - PAD_B,
    }),
  );
  for (let ts = data.x0; ts <= data.x1; ts += 3 * 3600) {
    const tx = x(ts);
    svg.appendChild(
      el("line", {
        class: "tick",
        x1: tx,
        y1: H - PAD_B,
        x2: tx,
        y2: H - PAD_B + 4,
      }),
    );
    const label = el("text", {
      class: "tick-label",
      x: tx,
      y: H - 6,
      "text-anchor": "middle",
    });
    label.textContent = fmtClock(ts);
    svg.appendChild(label);
  }
  for (const v of [yLo + span * 0.06, yHi - span * 0.06]) {
    const label = el("text", {
      class: "tick-label",
      x: PAD_L - 4,
      y: y(v) + 3,
      "text-anchor": "end",
    });
    label.textContent = v.toPrecision(3);
    svg.appendChild(label);
  }

  // detections layer: one shaded band per anomalous window
  if (state.overlays.has("detections")) {
    const layer = el("g", { class: "layer-detections" });
    for (const d of data.detections) {
      if (d.predicted_class === "Normal") continue;
      const band = el("rect", {
        class: `band band-${d.predicted_class}`,
        x: x(d.window_start),
        y: PAD_T,
        width: Math.max(x(d.window_end) - x(d.window_start), 1.5),
        height: H - PAD_T - PAD_B,
      });
      band.dataset.windowStart = String(d.window_start);
      band.dataset.windowEnd = String(d.window_end);
      band.dataset.class = d.predicted_class;
      const fired = d.criteria_fired.length
        ? `\nfired: ${d.criteria_fired.join(", ")}`
        : "";
      withTitle(
        band,
        `${d.predicted_class} ${fmtInterval(d.window_start, d.window_end)}` +
          `\nconfidence ${d.confidence.toFixed(2)}${fired}`,
      );
      layer.appendChild(band);
    }
    svg.appendChild(layer);
  }

  // annotations layer
  if (state.overlays.has("annotations")) {
    const layer = el("g", { class: "layer-annotations" });
    for (const a of data.annotations) {
      const rect = el("rect", {
        class: "annotation",
        x: x(Math.max(a.ts_start, data.x0)),
        y: PAD_T,
        width: Math.max(
          x(Math.min(a.ts_end, data.x1)) - x(Math.max(a.ts_start, data.x0)),
          1.5,
        ),
        height: H - PAD_T - PAD_B,
      });
      rect.dataset.id = a.id;
      const cls = a.incident_class ? ` [${a.incident_class}]` : "";
      withTitle(
        rect,
        `${a.note}${cls}\n${a.annotator} ${fmtInterval(a.ts_start, a.ts_end)}`,
      );
      layer.appendChild(rect);
    }
    svg.appendChild(layer);
  }

  // traces above the shading so lines stay readable
  const bucketS = Math.max(1, Math.floor((data.x1 - data.x0) / 1200));
  for (const t of visible) {
    for (const seg of segments(data.samples)) {
      const pts = decimate(seg, t.key, bucketS);
      const poly = el("polyline", {
        class: "trace",
        points: pts.map(([ts, v]) => `${x(ts)},${y(v)}`).join(" "),
        stroke: t.color,
      });
      poly.dataset.channel = t.key;
      svg.appendChild(poly);
    }
  }

  // criteria firings: marker strip along the top, distinct from detections
  if (state.overlays.has("firings")) {
    const layer = el("g", { class: "layer-firings" });
    for (const d of data.detections) {
      if (d.criteria_fired.length === 0) continue;
      const mark = el("rect", {
        class: "firing",
        x: x(d.window_start),
        y: 2,
        width: Math.max(x(d.window_end) - x(d.window_start), 1.5),
        height: 8,
      });
      mark.dataset.windowStart = String(d.window_start);
      mark.dataset.criteria = d.criteria_fired.join(";");
      const lines = [
        d.criteria_fired.join(", "),
        ...scoresFor(d.window_start, data.assessments),
        ...configLinesFor(d.criteria_fired, data.configLines),
      ];
      withTitle(mark, lines.join("\n"));
      layer.appendChild(mark);
    }
    svg.appendChild(layer);
  }

  box.appendChild(svg);

  const legend = document.createElement("div");
  legend.className = "legend";
  for (const t of visible) {
    const item = document.createElement("span");
    item.className = "legend-item";
    item.style.color = t.color;
    item.textContent = t.label;
    legend.appendChild(item);
  }
  box.appendChild(legend);
  return box;
}

/** Render all chart groups for the day into `container` (replacing it). */
export function renderDayCharts(
  container: HTMLElement,
  data: ChartData,
  state: ViewState,
): void {
  container.replaceChildren();
  container.dataset.day = data.day;
  container.dataset.nSamples = String(data.samples.length);
  for (const spec of CHART_GROUPS) {
    if (!spec.traces.some((t) => state.visibleChannels.has(t.key))) continue;
    container.appendChild(renderGroup(spec, data, state));
  }
}
