/** Deterministic fixture data shaped like a short plant day. */

import type { Sample } from "../src/api.js";
import type { FakeAssessment, FakeDetection, FakeService } from "./fake.js";

export const DAY = "2022-08-01";
export const DAY_START = Date.parse(`${DAY}T00:00:00Z`) / 1000;
export const WORK_START = DAY_START + 6 * 3600; // plant logs from 06:00 UTC
export const MODEL_ID = "m-0123456789ab";

interface BlockSpec {
  offset: number; // seconds after WORK_START
  len: number;
  operation: string;
  tool: string;
  material: string;
  access?: string;
}

/** 1 Hz samples over a few operation blocks; values wiggle deterministically
 * so traces are not flat but tests stay reproducible. */
export function blockSamples(blocks: BlockSpec[]): Sample[] {
  const out: Sample[] = [];
  for (const b of blocks) {
    for (let k = 0; k < b.len; k++) {
      const ts = WORK_START + b.offset + k;
      const wig = Math.sin(k / 7);
      out.push({
        ts,
        temp_c: 28 + 0.4 * wig,
        i_r_a: 12 + 0.8 * wig,
        i_s_a: 12 + 0.8 * Math.sin(k / 9),
        i_t_a: 12 + 0.8 * Math.sin(k / 11),
        acc_x_g: 0.2 + 0.02 * wig,
        acc_y_g: 0.2 + 0.02 * Math.sin(k / 5),
        acc_z_g: 0.2 + 0.02 * Math.sin(k / 13),
        operation: b.operation,
        tool: b.tool,
        material: b.material,
        access: b.access ?? "Local",
      });
    }
  }
  return out;
}

export function defaultSamples(): Sample[] {
  return blockSamples([
    { offset: 0, len: 600, operation: "Facing", tool: "t-face-1", material: "Steel" },
    { offset: 600, len: 600, operation: "Drilling", tool: "t-drill-1", material: "Steel" },
  ]);
}

interface WindowSpec {
  offset: number; // seconds after WORK_START
  cls: string;
  fired?: string[];
}

/** 30 s windows tiling the first 20 minutes; `anomalies` overrides single
 * windows by offset. Matches how the service reports one row per window. */
export function tiledDetections(anomalies: WindowSpec[]): FakeDetection[] {
  const byOffset = new Map(anomalies.map((a) => [a.offset, a]));
  const rows: FakeDetection[] = [];
  for (let off = 0; off < 1200; off += 30) {
    const spec = byOffset.get(off);
    rows.push({
      window_start: WORK_START + off,
      window_end: WORK_START + off + 30,
      duration_s: 30,
      predicted_class: spec?.cls ?? "Normal",
      confidence: spec ? 0.9 : 1.0,
      criteria_fired: spec?.fired ?? [],
      model_id: MODEL_ID,
    });
  }
  return rows;
}

export function assessmentsFor(
  detections: FakeDetection[],
  rankingFor: (d: FakeDetection) => { origin: string; ranking: string },
): FakeAssessment[] {
  return detections.map((d) => {
    const { origin, ranking } =
      d.criteria_fired.length > 0
        ? rankingFor(d)
        : { origin: "Unknown", ranking: "" };
    return {
      window_start: d.window_start,
      window_end: d.window_end,
      origin,
      ranking,
    };
  });
}

/** Mixed-cause day: five anomalous windows across four classes. */
export function loadMixedDay(fake: FakeService): FakeDetection[] {
  fake.samples = defaultSamples();
  const anomalies: WindowSpec[] = [
    { offset: 60, cls: "ThermalAnomaly", fired: ["TempGradient"] },
    { offset: 240, cls: "SensorOrIdleAnomaly", fired: ["CurrentWithoutVibration"] },
    { offset: 600, cls: "VibrationAnomaly", fired: ["ExcessVibration"] },
    { offset: 810, cls: "SensorOrIdleAnomaly", fired: ["ZeroDrop"] },
    { offset: 1050, cls: "UsageAnomaly", fired: ["OutOfHoursUse"] },
  ];
  fake.detections = tiledDetections(anomalies);
  fake.assessments = assessmentsFor(fake.detections, (d) => {
    if (d.criteria_fired.includes("TempGradient")) {
      return { origin: "Mixed", ranking: "R1:1:0.8;R2:1:0.8;R4:1:0.8;R10:1:0.8" };
    }
    if (d.criteria_fired.includes("ZeroDrop")) {
      return { origin: "Mixed", ranking: "R6:1:0.6;R9:1:0.6" };
    }
    if (d.criteria_fired.includes("OutOfHoursUse")) {
      return { origin: "CyberIncident", ranking: "R10:1:1.0" };
    }
    return { origin: "MachineFault", ranking: "R3:1:0.5" };
  });
  return fake.detections;
}

/** A day whose only firings are OutOfHoursUse: attribution must touch R10
 * and nothing else. */
export function loadOutOfHoursDay(fake: FakeService): FakeDetection[] {
  fake.samples = defaultSamples();
  const anomalies: WindowSpec[] = [0, 30, 60, 90].map((off) => ({
    offset: off,
    cls: "UsageAnomaly",
    fired: ["OutOfHoursUse"],
  }));
  fake.detections = tiledDetections(anomalies);
  fake.assessments = assessmentsFor(fake.detections, () => ({
    origin: "CyberIncident",
    ranking: "R10:4:0.75",
  }));
  return fake.detections;
}

/** All-Normal day: a run covered it but nothing fired. */
export function loadQuietDay(fake: FakeService): void {
  fake.samples = defaultSamples();
  fake.detections = tiledDetections([]);
  fake.assessments = assessmentsFor(fake.detections, () => ({
    origin: "Unknown",
    ranking: "",
  }));
}
