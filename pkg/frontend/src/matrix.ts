/**
 * Cause/risk matrix view.
 *
 * Renders the service's criterion-to-risk matrix as a table and overlays
 * what actually happened in the selected day: firing counts per criterion
 * row, emphasis on exactly the risk columns attributed by the day's
 * assessments, and one badge per origin kind seen.
 */

import type { AssessmentRow, DetectionRow, MatrixRow } from "./api.js";

export const RISK_IDS = [
  "R1",
  "R2",
  "R3",
  "R4",
  "R5",
  "R6",
  "R7",
  "R8",
  "R9",
  "R10",
] as const;

export function firingCounts(detections: DetectionRow[]): Map<string, number> {
  const counts = new Map<string, number>();
  for (const d of detections) {
    for (const tok of d.criteria_fired) {
      counts.set(tok, (counts.get(tok) ?? 0) + 1);
    }
  }
  return counts;
}

export function attributedRisks(assessments: AssessmentRow[]): Set<string> {
  const risks = new Set<string>();
  for (const a of assessments) {
    for (const r of a.ranking) risks.add(r.risk);
  }
  return risks;
}

export function originCounts(assessments: AssessmentRow[]): Map<string, number> {
  const counts = new Map<string, number>();
  for (const a of assessments) {
    if (a.origin === "Unknown") continue;
    counts.set(a.origin, (counts.get(a.origin) ?? 0) + 1);
  }
  return counts;
}

export function renderMatrix(
  container: HTMLElement,
  rows: MatrixRow[],
  detections: DetectionRow[],
  assessments: AssessmentRow[],
): void {
  container.replaceChildren();

  const badges = document.createElement("div");
  badges.className = "origin-badges";
  const origins = originCounts(assessments);
  for (const origin of ["MachineFault", "CyberIncident", "Mixed"]) {
    const n = origins.get(origin);
    if (!n) continue;
    const badge = document.createElement("span");
    badge.className = `badge badge-${origin}`;
    badge.dataset.origin = origin;
    badge.textContent = `${origin} × ${n}`;
    badges.appendChild(badge);
  }
  if (!badges.childElementCount) {
    const none = document.createElement("span");
    none.className = "badge badge-none";
    none.textContent = "no assessed anomalies";
    badges.appendChild(none);
  }
  container.appendChild(badges);

  const counts = firingCounts(detections);
  const attributed = attributedRisks(assessments);

  const wrap = document.createElement("div");
  wrap.className = "matrix-scroll";
  const table = document.createElement("table");
  table.className = "matrix";

  const thead = document.createElement("thead");
  const headRow = document.createElement("tr");
  const corner = document.createElement("th");
  corner.textContent = "criterion \\ risk";
  headRow.appendChild(corner);
  for (const risk of RISK_IDS) {
    const th = document.createElement("th");
    th.dataset.risk = risk;
    th.textContent = risk;
    if (attributed.has(risk)) th.classList.add("attributed");
    headRow.appendChild(th);
  }
  thead.appendChild(headRow);
  table.appendChild(thead);

  const tbody = document.createElement("tbody");
  for (const row of rows) {
    const tr = document.createElement("tr");
    tr.dataset.criterion = row.criterion;
    const th = document.createElement("th");
    th.scope = "row";
    th.textContent = row.criterion;
    const n = counts.get(row.criterion) ?? 0;
    if (n > 0) {
      const count = document.createElement("span");
      count.className = "firing-count";
      count.textContent = ` × ${n}`;
      th.appendChild(count);
      tr.classList.add("fired");
    }
    tr.appendChild(th);
    for (const risk of RISK_IDS) {
      const td = document.createElement("td");
      td.dataset.risk = risk;
      if (row.risks.includes(risk)) {
        td.classList.add("mapped");
        td.textContent = "●";
      }
      if (attributed.has(risk)) td.classList.add("attributed");
      tr.appendChild(td);
    }
    tbody.appendChild(tr);
  }
  table.appendChild(tbody);
  wrap.appendChild(table);
  container.appendChild(wrap);
}
