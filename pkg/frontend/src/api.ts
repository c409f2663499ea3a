/**
 * Typed client for the telemetry service /v1 API.
 *
 * The dashboard holds no truth: everything rendered comes from these calls
 * and can be reproduced with the same parameters against the service. Wire
 * field names are kept verbatim (snake_case) so a payload seen in the
 * browser matches a payload seen with curl.
 */

export interface DayEntry {
  day: string;
  samples: number;
}

export interface Sample {
  ts: number;
  temp_c: number;
  i_r_a: number;
  i_s_a: number;
  i_t_a: number;
  acc_x_g: number;
  acc_y_g: number;
  acc_z_g: number;
  operation: string;
  tool: string;
  material: string;
  access: string;
}

export interface DetectionRow {
  window_start: number;
  window_end: number;
  duration_s: number;
  predicted_class: string;
  confidence: number;
  criteria_fired: string[];
  model_id: string;
}

export interface RankingEntry {
  risk: string;
  support: number;
  mean_score: number;
}

export interface AssessmentRow {
  window_start: number;
  window_end: number;
  origin: string;
  ranking: RankingEntry[];
}

export interface AnnotationRec {
  id: string;
  ts_start: number;
  ts_end: number;
  note: string;
  annotator: string;
  incident_class: string | null;
}

export interface AnnotationDraft {
  ts_start: number;
  ts_end: number;
  note: string;
  annotator: string;
  incident_class: string | null;
}

export interface MatrixRow {
  criterion: string;
  risks: string[];
}

export interface SeriesFilters {
  operation: string | null;
  tool: string | null;
  material: string | null;
  access: string | null;
}

/** Error from the service or from failing to reach it (status 0). */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

const DETECTIONS_HEADER =
  "window_start,window_end,duration_s,predicted_class,confidence," +
  "criteria_fired,model_id";
const ASSESSMENTS_HEADER = "window_start,window_end,origin,ranking";

export function parseDetectionsCsv(text: string): DetectionRow[] {
  const lines = text.split(/\r?\n/);
  if (lines[0] !== DETECTIONS_HEADER) {
    throw new ApiError(0, "bad detections header");
  }
  const rows: DetectionRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i];
    if (!line) continue;
    const parts = line.split(",");
    if (parts.length !== 7) {
      throw new ApiError(0, `detections line ${i + 1}: expected 7 fields`);
    }
    rows.push({
      window_start: Number(parts[0]),
      window_end: Number(parts[1]),
      duration_s: Number(parts[2]),
      predicted_class: parts[3]!,
      confidence: Number(parts[4]),
      criteria_fired: parts[5] ? parts[5].split(";").filter(Boolean) : [],
      model_id: parts[6]!,
    });
  }
  return rows;
}

export function parseAssessmentsCsv(text: string): AssessmentRow[] {
  const lines = text.split(/\r?\n/);
  if (lines[0] !== ASSESSMENTS_HEADER) {
    throw new ApiError(0, "bad assessments header");
  }
  const rows: AssessmentRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i];
    if (!line) continue;
    const parts = line.split(",");
    if (parts.length !== 4) {
      throw new ApiError(0, `assessments line ${i + 1}: expected 4 fields`);
    }
    const ranking: RankingEntry[] = [];
    if (parts[3]) {
      for (const entry of parts[3].split(";")) {
        const bits = entry.split(":");
        if (bits.length !== 3) {
          throw new ApiError(0, `assessments line ${i + 1}: bad ranking entry`);
        }
        ranking.push({
          risk: bits[0]!,
          support: Number(bits[1]),
          mean_score: Number(bits[2]),
        });
      }
    }
    rows.push({
      window_start: Number(parts[0]),
      window_end: Number(parts[1]),
      origin: parts[2]!,
      ranking,
    });
  }
  return rows;
}

export function parseMatrixText(text: string): MatrixRow[] {
  const rows: MatrixRow[] = [];
  for (const raw of text.split(/\r?\n/)) {
    const line = raw.trim();
    if (!line) continue;
    const colon = line.indexOf(":");
    if (colon < 1) {
      throw new ApiError(0, `bad matrix line: ${line}`);
    }
    const criterion = line.slice(0, colon).trim();
    const tail = line.slice(colon + 1).trim();
    rows.push({
      criterion,
      risks: tail ? tail.split(",").map((r) => r.trim()) : [],
    });
  }
  return rows;
}

async function errorFrom(res: Response): Promise<ApiError> {
  let detail = `${res.status} ${res.statusText}`;
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body; keep the status line */
  }
  return new ApiError(res.status, detail);
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private configLines: string[] | null = null;

  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) =>
      globalThis.fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let res: Response;
    try {
      res = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    if (!res.ok) throw await errorFrom(res);
    return res;
  }

  async days(): Promise<DayEntry[]> {
    const res = await this.request("/v1/days");
    return (await res.json()).days;
  }

  async series(day: string, filters: SeriesFilters): Promise<Sample[]> {
    const q = new URLSearchParams({ day });
    for (const key of ["operation", "tool", "material", "access"] as const) {
      const v = filters[key];
      if (v) q.set(key, v);
    }
    const res = await this.request(`/v1/series?${q}`);
    return (await res.json()).samples;
  }

  async detectionsForDay(day: string): Promise<DetectionRow[]> {
    const res = await this.request(
      `/v1/detections?${new URLSearchParams({ day })}`,
    );
    return parseDetectionsCsv(await res.text());
  }

  async assessmentsForDay(day: string): Promise<AssessmentRow[]> {
    const res = await this.request(
      `/v1/assessments?${new URLSearchParams({ day })}`,
    );
    return parseAssessmentsCsv(await res.text());
  }

  async annotationsForDay(day: string): Promise<AnnotationRec[]> {
    const res = await this.request(
      `/v1/annotations?${new URLSearchParams({ day })}`,
    );
    return (await res.json()).annotations;
  }

  async createAnnotation(draft: AnnotationDraft): Promise<AnnotationRec> {
    const body: Record<string, unknown> = {
      ts_start: draft.ts_start,
      ts_end: draft.ts_end,
      note: draft.note,
      annotator: draft.annotator,
    };
    if (draft.incident_class) body.incident_class = draft.incident_class;
    const res = await this.request("/v1/annotations", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return res.json();
  }

  async deleteAnnotation(id: string): Promise<void> {
    await this.request(`/v1/annotations/${id}`, { method: "DELETE" });
  }

  async matrix(): Promise<MatrixRow[]> {
    const res = await this.request("/v1/matrix");
    return parseMatrixText(await res.text());
  }

  /** Rendered criteria config, one `key = value` line per entry. Cached:
   * thresholds are file-owned and stable for the life of the service. */
  async criteriaConfigLines(): Promise<string[]> {
    if (this.configLines === null) {
      const res = await this.request("/v1/criteria-config");
      this.configLines = (await res.text())
        .split(/\r?\n/)
        .filter((ln) => ln.trim().length > 0);
    }
    return this.configLines;
  }
}
