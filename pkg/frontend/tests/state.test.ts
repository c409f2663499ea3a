import { describe, expect, it } from "vitest";

import { ViewState } from "../src/state.js";

function withDays(): ViewState {
  const st = new ViewState();
  st.days = [
    { day: "2022-08-01", samples: 1200 },
    { day: "2022-08-02", samples: 900 },
  ];
  return st;
}

describe("ViewState.selectDay", () => {
  it("accepts only days present in the day index", () => {
    const st = withDays();
    st.selectDay("2022-08-02");
    expect(st.selectedDay).toBe("2022-08-02");
    expect(() => st.selectDay("2022-08-03")).toThrow(/not in the day index/);
    expect(st.selectedDay).toBe("2022-08-02");
  });

  it("drops any pending draft when the day changes", () => {
    const st = withDays();
    st.selectDay("2022-08-01");
    st.setDraft({
      ts_start: 1659312000 + 3600,
      ts_end: 1659312000 + 3900,
      note: "",
      annotator: "",
      incident_class: null,
    });
    expect(st.draft).not.toBeNull();
    st.selectDay("2022-08-02");
    expect(st.draft).toBeNull();
  });
});

describe("ViewState.setDraft", () => {
  const base = 1659312000; // 2022-08-01T00:00:00Z

  it("requires a selected day", () => {
    const st = withDays();
    expect(() =>
      st.setDraft({
        ts_start: base,
        ts_end: base + 60,
        note: "",
        annotator: "",
        incident_class: null,
      }),
    ).toThrow(/no day selected/);
  });

  it("rejects empty and inverted intervals", () => {
    const st = withDays();
    st.selectDay("2022-08-01");
    for (const [s, e] of [
      [base + 100, base + 100],
      [base + 200, base + 100],
    ]) {
      expect(() =>
        st.setDraft({
          ts_start: s!,
          ts_end: e!,
          note: "",
          annotator: "",
          incident_class: null,
        }),
      ).toThrow(/empty/);
    }
  });

  it("keeps the draft inside the displayed day", () => {
    const st = withDays();
    st.selectDay("2022-08-01");
    expect(() =>
      st.setDraft({
        ts_start: base - 10,
        ts_end: base + 60,
        note: "",
        annotator: "",
        incident_class: null,
      }),
    ).toThrow(/within 2022-08-01/);
    expect(() =>
      st.setDraft({
        ts_start: base + 86300,
        ts_end: base + 86500,
        note: "",
        annotator: "",
        incident_class: null,
      }),
    ).toThrow(/within 2022-08-01/);
    st.setDraft({
      ts_start: base + 86300,
      ts_end: base + 86400,
      note: "edge",
      annotator: "",
      incident_class: null,
    });
    expect(st.draft?.note).toBe("edge");
  });
});

describe("toggles", () => {
  it("tracks visible channels and overlays", () => {
    const st = new ViewState();
    expect(st.visibleChannels.has("temp_c")).toBe(true);
    st.toggleChannel("temp_c", false);
    expect(st.visibleChannels.has("temp_c")).toBe(false);
    st.toggleChannel("temp_c", true);
    expect(st.visibleChannels.has("temp_c")).toBe(true);

    expect(st.overlays.has("detections")).toBe(true);
    st.toggleOverlay("detections", false);
    expect(st.overlays.has("detections")).toBe(false);
  });
});
