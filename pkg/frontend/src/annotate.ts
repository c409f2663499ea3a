/**
 * Annotation panel: the dashboard's only mutation path.
 *
 * Submits render optimistically and are rolled back if the service rejects
 * the write; the server's message is shown verbatim so the expert sees the
 * same diagnostics a curl user would.
 */

import type { AnnotationRec, ApiClient } from "./api.js";
import { ApiError } from "./api.js";
import { fmtInterval } from "./format.js";
import type { ViewState } from "./state.js";

export const INCIDENT_CLASSES = [
  "MachineFault",
  "CyberIncident",
  "Benign",
  "Unspecified",
] as const;

export interface AnnotatePanelDeps {
  state: ViewState;
  api: ApiClient;
  annotations: AnnotationRec[];
  /** re-fetch day data after a successful create/delete */
  onMutated: () => Promise<void>;
  showError: (msg: string) => void;
}

function annotationItem(
  a: AnnotationRec,
  pending: boolean,
  onDelete: (id: string) => void,
): HTMLLIElement {
  const li = document.createElement("li");
  li.className = pending ? "annotation-item pending" : "annotation-item";
  li.dataset.id = a.id;

  const when = document.createElement("span");
  when.className = "annotation-when";
  when.textContent = fmtInterval(a.ts_start, a.ts_end);
  li.appendChild(when);

  if (a.incident_class) {
    const cls = document.createElement("span");
    cls.className = `annotation-class badge badge-${a.incident_class}`;
    cls.textContent = a.incident_class;
    li.appendChild(cls);
  }

  const note = document.createElement("span");
  note.className = "annotation-note";
  note.textContent = a.note;
  li.appendChild(note);

  const by = document.createElement("span");
  by.className = "annotation-by";
  by.textContent = a.annotator ? `— ${a.annotator}` : "";
  li.appendChild(by);

  if (!pending) {
    const del = document.createElement("button");
    del.type = "button";
    del.className = "annotation-delete";
    del.textContent = "delete";
    del.addEventListener("click", () => onDelete(a.id));
    li.appendChild(del);
  }
  return li;
}

function numberField(
  form: HTMLFormElement,
  name: string,
  label: string,
  value: number,
): void {
  const wrap = document.createElement("label");
  wrap.className = "field";
  const span = document.createElement("span");
  span.textContent = label;
  const input = document.createElement("input");
  input.type = "number";
  input.name = name;
  input.required = true;
  input.value = String(value);
  wrap.append(span, input);
  form.appendChild(wrap);
}

export function renderAnnotationPanel(
  container: HTMLElement,
  deps: AnnotatePanelDeps,
): void {
  const { state, api, annotations, onMutated, showError } = deps;
  container.replaceChildren();

  const heading = document.createElement("h2");
  heading.textContent = "Annotations";
  container.appendChild(heading);

  const list = document.createElement("ul");
  list.className = "annotation-list";
  const deleteOne = async (id: string) => {
    try {
      await api.deleteAnnotation(id);
      await onMutated();
    } catch (err) {
      showError(err instanceof ApiError ? err.detail : String(err));
    }
  };
  for (const a of annotations) {
    list.appendChild(annotationItem(a, false, deleteOne));
  }
  container.appendChild(list);

  const form = document.createElement("form");
  form.className = "annotation-form";
  form.noValidate = true;

  const dayStart = annotations.length
    ? annotations[0]!.ts_start
    : state.selectedDay
      ? Math.floor(Date.parse(`${state.selectedDay}T06:00:00Z`) / 1000)
      : 0;
  numberField(form, "ts_start", "start (epoch s)", dayStart);
  numberField(form, "ts_end", "end (epoch s)", dayStart + 300);

  const noteWrap = document.createElement("label");
  noteWrap.className = "field";
  const noteLabel = document.createElement("span");
  noteLabel.textContent = "note";
  const note = document.createElement("input");
  note.type = "text";
  note.name = "note";
  noteWrap.append(noteLabel, note);
  form.appendChild(noteWrap);

  const byWrap = document.createElement("label");
  byWrap.className = "field";
  const byLabel = document.createElement("span");
  byLabel.textContent = "annotator";
  const by = document.createElement("input");
  by.type = "text";
  by.name = "annotator";
  byWrap.append(byLabel, by);
  form.appendChild(byWrap);

  const clsWrap = document.createElement("label");
  clsWrap.className = "field";
  const clsLabel = document.createElement("span");
  clsLabel.textContent = "class";
  const cls = document.createElement("select");
  cls.name = "incident_class";
  const blank = document.createElement("option");
  blank.value = "";
  blank.textContent = "(none)";
  cls.appendChild(blank);
  for (const c of INCIDENT_CLASSES) {
    const opt = document.createElement("option");
    opt.value = c;
    opt.textContent = c;
    cls.appendChild(opt);
  }
  clsWrap.append(clsLabel, cls);
  form.appendChild(clsWrap);

  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "annotate";
  form.appendChild(submit);

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void (async () => {
      const fd = new FormData(form);
      const draft = {
        ts_start: Number(fd.get("ts_start")),
        ts_end: Number(fd.get("ts_end")),
        note: String(fd.get("note") ?? ""),
        annotator: String(fd.get("annotator") ?? ""),
        incident_class: String(fd.get("incident_class") ?? "") || null,
      };
      try {
        state.setDraft(draft); // enforces the within-day invariant
      } catch (err) {
        showError(String(err instanceof Error ? err.message : err));
        return;
      }
      // optimistic: show the entry immediately, roll back on rejection
      const pendingItem = annotationItem(
        { id: "pending", ...draft },
        true,
        deleteOne,
      );
      list.appendChild(pendingItem);
      try {
        await api.createAnnotation(draft);
        state.clearDraft();
        await onMutated();
      } catch (err) {
        pendingItem.remove();
        state.clearDraft();
        showError(err instanceof ApiError ? err.detail : String(err));
      }
    })();
  });

  container.appendChild(form);
}
