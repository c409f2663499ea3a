"""HTTP service exposing the engine under /v1.

Read endpoints return exactly what the underlying module operations return
on the same inputs; CSV endpoints stream the module CSV formats unchanged.
Annotations are the only mutable resource; pipeline runs are append-only
and execute one at a time. The service is an unauthenticated single-node
lab tool by design; do not expose it beyond a trusted network.
"""

from __future__ import annotations

import json
import os

from fastapi import FastAPI, HTTPException, Request, Response

from . import __version__
from .criteria import load_criteria_config, render_criteria_config
from .detections import parse_detections_csv
from .model import Annotation, DataError, parse_incident_class
from .pipeline import ASSESSMENTS_HEADER, PipelineConfig, RunKind, RunStore
from .risk import default_matrix, load_matrix, render_matrix
from .store import SampleStore, day_bounds
from .trees import export_tree_dot


def _sample_dict(s) -> dict:
    return {
        "ts": s.ts,
        "temp_c": s.temp,
        "i_r_a": s.i_r,
        "i_s_a": s.i_s,
        "i_t_a": s.i_t,
        "acc_x_g": s.acc_x,
        "acc_y_g": s.acc_y,
        "acc_z_g": s.acc_z,
        "operation": s.ctx.operation.value,
        "tool": s.ctx.tool,
        "material": s.ctx.material.value,
        "access": s.ctx.access.value,
    }


def _annotation_dict(a: Annotation) -> dict:
    return {
        "id": a.id,
        "ts_start": a.ts_start,
        "ts_end": a.ts_end,
        "note": a.note,
        "annotator": a.annotator,
        "incident_class": a.incident_class.value if a.incident_class else None,
    }


def _bad_request(exc: DataError) -> HTTPException:
    return HTTPException(status_code=400, detail=str(exc))


def _json_object(body, allowed: frozenset) -> dict:
    """Reject non-object bodies and typo'd keys instead of ignoring them."""
    if not isinstance(body, dict):
        raise HTTPException(status_code=400, detail="body must be a JSON object")
    unknown = sorted(set(body) - allowed)
    if unknown:
        raise HTTPException(
            status_code=400,
            detail="unknown key(s): %s (allowed: %s)"
            % (", ".join(unknown), ", ".join(sorted(allowed))),
        )
    return body


_RUN_KEYS = frozenset(
    {"kind", "from", "to", "seed", "cv_folds", "duration_s", "stride_s", "model_id"}
)
_ANNOTATION_KEYS = frozenset(
    {"id", "ts_start", "ts_end", "note", "annotator", "incident_class"}
)


def _parse_range(from_: str | None, to: str | None, day: str | None):
    if day is not None:
        d0, d1 = day_bounds(day)
        lo = int(from_) if from_ is not None else d0
        hi = int(to) if to is not None else d1
        return lo, hi, day
    if from_ is None or to is None:
        raise DataError("need either ?day= or both ?from= and ?to=")
    return int(from_), int(to), None


def create_app(
    data_dir: str,
    config_path: str | None = None,
    default_seed: int = 0,
    ui_dir: str | None = None,
) -> FastAPI:
    store = SampleStore(data_dir)
    runs = RunStore(data_dir)

    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            criteria_cfg = load_criteria_config(fh.read())
    else:
        criteria_cfg = None

    matrix_path = os.path.join(data_dir, "matrix.txt")
    if os.path.exists(matrix_path):
        with open(matrix_path, "r", encoding="utf-8") as fh:
            matrix = load_matrix(fh.read())
    else:
        matrix = default_matrix()

    app = FastAPI(title="millguard", version=__version__)
    app.state.store = store
    app.state.runs = runs
    app.state.matrix = matrix
    app.state.criteria = criteria_cfg
    app.state.default_seed = default_seed

    def make_config(body: dict) -> PipelineConfig:
        kwargs = {}
        if app.state.criteria is not None:
            kwargs["criteria"] = app.state.criteria
        return PipelineConfig(
            matrix=app.state.matrix,
            duration_s=int(body.get("duration_s", 30)),
            stride_s=int(body.get("stride_s", body.get("duration_s", 30))),
            seed=int(body.get("seed", app.state.default_seed)),
            cv_folds=int(body.get("cv_folds", 10)),
            **kwargs,
        )

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "service": "millguard", "version": __version__}

    @app.get("/v1/days")
    def days():
        return {"days": [{"day": d, "samples": n} for d, n in store.day_index()]}

    @app.post("/v1/ingest")
    async def ingest(request: Request):
        body = await request.body()
        try:
            report = store.ingest_csv(body)
        except DataError as exc:
            raise _bad_request(exc)
        return report.to_dict()

    @app.get("/v1/series")
    def series(
        request: Request,
        day: str | None = None,
        operation: str | None = None,
        tool: str | None = None,
        material: str | None = None,
        access: str | None = None,
    ):
        q = request.query_params
        try:
            lo, hi, day_key_ = _parse_range(q.get("from"), q.get("to"), day)
            samples = store.query_series(
                lo,
                hi,
                operation=operation,
                tool=tool,
                material=material,
                access=access,
                day=day_key_,
            )
        except (DataError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"count": len(samples), "samples": [_sample_dict(s) for s in samples]}

    @app.get("/v1/annotations")
    def list_annotations(request: Request):
        q = request.query_params
        if "from" in q or "to" in q or "day" in q:
            try:
                lo, hi, _ = _parse_range(q.get("from"), q.get("to"), q.get("day"))
            except (DataError, ValueError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            items = store.list_annotations(lo, hi)
        else:
            items = store.all_annotations()
        return {"annotations": [_annotation_dict(a) for a in items]}

    @app.post("/v1/annotations")
    async def post_annotation(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise HTTPException(status_code=400, detail="body must be JSON")
        body = _json_object(body, _ANNOTATION_KEYS)
        try:
            inc = body.get("incident_class")
            ann = Annotation(
                id=str(body.get("id", "")),
                ts_start=int(body["ts_start"]),
                ts_end=int(body["ts_end"]),
                note=str(body.get("note", "")),
                annotator=str(body.get("annotator", "")),
                incident_class=parse_incident_class(inc) if inc else None,
            )
            ann_id = store.upsert_annotation(ann)
        except KeyError as exc:
            raise HTTPException(status_code=400, detail=f"missing field {exc}")
        except (DataError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        stored = [a for a in store.all_annotations() if a.id == ann_id][0]
        return _annotation_dict(stored)

    @app.delete("/v1/annotations/{ann_id}")
    def delete_annotation(ann_id: str):
        try:
            store.delete_annotation(ann_id)
        except DataError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return {"deleted": ann_id}

    @app.post("/v1/runs")
    async def post_run(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise HTTPException(status_code=400, detail="body must be JSON")
        body = _json_object(body, _RUN_KEYS)
        try:
            kind = RunKind(body.get("kind", "Detect"))
        except ValueError:
            raise HTTPException(
                status_code=400, detail=f"unknown run kind {body.get('kind')!r}"
            )
        try:
            lo, hi = int(body["from"]), int(body["to"])
        except (KeyError, ValueError):
            raise HTTPException(status_code=400, detail="need integer from/to")
        model = None
        if body.get("model_id"):
            try:
                model = runs.load_model(str(body["model_id"]))
            except DataError as exc:
                raise HTTPException(status_code=404, detail=str(exc))
        try:
            cfg = make_config(body)
        except DataError as exc:
            raise _bad_request(exc)
        record = runs.execute(store, kind, lo, hi, cfg, model=model)
        return record.to_dict()

    @app.get("/v1/runs")
    def list_runs():
        return {"runs": [r.to_dict() for r in runs.list_runs()]}

    @app.get("/v1/runs/{run_id}")
    def get_run(run_id: str):
        try:
            return runs.get_run(run_id).to_dict()
        except DataError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/v1/runs/{run_id}/artifacts/{name}")
    def get_artifact(run_id: str, name: str):
        try:
            data = runs.read_artifact(run_id, name)
        except DataError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        media = "application/json" if name.endswith(".json") else "text/csv"
        return Response(content=data, media_type=media)

    def _latest_artifact(kinds: tuple[RunKind, ...], name: str) -> bytes | None:
        best = None
        for kind in kinds:
            r = runs.latest_done(kind)
            if r is not None and name in {n for n, _ in r.artifacts}:
                if best is None or r.run_id > best.run_id:
                    best = r
        if best is None:
            return None
        return runs.read_artifact(best.run_id, name)

    @app.get("/v1/detections")
    def detections(request: Request):
        q = request.query_params
        try:
            lo, hi, _ = _parse_range(q.get("from"), q.get("to"), q.get("day"))
        except (DataError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        data = _latest_artifact((RunKind.DETECT,), "detections.csv")
        if data is None:
            raise HTTPException(status_code=404, detail="no detect run yet")
        lines = data.decode("utf-8").splitlines()
        rows = parse_detections_csv(data.decode("utf-8"))
        keep = [
            lines[i + 1]
            for i, row in enumerate(rows)
            if row.window_start < hi and lo < row.window_end
        ]
        return Response(
            content="\n".join([lines[0]] + keep) + "\n", media_type="text/csv"
        )

    @app.get("/v1/assessments")
    def assessments(request: Request):
        q = request.query_params
        try:
            lo, hi, _ = _parse_range(q.get("from"), q.get("to"), q.get("day"))
        except (DataError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        data = _latest_artifact(
            (RunKind.DETECT, RunKind.ATTRIBUTE), "assessments.csv"
        )
        if data is None:
            raise HTTPException(status_code=404, detail="no assessment run yet")
        lines = data.decode("utf-8").splitlines()
        keep = [ASSESSMENTS_HEADER]
        for line in lines[1:]:
            if not line:
                continue
            start, end = int(line.split(",", 2)[0]), int(line.split(",", 2)[1])
            if start < hi and lo < end:
                keep.append(line)
        return Response(content="\n".join(keep) + "\n", media_type="text/csv")

    @app.get("/v1/matrix")
    def get_matrix():
        return Response(
            content=render_matrix(app.state.matrix), media_type="text/plain"
        )

    @app.put("/v1/matrix")
    async def put_matrix(request: Request):
        text = (await request.body()).decode("utf-8")
        try:
            m = load_matrix(text)
        except DataError as exc:
            raise _bad_request(exc)
        app.state.matrix = m
        tmp = matrix_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(render_matrix(m))
        os.replace(tmp, matrix_path)
        return Response(content=render_matrix(m), media_type="text/plain")

    @app.get("/v1/criteria-config")
    def get_criteria_config():
        from .criteria import CriteriaConfig

        cfg = app.state.criteria or CriteriaConfig()
        return Response(
            content=render_criteria_config(cfg), media_type="text/plain"
        )

    @app.get("/v1/models/{model_id}/trees/{n}.dot")
    def tree_dot(model_id: str, n: int):
        try:
            model = runs.load_model(model_id)
        except DataError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        try:
            dot = export_tree_dot(model, n)
        except DataError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return Response(content=dot, media_type="text/vnd.graphviz")

    if ui_dir:
        # mounted last so /v1 routes keep precedence; html=True serves
        # index.html for / and unknown paths stay plain 404s
        from starlette.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
