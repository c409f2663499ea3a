"""Pipeline runs: segment, criteria, label, train, predict, attribute.

A run is a pure function of (stored samples in range, config, seed); the
artifacts it persists are byte-deterministic so reruns can be compared by
digest. Wall-clock timings never enter artifacts. Runs persist under
`runs/<id>/` with a write-then-rename discipline: an interrupted run leaves
no partially visible artifact, and the record file is written last.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from enum import Enum

from .criteria import CriteriaConfig, FiringSet, build_history, evaluate_all
from .detections import export_detections_csv
from .labeling import (
    LabeledDataset,
    Taxonomy,
    default_taxonomy,
    derive_labels,
    export_labeled_csv,
)
from .metrics import EvalMetrics, cross_validate, select_model
from .model import DataError, Window
from .risk import RiskAssessment, RiskMatrix, attribute, default_matrix
from .store import SampleStore
from .trees import (
    Hyperparams,
    ModelKind,
    ModelSpec,
    TreeModel,
    predict,
    serialize_model,
    train,
)
from .windows import SHORT_WINDOW_S, segment_windows

ASSESSMENTS_HEADER = "window_start,window_end,origin,ranking"


class RunKind(str, Enum):
    LABEL = "Label"
    TRAIN = "Train"
    DETECT = "Detect"
    ATTRIBUTE = "Attribute"


class RunStatus(str, Enum):
    PENDING = "Pending"
    RUNNING = "Running"
    DONE = "Done"
    FAILED = "Failed"


def default_candidates(seed: int) -> tuple[ModelSpec, ...]:
    return (
        ModelSpec(
            kind=ModelKind.CART,
            hyperparams=Hyperparams(n_trees=1, bootstrap=False, seed=seed),
            name="cart",
        ),
        ModelSpec(
            kind=ModelKind.RANDOM_FOREST,
            hyperparams=Hyperparams(seed=seed),
            name="forest",
        ),
        ModelSpec(
            kind=ModelKind.EXTRA_TREES,
            hyperparams=Hyperparams(bootstrap=False, seed=seed),
            name="extra",
        ),
    )


@dataclass(frozen=True)
class PipelineConfig:
    criteria: CriteriaConfig = field(default_factory=CriteriaConfig)
    taxonomy: Taxonomy = field(default_factory=default_taxonomy)
    matrix: RiskMatrix = field(default_factory=default_matrix)
    duration_s: int = SHORT_WINDOW_S
    stride_s: int = SHORT_WINDOW_S
    seed: int = 0
    cv_folds: int = 10
    candidates: tuple[ModelSpec, ...] = ()

    def resolved_candidates(self) -> tuple[ModelSpec, ...]:
        return self.candidates or default_candidates(self.seed)

    def snapshot(self) -> dict:
        from .criteria import render_criteria_config
        from .risk import render_matrix

        return {
            "criteria": render_criteria_config(self.criteria),
            "matrix": render_matrix(self.matrix),
            "duration_s": self.duration_s,
            "stride_s": self.stride_s,
            "seed": self.seed,
            "cv_folds": self.cv_folds,
            "candidates": [s.label for s in self.resolved_candidates()],
        }


@dataclass
class RunRecord:
    run_id: str
    kind: RunKind
    ts_start: int
    ts_end: int
    status: RunStatus
    stage: str = ""
    error: str = ""
    config: dict = field(default_factory=dict)
    artifacts: tuple[tuple[str, str], ...] = ()
    created_at: float = 0.0

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "kind": self.kind.value,
            "ts_start": self.ts_start,
            "ts_end": self.ts_end,
            "status": self.status.value,
            "stage": self.stage,
            "error": self.error,
            "config": self.config,
            "artifacts": [[n, d] for n, d in self.artifacts],
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(
            run_id=d["run_id"],
            kind=RunKind(d["kind"]),
            ts_start=d["ts_start"],
            ts_end=d["ts_end"],
            status=RunStatus(d["status"]),
            stage=d.get("stage", ""),
            error=d.get("error", ""),
            config=d.get("config", {}),
            artifacts=tuple((n, dg) for n, dg in d.get("artifacts", [])),
            created_at=d.get("created_at", 0.0),
        )


class StageError(Exception):
    """Wraps a failure with the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineResult:
    kind: RunKind
    artifacts: dict[str, bytes]
    windows: list[Window]
    firing_sets: list[FiringSet]
    dataset: LabeledDataset | None = None
    model: TreeModel | None = None
    candidate_metrics: list[tuple[ModelSpec, EvalMetrics]] = field(
        default_factory=list
    )
    assessments: list[RiskAssessment] = field(default_factory=list)


def render_assessments_csv(assessments: list[RiskAssessment]) -> str:
    """`window_start,window_end,origin,ranking` with ranking entries as
    `risk:support:mean_score` joined by `;`."""
    lines = [ASSESSMENTS_HEADER]
    for a in assessments:
        if a.window is None:
            raise DataError("assessment without a window cannot be exported")
        ranking = ";".join(
            f"{e.risk.value}:{e.support}:{e.mean_score!r}" for e in a.ranking
        )
        lines.append(
            f"{a.window.ts_start},{a.window.ts_end},{a.origin.value},{ranking}"
        )
    return "\n".join(lines) + "\n"


def _stage(name: str):
    class _Ctx:
        def __enter__(self):
            return None

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, StageError):
                raise StageError(name, exc) from exc
            return False

    return _Ctx()


def run_pipeline(
    store: SampleStore,
    ts_start: int,
    ts_end: int,
    config: PipelineConfig | None = None,
    kind: RunKind = RunKind.DETECT,
    model: TreeModel | None = None,
) -> PipelineResult:
    """Execute the stages selected by `kind` and return in-memory artifacts.

    Detect runs the full chain (training included unless a pre-trained
    `model` is supplied); Label stops after labeling, Train after model
    selection, Attribute skips ML entirely.
    """
    cfg = config or PipelineConfig()
    artifacts: dict[str, bytes] = {}

    with _stage("segment"):
        samples = store.query_series(ts_start, ts_end)
        if not samples:
            raise DataError("no data in range")
        windows = segment_windows(
            samples, ts_start, ts_end, cfg.duration_s, cfg.stride_s
        )

    with _stage("criteria"):
        history = build_history(samples)
        firing_sets = [
            evaluate_all(w, cfg.criteria, history=history) for w in windows
        ]

    result = PipelineResult(kind=kind, artifacts=artifacts, windows=windows,
                            firing_sets=firing_sets)

    if kind is RunKind.ATTRIBUTE:
        with _stage("attribute"):
            result.assessments = [attribute(fs, cfg.matrix) for fs in firing_sets]
            artifacts["assessments.csv"] = render_assessments_csv(
                result.assessments
            ).encode("utf-8")
        return result

    with _stage("label"):
        annotations = store.all_annotations()
        ds = derive_labels(
            windows,
            cfg.criteria,
            cfg.taxonomy,
            history=history,
            annotations=annotations,
            firing_sets=firing_sets,
        )
        result.dataset = ds
        artifacts["labels.csv"] = export_labeled_csv(ds).encode("utf-8")

    if kind is RunKind.LABEL:
        return result

    if model is None:
        with _stage("train"):
            evaluated: list[tuple[ModelSpec, EvalMetrics]] = []
            for spec in cfg.resolved_candidates():
                m = cross_validate(ds, spec, k=cfg.cv_folds)
                evaluated.append((spec, m))
            result.candidate_metrics = evaluated
            # Selection must not depend on wall-clock noise: zero the times
            # so ties fall through to declaration order deterministically.
            zeroed = [(s, m.with_times(0.0, 0.0)) for s, m in evaluated]
            chosen = select_model(zeroed)
            model = train(chosen.kind, ds, chosen.hyperparams)
            artifacts["model.json"] = serialize_model(model)
            artifacts["metrics.json"] = _metrics_artifact(
                evaluated, chosen, model, ds
            )
    else:
        # A pre-trained model still yields the full Detect artifact set so
        # consumers never branch on how the model was obtained.
        with _stage("train"):
            artifacts["model.json"] = serialize_model(model)
            artifacts["metrics.json"] = _metrics_artifact([], None, model, ds)
    result.model = model

    if kind is RunKind.TRAIN:
        artifacts.pop("labels.csv", None)
        return result

    with _stage("predict"):
        predictions = predict(model, windows)
        artifacts["detections.csv"] = export_detections_csv(
            predictions, firing_sets, model.model_id
        ).encode("utf-8")

    with _stage("attribute"):
        result.assessments = [attribute(fs, cfg.matrix) for fs in firing_sets]
        artifacts["assessments.csv"] = render_assessments_csv(
            result.assessments
        ).encode("utf-8")

    artifacts.pop("labels.csv", None)
    return result


def _metrics_artifact(
    evaluated: list[tuple[ModelSpec, EvalMetrics]],
    chosen: ModelSpec | None,
    model: TreeModel,
    ds: LabeledDataset,
) -> bytes:
    counts: dict[str, int] = {}
    for lw in ds.windows:
        counts[lw.class_label] = counts.get(lw.class_label, 0) + 1
    payload = {
        "selected": chosen.label if chosen is not None else "supplied",
        "model_id": model.model_id,
        "n_windows": len(ds.windows),
        "class_counts": counts,
        "candidates": [
            {"name": spec.label, "kind": spec.kind.value, **m.to_dict()}
            for spec, m in evaluated
        ],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )


_EXPECTED_ARTIFACTS: dict[RunKind, tuple[str, ...]] = {
    RunKind.LABEL: ("labels.csv",),
    RunKind.TRAIN: ("model.json", "metrics.json"),
    RunKind.DETECT: (
        "detections.csv",
        "model.json",
        "metrics.json",
        "assessments.csv",
    ),
    RunKind.ATTRIBUTE: ("assessments.csv",),
}


class RunStore:
    """File-backed run persistence: one directory per run, records last.

    A single lock serializes pipeline execution; concurrent submissions
    queue rather than interleave so artifact digests never depend on
    scheduling.
    """

    def __init__(self, root: str):
        self.root = root
        self.runs_dir = os.path.join(root, "runs")
        self.models_dir = os.path.join(root, "models")
        os.makedirs(self.runs_dir, exist_ok=True)
        os.makedirs(self.models_dir, exist_ok=True)
        self._lock = threading.Lock()

    def _next_run_id(self) -> str:
        existing = [
            name
            for name in os.listdir(self.runs_dir)
            if name.startswith("r-") and name[2:].isdigit()
        ]
        n = max((int(name[2:]) for name in existing), default=0) + 1
        return f"r-{n:06d}"

    def _write_file(self, path: str, data: bytes) -> None:
        tmp = path + ".tmp"
        with open(tmp, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    def _write_record(self, record: RunRecord) -> None:
        path = os.path.join(self.runs_dir, record.run_id, "record.json")
        self._write_file(
            path, json.dumps(record.to_dict(), sort_keys=True, indent=2).encode()
        )

    def execute(
        self,
        store: SampleStore,
        kind: RunKind,
        ts_start: int,
        ts_end: int,
        config: PipelineConfig | None = None,
        model: TreeModel | None = None,
    ) -> RunRecord:
        """Run the pipeline and persist everything. Serialized store-wide."""
        cfg = config or PipelineConfig()
        with self._lock:
            run_id = self._next_run_id()
            run_dir = os.path.join(self.runs_dir, run_id)
            os.makedirs(run_dir, exist_ok=True)
            record = RunRecord(
                run_id=run_id,
                kind=kind,
                ts_start=ts_start,
                ts_end=ts_end,
                status=RunStatus.RUNNING,
                config=cfg.snapshot(),
                created_at=time.time(),
            )
            self._write_record(record)
            try:
                result = run_pipeline(
                    store, ts_start, ts_end, cfg, kind=kind, model=model
                )
            except StageError as exc:
                record.status = RunStatus.FAILED
                record.stage = exc.stage
                record.error = str(exc.cause)
                self._write_record(record)
                return record
            digests = []
            for name in _EXPECTED_ARTIFACTS[kind]:
                data = result.artifacts[name]
                self._write_file(os.path.join(run_dir, name), data)
                digests.append((name, hashlib.sha256(data).hexdigest()))
            if result.model is not None:
                self.register_model(result.model)
            record.status = RunStatus.DONE
            record.stage = ""
            record.artifacts = tuple(digests)
            self._write_record(record)
            return record

    def get_run(self, run_id: str) -> RunRecord:
        path = os.path.join(self.runs_dir, run_id, "record.json")
        if not os.path.exists(path):
            raise DataError(f"unknown run {run_id!r}")
        with open(path, "r", encoding="utf-8") as fh:
            return RunRecord.from_dict(json.load(fh))

    def list_runs(self) -> list[RunRecord]:
        out = []
        for name in sorted(os.listdir(self.runs_dir)):
            if name.startswith("r-"):
                try:
                    out.append(self.get_run(name))
                except (DataError, json.JSONDecodeError):
                    continue
        return out

    def read_artifact(self, run_id: str, name: str) -> bytes:
        record = self.get_run(run_id)
        if name not in {n for n, _ in record.artifacts}:
            raise DataError(f"run {run_id} has no artifact {name!r}")
        with open(os.path.join(self.runs_dir, run_id, name), "rb") as fh:
            return fh.read()

    def latest_done(self, kind: RunKind) -> RunRecord | None:
        done = [
            r
            for r in self.list_runs()
            if r.kind is kind and r.status is RunStatus.DONE
        ]
        return done[-1] if done else None

    # Model registry

    def register_model(self, model: TreeModel) -> str:
        model_id = model.model_id
        path = os.path.join(self.models_dir, f"{model_id}.json")
        if not os.path.exists(path):
            self._write_file(path, serialize_model(model))
        return model_id

    def load_model(self, model_id: str) -> TreeModel:
        from .trees import deserialize_model

        path = os.path.join(self.models_dir, f"{model_id}.json")
        if not os.path.exists(path):
            raise DataError(f"no model {model_id!r}")
        with open(path, "rb") as fh:
            return deserialize_model(fh.read())
