"""Command-line interface.

Machine-readable results go to stdout, diagnostics to stderr. Exit codes:
0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .criteria import (
    CriteriaConfig,
    build_history,
    evaluate_all,
    load_criteria_config,
    render_criteria_config,
)
from .model import DataError
from .pipeline import PipelineConfig, RunKind, StageError, run_pipeline
from .risk import default_matrix, load_matrix, render_matrix
from .scenarios import default_scenarios, scenario_by_name
from .simulator import simulate
from .store import SampleStore
from .trees import deserialize_model, export_tree_dot
from .windows import segment_windows


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); we use 1
        raise UsageError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    p = _Parser(prog="millguard", description="Machining anomaly detection engine")
    sub = p.add_subparsers(dest="command", metavar="command")

    sim = sub.add_parser("simulate", help="generate a scenario", add_help=True)
    sim.add_argument("--scenario", help="catalog scenario name")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", help="directory for telemetry.csv + ground_truth.csv")
    sim.add_argument("--stdout", action="store_true", help="print telemetry CSV")
    sim.add_argument("--list", action="store_true", help="list catalog scenarios")

    ing = sub.add_parser("ingest", help="ingest CSV files into a data dir")
    ing.add_argument("--data-dir", required=True)
    ing.add_argument("files", nargs="+")

    def _range_args(sp, window_args: bool = True):
        sp.add_argument("--data-dir", required=True)
        sp.add_argument("--from", dest="ts_from", type=int, required=True)
        sp.add_argument("--to", dest="ts_to", type=int, required=True)
        if window_args:
            sp.add_argument("--duration", type=int, default=30)
            sp.add_argument("--stride", type=int, default=None)
        sp.add_argument("--config", help="criteria config file")

    cri = sub.add_parser("criteria", help="evaluate criteria over windows")
    _range_args(cri)

    lab = sub.add_parser("label", help="derive window labels")
    _range_args(lab)
    lab.add_argument("--out", help="write labels CSV here instead of stdout")

    tra = sub.add_parser("train", help="train and select a model")
    _range_args(tra)
    tra.add_argument("--seed", type=int, default=0)
    tra.add_argument("--folds", type=int, default=10)
    tra.add_argument("--model-out", default="model.json")

    det = sub.add_parser("detect", help="score windows with a trained model")
    _range_args(det)
    det.add_argument("--model", help="model.json from a train run")
    det.add_argument("--out", help="write detections CSV here instead of stdout")

    att = sub.add_parser("attribute", help="risk assessments per window")
    _range_args(att)
    att.add_argument("--matrix", help="matrix config file (default: built-in)")

    mat = sub.add_parser("matrix", help="render or validate a risk matrix")
    mat.add_argument("--render", action="store_true", help="print default matrix")
    mat.add_argument("--check", help="load a matrix file and print it back")

    dot = sub.add_parser("export-dot", help="export one tree as Graphviz DOT")
    dot.add_argument("--model", required=True)
    dot.add_argument("--tree", type=int, default=0)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--data-dir", required=True)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8077)
    srv.add_argument("--config", help="criteria config file")
    srv.add_argument("--seed", type=int, default=0)
    srv.add_argument("--ui", help="directory of built dashboard files to serve at /")

    cfg = sub.add_parser("config", help="print the default criteria config")
    del cfg

    return p


def _load_criteria(path: str | None) -> CriteriaConfig:
    if not path:
        return CriteriaConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return load_criteria_config(fh.read())


def _pipeline_cfg(args, **overrides) -> PipelineConfig:
    duration = getattr(args, "duration", 30)
    stride = getattr(args, "stride", None)
    return PipelineConfig(
        criteria=_load_criteria(getattr(args, "config", None)),
        duration_s=duration,
        stride_s=stride if stride is not None else duration,
        **overrides,
    )


def _cmd_simulate(args) -> int:
    if args.list:
        for name in default_scenarios():
            print(name)
        return 0
    if not args.scenario:
        raise UsageError("simulate: --scenario or --list required")
    spec = scenario_by_name(args.scenario, seed=args.seed)
    result = simulate(spec)
    if args.out:
        result.write(args.out)
        print(
            json.dumps(
                {
                    "scenario": spec.name,
                    "seed": spec.seed,
                    "samples": result.n_samples,
                    "out": args.out,
                }
            )
        )
    elif args.stdout:
        for line in result.iter_csv_lines():
            print(line)
    else:
        raise UsageError("simulate: need --out DIR or --stdout")
    return 0


def _cmd_ingest(args) -> int:
    store = SampleStore(args.data_dir)
    reports = []
    for path in args.files:
        with open(path, "rb") as fh:
            report = store.ingest_csv(fh.read())
        reports.append({"file": path, **report.to_dict()})
    print(json.dumps({"ingested": reports}))
    return 0


def _cmd_criteria(args) -> int:
    store = SampleStore(args.data_dir)
    cfg = _load_criteria(args.config)
    samples = store.query_series(args.ts_from, args.ts_to)
    if not samples:
        raise DataError("no data in range")
    stride = args.stride if args.stride is not None else args.duration
    windows = segment_windows(samples, args.ts_from, args.ts_to, args.duration, stride)
    history = build_history(samples)
    for w in windows:
        fs = evaluate_all(w, cfg, history=history)
        print(
            json.dumps(
                {
                    "window_start": w.ts_start,
                    "window_end": w.ts_end,
                    "coverage": w.coverage,
                    "firings": [
                        {
                            "criterion": f.criterion.value,
                            "score": f.score,
                            "quantity": f.evidence.quantity,
                            "value": f.evidence.value,
                            "threshold": f.evidence.threshold,
                        }
                        for f in fs.firings
                    ],
                    "skipped": [[c.value, reason] for c, reason in fs.skipped],
                },
                sort_keys=True,
            )
        )
    return 0


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_label(args) -> int:
    store = SampleStore(args.data_dir)
    cfg = _pipeline_cfg(args)
    result = run_pipeline(store, args.ts_from, args.ts_to, cfg, kind=RunKind.LABEL)
    _emit(result.artifacts["labels.csv"].decode("utf-8"), args.out)
    return 0


def _cmd_train(args) -> int:
    store = SampleStore(args.data_dir)
    cfg = _pipeline_cfg(args, seed=args.seed, cv_folds=args.folds)
    result = run_pipeline(store, args.ts_from, args.ts_to, cfg, kind=RunKind.TRAIN)
    with open(args.model_out, "wb") as fh:
        fh.write(result.artifacts["model.json"])
    sys.stdout.write(result.artifacts["metrics.json"].decode("utf-8") + "\n")
    print(f"model written to {args.model_out}", file=sys.stderr)
    return 0


def _cmd_detect(args) -> int:
    import os

    if not args.model:
        raise DataError("no model: pass --model model.json from a train run")
    if not os.path.exists(args.model):
        raise DataError(f"no model: {args.model} does not exist")
    with open(args.model, "rb") as fh:
        model = deserialize_model(fh.read())
    store = SampleStore(args.data_dir)
    cfg = _pipeline_cfg(args)
    result = run_pipeline(
        store, args.ts_from, args.ts_to, cfg, kind=RunKind.DETECT, model=model
    )
    _emit(result.artifacts["detections.csv"].decode("utf-8"), args.out)
    return 0


def _cmd_attribute(args) -> int:
    store = SampleStore(args.data_dir)
    if args.matrix:
        with open(args.matrix, "r", encoding="utf-8") as fh:
            matrix = load_matrix(fh.read())
    else:
        matrix = default_matrix()
    cfg = _pipeline_cfg(args, matrix=matrix)
    result = run_pipeline(store, args.ts_from, args.ts_to, cfg, kind=RunKind.ATTRIBUTE)
    sys.stdout.write(result.artifacts["assessments.csv"].decode("utf-8"))
    return 0


def _cmd_matrix(args) -> int:
    if args.check:
        with open(args.check, "r", encoding="utf-8") as fh:
            matrix = load_matrix(fh.read())
        sys.stdout.write(render_matrix(matrix))
        return 0
    if args.render:
        sys.stdout.write(render_matrix(default_matrix()))
        return 0
    raise UsageError("matrix: need --render or --check FILE")


def _cmd_export_dot(args) -> int:
    with open(args.model, "rb") as fh:
        model = deserialize_model(fh.read())
    sys.stdout.write(export_tree_dot(model, args.tree))
    return 0


def _cmd_serve(args) -> int:
    import os

    import uvicorn

    from .service import create_app

    if args.ui and not os.path.isdir(args.ui):
        raise DataError(f"no dashboard: {args.ui} is not a directory")
    app = create_app(
        args.data_dir,
        config_path=args.config,
        default_seed=args.seed,
        ui_dir=args.ui,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_config(args) -> int:
    sys.stdout.write(render_criteria_config(CriteriaConfig()))
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "ingest": _cmd_ingest,
    "criteria": _cmd_criteria,
    "label": _cmd_label,
    "train": _cmd_train,
    "detect": _cmd_detect,
    "attribute": _cmd_attribute,
    "matrix": _cmd_matrix,
    "export-dot": _cmd_export_dot,
    "serve": _cmd_serve,
    "config": _cmd_config,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError(parser.format_usage().strip())
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"error at {exc.stage}: {exc.cause}", file=sys.stderr)
        return 2 if isinstance(exc.cause, DataError) else 3
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
