"""From-scratch CART, random forest, and extra-trees classifiers.

Split search is exact greedy CART: candidate thresholds are midpoints
between consecutive distinct sorted values of each candidate feature, the
best split minimizes Gini-weighted child impurity, and ties break on
(lowest feature index, lowest threshold). Randomness (bootstrap resampling,
per-node feature sampling, extra-trees thresholds) comes exclusively from
counter-based streams keyed by (seed, tree index), so a model is a pure
function of (data order, hyperparams, seed) regardless of how training is
scheduled.

Zero-gain splits are allowed (stopping is by depth, leaf size, or purity);
this is what lets a depth-2 tree solve XOR-style data where no single split
improves impurity.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .features import FEATURE_NAMES, MAX_CURRENT_FEATURES, SCHEMA_VERSION, feature_matrix
from .labeling import LabeledDataset
from .model import DataError, Window
from .rng import tree_stream

SERIAL_FORMAT = "millguard-tree"
SERIAL_VERSION = 1


def gini(counts) -> float:
    """Gini impurity 1 - sum(p_i^2) of a class-count vector."""
    arr = np.asarray(counts, dtype=float)
    if (arr < 0).any():
        raise DataError("gini counts must be non-negative")
    total = arr.sum()
    if total == 0:
        raise DataError("gini requires at least one count")
    p = arr / total
    return float(1.0 - np.sum(p * p))


class ModelKind(str, Enum):
    CART = "cart"
    RANDOM_FOREST = "random_forest"
    EXTRA_TREES = "extra_trees"


@dataclass(frozen=True)
class Hyperparams:
    max_depth: int = 12
    min_samples_leaf: int = 1
    n_trees: int = 15
    features_per_split: int | None = None  # None: ceil(sqrt(p)) for ensembles
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise DataError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise DataError("min_samples_leaf must be >= 1")
        if self.n_trees < 1:
            raise DataError("n_trees must be >= 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise DataError("features_per_split must be >= 1")


@dataclass(frozen=True)
class ModelSpec:
    """A candidate model: algorithm kind plus hyperparameters."""

    kind: ModelKind
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    name: str = ""

    @property
    def label(self) -> str:
        return self.name or self.kind.value


@dataclass
class _Tree:
    """Array-encoded binary tree. feature[i] == -1 marks a leaf."""

    feature: np.ndarray  # int32
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    counts: np.ndarray  # (n_nodes, K) int64; meaningful at leaves

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index for every row, vectorized level by level."""
        node = np.zeros(len(X), dtype=np.int32)
        if len(X) == 0:
            return node
        while True:
            feats = self.feature[node]
            active = feats >= 0
            if not active.any():
                return node
            rows = np.nonzero(active)[0]
            fv = X[rows, feats[rows]]
            go_left = fv <= self.threshold[node[rows]]
            node[rows] = np.where(
                go_left, self.left[node[rows]], self.right[node[rows]]
            )


@dataclass
class TreeModel:
    kind: ModelKind
    trees: list[_Tree]
    classes: tuple[str, ...]
    hyperparams: Hyperparams
    schema: str = SCHEMA_VERSION

    def __post_init__(self) -> None:
        k = len(self.classes)
        for t in self.trees:
            if t.counts.shape[1] != k:
                raise DataError("tree class-count width != class set size")
            split = t.feature >= 0
            if (t.counts[~split] < 0).any():
                raise DataError("negative leaf counts")

    @property
    def n_features(self) -> int:
        if self.schema == SCHEMA_VERSION:
            return len(FEATURE_NAMES)
        if self.schema.startswith("raw:"):
            return int(self.schema.split(":", 1)[1])
        raise DataError(f"unknown feature schema {self.schema!r}")

    @property
    def model_id(self) -> str:
        digest = hashlib.sha256(serialize_model(self)).hexdigest()
        return f"m-{digest[:12]}"


@dataclass(frozen=True)
class MatrixDataset:
    """A plain (X, labels) dataset for the trainers, bypassing windows."""

    X: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.X) != len(self.labels):
            raise DataError("X and labels must align")

    @property
    def schema(self) -> str:
        return f"raw:{self.X.shape[1]}"


def _design(ds: LabeledDataset | MatrixDataset) -> tuple[np.ndarray, tuple[str, ...], str]:
    """(X, labels, schema) for either dataset form."""
    if isinstance(ds, MatrixDataset):
        return ds.X, ds.labels, ds.schema
    X = feature_matrix([lw.window for lw in ds.windows])
    return X, ds.labels, SCHEMA_VERSION


# --------------------------------------------------------------------------
# CART split machinery


def _best_split_sorted(
    X: np.ndarray,
    y: np.ndarray,
    sorted_idx: dict[int, np.ndarray],
    candidates: np.ndarray,
    k: int,
    min_leaf: int,
):
    """Best (weighted_gini, feature, threshold) over candidate features.

    sorted_idx[f] holds the node's sample indices ordered by feature f.
    Returns None when no candidate feature admits a valid split.
    """
    best: tuple[float, int, float] | None = None
    for f in candidates:
        order = sorted_idx[int(f)]
        xs = X[order, int(f)]
        m = len(order)
        if m < 2 * min_leaf:
            return None  # same for every feature; bail out early
        ys = y[order]
        onehot = np.zeros((m, k), dtype=np.int64)
        onehot[np.arange(m), ys] = 1
        cum = np.cumsum(onehot, axis=0)
        total = cum[-1]

        pos = np.arange(min_leaf, m - min_leaf + 1)  # left sizes
        if len(pos) == 0:
            continue
        boundary = xs[pos - 1] < xs[pos]
        pos = pos[boundary]
        if len(pos) == 0:
            continue
        left = cum[pos - 1]
        right = total[None, :] - left
        nl = pos.astype(float)
        nr = m - nl
        gl = 1.0 - np.sum((left / nl[:, None]) ** 2, axis=1)
        gr = 1.0 - np.sum((right / nr[:, None]) ** 2, axis=1)
        weighted = (nl * gl + nr * gr) / m
        j = int(np.argmin(weighted))  # first minimum -> lowest threshold
        w = float(weighted[j])
        thr = (xs[pos[j] - 1] + xs[pos[j]]) / 2.0
        if best is None or w < best[0]:  # strict: earlier feature wins ties
            best = (w, int(f), float(thr))
    return best


class _TreeBuilder:
    """Grows one tree; collects nodes in preorder (parent, left, right)."""

    def __init__(
        self,
        X: np.ndarray,
        y: np.ndarray,
        k: int,
        hp: Hyperparams,
        rng: np.random.Generator | None,
        features_per_split: int,
        extra: bool,
    ):
        self.X = X
        self.y = y
        self.k = k
        self.hp = hp
        self.rng = rng
        self.fps = features_per_split
        self.extra = extra
        self.p = X.shape[1]
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.counts: list[np.ndarray] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.counts.append(np.zeros(self.k, dtype=np.int64))
        return len(self.feature) - 1

    def _sample_features(self) -> np.ndarray:
        if self.fps >= self.p:
            return np.arange(self.p)
        assert self.rng is not None
        return np.sort(self.rng.choice(self.p, size=self.fps, replace=False))

    def build_sorted(self, sorted_idx: dict[int, np.ndarray]) -> _Tree:
        """CART/forest path: maintains per-feature sorted index arrays."""
        self._grow_sorted(sorted_idx, depth=0)
        return self._finish()

    def _grow_sorted(self, sorted_idx: dict[int, np.ndarray], depth: int) -> int:
        node = self._new_node()
        any_order = sorted_idx[0]
        node_counts = np.bincount(self.y[any_order], minlength=self.k)
        self.counts[node] = node_counts
        m = len(any_order)
        pure = int(np.count_nonzero(node_counts)) <= 1
        if depth >= self.hp.max_depth or pure or m < 2 * self.hp.min_samples_leaf:
            return node
        split = _best_split_sorted(
            self.X,
            self.y,
            sorted_idx,
            self._sample_features(),
            self.k,
            self.hp.min_samples_leaf,
        )
        if split is None:
            return node
        _, f, thr = split
        go_left = self.X[:, f] <= thr
        left_sorted = {
            g: arr[go_left[arr]] for g, arr in sorted_idx.items()
        }
        right_sorted = {
            g: arr[~go_left[arr]] for g, arr in sorted_idx.items()
        }
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self._grow_sorted(left_sorted, depth + 1)
        self.right[node] = self._grow_sorted(right_sorted, depth + 1)
        return node

    def build_extra(self, idx: np.ndarray) -> _Tree:
        """Extra-trees path: uniform random threshold per sampled feature."""
        self._grow_extra(idx, depth=0)
        return self._finish()

    def _grow_extra(self, idx: np.ndarray, depth: int) -> int:
        node = self._new_node()
        node_counts = np.bincount(self.y[idx], minlength=self.k)
        self.counts[node] = node_counts
        m = len(idx)
        pure = int(np.count_nonzero(node_counts)) <= 1
        if depth >= self.hp.max_depth or pure or m < 2 * self.hp.min_samples_leaf:
            return node
        best: tuple[float, int, float] | None = None
        for f in self._sample_features():
            col = self.X[idx, int(f)]
            lo, hi = float(col.min()), float(col.max())
            if lo == hi:
                continue
            assert self.rng is not None
            thr = float(self.rng.uniform(lo, hi))
            mask = col <= thr
            nl = int(np.count_nonzero(mask))
            nr = m - nl
            if nl < self.hp.min_samples_leaf or nr < self.hp.min_samples_leaf:
                continue
            cl = np.bincount(self.y[idx[mask]], minlength=self.k)
            cr = node_counts - cl
            gl = 1.0 - float(np.sum((cl / nl) ** 2))
            gr = 1.0 - float(np.sum((cr / nr) ** 2))
            weighted = (nl * gl + nr * gr) / m
            if best is None or weighted < best[0] or (
                weighted == best[0] and (int(f), thr) < (best[1], best[2])
            ):
                best = (weighted, int(f), thr)
        if best is None:
            return node
        _, f, thr = best
        mask = self.X[idx, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self._grow_extra(idx[mask], depth + 1)
        self.right[node] = self._grow_extra(idx[~mask], depth + 1)
        return node

    def _finish(self) -> _Tree:
        return _Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=float),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            counts=np.vstack(self.counts) if self.counts else np.zeros((0, self.k), np.int64),
        )


def _check_trainable(labels: tuple[str, ...], hp: Hyperparams) -> tuple[str, ...]:
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise DataError(
            f"training requires >= 2 classes, dataset has {len(classes)}"
        )
    if len(labels) < 2 * hp.min_samples_leaf:
        raise DataError("dataset smaller than 2*min_samples_leaf")
    return classes


def _encode_labels(labels: tuple[str, ...], classes: tuple[str, ...]) -> np.ndarray:
    index = {c: i for i, c in enumerate(classes)}
    return np.fromiter((index[l] for l in labels), dtype=np.int64, count=len(labels))


def _presort(X: np.ndarray, idx: np.ndarray) -> dict[int, np.ndarray]:
    return {
        f: idx[np.argsort(X[idx, f], kind="stable")] for f in range(X.shape[1])
    }


def _train(
    kind: ModelKind, ds: LabeledDataset | MatrixDataset, hp: Hyperparams
) -> TreeModel:
    X, labels, schema = _design(ds)
    classes = _check_trainable(labels, hp)
    y = _encode_labels(labels, classes)
    n, p = X.shape
    k = len(classes)

    if kind is ModelKind.CART:
        builder = _TreeBuilder(X, y, k, hp, None, p, extra=False)
        trees = [builder.build_sorted(_presort(X, np.arange(n)))]
    else:
        default_fps = max(1, math.ceil(math.sqrt(p)))
        fps = hp.features_per_split if hp.features_per_split is not None else default_fps
        fps = min(fps, p)
        trees = []
        for t in range(hp.n_trees):
            rng = tree_stream(hp.seed, t)
            if kind is ModelKind.RANDOM_FOREST:
                if hp.bootstrap:
                    idx = np.sort(rng.integers(0, n, size=n))
                else:
                    idx = np.arange(n)
                builder = _TreeBuilder(X, y, k, hp, rng, fps, extra=False)
                trees.append(builder.build_sorted(_presort(X, idx)))
            else:
                idx = (
                    np.sort(rng.integers(0, n, size=n))
                    if hp.bootstrap
                    else np.arange(n)
                )
                builder = _TreeBuilder(X, y, k, hp, rng, fps, extra=True)
                trees.append(builder.build_extra(idx))
    return TreeModel(kind=kind, trees=trees, classes=classes, hyperparams=hp, schema=schema)


def train_cart(ds: LabeledDataset | MatrixDataset, hp: Hyperparams | None = None) -> TreeModel:
    """Single greedy CART over all features. Deterministic; uses no RNG."""
    return _train(ModelKind.CART, ds, hp or Hyperparams(n_trees=1, bootstrap=False))


def train_forest(ds: LabeledDataset | MatrixDataset, hp: Hyperparams | None = None) -> TreeModel:
    """Random forest: bootstrap resamples, ceil(sqrt(p)) features per node."""
    return _train(ModelKind.RANDOM_FOREST, ds, hp or Hyperparams())


def train_extra_trees(ds: LabeledDataset | MatrixDataset, hp: Hyperparams | None = None) -> TreeModel:
    """Extra trees: no bootstrap by default, one uniform random threshold per
    sampled feature, best of those by Gini."""
    return _train(ModelKind.EXTRA_TREES, ds, hp or Hyperparams(bootstrap=False))


def train(kind: ModelKind, ds, hp: Hyperparams | None = None) -> TreeModel:
    if kind is ModelKind.CART:
        return train_cart(ds, hp)
    if kind is ModelKind.RANDOM_FOREST:
        return train_forest(ds, hp)
    return train_extra_trees(ds, hp)


# --------------------------------------------------------------------------
# Prediction


@dataclass(frozen=True, slots=True)
class Prediction:
    window: Window | None
    class_label: str
    confidence: float


def predict_matrix(model: TreeModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(predicted class index, confidence) per row.

    Single tree: confidence is the leaf class posterior. Ensemble: each tree
    votes its leaf argmax and confidence is the winning vote fraction. Index
    ties resolve to the lowest class index.
    """
    if X.shape[1] != model.n_features:
        raise DataError(
            f"feature count {X.shape[1]} != model schema {model.schema!r}"
        )
    k = len(model.classes)
    if model.kind is ModelKind.CART:
        leaves = model.trees[0].apply(X)
        counts = model.trees[0].counts[leaves].astype(float)
        totals = counts.sum(axis=1, keepdims=True)
        proba = counts / np.maximum(totals, 1.0)
        pred = np.argmax(proba, axis=1)
        conf = proba[np.arange(len(X)), pred]
        return pred, conf
    votes = np.zeros((len(X), k), dtype=np.int64)
    for t in model.trees:
        leaves = t.apply(X)
        winner = np.argmax(t.counts[leaves], axis=1)
        votes[np.arange(len(X)), winner] += 1
    pred = np.argmax(votes, axis=1)
    conf = votes[np.arange(len(X)), pred] / len(model.trees)
    return pred, conf


def predict(model: TreeModel, windows: list[Window]) -> list[Prediction]:
    """Predict over windows; requires the model's schema to be the window
    feature schema."""
    if model.schema != SCHEMA_VERSION:
        raise DataError(
            f"model schema {model.schema!r} cannot score windows ({SCHEMA_VERSION!r})"
        )
    X = feature_matrix(windows)
    pred, conf = predict_matrix(model, X)
    return [
        Prediction(window=w, class_label=model.classes[p], confidence=float(c))
        for w, p, c in zip(windows, pred, conf)
    ]


# --------------------------------------------------------------------------
# Serialization


def serialize_model(model: TreeModel) -> bytes:
    """Canonical JSON bytes; byte-identical across round-trips."""
    payload = {
        "format": SERIAL_FORMAT,
        "version": SERIAL_VERSION,
        "kind": model.kind.value,
        "schema": model.schema,
        "classes": list(model.classes),
        "hyperparams": {
            "max_depth": model.hyperparams.max_depth,
            "min_samples_leaf": model.hyperparams.min_samples_leaf,
            "n_trees": model.hyperparams.n_trees,
            "features_per_split": model.hyperparams.features_per_split,
            "bootstrap": model.hyperparams.bootstrap,
            "seed": model.hyperparams.seed,
        },
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "counts": t.counts.tolist(),
            }
            for t in model.trees
        ],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def deserialize_model(data: bytes | str) -> TreeModel:
    try:
        payload = json.loads(data)
    except json.JSONDecodeError as exc:
        raise DataError(f"bad model payload: {exc}") from None
    if payload.get("format") != SERIAL_FORMAT or payload.get("version") != SERIAL_VERSION:
        raise DataError("unrecognized model format")
    hp = Hyperparams(**payload["hyperparams"])
    trees = [
        _Tree(
            feature=np.asarray(t["feature"], dtype=np.int32),
            threshold=np.asarray(t["threshold"], dtype=float),
            left=np.asarray(t["left"], dtype=np.int32),
            right=np.asarray(t["right"], dtype=np.int32),
            counts=np.asarray(t["counts"], dtype=np.int64).reshape(
                len(t["feature"]), len(payload["classes"])
            ),
        )
        for t in payload["trees"]
    ]
    return TreeModel(
        kind=ModelKind(payload["kind"]),
        trees=trees,
        classes=tuple(payload["classes"]),
        hyperparams=hp,
        schema=payload["schema"],
    )


# --------------------------------------------------------------------------
# DOT export


def _feature_name(model: TreeModel, f: int) -> str:
    if model.schema == SCHEMA_VERSION:
        return FEATURE_NAMES[f]
    return f"f{f}"


def export_tree_dot(model: TreeModel, tree_index: int) -> str:
    """Graphviz DOT text for one tree of the model.

    Split nodes read `name <= threshold` (3 decimals); splits on the
    max-current features carry an extra `max-current` tag. Leaves show the
    majority class and the full count vector.
    """
    if not (0 <= tree_index < len(model.trees)):
        raise DataError(
            f"tree index {tree_index} out of range (model has {len(model.trees)})"
        )
    t = model.trees[tree_index]
    lines = [f'digraph tree_{tree_index} {{', "  node [shape=box];"]
    for i in range(t.n_nodes):
        if t.feature[i] >= 0:
            name = _feature_name(model, int(t.feature[i]))
            tag = (
                " (max-current)"
                if model.schema == SCHEMA_VERSION and int(t.feature[i]) in MAX_CURRENT_FEATURES
                else ""
            )
            label = f"{name} <= {float(t.threshold[i]):.3f}{tag}"
        else:
            counts = t.counts[i]
            winner = model.classes[int(np.argmax(counts))]
            label = f"{winner} {counts.tolist()}"
        lines.append(f'  n{i} [label="{label}"];')
    for i in range(t.n_nodes):
        if t.feature[i] >= 0:
            lines.append(f"  n{i} -> n{int(t.left[i])};")
            lines.append(f"  n{i} -> n{int(t.right[i])};")
    lines.append("}")
    return "\n".join(lines) + "\n"
