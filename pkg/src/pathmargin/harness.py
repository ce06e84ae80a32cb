"""Experiment harness: datasets, end-to-end pipelines, and sweeps.

A pipeline is train -> zero-training-error gate -> Gram matrix ->
hard-margin solve -> support vectors -> risk bound, with every measured
quantity collected into a RunRecord.  Support-vector counts are only
comparable between runs that actually reached zero training error, so
the gate is a hard refusal, not a warning.

Every run is reproducible from its config: cell seeds are derived by
hashing (master seed, axis value, repetition), never drawn from shared
state.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .compression import BoundInputs, bound_value
from .exceptions import (
    GatedRefusalError,
    NonSeparableError,
    PathmarginError,
    UnconvergedSolutionError,
    ValidationError,
)
from .maxmargin import (
    MarginSolution,
    extract_nsvs,
    margin_predict_batch,
    solve_hard_margin,
)
from .network import (
    DEFAULT_PATH_BUDGET,
    LabeledDataset,
    NetworkConfig,
    NetworkWeights,
    TrainingConfig,
    TrainResult,
    classify_batch,
    path_products,
    train_sgd,
    zero_training_error,
)
from .pathspace import (
    GramMatrix,
    cross_kernel_matrix,
    kernel_matrix,
    signature_patterns,
)

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 63-bit seed for a named sub-stream of a master seed."""
    text = repr((int(master_seed),) + tuple(parts))
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


# ---------------------------------------------------------------------------
# dataset generation and loading
# ---------------------------------------------------------------------------

def _sample_quadrant(rng, count, center, std, sign):
    """Gaussian cluster resampled until every coordinate is strictly on
    the requested side of both axes."""
    points = sign * (center + std * rng.standard_normal((count, 2)))
    bad = np.any(sign * points <= 0.0, axis=1)
    while bad.any():
        points[bad] = sign * (center + std * rng.standard_normal((int(bad.sum()), 2)))
        bad = np.any(sign * points <= 0.0, axis=1)
    return points


def generate_dataset(name: str, params: Optional[dict], seed: int) -> LabeledDataset:
    """Synthetic datasets, deterministic given the seed.

    quadrants: positives strictly inside the 1st quadrant, negatives
    strictly inside the 3rd.  blobs2d: two Gaussian clusters.  rings2d:
    an inner disk vs an outer annulus.  xor2d: four clusters labeled by
    quadrant parity.  clusters: a Gaussian mixture per class in any
    dimension (center geometry fixed by center_seed so the task stays
    the same while the sample draw varies with seed).
    """
    params = dict(params or {})
    m = int(params.pop("m", 200))
    if m < 1:
        raise ValidationError("dataset size m must be positive")
    rng = np.random.default_rng(seed)
    m_pos = m // 2
    m_neg = m - m_pos

    if name == "quadrants":
        center = float(params.pop("center", 1.0))
        std = float(params.pop("std", 0.5))
        pos = _sample_quadrant(rng, m_pos, center, std, +1.0)
        neg = _sample_quadrant(rng, m_neg, center, std, -1.0)
        X = np.vstack([pos, neg])
        y = np.concatenate([np.ones(m_pos), -np.ones(m_neg)])
    elif name == "blobs2d":
        spread = float(params.pop("spread", 1.5))
        std = float(params.pop("std", 0.6))
        pos = np.array([spread, 0.0]) + std * rng.standard_normal((m_pos, 2))
        neg = np.array([-spread, 0.0]) + std * rng.standard_normal((m_neg, 2))
        X = np.vstack([pos, neg])
        y = np.concatenate([np.ones(m_pos), -np.ones(m_neg)])
    elif name == "rings2d":
        r_inner = float(params.pop("r_inner", 1.0))
        r_mid = float(params.pop("r_mid", 1.6))
        r_outer = float(params.pop("r_outer", 2.4))
        if not 0 < r_inner < r_mid < r_outer:
            raise ValidationError("rings2d needs 0 < r_inner < r_mid < r_outer")
        theta = rng.uniform(0.0, 2.0 * math.pi, m)
        radius = np.concatenate([
            r_inner * np.sqrt(rng.uniform(0.0, 1.0, m_pos)),
            np.sqrt(rng.uniform(r_mid ** 2, r_outer ** 2, m_neg)),
        ])
        X = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
        y = np.concatenate([np.ones(m_pos), -np.ones(m_neg)])
    elif name == "xor2d":
        offset = float(params.pop("offset", 1.5))
        std = float(params.pop("std", 0.4))
        corners = np.array([[1, 1], [-1, -1], [-1, 1], [1, -1]], dtype=np.float64)
        labels = np.array([1, 1, -1, -1])
        counts = [m - 3 * (m // 4)] + [m // 4] * 3
        chunks, ys = [], []
        for corner, label, count in zip(corners, labels, counts):
            chunks.append(offset * corner + std * rng.standard_normal((count, 2)))
            ys.append(np.full(count, label))
        X = np.vstack(chunks)
        y = np.concatenate(ys)
    elif name == "clusters":
        f = int(params.pop("input_dim", 8))
        k = int(params.pop("k_per_class", 8))
        within_std = float(params.pop("within_std", 0.35))
        center_scale = float(params.pop("center_scale", 1.0))
        center_seed = int(params.pop("center_seed", 12345))
        if f < 1 or k < 1:
            raise ValidationError("clusters needs input_dim >= 1 and k_per_class >= 1")
        crng = np.random.default_rng(center_seed)
        centers_pos = center_scale * crng.standard_normal((k, f))
        centers_neg = center_scale * crng.standard_normal((k, f))
        Xp = (centers_pos[rng.integers(0, k, m_pos)]
              + within_std * rng.standard_normal((m_pos, f)))
        Xn = (centers_neg[rng.integers(0, k, m_neg)]
              + within_std * rng.standard_normal((m_neg, f)))
        X = np.vstack([Xp, Xn])
        y = np.concatenate([np.ones(m_pos), -np.ones(m_neg)])
    else:
        raise ValidationError(f"unknown dataset generator '{name}'")
    if params:
        raise ValidationError(f"unknown parameters for {name}: {sorted(params)}")
    order = rng.permutation(m)
    return LabeledDataset(X[order], y[order])


def randomize_labels(data: LabeledDataset, seed: int) -> LabeledDataset:
    """Replace every label with an independent fair coin flip."""
    rng = np.random.default_rng(seed)
    labels = rng.choice(np.array([-1, 1], dtype=np.int64), size=len(data))
    return LabeledDataset(data.features.copy(), labels)


def load_idx(images_path, labels_path, grouping) -> LabeledDataset:
    """Read an IDX image/label pair into a binary-labeled dataset.

    Big-endian format; image magic 0x00000803, label magic 0x00000801.
    Pixels are scaled to [0, 1].  Raw labels in `grouping` map to +1,
    all others to -1.
    """
    with open(images_path, "rb") as fh:
        img = fh.read()
    if len(img) < 16:
        raise ValidationError(f"{images_path}: truncated header ({len(img)} bytes)")
    magic = int.from_bytes(img[0:4], "big")
    if magic != IDX_IMAGE_MAGIC:
        raise ValidationError(
            f"{images_path}: bad magic 0x{magic:08x} at offset 0 "
            f"(expected 0x{IDX_IMAGE_MAGIC:08x})")
    count = int.from_bytes(img[4:8], "big")
    rows = int.from_bytes(img[8:12], "big")
    cols = int.from_bytes(img[12:16], "big")
    expected = 16 + count * rows * cols
    if len(img) != expected:
        raise ValidationError(
            f"{images_path}: expected {expected} bytes for {count} images, got {len(img)}")

    with open(labels_path, "rb") as fh:
        lab = fh.read()
    if len(lab) < 8:
        raise ValidationError(f"{labels_path}: truncated header ({len(lab)} bytes)")
    magic = int.from_bytes(lab[0:4], "big")
    if magic != IDX_LABEL_MAGIC:
        raise ValidationError(
            f"{labels_path}: bad magic 0x{magic:08x} at offset 0 "
            f"(expected 0x{IDX_LABEL_MAGIC:08x})")
    lab_count = int.from_bytes(lab[4:8], "big")
    if len(lab) != 8 + lab_count:
        raise ValidationError(
            f"{labels_path}: expected {8 + lab_count} bytes for {lab_count} labels, "
            f"got {len(lab)}")
    if lab_count != count:
        raise ValidationError(
            f"image/label count mismatch: {count} images vs {lab_count} labels")

    pixels = np.frombuffer(img, dtype=np.uint8, offset=16).astype(np.float64)
    X = pixels.reshape(count, rows * cols) / 255.0
    raw = np.frombuffer(lab, dtype=np.uint8, offset=8)
    positive = set(int(v) for v in grouping)
    y = np.where(np.isin(raw, sorted(positive)), 1, -1)
    return LabeledDataset(X, y)


def save_dataset_csv(data: LabeledDataset, path) -> None:
    """One row per sample: features then the label, headerless."""
    with open(path, "w") as fh:
        for x, label in zip(data.features, data.labels):
            fh.write(",".join(f"{v:.17g}" for v in x) + f",{int(label)}\n")


def load_dataset_csv(path) -> LabeledDataset:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise ValidationError(f"{path}: empty dataset file")
    arr = np.asarray(rows, dtype=np.float64)
    if arr.shape[1] < 2:
        raise ValidationError(f"{path}: rows need at least one feature and a label")
    return LabeledDataset(arr[:, :-1], arr[:, -1].astype(np.int64))


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

SWEEP_AXES = ("m", "width", "depth")


@dataclass
class ExperimentConfig:
    """Everything a run or sweep needs; the seed is mandatory."""

    seed: int
    dataset: dict
    network: dict
    training: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    delta: float = 0.05
    randomize_labels: bool = False
    test_m: int = 0
    compare_agreement: bool = False
    sweep: Optional[dict] = None
    output_dir: Optional[str] = None
    path_budget: int = DEFAULT_PATH_BUDGET

    def __post_init__(self):
        if self.seed is None:
            raise ValidationError("a seed is mandatory")
        self.seed = int(self.seed)
        if not 0.0 < self.delta <= 1.0:
            raise ValidationError("delta must lie in (0, 1]")
        for key in ("path", "precomputed"):
            if key in self.dataset and not os.path.exists(self.dataset[key]):
                raise ValidationError(f"dataset file does not exist: {self.dataset[key]}")
        if "idx" in self.dataset:
            for key in ("images", "labels"):
                p = self.dataset["idx"].get(key)
                if p is None or not os.path.exists(p):
                    raise ValidationError(f"idx {key} file does not exist: {p}")
        if self.sweep is not None:
            axis = self.sweep.get("axis")
            if axis not in SWEEP_AXES:
                raise ValidationError(f"sweep axis must be one of {SWEEP_AXES}")
            values = self.sweep.get("values", [])
            if len(values) < 1:
                raise ValidationError("sweep needs at least one value")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValidationError("sweep values must be strictly increasing")

    def network_config(self) -> NetworkConfig:
        return NetworkConfig(**self.network)

    def training_config(self, seed: int) -> TrainingConfig:
        kwargs = dict(self.training)
        kwargs["seed"] = seed
        return TrainingConfig(**kwargs)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "dataset": self.dataset,
            "network": self.network,
            "training": self.training,
            "solver": self.solver,
            "delta": self.delta,
            "randomize_labels": self.randomize_labels,
            "test_m": self.test_m,
            "compare_agreement": self.compare_agreement,
            "sweep": self.sweep,
            "output_dir": self.output_dir,
            "path_budget": self.path_budget,
        }


def apply_overrides(doc: dict, overrides: dict) -> dict:
    """Apply {"a.b.c": value} overrides to a nested config dict.  String
    values are parsed as JSON when possible, else kept verbatim."""
    doc = copy.deepcopy(doc)
    for dotted, value in overrides.items():
        if isinstance(value, str):
            try:
                value = json.loads(value)
            except json.JSONDecodeError:
                pass
        node = doc
        parts = dotted.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ValidationError(f"cannot override through non-object key '{part}'")
        node[parts[-1]] = value
    return doc


def config_from_dict(doc: dict) -> ExperimentConfig:
    known = {f for f in ExperimentConfig.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    if "seed" not in doc:
        raise ValidationError("a seed is mandatory")
    return ExperimentConfig(**doc)


def load_config(path, overrides: Optional[dict] = None) -> ExperimentConfig:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValidationError(f"{path}: invalid JSON ({e})") from e
    if overrides:
        doc = apply_overrides(doc, overrides)
    return config_from_dict(doc)


def dataset_from_spec(spec: dict, seed: int) -> LabeledDataset:
    if "generator" in spec:
        return generate_dataset(spec["generator"], spec.get("params"), seed)
    if "path" in spec:
        return load_dataset_csv(spec["path"])
    if "precomputed" in spec:
        # externally produced feature vectors (e.g. frozen conv embeddings)
        return load_dataset_csv(spec["precomputed"])
    if "idx" in spec:
        idx = spec["idx"]
        return load_idx(idx["images"], idx["labels"], idx.get("positive_labels", range(5, 10)))
    raise ValidationError("dataset spec needs 'generator', 'path', 'precomputed', or 'idx'")


# ---------------------------------------------------------------------------
# measurements
# ---------------------------------------------------------------------------

def count_unique_signatures(weights: NetworkWeights, cfg: NetworkConfig,
                            data: LabeledDataset) -> int:
    """Number of distinct full activation signatures over the dataset.

    Two samples count as distinct if even a single neuron takes a
    different slope; comparison is by exact slope pattern, not by
    floating values.
    """
    if len(data) == 0:
        return 0
    patterns = signature_patterns(data, weights, cfg)
    return int(np.unique(patterns, axis=0).shape[0])


def check_wbar_positive(weights: NetworkWeights, cfg: NetworkConfig,
                        budget: int = DEFAULT_PATH_BUDGET) -> tuple[bool, float]:
    """Whether every path product is strictly positive, plus the minimum
    coordinate."""
    lam = path_products(weights, cfg, budget)
    minimum = float(lam.values.min())
    return minimum > 0.0, minimum


def check_wbar_positive_parity(weights: NetworkWeights, cfg: NetworkConfig) -> bool:
    """Sign-only formulation: every input-to-output path must traverse an
    even number of negative weights (and no zero weight).  Never builds
    the dense path vector."""
    if cfg.use_biases:
        raise ValidationError("parity check supports bias-free networks only")
    all_pos = np.ones(cfg.input_dim, dtype=bool)
    all_neg = np.zeros(cfg.input_dim, dtype=bool)
    for M in weights.matrices:
        pos_edge = M > 0.0
        neg_edge = M < 0.0
        new_pos = ((pos_edge & all_pos[None, :]) | (neg_edge & all_neg[None, :])).all(axis=1)
        new_neg = ((pos_edge & all_neg[None, :]) | (neg_edge & all_pos[None, :])).all(axis=1)
        all_pos, all_neg = new_pos, new_neg
    return bool(all_pos[0])


def network_classifier(weights: NetworkWeights, cfg: NetworkConfig) -> Callable:
    def predict(X):
        return classify_batch(np.asarray(X, dtype=np.float64), weights, cfg)
    return predict


def margin_classifier(sol: MarginSolution, data: LabeledDataset,
                      weights: NetworkWeights, cfg: NetworkConfig) -> Callable:
    def predict(X):
        rows = cross_kernel_matrix(np.asarray(X, dtype=np.float64), data, weights, cfg)
        return margin_predict_batch(sol, data.labels, rows)
    return predict


def boundary_grid(classifier: Callable, bbox, resolution: int) -> np.ndarray:
    """Labels on a resolution x resolution grid of cell centers over
    bbox = (xmin, xmax, ymin, ymax).  Row i varies y, column j varies x;
    resolution 1 evaluates the single center point."""
    if resolution < 1:
        raise ValidationError("resolution must be >= 1")
    xmin, xmax, ymin, ymax = (float(v) for v in bbox)
    if xmax <= xmin or ymax <= ymin:
        raise ValidationError("bbox must satisfy xmin < xmax and ymin < ymax")
    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymin + (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    XX, YY = np.meshgrid(xs, ys)
    points = np.column_stack([XX.ravel(), YY.ravel()])
    labels = np.asarray(classifier(points), dtype=np.int64)
    return labels.reshape(resolution, resolution)


def grid_points(bbox, resolution: int) -> np.ndarray:
    xmin, xmax, ymin, ymax = (float(v) for v in bbox)
    xs = xmin + (np.arange(resolution) + 0.5) * (xmax - xmin) / resolution
    ys = ymin + (np.arange(resolution) + 0.5) * (ymax - ymin) / resolution
    XX, YY = np.meshgrid(xs, ys)
    return np.column_stack([XX.ravel(), YY.ravel()])


def dense_region_mask(points: np.ndarray, data: LabeledDataset, radius: float) -> np.ndarray:
    """True for points within `radius` of some training sample."""
    sq = radius * radius
    mask = np.zeros(points.shape[0], dtype=bool)
    chunk = 2048
    for start in range(0, points.shape[0], chunk):
        block = points[start: start + chunk]
        d2 = ((block[:, None, :] - data.features[None, :, :]) ** 2).sum(axis=2)
        mask[start: start + chunk] = (d2.min(axis=1) <= sq)
    return mask


def save_grid_csv(grid: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        for row in grid:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# pipelines and sweeps
# ---------------------------------------------------------------------------

@dataclass
class PipelineArtifacts:
    dataset: LabeledDataset
    test_set: Optional[LabeledDataset]
    weights: NetworkWeights
    network_config: NetworkConfig
    train_result: TrainResult
    gram: GramMatrix
    solution: MarginSolution


@dataclass
class RunRecord:
    config: dict
    achieved_zero_training_error: bool
    m: int
    n: int
    s: int
    s_over_m: float
    margin_value: float
    bound_f: float
    unique_train_signatures: int
    unique_test_signatures: Optional[int]
    agreement: Optional[float]
    wall_clock_seconds: float
    artifacts: Optional[PipelineArtifacts] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "achieved_zero_training_error": self.achieved_zero_training_error,
            "m": self.m,
            "n": self.n,
            "s": self.s,
            "s_over_m": self.s_over_m,
            "margin_value": self.margin_value,
            "bound_f": self.bound_f,
            "unique_train_signatures": self.unique_train_signatures,
            "unique_test_signatures": self.unique_test_signatures,
            "agreement": self.agreement,
            "wall_clock_seconds": self.wall_clock_seconds,
        }


def _stage(name: str):
    """Tag pipeline failures with the stage that raised them."""
    class _StageContext:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, PathmarginError) and exc.args:
                exc.args = (f"[stage {name}] {exc.args[0]}",) + exc.args[1:]
            return False
    return _StageContext()


def run_pipeline(config: ExperimentConfig,
                 dataset: Optional[LabeledDataset] = None) -> RunRecord:
    """Full train -> kernel -> support-vector -> bound pipeline.

    Raises GatedRefusalError instead of reporting s when training did
    not reach zero error (counts would not be comparable otherwise).
    """
    started = time.perf_counter()
    with _stage("dataset"):
        if dataset is None:
            dataset = dataset_from_spec(config.dataset, derive_seed(config.seed, "data"))
        if config.randomize_labels:
            dataset = randomize_labels(dataset, derive_seed(config.seed, "labels"))
        test_set = None
        if config.test_m > 0 and "generator" in config.dataset:
            params = dict(config.dataset.get("params") or {})
            params["m"] = config.test_m
            test_set = generate_dataset(config.dataset["generator"], params,
                                        derive_seed(config.seed, "test"))
    net_cfg = config.network_config()
    with _stage("train"):
        result = train_sgd(dataset, net_cfg,
                           config.training_config(derive_seed(config.seed, "train")))
    with _stage("gate"):
        if not result.achieved_zero_error:
            raise GatedRefusalError(
                "zero training error was not achieved; refusing to report "
                "support-vector statistics")
    with _stage("kernel"):
        gram = kernel_matrix(dataset, result.weights, net_cfg)
    with _stage("margin"):
        solution = solve_hard_margin(gram, dataset.labels, **config.solver)
    with _stage("nsv"):
        _, s = extract_nsvs(solution, dataset)
    with _stage("bound"):
        bound = bound_value(BoundInputs(m=len(dataset), n=net_cfg.num_neurons,
                                        s=s, delta=config.delta))
    unique_train = count_unique_signatures(result.weights, net_cfg, dataset)
    unique_test = None
    agree = None
    if test_set is not None:
        unique_test = count_unique_signatures(result.weights, net_cfg, test_set)
        if config.compare_agreement:
            net_preds = classify_batch(test_set.features, result.weights, net_cfg)
            rows = cross_kernel_matrix(test_set.features, dataset, result.weights, net_cfg)
            margin_preds = margin_predict_batch(solution, dataset.labels, rows)
            agree = float(np.mean(net_preds == margin_preds))

    record = RunRecord(
        config=config.to_dict(),
        achieved_zero_training_error=result.achieved_zero_error,
        m=len(dataset),
        n=net_cfg.num_neurons,
        s=s,
        s_over_m=s / len(dataset),
        margin_value=solution.margin_value,
        bound_f=bound,
        unique_train_signatures=unique_train,
        unique_test_signatures=unique_test,
        agreement=agree,
        wall_clock_seconds=time.perf_counter() - started,
        artifacts=PipelineArtifacts(dataset, test_set, result.weights, net_cfg,
                                    result, gram, solution),
    )
    if config.output_dir:
        os.makedirs(config.output_dir, exist_ok=True)
        with open(os.path.join(config.output_dir, "record.json"), "w") as fh:
            json.dump(record.to_dict(), fh, indent=2)
    return record


SWEEP_COLUMNS = ("axis_value", "rep", "m", "n", "s", "s_over_m", "F", "margin", "zte")


def _cell_config(config: ExperimentConfig, axis: str, value: int) -> ExperimentConfig:
    doc = copy.deepcopy(config.to_dict())
    doc["sweep"] = None
    doc["output_dir"] = None
    if axis == "m":
        doc["dataset"].setdefault("params", {})["m"] = int(value)
    elif axis == "width":
        depth = len(doc["network"]["hidden_widths"])
        doc["network"]["hidden_widths"] = [int(value)] * depth
    elif axis == "depth":
        width = doc["network"]["hidden_widths"][0]
        doc["network"]["hidden_widths"] = [int(width)] * int(value)
    return config_from_dict(doc)


def run_sweep(config: ExperimentConfig) -> list[dict]:
    """One pipeline per (axis value, repetition); failed gates and
    non-separable cells produce rows with blank statistics rather than
    aborting the sweep."""
    if config.sweep is None:
        raise ValidationError("config has no sweep section")
    axis = config.sweep["axis"]
    values = config.sweep["values"]
    reps = int(config.sweep.get("repetitions", 3))
    rows = []
    for value in values:
        for rep in range(reps):
            cell = _cell_config(config, axis, value)
            cell.seed = derive_seed(config.seed, axis, int(value), rep)
            row = {"axis_value": value, "rep": rep}
            try:
                record = run_pipeline(cell)
                row.update(m=record.m, n=record.n, s=record.s,
                           s_over_m=record.s_over_m, F=record.bound_f,
                           margin=record.margin_value, zte=1)
                if config.output_dir:
                    cell_dir = os.path.join(config.output_dir, f"{axis}{value}_rep{rep}")
                    os.makedirs(cell_dir, exist_ok=True)
                    with open(os.path.join(cell_dir, "record.json"), "w") as fh:
                        json.dump(record.to_dict(), fh, indent=2)
            except (GatedRefusalError, NonSeparableError, UnconvergedSolutionError):
                row.update(m="", n="", s="", s_over_m="", F="", margin="", zte=0)
            rows.append(row)
    if config.output_dir:
        os.makedirs(config.output_dir, exist_ok=True)
        save_sweep_csv(rows, os.path.join(config.output_dir, "sweep.csv"))
    return rows


def save_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(SWEEP_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in SWEEP_COLUMNS) + "\n")
