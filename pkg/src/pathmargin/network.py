"""Leaky-ReLU multilayer perceptrons and their path-product view.

A network is a chain of dense layers with the two-slope nonlinearity

    rho(z) = slope_neg * z   if z < 0
             slope_pos * z   if z >= 0

applied elementwise (ReLU is slope_neg=0, slope_pos=1).  Besides the
usual nested forward pass, every network output can be written as a sum
of contributions over "paths" (one input feature plus one neuron per
hidden layer); this module computes the dense vector of per-path weight
products and provides a brute-force path-sum oracle used to validate
that identity.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import (
    BudgetExceededError,
    TrainingDivergedError,
    ValidationError,
)

# Dense path tensors beyond this many coordinates are refused outright.
DEFAULT_PATH_BUDGET = 10_000_000

WEIGHT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture: input width, hidden widths, and nonlinearity slopes."""

    input_dim: int
    hidden_widths: tuple[int, ...]
    slope_neg: float = 0.1
    slope_pos: float = 1.0
    use_biases: bool = False

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_dim < 1:
            raise ValidationError(f"input_dim must be >= 1, got {self.input_dim}")
        if len(self.hidden_widths) < 1:
            raise ValidationError("at least one hidden layer is required")
        if any(w < 1 for w in self.hidden_widths):
            raise ValidationError(f"every hidden width must be >= 1, got {self.hidden_widths}")
        if self.slope_neg == self.slope_pos:
            # equal slopes collapse the network to a linear map and make
            # activation signatures meaningless
            raise ValidationError("slope_neg and slope_pos must differ")

    @property
    def depth(self) -> int:
        return len(self.hidden_widths)

    @property
    def num_neurons(self) -> int:
        return sum(self.hidden_widths)

    def layer_shapes(self) -> list[tuple[int, int]]:
        """Shapes of W^0 .. W^d (rows = target layer, cols = source layer)."""
        dims = [self.input_dim, *self.hidden_widths, 1]
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]

    def bias_shapes(self) -> list[tuple[int, ...]]:
        """Shapes of b^1 .. b^{d+1} (b^{d+1} is the scalar output bias)."""
        return [(w,) for w in self.hidden_widths] + [(1,)]

    def main_path_count(self) -> int:
        return self.input_dim * math.prod(self.hidden_widths)

    def bias_block_sizes(self) -> list[int]:
        """Sizes of the path blocks starting at layer k = 1 .. d."""
        return [math.prod(self.hidden_widths[k - 1:]) for k in range(1, self.depth + 1)]

    def path_count(self) -> int:
        total = self.main_path_count()
        if self.use_biases:
            total += sum(self.bias_block_sizes())
        return total


@dataclass
class NetworkWeights:
    """All multiplicative weights W^0..W^d plus optional biases b^1..b^{d+1}."""

    matrices: list[np.ndarray]
    biases: Optional[list[np.ndarray]] = None

    def validate(self, cfg: NetworkConfig) -> None:
        shapes = cfg.layer_shapes()
        if len(self.matrices) != len(shapes):
            raise ValidationError(
                f"expected {len(shapes)} weight matrices, got {len(self.matrices)}")
        for l, (mat, shape) in enumerate(zip(self.matrices, shapes)):
            if mat.shape != shape:
                raise ValidationError(f"W^{l} has shape {mat.shape}, expected {shape}")
            if not np.all(np.isfinite(mat)):
                raise ValidationError(f"W^{l} contains non-finite entries")
        if cfg.use_biases:
            if self.biases is None:
                raise ValidationError("config uses biases but none were provided")
            bshapes = cfg.bias_shapes()
            if len(self.biases) != len(bshapes):
                raise ValidationError(
                    f"expected {len(bshapes)} bias vectors, got {len(self.biases)}")
            for k, (b, shape) in enumerate(zip(self.biases, bshapes), start=1):
                if b.shape != shape:
                    raise ValidationError(f"b^{k} has shape {b.shape}, expected {shape}")
                if not np.all(np.isfinite(b)):
                    raise ValidationError(f"b^{k} contains non-finite entries")
        elif self.biases is not None:
            raise ValidationError("biases supplied but config has use_biases=False")

    def copy(self) -> "NetworkWeights":
        return NetworkWeights(
            [m.copy() for m in self.matrices],
            None if self.biases is None else [b.copy() for b in self.biases],
        )


@dataclass(frozen=True)
class ActivationSignature:
    """Per-layer slope vectors recorded during one forward pass.

    Layer l's vector has one entry per neuron, equal to slope_pos where
    the pre-activation was >= 0 and slope_neg where it was negative.
    """

    per_layer: tuple[np.ndarray, ...]

    def pattern(self, cfg: NetworkConfig) -> bytes:
        """Hashable bit pattern: 1 where the positive slope was taken."""
        bits = np.concatenate([layer == cfg.slope_pos for layer in self.per_layer])
        return np.packbits(bits).tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, ActivationSignature):
            return NotImplemented
        return len(self.per_layer) == len(other.per_layer) and all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(self.per_layer, other.per_layer)
        )


@dataclass
class LabeledDataset:
    """Feature matrix (m, f) with labels in {-1, +1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ValidationError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ValidationError("labels must be one per sample")
        if self.labels.size and not np.all(np.isin(self.labels, (-1, 1))):
            raise ValidationError("labels must be -1 or +1")
        if not np.all(np.isfinite(self.features)):
            raise ValidationError("features contain non-finite values")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def input_dim(self) -> int:
        return self.features.shape[1]

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.features[idx], self.labels[idx])


@dataclass
class PathVector:
    """Dense real vector over path indices.

    The main block enumerates full paths (i_d, ..., i_1, i_0) in
    lexicographic order with i_d slowest (row-major ravel of the tensor
    with axes ordered top layer first, input feature last).  When the
    config uses biases, blocks for paths starting at layer k = 1 .. d
    are appended, each with the same ordering rule.
    """

    values: np.ndarray
    config: NetworkConfig

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        expected = self.config.path_count()
        if self.values.shape != (expected,):
            raise ValidationError(
                f"path vector has length {self.values.shape}, expected ({expected},)")

    def __len__(self) -> int:
        return self.values.shape[0]

    def main_block(self) -> np.ndarray:
        return self.values[: self.config.main_path_count()]

    def main_tensor(self) -> np.ndarray:
        dims = tuple(reversed(self.config.hidden_widths)) + (self.config.input_dim,)
        return self.main_block().reshape(dims)

    def bias_block(self, k: int) -> np.ndarray:
        """Block of paths starting at layer k (1 <= k <= depth)."""
        if not self.config.use_biases:
            raise ValidationError("path vector has no bias blocks")
        if not 1 <= k <= self.config.depth:
            raise ValidationError(f"bias block index {k} out of range")
        sizes = self.config.bias_block_sizes()
        start = self.config.main_path_count() + sum(sizes[: k - 1])
        return self.values[start: start + sizes[k - 1]]

    def coordinate(self, path: Sequence[int]) -> float:
        """Main-block coordinate for the tuple (i_d, ..., i_1, i_0)."""
        dims = tuple(reversed(self.config.hidden_widths)) + (self.config.input_dim,)
        if len(path) != len(dims):
            raise ValidationError(f"path tuple must have {len(dims)} entries")
        flat = int(np.ravel_multi_index(tuple(path), dims))
        return float(self.values[flat])


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters for train_sgd.  batch_size=None means full batch."""

    learning_rate: float = 0.01
    momentum: float = 0.05
    batch_size: Optional[int] = 100
    max_iters: int = 20_000
    init_std: float = 0.025
    seed: int = 0
    # consecutive clean epochs before early stop; None trains the full
    # max_iters regardless (the long-training regime that pushes the
    # classifier toward max margin)
    zte_patience: Optional[int] = 3

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.momentum < 0:
            raise ValidationError("momentum must be nonnegative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValidationError("batch_size must be positive or None")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be positive")
        if self.init_std <= 0:
            raise ValidationError("init_std must be positive")
        if self.zte_patience is not None and self.zte_patience < 1:
            raise ValidationError("zte_patience must be >= 1 or None")


@dataclass
class TrainResult:
    weights: NetworkWeights
    achieved_zero_error: bool
    iterations: int
    final_loss: float


# ---------------------------------------------------------------------------
# forward evaluation
# ---------------------------------------------------------------------------

def forward(x, weights: NetworkWeights, cfg: NetworkConfig):
    """Evaluate the network logit on one input.

    Returns (output, signature) where signature records the slope each
    neuron applied.  Pre-activations of exactly zero take the positive
    slope, matching the sign(0) = +1 labeling convention.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cfg.input_dim,):
        raise ValidationError(f"input has shape {x.shape}, expected ({cfg.input_dim},)")
    h = x
    slopes = []
    for l in range(cfg.depth):
        pre = weights.matrices[l] @ h
        if cfg.use_biases:
            pre = pre + weights.biases[l]
        s = np.where(pre >= 0.0, cfg.slope_pos, cfg.slope_neg)
        slopes.append(s)
        h = s * pre
    out = weights.matrices[cfg.depth] @ h
    if cfg.use_biases:
        out = out + weights.biases[cfg.depth]
    return float(out[0]), ActivationSignature(tuple(slopes))


def forward_batch(X, weights: NetworkWeights, cfg: NetworkConfig):
    """Vectorized forward over rows of X: (outputs, per-layer slope matrices)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != cfg.input_dim:
        raise ValidationError(f"batch has shape {X.shape}, expected (m, {cfg.input_dim})")
    H = X
    slopes = []
    for l in range(cfg.depth):
        pre = H @ weights.matrices[l].T
        if cfg.use_biases:
            pre = pre + weights.biases[l]
        S = np.where(pre >= 0.0, cfg.slope_pos, cfg.slope_neg)
        slopes.append(S)
        H = S * pre
    out = H @ weights.matrices[cfg.depth].T
    if cfg.use_biases:
        out = out + weights.biases[cfg.depth]
    return out[:, 0], slopes


def classify(x, weights: NetworkWeights, cfg: NetworkConfig) -> int:
    """Label in {-1, +1}; an output of exactly 0 maps to +1."""
    out, _ = forward(x, weights, cfg)
    return 1 if out >= 0.0 else -1


def classify_batch(X, weights: NetworkWeights, cfg: NetworkConfig) -> np.ndarray:
    out, _ = forward_batch(X, weights, cfg)
    return np.where(out >= 0.0, 1, -1).astype(np.int64)


def zero_training_error(weights: NetworkWeights, cfg: NetworkConfig,
                        data: LabeledDataset) -> bool:
    """True iff every sample is classified as its label (vacuously true
    on an empty dataset)."""
    if len(data) == 0:
        return True
    return bool(np.all(classify_batch(data.features, weights, cfg) == data.labels))


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def _truncated_normal(shape, std: float, rng: np.random.Generator) -> np.ndarray:
    """Normal(0, std^2) resampled until every draw lies within 2 std."""
    draws = rng.standard_normal(shape)
    bad = np.abs(draws) > 2.0
    while bad.any():
        draws[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(draws) > 2.0
    return draws * std


def initialize_weights(cfg: NetworkConfig, init_std: float,
                       rng: np.random.Generator) -> NetworkWeights:
    matrices = [_truncated_normal(shape, init_std, rng) for shape in cfg.layer_shapes()]
    biases = None
    if cfg.use_biases:
        # same std as the weights: hinge offsets -b/|w| are then spread at
        # data scale instead of all starting on the origin
        biases = [_truncated_normal(shape, init_std, rng) for shape in cfg.bias_shapes()]
    return NetworkWeights(matrices, biases)


def loss_and_gradients(weights: NetworkWeights, cfg: NetworkConfig, X, y):
    """Mean logistic loss log(1 + exp(-y * N(x))) and its gradients.

    Returns (loss, grad_matrices, grad_biases) with grad_biases None for
    bias-free configs.  Slopes are treated as locally constant, so the
    gradient at a zero pre-activation uses the positive slope.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m = X.shape[0]
    acts = [X]
    slopes = []
    H = X
    # overflow here shows up as a non-finite loss, which train_sgd turns
    # into an explicit divergence failure; no point warning on the way
    with np.errstate(over="ignore", invalid="ignore"):
        for l in range(cfg.depth):
            pre = H @ weights.matrices[l].T
            if cfg.use_biases:
                pre = pre + weights.biases[l]
            S = np.where(pre >= 0.0, cfg.slope_pos, cfg.slope_neg)
            slopes.append(S)
            H = S * pre
            acts.append(H)
        out = (H @ weights.matrices[cfg.depth].T)[:, 0]
        if cfg.use_biases:
            out = out + weights.biases[cfg.depth][0]
        margins = y * out
        loss = float(np.mean(np.logaddexp(0.0, -margins)))

        # d/dout mean softplus(-y*out) = -y * sigmoid(-y*out) / m
        sig = np.empty_like(margins)
        pos = margins >= 0
        e = np.exp(-margins[pos])
        sig[pos] = e / (1.0 + e)
        sig[~pos] = 1.0 / (1.0 + np.exp(margins[~pos]))
        g_out = (-y * sig) / m

        grads = [None] * (cfg.depth + 1)
        gbias = [None] * (cfg.depth + 1) if cfg.use_biases else None
        grads[cfg.depth] = g_out[None, :] @ acts[cfg.depth]
        if cfg.use_biases:
            gbias[cfg.depth] = np.array([g_out.sum()])
        G = g_out[:, None] @ weights.matrices[cfg.depth]
        for l in range(cfg.depth - 1, -1, -1):
            g_pre = G * slopes[l]
            grads[l] = g_pre.T @ acts[l]
            if cfg.use_biases:
                gbias[l] = g_pre.sum(axis=0)
            if l > 0:
                G = g_pre @ weights.matrices[l]
    return loss, grads, gbias


def train_sgd(data: LabeledDataset, cfg: NetworkConfig,
              hyper: TrainingConfig) -> TrainResult:
    """Minimize logistic loss with minibatch SGD plus momentum.

    Halts at max_iters or once the training error has been zero for
    hyper.zte_patience consecutive epochs.  All randomness (init and
    shuffling) comes from hyper.seed, so identical calls produce
    bit-identical weights.
    """
    if len(data) == 0:
        raise ValidationError("cannot train on an empty dataset")
    if data.input_dim != cfg.input_dim:
        raise ValidationError(
            f"dataset dimension {data.input_dim} != config input_dim {cfg.input_dim}")
    rng = np.random.default_rng(hyper.seed)
    weights = initialize_weights(cfg, hyper.init_std, rng)
    vel = [np.zeros_like(W) for W in weights.matrices]
    vel_b = [np.zeros_like(b) for b in weights.biases] if cfg.use_biases else None

    m = len(data)
    batch = m if hyper.batch_size is None else min(hyper.batch_size, m)
    X, y = data.features, data.labels
    it = 0
    streak = 0
    loss = math.inf
    while it < hyper.max_iters:
        order = rng.permutation(m) if batch < m else np.arange(m)
        for start in range(0, m, batch):
            idx = order[start: start + batch]
            loss, grads, gbias = loss_and_gradients(weights, cfg, X[idx], y[idx])
            if not math.isfinite(loss):
                raise TrainingDivergedError(it)
            for W, v, g in zip(weights.matrices, vel, grads):
                v *= hyper.momentum
                v -= hyper.learning_rate * g
                W += v
            if cfg.use_biases:
                for b, v, g in zip(weights.biases, vel_b, gbias):
                    v *= hyper.momentum
                    v -= hyper.learning_rate * g
                    b += v
            it += 1
            if it >= hyper.max_iters:
                break
        if hyper.zte_patience is not None:
            with np.errstate(over="ignore", invalid="ignore"):
                clean = zero_training_error(weights, cfg, data)
            if clean:
                streak += 1
                if streak >= hyper.zte_patience:
                    break
            else:
                streak = 0
    achieved = zero_training_error(weights, cfg, data)
    return TrainResult(weights, achieved, it, loss)


# ---------------------------------------------------------------------------
# path products
# ---------------------------------------------------------------------------

def check_path_budget(cfg: NetworkConfig, budget: int = DEFAULT_PATH_BUDGET) -> None:
    total = cfg.path_count()
    if total > budget:
        raise BudgetExceededError(
            f"dense path tensor needs {total} coordinates, over the budget of {budget}")


def path_products(weights: NetworkWeights, cfg: NetworkConfig,
                  budget: int = DEFAULT_PATH_BUDGET) -> PathVector:
    """The vector of per-path weight products.

    Main-block coordinate (i_d, ..., i_1, i_0) is
    W^d[0, i_d] * W^{d-1}[i_d, i_{d-1}] * ... * W^0[i_1, i_0]; bias
    blocks (when enabled) hold the analogous products for paths starting
    at layer k >= 1.
    """
    check_path_budget(cfg, budget)
    # T over axes (i_d, ..., i_k): multiply one matrix per step downward
    T = weights.matrices[cfg.depth].ravel().copy()
    blocks = {cfg.depth: T}
    for k in range(cfg.depth - 1, -1, -1):
        T = T[..., None] * weights.matrices[k]
        blocks[k] = T
    parts = [blocks[0].ravel()]
    if cfg.use_biases:
        parts.extend(blocks[k].ravel() for k in range(1, cfg.depth + 1))
    return PathVector(np.concatenate(parts), cfg)


def forward_via_paths(x, weights: NetworkWeights, cfg: NetworkConfig,
                      budget: int = DEFAULT_PATH_BUDGET) -> float:
    """Brute-force oracle: sum path contributions one tuple at a time.

    Deliberately loops over explicit index tuples, multiplying weights
    and slopes scalar by scalar, so it shares no code with forward() or
    path_products().
    """
    check_path_budget(cfg, budget)
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cfg.input_dim,):
        raise ValidationError(f"input has shape {x.shape}, expected ({cfg.input_dim},)")

    # slopes taken on this input (the path sum is defined in terms of them)
    slopes = []
    h = x
    for l in range(cfg.depth):
        pre = weights.matrices[l] @ h
        if cfg.use_biases:
            pre = pre + weights.biases[l]
        s = np.where(pre >= 0.0, cfg.slope_pos, cfg.slope_neg)
        slopes.append(s)
        h = s * pre

    d = cfg.depth
    total = 0.0
    hidden_ranges = [range(w) for w in reversed(cfg.hidden_widths)]  # i_d first
    for idx in itertools.product(*hidden_ranges, range(cfg.input_dim)):
        hidden = idx[:-1]  # (i_d, ..., i_1)
        i0 = idx[-1]
        prod = weights.matrices[d][0, hidden[0]]
        for pos in range(d - 1):
            # edge from layer (d - pos - 1) into layer (d - pos)
            prod *= weights.matrices[d - pos - 1][hidden[pos], hidden[pos + 1]]
        prod *= weights.matrices[0][hidden[-1], i0]
        for pos in range(d):
            prod *= slopes[d - pos - 1][hidden[pos]]
        total += prod * x[i0]

    if cfg.use_biases:
        for k in range(1, d + 1):
            ranges = [range(w) for w in reversed(cfg.hidden_widths[k - 1:])]
            for hidden in itertools.product(*ranges):  # (i_d, ..., i_k)
                prod = weights.matrices[d][0, hidden[0]]
                for pos in range(len(hidden) - 1):
                    prod *= weights.matrices[d - pos - 1][hidden[pos], hidden[pos + 1]]
                for pos in range(len(hidden)):
                    prod *= slopes[d - pos - 1][hidden[pos]]
                total += prod * weights.biases[k - 1][hidden[-1]]
        total += weights.biases[d][0]
    return float(total)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def weights_to_json(weights: NetworkWeights, cfg: NetworkConfig) -> str:
    """JSON document for weights + config; float round trip is value-exact."""
    doc = {
        "format_version": WEIGHT_FORMAT_VERSION,
        "config": {
            "input_dim": cfg.input_dim,
            "hidden_widths": list(cfg.hidden_widths),
            "slope_neg": cfg.slope_neg,
            "slope_pos": cfg.slope_pos,
            "use_biases": cfg.use_biases,
        },
        "matrices": [m.tolist() for m in weights.matrices],
    }
    if weights.biases is not None:
        doc["biases"] = [b.tolist() for b in weights.biases]
    return json.dumps(doc)


def weights_from_json(text: str) -> tuple[NetworkWeights, NetworkConfig]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"invalid weight document: {e}") from e
    if doc.get("format_version") != WEIGHT_FORMAT_VERSION:
        raise ValidationError(f"unsupported format_version {doc.get('format_version')}")
    c = doc["config"]
    cfg = NetworkConfig(
        input_dim=int(c["input_dim"]),
        hidden_widths=tuple(c["hidden_widths"]),
        slope_neg=float(c["slope_neg"]),
        slope_pos=float(c["slope_pos"]),
        use_biases=bool(c["use_biases"]),
    )
    matrices = [np.asarray(m, dtype=np.float64) for m in doc["matrices"]]
    biases = None
    if "biases" in doc:
        biases = [np.asarray(b, dtype=np.float64) for b in doc["biases"]]
    weights = NetworkWeights(matrices, biases)
    weights.validate(cfg)
    return weights, cfg


def save_weights(path, weights: NetworkWeights, cfg: NetworkConfig) -> None:
    with open(path, "w") as fh:
        fh.write(weights_to_json(weights, cfg))


def load_weights(path) -> tuple[NetworkWeights, NetworkConfig]:
    with open(path) as fh:
        return weights_from_json(fh.read())
