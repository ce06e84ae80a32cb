"""Path-space embeddings and their factorized kernel.

Each input x embeds as the tensor of its per-layer slope vectors with x
itself as the last factor; the inner product of two embeddings under
the same weights factorizes layerwise, so Gram matrices never require
the dense embedding.  A brute-force inner product over the explicit
embeddings serves as the oracle for that factorization.
"""

from __future__ import annotations

import functools
import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ValidationError
from .network import (
    DEFAULT_PATH_BUDGET,
    ActivationSignature,
    LabeledDataset,
    NetworkConfig,
    NetworkWeights,
    PathVector,
    check_path_budget,
    forward,
    forward_batch,
    weights_to_json,
)


@dataclass
class GramMatrix:
    """Symmetric m x m matrix of pairwise path-kernel values."""

    entries: np.ndarray

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.float64)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValidationError(f"Gram matrix must be square, got {self.entries.shape}")

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def symmetry_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.T))) if self.m else 0.0

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.entries + self.entries.T) / 2.0)[0])


def embed(x, weights: NetworkWeights, cfg: NetworkConfig,
          budget: int = DEFAULT_PATH_BUDGET) -> PathVector:
    """Dense embedding of x: slope products tensored with the input.

    Main-block coordinate (i_d, ..., i_1, i_0) equals
    sigma^d[i_d] * ... * sigma^1[i_1] * x[i_0]; with biases enabled,
    block k holds sigma^d[i_d] * ... * sigma^k[i_k] * b^k[i_k].
    """
    check_path_budget(cfg, budget)
    x = np.asarray(x, dtype=np.float64)
    _, sig = forward(x, weights, cfg)
    top_down = list(reversed(sig.per_layer))  # sigma^d first
    main = functools.reduce(np.multiply.outer, top_down + [x])
    parts = [main.ravel()]
    if cfg.use_biases:
        for k in range(1, cfg.depth + 1):
            seeded = sig.per_layer[k - 1] * weights.biases[k - 1]
            factors = list(reversed(sig.per_layer[k:])) + [seeded]
            parts.append(functools.reduce(np.multiply.outer, factors).ravel())
    return PathVector(np.concatenate(parts), cfg)


def kernel(x, x_other, sig: ActivationSignature, sig_other: ActivationSignature,
           biases: Optional[list[np.ndarray]] = None) -> float:
    """Factorized inner product of two embeddings under shared weights.

    <x, x'> * prod_l <sigma^l, sigma'^l>, plus for each bias layer k the
    term sum_i sigma^k_i sigma'^k_i (b^k_i)^2 scaled by the slope inner
    products of the layers above k.
    """
    x = np.asarray(x, dtype=np.float64)
    x_other = np.asarray(x_other, dtype=np.float64)
    if x.shape != x_other.shape:
        raise ValidationError("inputs have mismatched dimensions")
    if len(sig.per_layer) != len(sig_other.per_layer):
        raise ValidationError("signatures have different depths")
    for a, b in zip(sig.per_layer, sig_other.per_layer):
        if a.shape != b.shape:
            raise ValidationError("signatures have mismatched layer widths")
    layer_dots = [float(np.dot(a, b)) for a, b in zip(sig.per_layer, sig_other.per_layer)]
    value = float(np.dot(x, x_other))
    for d in layer_dots:
        value *= d
    if biases is not None:
        depth = len(sig.per_layer)
        suffix = 1.0  # prod of layer_dots above layer k
        for k in range(depth, 0, -1):
            seed = float(np.dot(sig.per_layer[k - 1] * sig_other.per_layer[k - 1],
                                biases[k - 1] ** 2))
            value += seed * suffix
            suffix *= layer_dots[k - 1]
    return value


def kernel_bruteforce(x, x_other, weights: NetworkWeights, cfg: NetworkConfig,
                      budget: int = DEFAULT_PATH_BUDGET) -> float:
    """Oracle: direct dot product of the two explicit embeddings."""
    a = embed(x, weights, cfg, budget)
    b = embed(x_other, weights, cfg, budget)
    return float(np.dot(a.values, b.values))


def kernel_matrix(data: LabeledDataset, weights: NetworkWeights,
                  cfg: NetworkConfig) -> GramMatrix:
    """Gram matrix of the dataset: one forward pass per sample, then the
    factorized kernel for every pair."""
    X = data.features
    _, slopes = forward_batch(X, weights, cfg)
    G = X @ X.T
    for S in slopes:
        G = G * (S @ S.T)
    if cfg.use_biases:
        suffix = np.ones_like(G)
        for k in range(cfg.depth, 0, -1):
            Sb = slopes[k - 1] * weights.biases[k - 1]
            # sum_i sigma_i sigma'_i b_i^2 == <sigma*b, sigma'*b>
            G = G + (Sb @ Sb.T) * suffix
            suffix = suffix * (slopes[k - 1] @ slopes[k - 1].T)
    return GramMatrix(G)


def cross_kernel_matrix(X_new, data: LabeledDataset, weights: NetworkWeights,
                        cfg: NetworkConfig) -> np.ndarray:
    """Kernel values between new points (rows) and training samples
    (columns), for predicting with a margin solution."""
    X_new = np.asarray(X_new, dtype=np.float64)
    _, s_new = forward_batch(X_new, weights, cfg)
    _, s_tr = forward_batch(data.features, weights, cfg)
    G = X_new @ data.features.T
    for A, B in zip(s_new, s_tr):
        G = G * (A @ B.T)
    if cfg.use_biases:
        suffix = np.ones_like(G)
        for k in range(cfg.depth, 0, -1):
            Ab = s_new[k - 1] * weights.biases[k - 1]
            Bb = s_tr[k - 1] * weights.biases[k - 1]
            G = G + (Ab @ Bb.T) * suffix
            suffix = suffix * (s_new[k - 1] @ s_tr[k - 1].T)
    return G


def signature_patterns(data: LabeledDataset, weights: NetworkWeights,
                       cfg: NetworkConfig) -> np.ndarray:
    """Boolean matrix (m, n_neurons): True where the positive slope fired."""
    _, slopes = forward_batch(data.features, weights, cfg)
    return np.concatenate([S == cfg.slope_pos for S in slopes], axis=1)


def signature_stability(weights: NetworkWeights, cfg: NetworkConfig,
                        data: LabeledDataset, eps: float) -> bool:
    """Whether every single-coordinate +/-eps weight perturbation leaves
    every training sample's activation signature unchanged.

    Perturbations are applied one coordinate at a time (not jointly);
    this certifies the local-invariance neighborhood direction by
    direction.
    """
    if eps < 0:
        raise ValidationError("eps must be nonnegative")
    if eps == 0 or len(data) == 0:
        return True
    base = signature_patterns(data, weights, cfg)
    arrays = list(weights.matrices)
    if cfg.use_biases:
        arrays += list(weights.biases)
    for arr in arrays:
        flat = arr.ravel()
        for i in range(flat.size):
            original = flat[i]
            for delta in (eps, -eps):
                flat[i] = original + delta
                perturbed = signature_patterns(data, weights, cfg)
                if not np.array_equal(perturbed, base):
                    flat[i] = original
                    return False
            flat[i] = original
    return True


def stability_threshold(weights: NetworkWeights, cfg: NetworkConfig,
                        data: LabeledDataset, eps_max: float = 1.0,
                        iters: int = 40) -> float:
    """Largest eps (up to eps_max, by bisection) at which the signature
    stability check still passes.  Reported, never asserted: the
    invariance argument guarantees some open neighborhood but no radius.
    """
    if signature_stability(weights, cfg, data, eps_max):
        return eps_max
    lo, hi = 0.0, eps_max
    for _ in range(iters):
        mid = (lo + hi) / 2.0
        if signature_stability(weights, cfg, data, mid):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def weights_hash(weights: NetworkWeights, cfg: NetworkConfig) -> str:
    return hashlib.sha256(weights_to_json(weights, cfg).encode()).hexdigest()


def gram_hash(gram: GramMatrix) -> str:
    return hashlib.sha256(np.ascontiguousarray(gram.entries).tobytes()).hexdigest()


def save_gram(gram: GramMatrix, csv_path, sidecar_path=None, *,
              n_neurons: Optional[int] = None, whash: str = "",
              seed: Optional[int] = None) -> None:
    """Headerless CSV (17 significant digits) plus a JSON sidecar."""
    with open(csv_path, "w") as fh:
        for row in gram.entries:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    if sidecar_path is not None:
        sidecar = {"m": gram.m, "n": n_neurons, "weights_hash": whash, "seed": seed}
        with open(sidecar_path, "w") as fh:
            json.dump(sidecar, fh)


def load_gram(csv_path) -> GramMatrix:
    rows = []
    with open(csv_path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    return GramMatrix(np.asarray(rows, dtype=np.float64))
