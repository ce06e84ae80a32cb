"""Recovering network weights from their path products.

Path products only determine weights up to layer rescalings and sign
ambiguities.  Both collapse once a "skeleton" is fixed: one incoming
edge per non-input neuron, rescaled so its weight is exactly +/-1.
Given the dense path-product vector and those n edge signs, every
individual weight is a ratio of path products, recovered here layer by
layer.  Biased networks are out of scope for this module.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import (
    InconsistentPathProductsError,
    UnreachableNeuronError,
    ValidationError,
)
from .network import (
    DEFAULT_PATH_BUDGET,
    NetworkConfig,
    NetworkWeights,
    PathVector,
    check_path_budget,
    path_products,
)

ZERO_TOL = 1e-12        # |w| at or below this counts as an exact zero
RECOVERY_TOL = 1e-8     # relative mismatch tolerated when re-verifying products


@dataclass
class Skeleton:
    """One chosen incoming edge per hidden neuron, with its sign.

    sources[l-1][i] is the index in layer l-1 (layer 0 = input features)
    feeding neuron i of layer l; signs[l-1][i] is the weight on that edge
    after normalization, always exactly +1 or -1.
    """

    sources: list[np.ndarray]
    signs: list[np.ndarray]

    @property
    def num_edges(self) -> int:
        return sum(s.size for s in self.sources)

    def spine(self, layer: int, neuron: int) -> tuple[int, ...]:
        """Path (i_layer, j_{layer-1}, ..., j_0) following chosen edges to
        the input.  layer=0 addresses an input feature directly."""
        path = [neuron]
        l, i = layer, neuron
        while l >= 1:
            i = int(self.sources[l - 1][i])
            path.append(i)
            l -= 1
        return tuple(path)

    def spine_sign(self, layer: int, neuron: int) -> float:
        """Product of edge signs along the spine (+1 for an input)."""
        sign = 1.0
        l, i = layer, neuron
        while l >= 1:
            sign *= float(self.signs[l - 1][i])
            i = int(self.sources[l - 1][i])
            l -= 1
        return sign


def _require_bias_free(cfg: NetworkConfig) -> None:
    if cfg.use_biases:
        raise ValidationError("skeleton operations support bias-free networks only")


def _nonzero_masks(weights: NetworkWeights, zero_tol: float):
    return [np.abs(M) > zero_tol for M in weights.matrices]


def _liveness(weights: NetworkWeights, cfg: NetworkConfig, zero_tol: float):
    """Per hidden layer: which neurons sit on some all-nonzero path."""
    nz = _nonzero_masks(weights, zero_tol)
    d = cfg.depth
    fwd = []
    reach = np.ones(cfg.input_dim, dtype=bool)
    for l in range(d):
        reach = (nz[l] & reach[None, :]).any(axis=1)
        fwd.append(reach)
    bwd = [None] * d
    reach = nz[d][0, :]
    bwd[d - 1] = reach
    for l in range(d - 1, 0, -1):
        reach = (nz[l] & reach[:, None]).any(axis=0)
        bwd[l - 1] = reach
    return [f & b for f, b in zip(fwd, bwd)]


@dataclass
class PruneResult:
    weights: Optional[NetworkWeights]
    config: Optional[NetworkConfig]
    kept: list[np.ndarray]
    zero_function: bool
    borderline_count: int  # entries with 0 < |w| <= zero_tol, treated as zero


def prune_dead_neurons(weights: NetworkWeights, cfg: NetworkConfig,
                       zero_tol: float = ZERO_TOL) -> PruneResult:
    """Drop every neuron that lies on no path with a nonzero weight
    product.  Forward outputs are unchanged; if a hidden layer empties,
    the network is the zero function and that is reported instead of a
    pruned network."""
    _require_bias_free(cfg)
    weights.validate(cfg)
    borderline = sum(int(np.sum((np.abs(M) > 0) & (np.abs(M) <= zero_tol)))
                     for M in weights.matrices)
    live = _liveness(weights, cfg, zero_tol)
    kept = [np.flatnonzero(mask) for mask in live]
    if any(k.size == 0 for k in kept):
        return PruneResult(None, None, kept, True, borderline)
    if all(k.size == w for k, w in zip(kept, cfg.hidden_widths)):
        return PruneResult(weights.copy(), cfg, kept, False, borderline)
    d = cfg.depth
    mats = [weights.matrices[0][kept[0], :]]
    for l in range(1, d):
        mats.append(weights.matrices[l][np.ix_(kept[l], kept[l - 1])])
    mats.append(weights.matrices[d][:, kept[d - 1]])
    new_cfg = NetworkConfig(
        input_dim=cfg.input_dim,
        hidden_widths=tuple(int(k.size) for k in kept),
        slope_neg=cfg.slope_neg,
        slope_pos=cfg.slope_pos,
        use_biases=False,
    )
    return PruneResult(NetworkWeights(mats), new_cfg, kept, False, borderline)


def normalize_to_skeleton(weights: NetworkWeights, cfg: NetworkConfig,
                          zero_tol: float = ZERO_TOL) -> tuple[NetworkWeights, Skeleton]:
    """Rescale layers so each hidden neuron has one incoming weight of
    exactly +/-1 (the skeleton edge), leaving all path products and the
    classifier unchanged.

    Requires a pruned network.  Per neuron the largest-magnitude
    eligible incoming weight is chosen (lowest index on ties), which
    keeps the later ratio recovery well conditioned.
    """
    _require_bias_free(cfg)
    weights.validate(cfg)
    live = _liveness(weights, cfg, zero_tol)
    if not all(mask.all() for mask in live):
        raise ValidationError("network has dead neurons; prune before normalizing")
    w = weights.copy()
    sources, signs = [], []
    for l in range(1, cfg.depth + 1):
        M = w.matrices[l - 1]
        width = cfg.hidden_widths[l - 1]
        src = np.empty(width, dtype=np.int64)
        sgn = np.empty(width, dtype=np.int64)
        for i in range(width):
            j = int(np.argmax(np.abs(M[i])))
            scale = abs(M[i, j])
            if scale <= zero_tol:
                raise ValidationError(
                    f"neuron {i} in layer {l} has no usable incoming weight")
            # rho commutes with positive diagonal scalings, so dividing the
            # incoming row and multiplying the outgoing column preserves the
            # network function and every path product
            M[i, :] /= scale
            w.matrices[l][:, i] *= scale
            src[i] = j
            sgn[i] = 1 if M[i, j] > 0 else -1
        sources.append(src)
        signs.append(sgn)
    return w, Skeleton(sources, signs)


def recover_weights(wbar: PathVector, skel: Skeleton, cfg: NetworkConfig,
                    zero_tol: float = ZERO_TOL, verify_tol: float = RECOVERY_TOL,
                    budget: int = DEFAULT_PATH_BUDGET) -> NetworkWeights:
    """Reconstruct weights whose path products equal wbar, given the
    skeleton edges and signs.

    Output weights come from single-path ratios along each neuron's
    spine; every interior weight W^l[i, j] is a ratio of two path
    products sharing their top portion, using the lexicographically
    first suffix (e_d, ..., e_{l+2}) with a nonzero product.  The result
    is re-verified against wbar coordinate by coordinate.
    """
    _require_bias_free(cfg)
    check_path_budget(cfg, budget)
    if wbar.config != cfg:
        raise ValidationError("path vector was built for a different architecture")
    if len(skel.sources) != cfg.depth or any(
            s.size != w for s, w in zip(skel.sources, cfg.hidden_widths)):
        raise ValidationError("skeleton does not match the architecture")
    d = cfg.depth
    T = wbar.main_tensor()  # axes (i_d, ..., i_1, i_0)

    spine_signs = [np.array([skel.spine_sign(l, i) for i in range(cfg.hidden_widths[l - 1])])
                   for l in range(1, d + 1)]

    def bbar(layer: int, neuron: int) -> float:
        return 1.0 if layer == 0 else float(spine_signs[layer - 1][neuron])

    shapes = cfg.layer_shapes()
    mats = [np.empty(shape) for shape in shapes]

    # output layer: one spine path per top neuron
    for i in range(cfg.hidden_widths[d - 1]):
        value = float(T[skel.spine(d, i)])
        if abs(value) <= zero_tol:
            raise UnreachableNeuronError(
                f"neuron {i} in layer {d} has a zero product along its spine")
        mats[d][0, i] = value / bbar(d, i)

    for l in range(d - 1, -1, -1):
        n_suffix = d - l - 1  # layers d .. l+2
        for i in range(cfg.hidden_widths[l]):
            jpath = skel.spine(l + 1, i)
            denom_slice = np.asarray(T[(slice(None),) * n_suffix + jpath])
            flat = np.flatnonzero(np.abs(denom_slice.ravel()) > zero_tol)
            if flat.size == 0:
                raise UnreachableNeuronError(
                    f"neuron {i} in layer {l + 1} is on no nonzero path to the output")
            suffix = () if n_suffix == 0 else tuple(
                int(v) for v in np.unravel_index(int(flat[0]), denom_slice.shape))
            denom = float(T[suffix + jpath]) / bbar(l + 1, i)
            n_src = shapes[l][1]
            for j in range(n_src):
                kpath = (j,) if l == 0 else skel.spine(l, j)
                numer = float(T[suffix + (i,) + kpath]) / bbar(l, j)
                mats[l][i, j] = numer / denom

    recovered = NetworkWeights(mats)
    lam = path_products(recovered, cfg, budget)
    scale = float(np.max(np.abs(wbar.values))) if wbar.values.size else 0.0
    if not np.allclose(lam.values, wbar.values, rtol=verify_tol,
                       atol=verify_tol * scale):
        worst = float(np.max(np.abs(lam.values - wbar.values)))
        raise InconsistentPathProductsError(
            "supplied path products are not realizable with this skeleton "
            f"(max coordinate mismatch {worst:.3g})")
    return recovered


def classifier_count_bound(cfg_or_n) -> int:
    """2^n, the number of distinct sign classifiers compatible with a
    single path-product vector up to positive scaling (n = number of
    hidden neurons)."""
    if isinstance(cfg_or_n, NetworkConfig):
        n = cfg_or_n.num_neurons
    else:
        n = int(cfg_or_n)
    if n < 0:
        raise ValidationError("neuron count must be nonnegative")
    if n > 62:
        raise ValidationError(f"2^{n} exceeds the representable bound (n must be <= 62)")
    return 1 << n


def skeleton_to_json(skel: Skeleton) -> str:
    edges, signs = [], []
    for l, (src, sgn) in enumerate(zip(skel.sources, skel.signs), start=1):
        for i in range(src.size):
            edges.append([l, int(i), int(src[i])])
            signs.append(int(sgn[i]))
    return json.dumps({"edges": edges, "signs": signs, "n": skel.num_edges})


def skeleton_from_json(text: str) -> Skeleton:
    doc = json.loads(text)
    by_layer: dict[int, list[tuple[int, int, int]]] = {}
    for (l, i, s), sign in zip(doc["edges"], doc["signs"]):
        by_layer.setdefault(l, []).append((i, s, sign))
    sources, signs = [], []
    for l in sorted(by_layer):
        entries = sorted(by_layer[l])
        sources.append(np.array([s for _, s, _ in entries], dtype=np.int64))
        signs.append(np.array([sign for _, _, sign in entries], dtype=np.int64))
    skel = Skeleton(sources, signs)
    if skel.num_edges != doc["n"]:
        raise ValidationError("skeleton edge count does not match recorded n")
    return skel
