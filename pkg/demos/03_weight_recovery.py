#!/usr/bin/env python3
"""Recover a network's weights from its path products.

Path products forget layer scales and weight signs, yet fixing one
incoming edge per neuron (a skeleton, n edges) with its sign pins the
whole network down: every weight is a ratio of two path products.  The
script prunes dead neurons, normalizes the skeleton edges to +/-1,
destroys the weights, and rebuilds them from the product vector alone.
Flipping one skeleton sign rebuilds a genuinely different network with
the same products: that is the 2^n ambiguity.
"""

import numpy as np

import pathmargin as pm
from pathmargin.skeleton import Skeleton

rng = np.random.default_rng(7)

cfg = pm.NetworkConfig(input_dim=2, hidden_widths=(3, 3), slope_neg=0.1)
weights = pm.NetworkWeights([rng.standard_normal(s) for s in cfg.layer_shapes()])
weights.matrices[2][0, 1] = 0.0  # one dead neuron to prune

pruned = pm.prune_dead_neurons(weights, cfg)
print(f"pruned widths: {cfg.hidden_widths} -> {pruned.config.hidden_widths}")

w_norm, skel = pm.normalize_to_skeleton(pruned.weights, pruned.config)
print(f"skeleton: {skel.num_edges} edges, signs "
      f"{[s.tolist() for s in skel.signs]}")
print(f"2^n classifier bound: {pm.classifier_count_bound(pruned.config)}")

lam = pm.path_products(w_norm, pruned.config)
rebuilt = pm.recover_weights(lam, skel, pruned.config)
worst = max(float(np.max(np.abs(a - b))) for a, b in
            zip(rebuilt.matrices, w_norm.matrices))
print(f"round trip max |weight error|: {worst:.2e}")

# same products, different signs, different classifier
flipped = Skeleton([s.copy() for s in skel.sources],
                   [s.copy() for s in skel.signs])
flipped.signs[0][0] *= -1
other = pm.recover_weights(lam, flipped, pruned.config)
lam_other = pm.path_products(other, pruned.config)
print(f"flipped-sign rebuild: max |Lambda difference| = "
      f"{float(np.max(np.abs(lam_other.values - lam.values))):.2e}")
probes = rng.standard_normal((500, 2))
disagree = np.mean(
    pm.classify_batch(probes, other, pruned.config)
    != pm.classify_batch(probes, w_norm, pruned.config))
print(f"yet the two networks disagree on {disagree:.1%} of random probes")
