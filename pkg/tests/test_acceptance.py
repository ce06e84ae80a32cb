"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion
lines.  Tolerances are fixed here, not calibrated at runtime.
"""

import time

import numpy as np
import numpy.testing as npt
import pytest

import pathmargin as pm
from pathmargin.compression import BoundInputs
from pathmargin.harness import dense_region_mask, grid_points

from conftest import random_tiny_config, random_weights


def spearman(xs, ys):
    """Rank correlation; ties broken by mean rank."""
    def ranks(v):
        v = np.asarray(v, dtype=np.float64)
        order = np.argsort(v, kind="mergesort")
        r = np.empty(len(v))
        r[order] = np.arange(1, len(v) + 1)
        for val in np.unique(v):
            mask = v == val
            r[mask] = r[mask].mean()
        return r
    a, b = ranks(xs), ranks(ys)
    a = a - a.mean()
    b = b - b.mean()
    return float((a * b).sum() / np.sqrt((a * a).sum() * (b * b).sum()))


def train_pipeline(data, widths, seed, *, use_biases=True, lr=0.05, momentum=0.9,
                   batch=100, iters=60_000, init=0.1, beta=0.1, patience=3,
                   tol=1e-8, max_sweeps=300_000):
    cfg = pm.NetworkConfig(input_dim=data.input_dim, hidden_widths=widths,
                           slope_neg=beta, use_biases=use_biases)
    hyper = pm.TrainingConfig(learning_rate=lr, momentum=momentum, batch_size=batch,
                              max_iters=iters, init_std=init, seed=seed,
                              zte_patience=patience)
    result = pm.train_sgd(data, cfg, hyper)
    if not result.achieved_zero_error:
        raise pm.GatedRefusalError("zero training error not reached")
    gram = pm.kernel_matrix(data, result.weights, cfg)
    sol = pm.solve_hard_margin(gram, data.labels, tol=tol, max_iters=max_sweeps)
    assert sol.converged
    return cfg, result, gram, sol


def test_criterion_1_reparameterization_identity():
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(100):
        cfg = random_tiny_config(rng, slopes=(0.0, 0.1))
        w = random_weights(cfg, rng)
        lam = pm.path_products(w, cfg)
        for _ in range(50):
            x = rng.standard_normal(cfg.input_dim)
            out, _ = pm.forward(x, w, cfg)
            inner = float(np.dot(lam.values, pm.embed(x, w, cfg).values))
            rel = abs(out - inner) / (1.0 + abs(out))
            worst = max(worst, rel)
            assert rel <= 1e-8
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    print(f"\ncriterion 1 PASS: reparameterization identity on 100 nets x 50 inputs "
          f"(worst rel {worst:.2e}, {elapsed:.1f}s)")


def test_criterion_2_kernel_factorization_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(202)
    worst = 0.0
    for i in range(1000):
        cfg = random_tiny_config(rng, slopes=(0.0, 0.1), use_biases=bool(i % 3 == 0))
        w = random_weights(cfg, rng)
        x = rng.standard_normal(cfg.input_dim)
        x2 = rng.standard_normal(cfg.input_dim)
        _, sig = pm.forward(x, w, cfg)
        _, sig2 = pm.forward(x2, w, cfg)
        fast = pm.kernel(x, x2, sig, sig2, w.biases)
        slow = pm.kernel_bruteforce(x, x2, w, cfg)
        rel = abs(fast - slow) / (1.0 + abs(slow))
        worst = max(worst, rel)
        assert rel <= 1e-9
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    print(f"\ncriterion 2 PASS: factorized kernel vs brute force on 1000 pairs "
          f"(worst rel {worst:.2e}, {elapsed:.1f}s)")


def test_criterion_3_skeleton_round_trip():
    started = time.perf_counter()
    rng = np.random.default_rng(303)
    grids_checked = 0
    for _ in range(100):
        cfg = random_tiny_config(rng, slopes=(0.1,))
        w = random_weights(cfg, rng)
        w_norm, skel = pm.normalize_to_skeleton(w, cfg)
        lam = pm.path_products(w_norm, cfg)
        recovered = pm.recover_weights(lam, skel, cfg)
        for a, b in zip(recovered.matrices, w_norm.matrices):
            npt.assert_allclose(a, b, rtol=1e-8, atol=0)
        if cfg.input_dim == 2:
            base = pm.boundary_grid(pm.network_classifier(w_norm, cfg),
                                    (-2, 2, -2, 2), 100)
            rec = pm.boundary_grid(pm.network_classifier(recovered, cfg),
                                   (-2, 2, -2, 2), 100)
            npt.assert_array_equal(rec, base)
            grids_checked += 1
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0
    assert grids_checked >= 10
    print(f"\ncriterion 3 PASS: 100 skeleton round trips entrywise 1e-8, "
          f"{grids_checked} sign-exact 100x100 grids ({elapsed:.1f}s)")


def test_criterion_4_solver_vs_brute_force():
    from test_maxmargin import brute_force_direction, linear_gram, primal_from_alphas
    rng = np.random.default_rng(404)
    done = 0
    worst_cos = 1.0
    while done < 50:
        m = int(rng.integers(2, 7))
        f = int(rng.integers(1, 3))
        X = rng.standard_normal((m, f))
        w_true = rng.standard_normal(f)
        w_true /= np.linalg.norm(w_true)
        proj = X @ w_true
        keep = np.abs(proj) > 0.3
        if keep.sum() < 2:
            continue
        X, y = X[keep], np.sign(proj[keep])
        sol = pm.solve_hard_margin(linear_gram(X), y)
        assert sol.converged
        # KKT residual at the stated tolerance
        scores = y * (X @ primal_from_alphas(X, y, sol.alphas))
        residual = max(float(np.max(np.maximum(0.0, 1.0 - scores))),
                       float(np.max(np.abs(scores[sol.support_indices] - 1.0))))
        assert residual <= 1e-8
        w = primal_from_alphas(X, y, sol.alphas)
        w_star, _ = brute_force_direction(X, y)
        cos = float(np.dot(w, w_star) / np.linalg.norm(w))
        worst_cos = min(worst_cos, cos)
        assert cos >= 1.0 - 1e-4
        done += 1
    print(f"\ncriterion 4 PASS: solver matches exhaustive search on 50 datasets "
          f"(worst cosine {worst_cos:.8f}, KKT <= 1e-8)")


def test_criterion_5_bound_formula_and_monotonicity():
    # frozen 40-digit oracle value for (10000, 10, 100, 0.05)
    oracle = 0.1589406819062993
    value = pm.bound_value(BoundInputs(m=10000, n=10, s=100, delta=0.05))
    assert abs(value - oracle) <= 1e-12 * oracle

    ms = [200, 400, 800, 1600, 3200, 6400, 12800, 25600, 51200, 102400]
    ns = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512]
    ss = [1, 2, 4, 8, 16, 32, 48, 56, 64, 72]
    deltas = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0]
    points = 0
    for m in ms:
        for n in ns:
            for s in ss:
                for delta in deltas:
                    f = pm.bound_value(BoundInputs(m, n, s, delta))
                    assert pm.bound_value(BoundInputs(m, 2 * n, s, delta)) > f
                    assert pm.bound_value(BoundInputs(m, n, s + 1, delta)) > f
                    assert pm.bound_value(BoundInputs(2 * m, n, s, delta)) < f
                    if delta < 1.0:
                        assert pm.bound_value(
                            BoundInputs(m, n, s, min(1.0, 2 * delta))) < f
                    points += 1
    assert points == 10_000

    depth_means = _depth_sweep_bound_means()
    depths = sorted(depth_means)
    assert depth_means[depths[-1]] < depth_means[depths[0]]
    print(f"\ncriterion 5 PASS: Eq-value 1e-12 exact, 10^4-point monotonicity grid, "
          f"depth trend F{depths[0]}={depth_means[depths[0]]:.3f} > "
          f"F{depths[-1]}={depth_means[depths[-1]]:.3f}")


def test_criterion_6_wbar_positivity_on_quadrant_data():
    started = time.perf_counter()
    positives = 0
    minima = []
    for seed in range(5):
        data = pm.generate_dataset("quadrants", {"m": 40}, seed=seed)
        cfg = pm.NetworkConfig(input_dim=2, hidden_widths=(4,), slope_neg=0.1,
                               slope_pos=1.0, use_biases=False)
        hyper = pm.TrainingConfig(learning_rate=0.005, momentum=0.0, batch_size=None,
                                  max_iters=15000, init_std=0.025, seed=seed,
                                  zte_patience=None)
        result = pm.train_sgd(data, cfg, hyper)
        assert result.achieved_zero_error
        ok, minimum = pm.check_wbar_positive(result.weights, cfg)
        assert ok == pm.check_wbar_positive_parity(result.weights, cfg)
        minima.append(minimum)
        positives += int(ok)
    elapsed = time.perf_counter() - started
    assert elapsed < 120.0
    assert positives >= 4
    print(f"\ncriterion 6 PASS: wbar > 0 in {positives}/5 seeds "
          f"(min coordinates {['%.3g' % v for v in minima]}, {elapsed:.1f}s)")


AGREEMENT_DATASETS = [
    ("blobs2d", {"std": 0.5, "spread": 2.0}),
    ("rings2d", {}),
    ("xor2d", {"std": 0.5, "offset": 1.5}),
]


def test_criterion_7_network_vs_max_margin_agreement():
    agreements = {}
    for name, params in AGREEMENT_DATASETS:
        data = pm.generate_dataset(name, dict(params, m=200), seed=0)
        cfg, result, gram, sol = train_pipeline(data, (8, 8, 8), seed=0,
                                                iters=40_000)
        lo = float(data.features.min()) - 0.5
        hi = float(data.features.max()) + 0.5
        points = grid_points((lo, hi, lo, hi), 80)
        nn = np.sort(np.linalg.norm(
            data.features[:, None, :] - data.features[None, :, :], axis=2), axis=1)[:, 1]
        radius = 2.0 * float(np.median(nn))
        mask = dense_region_mask(points, data, radius)
        assert mask.sum() >= 500
        net_preds = pm.network_classifier(result.weights, cfg)(points[mask])
        margin_preds = pm.margin_classifier(sol, data, result.weights, cfg)(points[mask])
        agreements[name] = pm.agreement(net_preds, margin_preds)
        assert agreements[name] >= 0.95
    summary = ", ".join(f"{k}={v:.4f}" for k, v in agreements.items())
    print(f"\ncriterion 7 PASS: network vs max-margin agreement on dense grid: {summary}")


def test_criterion_9_unique_signature_compression():
    data = pm.generate_dataset("blobs2d", {"m": 200, "std": 0.5, "spread": 2.0},
                               seed=0)
    cfg, result, _, _ = train_pipeline(data, (8, 8, 8), seed=0, iters=40_000)
    count = pm.count_unique_signatures(result.weights, cfg, data)
    again = pm.count_unique_signatures(result.weights, cfg, data)
    assert count == again
    assert count <= len(data)
    assert count < 0.5 * len(data)
    print(f"\ncriterion 9 PASS: {count} unique signatures over m={len(data)} "
          f"training samples (< 0.5 m, deterministic)")


def test_criterion_10_gradient_check():
    rng = np.random.default_rng(1010)
    step = 1e-5
    worst = 0.0
    for _ in range(20):
        cfg = random_tiny_config(rng, slopes=(0.1, 0.3),
                                 use_biases=bool(rng.integers(2)))
        w = random_weights(cfg, rng)
        X = rng.standard_normal((6, cfg.input_dim))
        y = rng.choice([-1.0, 1.0], size=6)
        _, grads, gbias = pm.loss_and_gradients(w, cfg, X, y)
        arrays = list(zip(w.matrices, grads))
        if cfg.use_biases:
            arrays += list(zip(w.biases, gbias))
        for arr, grad in arrays:
            flat, gflat = arr.ravel(), grad.ravel()
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + step
                up, _, _ = pm.loss_and_gradients(w, cfg, X, y)
                flat[i] = keep - step
                down, _, _ = pm.loss_and_gradients(w, cfg, X, y)
                flat[i] = keep
                fd = (up - down) / (2 * step)
                err = abs(fd - gflat[i])
                bound = 1e-5 * max(abs(fd), abs(gflat[i])) + 1e-12
                worst = max(worst, err / max(bound, 1e-300))
                assert err <= bound
    print(f"\ncriterion 10 PASS: backprop matches central differences on 20 nets "
          f"(worst error/bound ratio {worst:.3f})")
