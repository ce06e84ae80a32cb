import json

import numpy as np
import numpy.testing as npt
import pytest

import pathmargin as pm
from pathmargin.pathspace import gram_hash, load_gram, save_gram, weights_hash

from conftest import random_tiny_config, random_weights


class TestEmbed:
    def test_single_active_path(self):
        cfg = pm.NetworkConfig(input_dim=1, hidden_widths=(1,), slope_neg=0.0)
        w = pm.NetworkWeights([np.array([[1.0]]), np.array([[1.0]])])
        npt.assert_array_equal(pm.embed([3.0], w, cfg).values, [3.0])

    def test_inactive_neuron_zeroes_embedding(self):
        cfg = pm.NetworkConfig(input_dim=1, hidden_widths=(1,), slope_neg=0.0)
        w = pm.NetworkWeights([np.array([[-1.0]]), np.array([[1.0]])])
        npt.assert_array_equal(pm.embed([3.0], w, cfg).values, [0.0])

    def test_leaky_hand_example(self):
        cfg = pm.NetworkConfig(input_dim=2, hidden_widths=(2,), slope_neg=0.1)
        # neuron 1 active, neuron 2 inactive on x = (1, 2)
        w = pm.NetworkWeights([np.array([[1.0, 0.5], [-1.0, -0.5]]),
                               np.array([[1.0, 1.0]])])
        phi = pm.embed([1.0, 2.0], w, cfg)
        npt.assert_allclose(phi.values, [1.0, 2.0, 0.1, 0.2])

    def test_reparameterization_identity(self, rng):
        # <Lambda(w), phi(x, w)> equals the forward output (minus the
        # output bias when biases are on)
        for _ in range(60):
            cfg = random_tiny_config(rng, use_biases=bool(rng.integers(2)))
            w = random_weights(cfg, rng)
            lam = pm.path_products(w, cfg)
            for _ in range(5):
                x = rng.standard_normal(cfg.input_dim)
                out, _ = pm.forward(x, w, cfg)
                inner = float(np.dot(lam.values, pm.embed(x, w, cfg).values))
                if cfg.use_biases:
                    inner += w.biases[cfg.depth][0]
                assert abs(out - inner) <= 1e-8 * (1.0 + abs(out))


class TestKernel:
    def test_all_active_relu_hand_value(self):
        cfg = pm.NetworkConfig(input_dim=2, hidden_widths=(3, 3), slope_neg=0.0)
        w = pm.NetworkWeights([np.ones((3, 2)), np.ones((3, 3)), np.ones((1, 3))])
        x, x2 = np.array([1.0, 2.0]), np.array([2.0, 1.0])
        _, sig = pm.forward(x, w, cfg)
        _, sig2 = pm.forward(x2, w, cfg)
        assert pm.kernel(x, x2, sig, sig2) == 36.0

    def test_disjoint_active_sets_kill_kernel(self):
        cfg = pm.NetworkConfig(input_dim=1, hidden_widths=(2,), slope_neg=0.0)
        w = pm.NetworkWeights([np.array([[1.0], [-1.0]]), np.array([[1.0, 1.0]])])
        x, x2 = np.array([1.0]), np.array([-1.0])
        _, sig = pm.forward(x, w, cfg)
        _, sig2 = pm.forward(x2, w, cfg)
        assert pm.kernel(x, x2, sig, sig2) == 0.0
        assert pm.kernel_bruteforce(x, x2, w, cfg) == 0.0

    def test_leaky_self_kernel_hand_value(self):
        cfg = pm.NetworkConfig(input_dim=2, hidden_widths=(2,), slope_neg=0.1)
        w = pm.NetworkWeights([np.array([[1.0, 0.0], [-1.0, 0.0]]),
                               np.array([[1.0, 1.0]])])
        x = np.array([1.0, 0.0])
        _, sig = pm.forward(x, w, cfg)
        value = pm.kernel(x, x, sig, sig)
        npt.assert_allclose(value, 1.01, rtol=1e-15)
        npt.assert_allclose(pm.kernel_bruteforce(x, x, w, cfg), 1.01, rtol=1e-12)

    def test_factorization_matches_bruteforce(self, rng):
        checked = 0
        while checked < 300:
            cfg = random_tiny_config(rng, use_biases=bool(rng.integers(2)))
            w = random_weights(cfg, rng)
            x = rng.standard_normal(cfg.input_dim)
            x2 = rng.standard_normal(cfg.input_dim)
            _, sig = pm.forward(x, w, cfg)
            _, sig2 = pm.forward(x2, w, cfg)
            fast = pm.kernel(x, x2, sig, sig2, w.biases)
            slow = pm.kernel_bruteforce(x, x2, w, cfg)
            assert abs(fast - slow) <= 1e-9 * (1.0 + abs(slow))
            checked += 1

    def test_signature_mismatch_rejected(self):
        cfg = pm.NetworkConfig(input_dim=1, hidden_widths=(2,), slope_neg=0.1)
        w = random_weights(cfg, np.random.default_rng(0))
        _, sig = pm.forward([1.0], w, cfg)
        cfg3 = pm.NetworkConfig(input_dim=1, hidden_widths=(3,), slope_neg=0.1)
        w3 = random_weights(cfg3, np.random.default_rng(0))
        _, sig3 = pm.forward([1.0], w3, cfg3)
        with pytest.raises(pm.ValidationError):
            pm.kernel([1.0], [1.0], sig, sig3)


class TestKernelMatrix:
    def test_single_sample_diagonal(self, rng):
        cfg = random_tiny_config(rng)
        w = random_weights(cfg, rng)
        x = rng.standard_normal(cfg.input_dim)
        data = pm.LabeledDataset(x[None, :], np.array([1]))
        gram = pm.kernel_matrix(data, w, cfg)
        _, sig = pm.forward(x, w, cfg)
        expected = float(np.dot(x, x))
        for layer in sig.per_layer:
            expected *= float(np.dot(layer, layer))
        npt.assert_allclose(gram.entries, [[expected]], rtol=1e-12)

    def test_matches_pairwise_embeddings(self, rng):
        for _ in range(15):
            cfg = random_tiny_config(rng, use_biases=bool(rng.integers(2)))
            w = random_weights(cfg, rng)
            X = rng.standard_normal((6, cfg.input_dim))
            data = pm.LabeledDataset(X, np.ones(6, dtype=np.int64))
            gram = pm.kernel_matrix(data, w, cfg)
            for i in range(6):
                for j in range(6):
                    slow = pm.kernel_bruteforce(X[i], X[j], w, cfg)
                    assert abs(gram.entries[i, j] - slow) <= 1e-9 * (1.0 + abs(slow))

    def test_duplicated_sample_gives_identical_rows(self, rng):
        cfg = random_tiny_config(rng)
        w = random_weights(cfg, rng)
        x = rng.standard_normal(cfg.input_dim)
        X = np.vstack([x, rng.standard_normal(cfg.input_dim), x])
        data = pm.LabeledDataset(X, np.array([1, -1, 1]))
        gram = pm.kernel_matrix(data, w, cfg)
        npt.assert_array_equal(gram.entries[0], gram.entries[2])

    def test_symmetry_and_psd(self, rng):
        for _ in range(10):
            cfg = random_tiny_config(rng, use_biases=bool(rng.integers(2)))
            w = random_weights(cfg, rng)
            m = int(rng.integers(2, 12))
            X = rng.standard_normal((m, cfg.input_dim))
            data = pm.LabeledDataset(X, np.ones(m, dtype=np.int64))
            gram = pm.kernel_matrix(data, w, cfg)
            assert gram.symmetry_defect() <= 1e-12
            trace = float(np.trace(gram.entries))
            assert gram.min_eigenvalue() >= -1e-8 * max(trace / m, 1.0)

    def test_cross_kernel_consistent_with_gram(self, rng):
        cfg = random_tiny_config(rng, use_biases=True)
        w = random_weights(cfg, rng)
        X = rng.standard_normal((5, cfg.input_dim))
        data = pm.LabeledDataset(X, np.ones(5, dtype=np.int64))
        gram = pm.kernel_matrix(data, w, cfg)
        cross = pm.cross_kernel_matrix(X, data, w, cfg)
        npt.assert_allclose(cross, gram.entries, rtol=1e-12, atol=1e-12)


class TestSignatureStability:
    def test_zero_epsilon_is_stable(self, rng):
        cfg = random_tiny_config(rng)
        w = random_weights(cfg, rng)
        data = pm.LabeledDataset(rng.standard_normal((4, cfg.input_dim)),
                                 np.ones(4, dtype=np.int64))
        assert pm.signature_stability(w, cfg, data, 0.0)

    def test_near_zero_preactivation_is_unstable(self):
        # one neuron, pre-activation 0.01 on x=1: eps=0.1 flips it
        cfg = pm.NetworkConfig(input_dim=1, hidden_widths=(1,), slope_neg=0.1)
        w = pm.NetworkWeights([np.array([[0.01]]), np.array([[1.0]])])
        data = pm.LabeledDataset(np.array([[1.0]]), np.array([1]))
        assert not pm.signature_stability(w, cfg, data, 0.1)
        assert pm.signature_stability(w, cfg, data, 0.005)

    def test_threshold_found_by_bisection(self):
        cfg = pm.NetworkConfig(input_dim=1, hidden_widths=(1,), slope_neg=0.1)
        w = pm.NetworkWeights([np.array([[0.5]]), np.array([[1.0]])])
        data = pm.LabeledDataset(np.array([[1.0]]), np.array([1]))
        # flipping the first-layer weight needs eps > 0.5; threshold is
        # reported, not asserted against any external value
        threshold = pm.stability_threshold(w, cfg, data, eps_max=2.0)
        assert 0.4 <= threshold <= 0.51

    def test_stable_perturbations_preserve_signatures(self, rng):
        for _ in range(5):
            cfg = random_tiny_config(rng)
            w = random_weights(cfg, rng)
            data = pm.LabeledDataset(rng.standard_normal((3, cfg.input_dim)),
                                     np.ones(3, dtype=np.int64))
            eps = 1e-9
            if not pm.signature_stability(w, cfg, data, eps):
                continue
            from pathmargin.pathspace import signature_patterns
            base = signature_patterns(data, w, cfg)
            w2 = w.copy()
            w2.matrices[0][0, 0] += eps
            npt.assert_array_equal(signature_patterns(data, w2, cfg), base)


class TestGramExport:
    def test_csv_round_trip_and_sidecar(self, rng, tmp_path):
        cfg = random_tiny_config(rng)
        w = random_weights(cfg, rng)
        X = rng.standard_normal((4, cfg.input_dim))
        data = pm.LabeledDataset(X, np.ones(4, dtype=np.int64))
        gram = pm.kernel_matrix(data, w, cfg)
        csv = tmp_path / "gram.csv"
        sidecar = tmp_path / "gram.json"
        save_gram(gram, csv, sidecar, n_neurons=cfg.num_neurons,
                  whash=weights_hash(w, cfg), seed=9)
        loaded = load_gram(csv)
        npt.assert_array_equal(loaded.entries, gram.entries)
        meta = json.loads(sidecar.read_text())
        assert meta["m"] == 4 and meta["n"] == cfg.num_neurons and meta["seed"] == 9
        assert len(meta["weights_hash"]) == 64
        assert gram_hash(gram) == gram_hash(loaded)
