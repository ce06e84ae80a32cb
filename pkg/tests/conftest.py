import numpy as np
import pytest

from pathmargin import NetworkConfig, NetworkWeights


def random_tiny_config(rng, max_depth=3, max_width=4, max_inputs=3,
                       slopes=(0.0, 0.1), use_biases=False):
    d = int(rng.integers(1, max_depth + 1))
    widths = tuple(int(rng.integers(1, max_width + 1)) for _ in range(d))
    f = int(rng.integers(1, max_inputs + 1))
    beta = float(rng.choice(slopes))
    return NetworkConfig(input_dim=f, hidden_widths=widths,
                         slope_neg=beta, slope_pos=1.0, use_biases=use_biases)


def random_weights(cfg, rng, scale=1.0):
    mats = [scale * rng.standard_normal(shape) for shape in cfg.layer_shapes()]
    biases = None
    if cfg.use_biases:
        biases = [scale * rng.standard_normal(shape) for shape in cfg.bias_shapes()]
    return NetworkWeights(mats, biases)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
