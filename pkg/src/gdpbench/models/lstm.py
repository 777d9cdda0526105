"""LSTM sequence regressor.

Standard gated cell, gate order (i, f, g, o) on a fused 4H pre-activation:

    i = sigmoid(x W_xi + h W_hi + b_i)     input gate
    f = sigmoid(x W_xf + h W_hf + b_f)     forget gate
    g = tanh   (x W_xg + h W_hg + b_g)     candidate
    o = sigmoid(x W_xo + h W_ho + b_o)     output gate
    c' = f * c + i * g
    h' = o * tanh(c')

Initial hidden and cell states are zero; the final hidden state feeds an
affine head.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..nn.graph import Graph, forward
from .base import add_param_nodes, glorot


@dataclass(frozen=True)
class LSTMConfig:
    input_dim: int
    hidden_size: int
    num_layers: int = 1
    output_dim: int = 1

    def __post_init__(self):
        if self.hidden_size < 1 or self.num_layers < 1:
            raise ConfigError("hidden_size and num_layers must be >= 1")
        if self.input_dim < 1 or self.output_dim < 1:
            raise ConfigError("input and output dims must be >= 1")


class LSTMForecaster:
    def __init__(self, config: LSTMConfig):
        self.config = config

    @property
    def output_dim(self):
        return self.config.output_dim

    def init_params(self, seed):
        rng = np.random.default_rng(seed)
        cfg = self.config
        params = {}
        for layer in range(cfg.num_layers):
            in_dim = cfg.input_dim if layer == 0 else cfg.hidden_size
            params[f"lstm{layer}/wx"] = glorot(rng, in_dim, 4 * cfg.hidden_size)
            params[f"lstm{layer}/wh"] = glorot(rng, cfg.hidden_size, 4 * cfg.hidden_size)
            params[f"lstm{layer}/b"] = np.zeros(4 * cfg.hidden_size)
        params["head/w"] = glorot(rng, cfg.hidden_size, cfg.output_dim)
        params["head/b"] = np.zeros(cfg.output_dim)
        return params

    def build(self, params, batch_size, x):
        cfg = self.config
        x = np.asarray(x)
        h_len, in_dim = x.shape[1], x.shape[2]
        if in_dim != cfg.input_dim:
            raise ConfigError(f"window has {in_dim} channels, config says {cfg.input_dim}")
        g = Graph()
        p = add_param_nodes(g, params)
        xn = g.input("x", (batch_size, h_len, cfg.input_dim))
        hs = cfg.hidden_size
        zeros = g.constant(np.zeros((batch_size, hs)))
        seq = [g.select_index(xn, 1, t) for t in range(h_len)]
        for layer in range(cfg.num_layers):
            wx, wh = p[f"lstm{layer}/wx"], p[f"lstm{layer}/wh"]
            b = p[f"lstm{layer}/b"]
            h_t, c_t = zeros, zeros
            outputs = []
            for x_t in seq:
                pre = g.broadcast_add(
                    g.add(g.matmul(x_t, wx), g.matmul(h_t, wh)), b)
                i_g = g.sigmoid(g.slice_axis(pre, 1, 0, hs))
                f_g = g.sigmoid(g.slice_axis(pre, 1, hs, 2 * hs))
                g_g = g.tanh(g.slice_axis(pre, 1, 2 * hs, 3 * hs))
                o_g = g.sigmoid(g.slice_axis(pre, 1, 3 * hs, 4 * hs))
                c_t = g.add(g.mul(f_g, c_t), g.mul(i_g, g_g))
                h_t = g.mul(o_g, g.tanh(c_t))
                outputs.append(h_t)
            seq = outputs
        pred = g.affine(seq[-1], p["head/w"], p["head/b"])
        return g, pred

    def bindings(self, x, idx=None):
        x = np.asarray(x, dtype=np.float64)
        return {"x": x if idx is None else x[idx]}

    def n_samples(self, x):
        return np.asarray(x).shape[0]

    def predict(self, params, x):
        x = np.asarray(x, dtype=np.float64)
        g, pred = self.build(params, x.shape[0], x)
        return forward(g, {"x": x}, pred)


def lstm_forward(config: LSTMConfig, params, window) -> np.ndarray:
    """Single-window forward pass; returns the output vector."""
    window = np.asarray(window, dtype=np.float64)
    return LSTMForecaster(config).predict(params, window[None, :, :])[0]
