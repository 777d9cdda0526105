"""Fully-connected regressor: affine/activation chain, affine head."""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..nn.graph import Graph, forward
from .base import add_param_nodes, apply_activation, glorot

_ACTIVATIONS = ("relu", "tanh", "gelu", "sigmoid")


@dataclass(frozen=True)
class MLPConfig:
    input_dim: int
    hidden: tuple
    output_dim: int = 1
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(w) for w in self.hidden))
        if len(self.hidden) < 1 or any(w < 1 for w in self.hidden):
            raise ConfigError(f"need >= 1 hidden layer of width >= 1, got {self.hidden}")
        if self.input_dim < 1 or self.output_dim < 1:
            raise ConfigError("input and output dims must be >= 1")
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")


class MLPRegressor:
    def __init__(self, config: MLPConfig):
        self.config = config

    @property
    def output_dim(self):
        return self.config.output_dim

    def init_params(self, seed):
        rng = np.random.default_rng(seed)
        widths = [self.config.input_dim, *self.config.hidden, self.config.output_dim]
        params = {}
        for i in range(len(widths) - 1):
            params[f"l{i}/w"] = glorot(rng, widths[i], widths[i + 1])
            params[f"l{i}/b"] = np.zeros(widths[i + 1])
        return params

    def build(self, params, batch_size, x=None):
        g = Graph()
        p = add_param_nodes(g, params)
        xn = g.input("x", (batch_size, self.config.input_dim))
        h = xn
        n_layers = len(self.config.hidden)
        for i in range(n_layers):
            h = apply_activation(g, g.affine(h, p[f"l{i}/w"], p[f"l{i}/b"]),
                                 self.config.activation)
        pred = g.affine(h, p[f"l{n_layers}/w"], p[f"l{n_layers}/b"])
        return g, pred

    def bindings(self, x, idx=None):
        x = np.asarray(x, dtype=np.float64)
        return {"x": x if idx is None else x[idx]}

    def n_samples(self, x):
        return np.asarray(x).shape[0]

    def predict(self, params, x):
        x = np.asarray(x, dtype=np.float64)
        g, pred = self.build(params, x.shape[0])
        return forward(g, {"x": x}, pred)


def mlp_forward(config: MLPConfig, params, x) -> np.ndarray:
    """Single-sample forward pass; returns the output vector."""
    x = np.asarray(x, dtype=np.float64)
    return MLPRegressor(config).predict(params, x.reshape(1, -1))[0]
