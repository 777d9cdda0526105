"""Channel-independent patch-transformer forecaster.

Each channel of the input window is processed on its own: the series is
sliced into patches, every patch is affine-embedded, learned position
embeddings are added, a transformer encoder shared across channels runs
over the patch tokens, the encoded tokens are flattened, and a per-channel
affine head produces that channel's forecast. Channels never mix, so
cross-channel sensitivities are exactly zero.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..nn.graph import Graph, forward
from .base import add_param_nodes, encoder_stack, glorot, init_encoder_params


@dataclass(frozen=True)
class PatchForecasterConfig:
    window: int  # h
    channels: int  # c
    patch_len: int  # p
    stride: int  # s
    d_model: int = 16
    heads: int = 2
    depth: int = 1
    head_dim: int = 1  # per-channel head output dim

    def __post_init__(self):
        if self.patch_len > self.window:
            raise ConfigError(
                f"patch length {self.patch_len} exceeds window {self.window}")
        if self.patch_len < 1 or self.stride < 1:
            raise ConfigError("patch length and stride must be >= 1")
        if self.n_patches < 1:
            raise ConfigError("patch arithmetic yields no patches")
        if self.d_model % self.heads != 0:
            raise ConfigError(f"width {self.d_model} not divisible by {self.heads} heads")
        if self.channels < 1:
            raise ConfigError("need at least one channel")

    @property
    def n_patches(self):
        return (self.window - self.patch_len) // self.stride + 1


class PatchForecaster:
    def __init__(self, config: PatchForecasterConfig):
        self.config = config

    @property
    def output_dim(self):
        return self.config.channels * self.config.head_dim

    def init_params(self, seed):
        rng = np.random.default_rng(seed)
        cfg = self.config
        params = {
            "embed/w": glorot(rng, cfg.patch_len, cfg.d_model),
            "embed/b": np.zeros(cfg.d_model),
            "pos": rng.uniform(-0.1, 0.1, size=(cfg.n_patches, cfg.d_model)),
        }
        params.update(init_encoder_params(rng, cfg.depth, cfg.d_model))
        flat = cfg.n_patches * cfg.d_model
        for k in range(cfg.channels):
            params[f"head{k}/w"] = glorot(rng, flat, cfg.head_dim)
            params[f"head{k}/b"] = np.zeros(cfg.head_dim)
        return params

    def build(self, params, batch_size, x=None):
        cfg = self.config
        g = Graph()
        p = add_param_nodes(g, params)
        xn = g.input("x", (batch_size, cfg.window, cfg.channels))
        outs = []
        for k in range(cfg.channels):
            series = g.select_index(xn, 2, k)  # (B, h)
            tokens = []
            for j in range(cfg.n_patches):
                start = j * cfg.stride
                piece = g.slice_axis(series, 1, start, start + cfg.patch_len)
                tokens.append(g.affine(piece, p["embed/w"], p["embed/b"]))
            seq = g.stack(tokens, axis=1)  # (B, n_patches, d_model)
            seq = g.broadcast_add(seq, p["pos"])
            enc = encoder_stack(g, seq, p, cfg.depth, cfg.heads)
            flat = g.reshape(enc, (batch_size, cfg.n_patches * cfg.d_model))
            outs.append(g.affine(flat, p[f"head{k}/w"], p[f"head{k}/b"]))
        pred = outs[0] if len(outs) == 1 else g.concat(outs)
        return g, pred

    def bindings(self, x, idx=None):
        x = np.asarray(x, dtype=np.float64)
        return {"x": x if idx is None else x[idx]}

    def n_samples(self, x):
        return np.asarray(x).shape[0]

    def predict(self, params, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[1] != self.config.window or x.shape[2] != self.config.channels:
            raise ConfigError(
                f"window {x.shape[1:]} does not match config "
                f"({self.config.window}, {self.config.channels})")
        g, pred = self.build(params, x.shape[0])
        return forward(g, {"x": x}, pred)


def patch_forecast(config: PatchForecasterConfig, params, window) -> np.ndarray:
    """Forecast the next value of each channel from one (h, c) window."""
    window = np.asarray(window, dtype=np.float64)
    return PatchForecaster(config).predict(params, window[None, :, :])[0]
