"""Representation Transformer: regression over (LLM embedding, value) tokens.

Each indicator contributes one token: its text-description embedding is
projected down, the raw indicator value is replicated ``value_dim`` times
and concatenated onto the projection, a learned per-slot position embedding
is added, a transformer encoder mixes the tokens, encoder outputs are
mean-pooled, and an affine head yields the GDP-growth prediction. Because
pooling is a mean over tokens, the same trained parameters accept any token
count up to the position-table size, so panels with different numbers of
indicators share one model.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ValidationError
from ..nn.graph import Graph, forward
from .base import add_param_nodes, encoder_stack, glorot, init_encoder_params


@dataclass(frozen=True)
class RTConfig:
    embed_dim: int = 6144  # E: width of the LLM representation vectors
    proj_dim: int = 64  # P: projection width
    value_dim: int = 16  # how many times the scalar value is replicated
    depth: int = 2
    heads: int = 4
    max_tokens: int = 32

    def __post_init__(self):
        if self.proj_dim < 1 or self.value_dim < 1:
            raise ConfigError("proj_dim and value_dim must be >= 1")
        if self.token_dim % self.heads != 0:
            raise ConfigError(
                f"token width {self.token_dim} not divisible by {self.heads} heads")
        if self.max_tokens < 1 or self.embed_dim < 1:
            raise ConfigError("embed_dim and max_tokens must be >= 1")

    @property
    def token_dim(self):
        return self.proj_dim + self.value_dim


@dataclass(frozen=True)
class RTToken:
    """One indicator's embedding vector plus its numeric value."""

    embedding: np.ndarray  # (E,)
    value: float


class RepresentationTransformer:
    def __init__(self, config: RTConfig):
        self.config = config

    output_dim = 1

    def init_params(self, seed):
        rng = np.random.default_rng(seed)
        cfg = self.config
        params = {
            "proj/w": glorot(rng, cfg.embed_dim, cfg.proj_dim),
            "proj/b": np.zeros(cfg.proj_dim),
            "pos": rng.uniform(-0.1, 0.1, size=(cfg.max_tokens, cfg.token_dim)),
        }
        params.update(init_encoder_params(rng, cfg.depth, cfg.token_dim))
        params["out/w"] = glorot(rng, cfg.token_dim, 1)
        params["out/b"] = np.zeros(1)
        return params

    def _check_tokens(self, n):
        if n < 1:
            raise ValidationError("need at least one token")
        if n > self.config.max_tokens:
            raise ValidationError(
                f"{n} tokens exceed the position table ({self.config.max_tokens})")

    def build(self, params, batch_size, x):
        cfg = self.config
        emb, _val = x
        n = np.asarray(emb).shape[1]
        self._check_tokens(n)
        g = Graph()
        p = add_param_nodes(g, params)
        emb_in = g.input("emb", (batch_size, n, cfg.embed_dim))
        val_in = g.input("val", (batch_size, n))
        v = g.affine(emb_in, p["proj/w"], p["proj/b"])  # (B, n, P)
        u = g.tile_last(g.reshape(val_in, (batch_size, n, 1)), cfg.value_dim)
        c = g.concat([v, u])  # (B, n, P + value_dim)
        c = g.broadcast_add(c, g.slice_axis(p["pos"], 0, 0, n))
        enc = encoder_stack(g, c, p, cfg.depth, cfg.heads)
        pooled = g.mean(enc, axis=1)  # (B, token_dim)
        pred = g.affine(pooled, p["out/w"], p["out/b"])  # (B, 1)
        return g, pred

    def bindings(self, x, idx=None):
        emb, val = x
        emb = np.asarray(emb, dtype=np.float64)
        val = np.asarray(val, dtype=np.float64)
        if idx is not None:
            emb, val = emb[idx], val[idx]
        return {"emb": emb, "val": val}

    def n_samples(self, x):
        return np.asarray(x[0]).shape[0]

    def predict(self, params, x):
        emb, val = x
        emb = np.asarray(emb, dtype=np.float64)
        val = np.asarray(val, dtype=np.float64)
        g, pred = self.build(params, emb.shape[0], (emb, val))
        return forward(g, {"emb": emb, "val": val}, pred)


def rt_forward(config: RTConfig, params, tokens) -> float:
    """Predict GDP growth from a list of RTTokens."""
    if not tokens:
        raise ValidationError("need at least one token")
    emb = np.stack([np.asarray(t.embedding, dtype=np.float64) for t in tokens])[None]
    val = np.array([[t.value for t in tokens]], dtype=np.float64)
    model = RepresentationTransformer(config)
    if emb.shape[2] != config.embed_dim:
        raise ValidationError(
            f"token embedding dim {emb.shape[2]} != configured {config.embed_dim}")
    return float(model.predict(params, (emb, val))[0, 0])
