"""Shared building blocks for the neural model families."""

import numpy as np

from ..nn.graph import Graph

FF_MULT = 4  # encoder feed-forward width multiplier


def glorot(rng, fan_in, fan_out, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape if shape is not None else (fan_in, fan_out))


def init_encoder_params(rng, depth, d_model, prefix="enc"):
    """Pre-norm transformer encoder stack parameters."""
    ff = FF_MULT * d_model
    params = {}
    for i in range(depth):
        q = f"{prefix}{i}/"
        for gate in ("wq", "wk", "wv", "wo"):
            params[q + gate] = glorot(rng, d_model, d_model)
            if gate != "wk":  # key bias is a softmax no-op, not a parameter
                params[q + gate.replace("w", "b")] = np.zeros(d_model)
        params[q + "ln1_g"] = np.ones(d_model)
        params[q + "ln1_b"] = np.zeros(d_model)
        params[q + "ln2_g"] = np.ones(d_model)
        params[q + "ln2_b"] = np.zeros(d_model)
        params[q + "ff1_w"] = glorot(rng, d_model, ff)
        params[q + "ff1_b"] = np.zeros(ff)
        params[q + "ff2_w"] = glorot(rng, ff, d_model)
        params[q + "ff2_b"] = np.zeros(d_model)
    params[f"{prefix}_ln_g"] = np.ones(d_model)
    params[f"{prefix}_ln_b"] = np.zeros(d_model)
    return params


def encoder_stack(g: Graph, x, p, depth, heads, prefix="enc"):
    """Pre-LN blocks: x + MHA(LN(x)), then x + FFN(LN(x)); final LN."""
    for i in range(depth):
        q = f"{prefix}{i}/"
        a = g.layer_norm(x, p[q + "ln1_g"], p[q + "ln1_b"])
        att = g.multi_head_attention(
            a, heads,
            p[q + "wq"], p[q + "bq"], p[q + "wk"],
            p[q + "wv"], p[q + "bv"], p[q + "wo"], p[q + "bo"])
        x = g.add(x, att)
        f = g.layer_norm(x, p[q + "ln2_g"], p[q + "ln2_b"])
        ff = g.affine(g.gelu(g.affine(f, p[q + "ff1_w"], p[q + "ff1_b"])),
                      p[q + "ff2_w"], p[q + "ff2_b"])
        x = g.add(x, ff)
    return g.layer_norm(x, p[f"{prefix}_ln_g"], p[f"{prefix}_ln_b"])


def add_param_nodes(g: Graph, params):
    return {name: g.parameter(name, value) for name, value in sorted(params.items())}


def apply_activation(g: Graph, node, activation):
    return getattr(g, activation)(node)
