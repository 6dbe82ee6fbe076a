"""Transformer building blocks shared by the generators and the classifier.

Parameters live in flat ``dict[str, Tensor]`` maps; each block reads the
entries under its name prefix. Blocks are pre-norm with scale-only RMS
normalisation and a GELU feed-forward.
"""

from __future__ import annotations

import math

import numpy as np

from ..numerics import Tensor, gelu, rms_norm, softmax

NEG_INF = -np.inf


def init_attention(params: dict, prefix: str, d: int, rng, out_scale: float = 1.0) -> None:
    std = 1.0 / math.sqrt(d)
    for name in ("q", "k", "v"):
        params[f"{prefix}.{name}"] = Tensor(rng.normal(0.0, std, (d, d)), name=f"{prefix}.{name}")
    params[f"{prefix}.o"] = Tensor(rng.normal(0.0, std * out_scale, (d, d)), name=f"{prefix}.o")


def init_ffn(params: dict, prefix: str, d: int, ff: int, rng, out_scale: float = 1.0) -> None:
    params[f"{prefix}.w1"] = Tensor(rng.normal(0.0, 1.0 / math.sqrt(d), (d, ff)), name=f"{prefix}.w1")
    params[f"{prefix}.b1"] = Tensor(np.zeros(ff), name=f"{prefix}.b1")
    params[f"{prefix}.w2"] = Tensor(rng.normal(0.0, out_scale / math.sqrt(ff), (ff, d)), name=f"{prefix}.w2")
    params[f"{prefix}.b2"] = Tensor(np.zeros(d), name=f"{prefix}.b2")


def init_norm(params: dict, name: str, d: int) -> None:
    params[name] = Tensor(np.ones(d), name=name)


def attention(params: dict, prefix: str, xq: Tensor, xkv: Tensor, mask: np.ndarray, n_heads: int) -> Tensor:
    """Multi-head attention; ``mask`` is additive, broadcastable to (B, H, Tq, Tk)."""
    B, T, d = xq.shape
    S = xkv.shape[1]
    dk = d // n_heads
    q = (xq @ params[f"{prefix}.q"]).reshape(B, T, n_heads, dk).transpose(0, 2, 1, 3)
    k = (xkv @ params[f"{prefix}.k"]).reshape(B, S, n_heads, dk).transpose(0, 2, 3, 1)
    v = (xkv @ params[f"{prefix}.v"]).reshape(B, S, n_heads, dk).transpose(0, 2, 1, 3)
    weights = softmax((q @ k) * (1.0 / math.sqrt(dk)) + mask, axis=-1)
    out = (weights @ v).transpose(0, 2, 1, 3).reshape(B, T, d)
    return out @ params[f"{prefix}.o"]


def ffn(params: dict, prefix: str, x: Tensor) -> Tensor:
    h = gelu(x @ params[f"{prefix}.w1"] + params[f"{prefix}.b1"])
    return h @ params[f"{prefix}.w2"] + params[f"{prefix}.b2"]


def encoder_layer(params: dict, prefix: str, x: Tensor, mask: np.ndarray, n_heads: int) -> Tensor:
    h = rms_norm(x, params[f"{prefix}.ln1"])
    x = x + attention(params, f"{prefix}.attn", h, h, mask, n_heads)
    return x + ffn(params, f"{prefix}.ff", rms_norm(x, params[f"{prefix}.ln2"]))


def decoder_layer(
    params: dict,
    prefix: str,
    x: Tensor,
    self_mask: np.ndarray,
    n_heads: int,
    memory: Tensor | None = None,
    cross_mask: np.ndarray | None = None,
) -> Tensor:
    h = rms_norm(x, params[f"{prefix}.ln1"])
    x = x + attention(params, f"{prefix}.attn", h, h, self_mask, n_heads)
    if memory is not None:
        h = rms_norm(x, params[f"{prefix}.lnx"])
        x = x + attention(params, f"{prefix}.cross", h, memory, cross_mask, n_heads)
    return x + ffn(params, f"{prefix}.ff", rms_norm(x, params[f"{prefix}.ln2"]))


def key_mask(valid: np.ndarray) -> np.ndarray:
    """(B, S) boolean validity -> additive (B, 1, 1, S) mask."""
    return np.where(valid, 0.0, NEG_INF)[:, None, None, :]


def causal_key_mask(valid: np.ndarray) -> np.ndarray:
    """(B, T) validity -> additive (B, 1, T, T) mask that is also lower-triangular."""
    T = valid.shape[1]
    allowed = np.tril(np.ones((T, T), dtype=bool))[None, :, :] & valid[:, None, :]
    return np.where(allowed, 0.0, NEG_INF)[:, None, :, :]
