"""Adafactor with an externally supplied learning rate.

Follows the published algorithm with ``relative_step``, ``scale_parameter``
and ``warmup_init`` all disabled and no first moment (``beta1=None``).
Matrices keep factored row/column second moments; vectors keep a full one.
A linear warmup multiplies the base learning rate for the first
``warmup_steps`` steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..errors import ContractError
from .tensor import Tensor


@dataclass
class AdafactorConfig:
    lr: float = 0.15
    eps: tuple[float, float] = (1e-30, 1e-3)
    clip_threshold: float = 1.0
    decay_rate: float = -0.8
    weight_decay: float = 0.1
    warmup_steps: int = 500


@dataclass
class AdafactorState:
    config: AdafactorConfig = field(default_factory=AdafactorConfig)
    step_counter: int = 0
    # keyed by id(param): ("factored", row, col) or ("full", v)
    accumulators: dict = field(default_factory=dict)

    def learning_rate(self, step: int | None = None) -> float:
        step = self.step_counter if step is None else step
        cfg = self.config
        if cfg.warmup_steps > 0 and step < cfg.warmup_steps:
            return cfg.lr * step / cfg.warmup_steps
        return cfg.lr


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def adafactor_step(params: Iterable[Tensor], state: AdafactorState) -> None:
    """Apply one in-place update to ``params`` and clear their gradients."""
    params = list(params)
    for p in params:
        if p.grad is None:
            raise ContractError(f"adafactor_step: parameter {p.name or p.shape} has no gradient")

    cfg = state.config
    state.step_counter += 1
    step = state.step_counter
    lr = state.learning_rate(step)
    beta2 = 1.0 - step**cfg.decay_rate
    eps1 = cfg.eps[0]

    for p in params:
        grad = p.grad
        sq = grad * grad + eps1
        acc = state.accumulators.get(id(p))
        factored = grad.ndim >= 2
        if acc is None:
            if factored:
                acc = ("factored", np.zeros(grad.shape[:-1]), np.zeros(grad.shape[:-2] + grad.shape[-1:]))
            else:
                acc = ("full", np.zeros_like(grad))
            state.accumulators[id(p)] = acc

        if factored:
            _, row, col = acc
            row *= beta2
            row += (1.0 - beta2) * sq.mean(axis=-1)
            col *= beta2
            col += (1.0 - beta2) * sq.mean(axis=-2)
            r_factor = 1.0 / np.sqrt(row / row.mean(axis=-1, keepdims=True))
            c_factor = 1.0 / np.sqrt(col)
            update = r_factor[..., :, None] * c_factor[..., None, :] * grad
        else:
            _, v = acc
            v *= beta2
            v += (1.0 - beta2) * sq
            update = grad / np.sqrt(v)

        update = update / max(1.0, _rms(update) / cfg.clip_threshold)
        if cfg.weight_decay != 0.0:
            p.data *= 1.0 - cfg.weight_decay * lr
        p.data -= lr * update
        p.grad = None


def sgd_momentum_step(params: Iterable[Tensor], state: dict, lr: float, momentum: float = 0.9) -> None:
    """Heavy-ball SGD used by the sentiment classifier; clears gradients."""
    for p in params:
        if p.grad is None:
            raise ContractError(f"sgd_momentum_step: parameter {p.name or p.shape} has no gradient")
        buf = state.get(id(p))
        if buf is None:
            buf = state[id(p)] = np.zeros_like(p.data)
        buf *= momentum
        buf += p.grad
        p.data -= lr * buf
        p.grad = None
