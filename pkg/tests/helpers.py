"""Finite-difference gradient checking and small shared builders."""

from __future__ import annotations

import numpy as np

from ctrlprompt.numerics import Tensor, backward, no_grad

REL_TOL = 1e-4


def fd_max_rel_error(loss_fn, params: list[Tensor], rng, h: float = 1e-5, max_entries: int = 25) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    ``loss_fn`` rebuilds the scalar loss from the current parameter values.
    Up to ``max_entries`` random entries per parameter are probed.
    """
    for p in params:
        p.grad = None
    backward(loss_fn())
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    worst = 0.0
    with no_grad():
        for p, g in zip(params, analytic):
            flat = p.data.reshape(-1)
            n = flat.size
            idx = rng.choice(n, size=min(n, max_entries), replace=False)
            for i in idx:
                old = flat[i]
                flat[i] = old + h
                up = loss_fn().item()
                flat[i] = old - h
                down = loss_fn().item()
                flat[i] = old
                num = (up - down) / (2 * h)
                ana = g.reshape(-1)[i]
                err = abs(ana - num) / max(abs(ana), abs(num), 1e-7)
                if abs(ana - num) < 1e-9:
                    err = 0.0
                worst = max(worst, err)
    for p in params:
        p.grad = None
    return worst


def leaf(rng, *shape, scale: float = 1.0, positive: bool = False) -> Tensor:
    data = rng.normal(0.0, scale, shape)
    if positive:
        data = np.abs(data) + 0.5
    return Tensor(data, requires_grad=True)
