"""Finite-difference gradient checks shared by component and model tests."""

import numpy as np
import torch


def finite_difference_check(module, loss_fn, *, n_params=3, eps=1e-3,
                            rel_tol=1e-2, seed=0):
    """Compare autograd against central differences on randomly chosen
    scalar parameters. Module must already be in float64."""
    rng = np.random.default_rng(seed)
    params = [p for p in module.parameters() if p.requires_grad]

    module.zero_grad()
    loss_fn().backward()

    flat = [(p, i) for p in params for i in range(p.numel())]
    picks = rng.choice(len(flat), size=min(n_params, len(flat)), replace=False)
    for pick in picks:
        p, i = flat[int(pick)]
        autograd = p.grad.reshape(-1)[i].item() if p.grad is not None else 0.0
        with torch.no_grad():
            orig = p.reshape(-1)[i].item()
            p.reshape(-1)[i] = orig + eps
            up = loss_fn().item()
            p.reshape(-1)[i] = orig - eps
            down = loss_fn().item()
            p.reshape(-1)[i] = orig
        numeric = (up - down) / (2 * eps)
        denom = max(abs(numeric), abs(autograd), 1e-8)
        assert abs(numeric - autograd) / denom < rel_tol, (
            f"finite-difference mismatch: autograd={autograd}, numeric={numeric}"
        )


def all_parameters_touched(module):
    """Names of parameters whose accumulated gradient is identically zero."""
    dead = []
    for name, p in module.named_parameters():
        if not p.requires_grad:
            continue
        if p.grad is None or not p.grad.abs().sum().item() > 0:
            dead.append(name)
    return dead
