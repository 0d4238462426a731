"""RMSprop with an explicit, serializable accumulator state."""
from __future__ import annotations

from dataclasses import dataclass, field

import torch

from .errors import ShapeMismatch


def rmsprop_step(theta, grad, acc, lr=1e-4, rho=0.9, eps=1e-8):
    """One RMSprop update; returns ``(new_theta, new_acc)``.

    acc <- rho * acc + (1 - rho) * g**2
    theta <- theta - lr * g / (sqrt(acc) + eps)

    Works for floats, numpy arrays and tensors.
    """
    if getattr(theta, "shape", ()) != getattr(grad, "shape", ()) or getattr(theta, "shape", ()) != getattr(acc, "shape", ()):
        raise ShapeMismatch(f"shapes differ: theta {getattr(theta, 'shape', ())}, grad {getattr(grad, 'shape', ())}, acc {getattr(acc, 'shape', ())}")
    acc = rho * acc + (1.0 - rho) * grad * grad
    return theta - lr * grad / (acc**0.5 + eps), acc


@dataclass
class RMSprop:
    params: dict  # name -> torch Parameter
    lr: float = 1e-4
    rho: float = 0.9
    eps: float = 1e-8
    decay: float = 0.0
    iterations: int = 0
    acc: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, p in self.params.items():
            self.acc.setdefault(name, torch.zeros_like(p, requires_grad=False))

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    @torch.no_grad()
    def step(self):
        lr = self.lr / (1.0 + self.decay * self.iterations)
        for name, p in self.params.items():
            if p.grad is None:
                continue
            a = self.acc[name]
            if p.grad.shape != p.shape:
                raise ShapeMismatch(f"{name}: gradient shape {tuple(p.grad.shape)} != {tuple(p.shape)}")
            new_p, new_a = rmsprop_step(p.data, p.grad, a, lr, self.rho, self.eps)
            p.copy_(new_p)
            a.copy_(new_a)
        self.iterations += 1

    def state_arrays(self, prefix):
        out = {f"{prefix}.{k}": v.detach().numpy().copy() for k, v in self.acc.items()}
        out[f"{prefix}.iterations"] = float(self.iterations)
        return out

    def load_state_arrays(self, arrays, prefix):
        with torch.no_grad():
            for k, v in self.acc.items():
                v.copy_(torch.as_tensor(arrays[f"{prefix}.{k}"]).reshape(v.shape))
        self.iterations = int(arrays[f"{prefix}.iterations"])
