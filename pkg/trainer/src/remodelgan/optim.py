"""Adam with tangential projection (AdamP).

Heo et al., "Slowing Down the Weight Norm Increase in Momentum-based
Optimizers" (2020): momentum optimizers inflate weight norms because the
accumulated update keeps a radial component even when the gradient is
nearly orthogonal to the weights.  AdamP detects that regime per
parameter (cosine similarity between weight and gradient, checked on a
per-channel and a per-layer view) and projects the update onto the
tangent space of the weight vector, removing the radial part.  Everything
else is plain Adam, so with the projection never firing the two coincide.
"""

from __future__ import annotations

import math

import torch
from torch.optim import Optimizer

__all__ = ["AdamP"]


def _channel_view(x: torch.Tensor) -> torch.Tensor:
    return x.reshape(x.size(0), -1)


def _layer_view(x: torch.Tensor) -> torch.Tensor:
    return x.reshape(1, -1)


def _cosine(x: torch.Tensor, y: torch.Tensor, eps: float, view) -> torch.Tensor:
    return torch.nn.functional.cosine_similarity(
        view(x), view(y), dim=1, eps=eps).abs_()


class AdamP(Optimizer):
    """Adam whose update is projected tangentially to slow norm growth."""

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8,
                 weight_decay=0.0, delta=0.1, wd_ratio=0.1,
                 nesterov=False):
        defaults = dict(lr=lr, betas=betas, eps=eps,
                        weight_decay=weight_decay, delta=delta,
                        wd_ratio=wd_ratio, nesterov=nesterov)
        super().__init__(params, defaults)

    @staticmethod
    def _projection(p, grad, perturb, delta, wd_ratio, eps):
        # broadcast per-row norms back over the trailing dimensions
        expand = (-1,) + (1,) * (p.dim() - 1)
        for view in (_channel_view, _layer_view):
            cosine = _cosine(grad, p, eps, view)
            if float(cosine.max()) < delta / math.sqrt(view(p).size(1)):
                p_n = p / view(p).norm(dim=1).add_(eps).reshape(expand)
                perturb = perturb - p_n * view(p_n * perturb).sum(
                    dim=1).reshape(expand)
                return perturb, wd_ratio
        return perturb, 1.0

    @torch.no_grad()
    def step(self, closure=None):
        loss = None
        if closure is not None:
            with torch.enable_grad():
                loss = closure()

        for group in self.param_groups:
            beta1, beta2 = group["betas"]
            for p in group["params"]:
                if p.grad is None:
                    continue
                grad = p.grad
                state = self.state[p]
                if len(state) == 0:
                    state["step"] = 0
                    state["exp_avg"] = torch.zeros_like(p)
                    state["exp_avg_sq"] = torch.zeros_like(p)
                state["step"] += 1
                correction1 = 1 - beta1 ** state["step"]
                correction2 = 1 - beta2 ** state["step"]

                exp_avg, exp_avg_sq = state["exp_avg"], state["exp_avg_sq"]
                exp_avg.mul_(beta1).add_(grad, alpha=1 - beta1)
                exp_avg_sq.mul_(beta2).addcmul_(grad, grad, value=1 - beta2)

                denom = (exp_avg_sq / correction2).sqrt_().add_(group["eps"])
                if group["nesterov"]:
                    perturb = (beta1 * exp_avg + (1 - beta1) * grad) / denom
                else:
                    perturb = exp_avg / denom

                wd_scale = 1.0
                if p.dim() > 1:  # scalars and biases have no radial direction
                    perturb, wd_scale = self._projection(
                        p, grad, perturb, group["delta"],
                        group["wd_ratio"], group["eps"])

                if group["weight_decay"] > 0:
                    p.mul_(1 - group["lr"] * group["weight_decay"] * wd_scale)
                p.add_(perturb, alpha=-group["lr"] / correction1)

        return loss
