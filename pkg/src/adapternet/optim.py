"""SGD and Adam parameter updates."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor


class Optimizer:
    """Holds the parameter list and per-parameter state for one training run."""

    kind = "base"

    def __init__(self, params: list[Tensor], learning_rate: float):
        if learning_rate <= 0:
            raise ValueError(f"learning rate must be positive, got {learning_rate}")
        self.params = list(params)
        self.learning_rate = float(learning_rate)
        self.step_count = 0

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        for i, p in enumerate(self.params):
            if p.grad is None:
                raise ValueError(f"optimizer step: parameter {i} "
                                 f"(shape {tuple(p.shape)}) has no gradient")
        self._update()
        self.step_count += 1

    def _update(self):
        raise NotImplementedError


class SGD(Optimizer):
    kind = "sgd"

    def _update(self):
        lr = self.learning_rate
        for p in self.params:
            p.data = p.data - lr * p.grad


class Adam(Optimizer):
    """Adam with bias correction; beta1=0.9, beta2=0.999, eps=1e-8."""

    kind = "adam"

    def __init__(self, params, learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        super().__init__(params, learning_rate)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def _update(self):
        t = self.step_count + 1
        b1, b2 = self.beta1, self.beta2
        lr = self.learning_rate
        for i, p in enumerate(self.params):
            g = p.grad
            self.m[i] = b1 * self.m[i] + (1 - b1) * g
            self.v[i] = b2 * self.v[i] + (1 - b2) * (g * g)
            m_hat = self.m[i] / (1 - b1 ** t)
            v_hat = self.v[i] / (1 - b2 ** t)
            p.data = p.data - lr * m_hat / (np.sqrt(v_hat) + self.eps)


def make_optimizer(kind: str, params, learning_rate: float) -> Optimizer:
    if kind == "sgd":
        return SGD(params, learning_rate)
    if kind == "adam":
        return Adam(params, learning_rate)
    raise ValueError(f"unknown optimizer kind {kind!r} (expected 'sgd' or 'adam')")
