"""Minibatch optimizers operating on parameter trees (name -> ndarray)."""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError


class Sgd:
    """Plain gradient descent: p <- p - lr * g, exactly."""

    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, tree: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, param in tree.items():
            param -= self.learning_rate * grads[name]


class Adam:
    """Adam with bias correction; moments keyed like the parameter tree."""

    def __init__(
        self,
        learning_rate: float,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.learning_rate = learning_rate
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, tree: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        if not self.m:
            self.m = {k: np.zeros_like(v) for k, v in tree.items()}
            self.v = {k: np.zeros_like(v) for k, v in tree.items()}
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name, param in tree.items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            param -= self.learning_rate * (self.m[name] / c1) / (
                np.sqrt(self.v[name] / c2) + self.eps
            )


def make_optimizer(name: str, learning_rate: float) -> Sgd | Adam:
    if name == "sgd":
        return Sgd(learning_rate)
    if name == "adam":
        return Adam(learning_rate)
    raise ConfigError(f"unknown optimizer {name!r} (expected 'sgd' or 'adam')")
