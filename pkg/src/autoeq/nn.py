"""Layers and optimizer built on the autodiff Tensor.

Weights and biases initialize uniformly in +/- sqrt(1/fan_in) from a
caller-supplied Generator, so a run seed fully determines the model.
"""

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor


class Dense:
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        bound = np.sqrt(1.0 / in_features)
        self.w = Tensor(rng.uniform(-bound, bound, (in_features, out_features)))
        self.b = Tensor(rng.uniform(-bound, bound, out_features))

    def __call__(self, x: Tensor) -> Tensor:
        if x.values.ndim != 2 or x.values.shape[1] != self.w.values.shape[0]:
            raise ValueError(
                f"dense layer expects (batch, {self.w.values.shape[0]}), got {x.values.shape}"
            )
        return x @ self.w + self.b

    def parameters(self) -> list[Tensor]:
        return [self.w, self.b]


class Conv1d:
    """Valid cross-correlation, stride 1, kernel size 5 by default."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int, rng: np.random.Generator):
        bound = np.sqrt(1.0 / (in_channels * kernel_size))
        self.w = Tensor(rng.uniform(-bound, bound, (out_channels, in_channels, kernel_size)))
        self.b = Tensor(rng.uniform(-bound, bound, out_channels))

    def __call__(self, x: Tensor) -> Tensor:
        return ad.conv1d(x, self.w, self.b)

    def parameters(self) -> list[Tensor]:
        return [self.w, self.b]


class Adam:
    """Adam with bias correction; lr is mutable so schedules can decay it."""

    def __init__(self, params: list[Tensor], lr: float = 1e-4,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.values) for p in self.params]
        self.v = [np.zeros_like(p.values) for p in self.params]

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step(self) -> None:
        self.step_count += 1
        t = self.step_count
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad if p.grad is not None else np.zeros_like(p.values)
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / (1.0 - self.beta1**t)
            v_hat = v / (1.0 - self.beta2**t)
            p.values -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def state_arrays(self) -> dict[str, np.ndarray]:
        """Optimizer state as named arrays for checkpointing."""
        out = {"adam_step_count": np.array([self.step_count], dtype=np.float64)}
        for i, (m, v) in enumerate(zip(self.m, self.v)):
            out[f"adam_m_{i}"] = m
            out[f"adam_v_{i}"] = v
        return out

    def load_state_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        self.step_count = int(arrays["adam_step_count"][0])
        for i in range(len(self.params)):
            self.m[i] = arrays[f"adam_m_{i}"].copy()
            self.v[i] = arrays[f"adam_v_{i}"].copy()
