"""Small dense layers on top of the autodiff core."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from . import core as T
from .core import Tensor

_ACTS = {
    "tanh": (T.tanh, np.tanh),
    "relu": (T.relu, lambda x: np.maximum(x, 0.0)),
}


class Linear:
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, name: str = "linear",
                 gain: float = 1.0):
        bound = gain * np.sqrt(6.0 / (n_in + n_out))
        self.weight = Tensor(rng.uniform(-bound, bound, size=(n_in, n_out)), requires_grad=True,
                             name=f"{name}.weight")
        self.bias = Tensor(np.zeros((1, n_out)), requires_grad=True, name=f"{name}.bias")

    def __call__(self, x: Tensor) -> Tensor:
        return T.add(T.matmul(x, self.weight), self.bias)

    def forward_np(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weight.data + self.bias.data

    def parameters(self) -> list[Tensor]:
        return [self.weight, self.bias]


class MLP:
    """Stack of :class:`Linear` layers with a hidden activation and no output activation."""

    def __init__(self, dims: Sequence[int], rng: np.random.Generator, activation: str = "relu",
                 name: str = "mlp", out_gain: float = 1.0):
        if len(dims) < 2:
            raise ValueError("an MLP needs at least input and output dims")
        if activation not in _ACTS:
            raise ValueError(f"unknown activation {activation!r}")
        self.dims = list(dims)
        self.activation = activation
        n = len(dims) - 1
        self.layers = [
            Linear(dims[i], dims[i + 1], rng, name=f"{name}.{i}",
                   gain=out_gain if i == n - 1 else 1.0)
            for i in range(n)
        ]

    def __call__(self, x: Tensor) -> Tensor:
        act = _ACTS[self.activation][0]
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = act(x)
        return x

    def forward_np(self, x: np.ndarray) -> np.ndarray:
        act = _ACTS[self.activation][1]
        for i, layer in enumerate(self.layers):
            x = layer.forward_np(x)
            if i < len(self.layers) - 1:
                x = act(x)
        return x

    def parameters(self) -> list[Tensor]:
        return [p for layer in self.layers for p in layer.parameters()]

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.data.copy() for p in self.parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        for p in self.parameters():
            if p.name not in state:
                raise KeyError(f"missing parameter {p.name!r}")
            if state[p.name].shape != p.shape:
                raise ValueError(f"shape mismatch for {p.name!r}")
            p.data[...] = state[p.name]


def softmax_np(x: np.ndarray) -> np.ndarray:
    z = x - x.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)
