"""Minimal reverse-mode autodiff used by the grounders, DeepDFA and A2C."""
from .core import (
    Tensor, add, build_tape, concat, cross_entropy, div, exp, gather, getitem, log,
    log_softmax, matmul, mean, mul, neg, relu, reshape, scale, softmax_t, sum,
    tanh, transpose, zero_grads,
)
from .gradcheck import grad_check
from .optim import Adam, AdamConfig, AdamState, adam_step

__all__ = [
    "Tensor", "add", "build_tape", "concat", "cross_entropy", "div", "exp", "gather",
    "getitem", "log", "log_softmax", "matmul", "mean", "mul", "neg", "relu",
    "reshape", "scale", "softmax_t", "sum", "tanh", "transpose", "zero_grads",
    "grad_check", "Adam", "AdamConfig", "AdamState", "adam_step",
]
