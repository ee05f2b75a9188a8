"""Optimizers over flat parameter vectors.

Four methods: plain (mini-batch) gradient descent, Adam, RMSProp, and
resilient backpropagation. Each keeps per-parameter state sized on the
first step, never mutates the vectors it is given, and raises
DivergenceError naming the first offending index when a gradient component
is not finite.

The resilient variant is iRprop-: a step size per parameter grows by
eta_plus while the gradient keeps its sign, shrinks by eta_minus on a sign
flip (suppressing that parameter's update for the step), and stays clamped
to [step_min, step_max]; parameters move by -sign(g) * step.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class DivergenceError(ArithmeticError):
    """A gradient or loss became non-finite."""

    def __init__(self, message: str, index: int | None = None,
                 epoch: int | None = None):
        super().__init__(message)
        self.index = index
        self.epoch = epoch


def _check_lengths(params: np.ndarray, grads: np.ndarray) -> None:
    if params.shape != grads.shape or params.ndim != 1:
        raise ValueError(
            f"params and grads must be equal-length vectors, "
            f"got {params.shape} and {grads.shape}")
    if not np.all(np.isfinite(grads)):
        index = int(np.flatnonzero(~np.isfinite(grads))[0])
        raise DivergenceError(
            f"non-finite gradient at parameter index {index}", index=index)


class Sgd:
    """Plain gradient descent: p <- p - lr * g."""

    def __init__(self, lr: float = 0.01):
        self.lr = float(lr)

    def step(self, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        _check_lengths(params, grads)
        return params - self.lr * grads


class Adam:
    """Bias-corrected first/second moment adaptive steps."""

    def __init__(self, lr: float = 0.001, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m: np.ndarray | None = None
        self.v: np.ndarray | None = None

    def step(self, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        _check_lengths(params, grads)
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grads
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grads * grads
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class RmsProp:
    """Running mean-square gradient scaling: p <- p - lr * g / sqrt(s + eps).

    With a fixed lr the iterates settle into an oscillation of amplitude
    about lr/2 per coordinate, so the default is kept small; sweep lr for
    real training runs.
    """

    def __init__(self, lr: float = 0.0004, rho: float = 0.9, eps: float = 1e-8):
        self.lr = float(lr)
        self.rho = float(rho)
        self.eps = float(eps)
        self.s: np.ndarray | None = None

    def step(self, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        _check_lengths(params, grads)
        if self.s is None:
            self.s = np.zeros_like(params)
        self.s = self.rho * self.s + (1.0 - self.rho) * grads * grads
        return params - self.lr * grads / np.sqrt(self.s + self.eps)


class Rprop:
    """Sign-based step-size adaptation (iRprop-); full-batch gradients only."""

    def __init__(self, eta_plus: float = 1.01, eta_minus: float = 0.5,
                 step_init: float = 0.01, step_min: float = 1e-6,
                 step_max: float = 50.0):
        if not 0.0 < eta_minus < 1.0 < eta_plus:
            raise ValueError(
                f"need 0 < eta_minus < 1 < eta_plus, got {eta_minus}, {eta_plus}")
        self.eta_plus = float(eta_plus)
        self.eta_minus = float(eta_minus)
        self.step_init = float(step_init)
        self.step_min = float(step_min)
        self.step_max = float(step_max)
        self.step_sizes: np.ndarray | None = None
        self.prev_grad: np.ndarray | None = None

    def step(self, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
        _check_lengths(params, grads)
        if self.step_sizes is None:
            self.step_sizes = np.full_like(params, self.step_init)
            self.prev_grad = np.zeros_like(params)
        sizes = self.step_sizes
        sign_product = self.prev_grad * grads
        grew = sign_product > 0
        flipped = sign_product < 0
        sizes[grew] = np.minimum(sizes[grew] * self.eta_plus, self.step_max)
        sizes[flipped] = np.maximum(sizes[flipped] * self.eta_minus, self.step_min)
        effective = np.where(flipped, 0.0, grads)
        self.prev_grad = effective
        return params - np.sign(effective) * sizes


Optimizer = Sgd | Adam | RmsProp | Rprop


@dataclass(frozen=True)
class OptimizerSpec:
    """Declarative optimizer choice; make_optimizer builds a fresh instance."""

    kind: str                       # "sgd" | "adam" | "rmsprop" | "rprop"
    lr: float | None = None
    options: dict = field(default_factory=dict)

    def with_lr(self, lr: float) -> "OptimizerSpec":
        return replace(self, lr=lr)


def make_optimizer(spec: OptimizerSpec) -> Optimizer:
    kind = spec.kind.lower()
    opts = dict(spec.options)
    if kind == "rprop":
        return Rprop(**opts)
    if spec.lr is not None:
        opts["lr"] = spec.lr
    if kind == "sgd":
        return Sgd(**opts)
    if kind == "adam":
        return Adam(**opts)
    if kind == "rmsprop":
        return RmsProp(**opts)
    raise ValueError(f"unknown optimizer kind: {spec.kind!r}")
