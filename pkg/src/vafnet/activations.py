"""Fixed scalar activation functions and their exact derivatives.

These serve both as baseline network nonlinearities and as the hidden
nonlinearity of trainable activation subnetworks. All functions are total
on finite inputs; the ReLU derivative at exactly 0 is defined as 0.
"""

from __future__ import annotations

from enum import Enum

import numpy as np


class ActivationKind(str, Enum):
    IDENTITY = "identity"
    RELU = "relu"
    TANH = "tanh"
    SIGMOID = "sigmoid"

    def __str__(self) -> str:
        return self.value


def _sigmoid(x):
    # Branch on sign so exp never overflows.
    return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.maximum(x, 0))),
                    np.exp(np.minimum(x, 0)) / (1.0 + np.exp(np.minimum(x, 0))))


def act_array(kind: ActivationKind, x: np.ndarray) -> np.ndarray:
    """Vectorized activation over an array of any shape."""
    x = np.asarray(x, dtype=np.float64)
    if kind == ActivationKind.IDENTITY:
        return x.copy()
    if kind == ActivationKind.RELU:
        return np.maximum(0.0, x)
    if kind == ActivationKind.TANH:
        return np.tanh(x)
    if kind == ActivationKind.SIGMOID:
        return _sigmoid(x)
    raise ValueError(f"unknown activation kind: {kind!r}")


def act_deriv_array(kind: ActivationKind, x: np.ndarray) -> np.ndarray:
    """Vectorized exact derivative over an array of any shape."""
    x = np.asarray(x, dtype=np.float64)
    if kind == ActivationKind.IDENTITY:
        return np.ones_like(x)
    if kind == ActivationKind.RELU:
        return (x > 0).astype(np.float64)
    if kind == ActivationKind.TANH:
        t = np.tanh(x)
        return 1.0 - t * t
    if kind == ActivationKind.SIGMOID:
        s = _sigmoid(x)
        return s * (1.0 - s)
    raise ValueError(f"unknown activation kind: {kind!r}")


def act(kind: ActivationKind, x: float) -> float:
    return float(act_array(kind, np.float64(x)))


def act_deriv(kind: ActivationKind, x: float) -> float:
    return float(act_deriv_array(kind, np.float64(x)))
