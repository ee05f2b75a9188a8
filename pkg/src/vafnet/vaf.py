"""Trainable activation subnetworks.

A variable activation function (VAF) replaces a fixed scalar nonlinearity
with a small 1-k-1 network:

    z(a) = sum_j beta[j] * g(alpha[j] * a + alpha0[j]) + beta0

where g is a fixed hidden nonlinearity. The 3k+1 coefficients are ordinary
network weights, trained by backpropagation together with everything else.
This module holds the parameter bundle, the forward map, its exact partial
derivatives, and the two initialization strategies (random, and "specific":
start out approximating a chosen fixed activation).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from vafnet.activations import ActivationKind, act_array, act_deriv_array
from vafnet.linalg import ShapeError

SPECIFIC_FIT_GRID = (-5.0, 5.0, 201)  # lo, hi, points used to fit/check specific init


class ApproximationError(ValueError):
    """Specific initialization could not fit the target within tolerance."""

    def __init__(self, message: str, max_error: float, tolerance: float):
        super().__init__(message)
        self.max_error = max_error
        self.tolerance = tolerance


@dataclass
class VafParams:
    """Coefficients of one activation subnetwork (3k+1 scalars)."""

    k: int
    g: ActivationKind
    alpha: np.ndarray   # (k,) input weights
    alpha0: np.ndarray  # (k,) hidden biases
    beta: np.ndarray    # (k,) output weights
    beta0: float        # output bias

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        self.g = ActivationKind(self.g)
        for name in ("alpha", "alpha0", "beta"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (self.k,):
                raise ShapeError(f"{name} must have shape ({self.k},), got {arr.shape}")
            setattr(self, name, arr)
        self.beta0 = float(self.beta0)

    @property
    def n_params(self) -> int:
        return 3 * self.k + 1

    def copy(self) -> "VafParams":
        return VafParams(self.k, self.g, self.alpha.copy(), self.alpha0.copy(),
                         self.beta.copy(), self.beta0)


@dataclass
class VafGrad:
    """Gradient bundle mirroring the shape of a VafParams."""

    d_alpha: np.ndarray
    d_alpha0: np.ndarray
    d_beta: np.ndarray
    d_beta0: float

    @staticmethod
    def zeros(k: int) -> "VafGrad":
        return VafGrad(np.zeros(k), np.zeros(k), np.zeros(k), 0.0)


def vaf_forward(p: VafParams, a: float) -> tuple[float, np.ndarray]:
    """Evaluate the subnetwork at a scalar input.

    Returns (z, cache) where cache holds the k hidden pre-activations
    alpha[j]*a + alpha0[j], reused by vaf_backward.
    """
    cache = p.alpha * float(a) + p.alpha0
    z = float(act_array(p.g, cache) @ p.beta + p.beta0)
    return z, cache


def vaf_backward(p: VafParams, a: float, cache: np.ndarray,
                 upstream: float) -> tuple[float, VafGrad]:
    """Exact partials of upstream * z(a) with respect to a and all coefficients.

    ``cache`` must come from vaf_forward(p, a).
    """
    cache = np.asarray(cache, dtype=np.float64)
    if cache.shape != (p.k,):
        raise ShapeError(f"cache must have shape ({p.k},), got {cache.shape}")
    a = float(a)
    upstream = float(upstream)
    hidden = act_array(p.g, cache)
    hidden_d = act_deriv_array(p.g, cache)
    w = upstream * p.beta * hidden_d
    d_a = float(w @ p.alpha)
    grad = VafGrad(
        d_alpha=w * a,
        d_alpha0=w,
        d_beta=upstream * hidden,
        d_beta0=upstream,
    )
    return d_a, grad


def vaf_forward_array(p: VafParams, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate one subnetwork at a 1-D array of inputs.

    Returns (z, cache) with z shaped (n,) and cache shaped (n, k).
    """
    a = np.asarray(a, dtype=np.float64)
    cache = a[:, None] * p.alpha[None, :] + p.alpha0[None, :]
    z = act_array(p.g, cache) @ p.beta + p.beta0
    return z, cache


def vaf_backward_array(p: VafParams, a: np.ndarray, cache: np.ndarray,
                       upstream: np.ndarray) -> tuple[np.ndarray, VafGrad]:
    """Batched backward for one subnetwork; gradients are summed over samples."""
    a = np.asarray(a, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    hidden = act_array(p.g, cache)
    hidden_d = act_deriv_array(p.g, cache)
    w = upstream[:, None] * p.beta[None, :] * hidden_d  # (n, k)
    d_a = w @ p.alpha
    grad = VafGrad(
        d_alpha=w.T @ a,
        d_alpha0=w.sum(axis=0),
        d_beta=hidden.T @ upstream,
        d_beta0=float(upstream.sum()),
    )
    return d_a, grad


def init_vaf_random(k: int, g: ActivationKind, rng: np.random.Generator) -> VafParams:
    """Random initialization: uniform on [-r, r] with r = sqrt(6 / (1 + k)).

    The bound treats the subnetwork as a 1-k-1 net under the usual fan-based
    uniform rule (fan_in + fan_out = 1 + k for both coefficient layers).
    The output bias starts at 0.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    r = np.sqrt(6.0 / (1 + k))
    alpha = rng.uniform(-r, r, k)
    alpha0 = rng.uniform(-r, r, k)
    beta = rng.uniform(-r, r, k)
    return VafParams(k, g, alpha, alpha0, beta, 0.0)


def init_vaf_specific(k: int, g: ActivationKind, target: ActivationKind,
                      rng: np.random.Generator, noise: float = 1e-3) -> VafParams:
    """Initialize so the subnetwork starts out approximating ``target``.

    When g == target the embedding is exact: hidden unit 0 passes the input
    through (alpha=1, beta=1), the remaining units start at zero. Those
    all-zero units would receive identical gradients forever, so each of
    their coefficients is perturbed by uniform noise of magnitude ``noise``.

    Otherwise beta/beta0 are fit by least squares against the target on a
    fixed grid, with alpha pinned to 1 and alpha0 spread evenly over [-4, 4].
    A fit whose max grid error exceeds 0.05 * (1 + max|target|) raises
    ApproximationError: k is too small for this g/target pair.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    lo, hi, n = SPECIFIC_FIT_GRID
    grid = np.linspace(lo, hi, n)
    target_vals = act_array(target, grid)
    tolerance = 0.05 * (1.0 + np.max(np.abs(target_vals)))

    if g == target:
        alpha = np.zeros(k)
        alpha0 = np.zeros(k)
        beta = np.zeros(k)
        alpha[0] = 1.0
        beta[0] = 1.0
        if noise > 0.0 and k > 1:
            alpha[1:] = rng.uniform(-noise, noise, k - 1)
            alpha0[1:] = rng.uniform(-noise, noise, k - 1)
            beta[1:] = rng.uniform(-noise, noise, k - 1)
        return VafParams(k, g, alpha, alpha0, beta, 0.0)

    alpha = np.ones(k)
    alpha0 = np.linspace(-4.0, 4.0, k) if k > 1 else np.zeros(1)
    basis = act_array(g, grid[:, None] * alpha[None, :] + alpha0[None, :])
    design = np.concatenate([basis, np.ones((n, 1))], axis=1)
    coef, *_ = np.linalg.lstsq(design, target_vals, rcond=None)
    params = VafParams(k, g, alpha, alpha0, coef[:k], float(coef[k]))
    fitted, _ = vaf_forward_array(params, grid)
    max_error = float(np.max(np.abs(fitted - target_vals)))
    if max_error > tolerance:
        raise ApproximationError(
            f"specific init of {g} toward {target} with k={k}: "
            f"max grid error {max_error:.4g} exceeds tolerance {tolerance:.4g}",
            max_error, tolerance)
    return params


def parameter_count(shared: bool, layers: list[tuple[int, int]]) -> int:
    """Extra parameters added by equipping each layer with subnetworks.

    ``layers`` lists (neuron count, k) per hidden layer. Without sharing
    every neuron carries its own 3k+1 coefficients; with sharing each layer
    carries a single bundle regardless of width.
    """
    total = 0
    for neurons, k in layers:
        if neurons < 1 or k < 1:
            raise ValueError(f"counts must be >= 1, got ({neurons}, {k})")
        total += (3 * k + 1) if shared else neurons * (3 * k + 1)
    return total
