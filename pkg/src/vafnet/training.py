"""Epoch loop with validation tracking, best-model checkpointing, and
early stopping.

Each epoch runs the optimizer over the training set (one full-batch update,
or shuffled mini-batches), then records the summed squared error on the
full training and validation sets. The network snapshot with the lowest
validation error is kept and returned; training stops early once the
validation error has gone ``patience`` consecutive epochs without
improving on the best seen so far.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from vafnet.data import Dataset
from vafnet.network import (Network, backward, flatten_grads, flatten_params,
                            forward, loss_sse, loss_sse_grad, set_params)
from vafnet.optim import DivergenceError, OptimizerSpec, make_optimizer

DEFAULT_PATIENCE = 25
SMALL_DATASET_LIMIT = 5000  # below this, train full-batch with rprop
DEFAULT_MINI_BATCH = 64


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int
    optimizer: OptimizerSpec
    patience: int = DEFAULT_PATIENCE
    batch_size: int | None = None  # None = full batch
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")

    @staticmethod
    def auto(n_examples: int, max_epochs: int,
             patience: int = DEFAULT_PATIENCE, seed: int = 0,
             lr: float | None = None) -> "TrainConfig":
        """Small sets train full-batch with rprop, large ones mini-batch
        with rmsprop (batch 64)."""
        if n_examples < SMALL_DATASET_LIMIT:
            return TrainConfig(max_epochs, OptimizerSpec("rprop"),
                               patience=patience, batch_size=None, seed=seed)
        return TrainConfig(max_epochs, OptimizerSpec("rmsprop", lr=lr),
                           patience=patience, batch_size=DEFAULT_MINI_BATCH,
                           seed=seed)


@dataclass
class TrainTrace:
    error_train: list[float] = field(default_factory=list)
    error_val: list[float] = field(default_factory=list)
    best_epoch: int = 0
    best_val_error: float = float("inf")

    @property
    def epochs_run(self) -> int:
        return len(self.error_val)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("epoch,error_train,error_val\n")
        for i, (et, ev) in enumerate(zip(self.error_train, self.error_val), 1):
            out.write(f"{i},{float(et)!r},{float(ev)!r}\n")
        return out.getvalue()


def epoch(net: Network, train_set: Dataset, optimizer, batch_size: int | None,
          rng: np.random.Generator) -> None:
    """One optimizer pass over the training set, updating ``net`` in place.

    Full batch (batch_size None or >= N) does a single unshuffled update;
    otherwise the row order is shuffled and consumed in batches, the last
    possibly short.
    """
    n = train_set.n_examples
    if batch_size is None or batch_size >= n:
        batch_indices = [np.arange(n)]
    else:
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        order = rng.permutation(n)
        batch_indices = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    for idx in batch_indices:
        x, t = train_set.x[idx], train_set.t[idx]
        y, tape = forward(net, x)
        grads = flatten_grads(backward(net, tape, loss_sse_grad(y, t)))
        set_params(net, optimizer.step(flatten_params(net), grads))


def train(net: Network, train_set: Dataset, val_set: Dataset, cfg: TrainConfig,
          eval_fn=None) -> tuple[Network, TrainTrace]:
    """Run up to max_epochs epochs; return the best-on-validation snapshot.

    ``eval_fn(net, dataset) -> float`` overrides the default summed-squared-
    error measurement of the train/validation errors. The input network is
    not modified; the returned network is an independent copy.
    """
    for name, ds in (("training", train_set), ("validation", val_set)):
        if ds.n_examples < 1:
            raise ValueError(f"{name} set is empty")
        if ds.x.shape[1] != net.input_dim or ds.t.shape[1] != net.output_dim:
            raise ValueError(
                f"{name} set has shape {ds.x.shape[1]}->{ds.t.shape[1]}, "
                f"network expects {net.input_dim}->{net.output_dim}")
    if eval_fn is None:
        eval_fn = _sse_eval

    net = net.clone()
    optimizer = make_optimizer(cfg.optimizer)
    rng = np.random.default_rng(cfg.seed)
    trace = TrainTrace()
    best_net = net.clone()
    best_val = float("inf")
    best_epoch = 0
    since_improvement = 0

    for ep in range(1, cfg.max_epochs + 1):
        try:
            epoch(net, train_set, optimizer, cfg.batch_size, rng)
        except DivergenceError as err:
            raise DivergenceError(f"epoch {ep}: {err}", index=err.index,
                                  epoch=ep) from err
        err_t = float(eval_fn(net, train_set))
        err_v = float(eval_fn(net, val_set))
        if not (np.isfinite(err_t) and np.isfinite(err_v)):
            raise DivergenceError(f"non-finite loss at epoch {ep}", epoch=ep)
        trace.error_train.append(err_t)
        trace.error_val.append(err_v)
        if err_v < best_val:
            best_val = err_v
            best_epoch = ep
            best_net = net.clone()
            since_improvement = 0
        else:
            since_improvement += 1
            if since_improvement >= cfg.patience:
                break

    trace.best_epoch = best_epoch
    trace.best_val_error = best_val
    return best_net, trace


def _sse_eval(net: Network, ds: Dataset) -> float:
    y, _ = forward(net, ds.x)
    return loss_sse(y, ds.t)
