"""Command-line experiment runner.

Subcommands: train (single fit with trace/model artifacts), kfold
(cross-validated grid comparison), vaf-curve (export a trained activation
subnetwork as a plot-ready CSV), and inspect (layer and parameter-count
summary of a model file). Settings come from a JSON config file; command
line flags override file values. All outputs are deterministic for a fixed
seed and inputs.

Exit codes: 0 success, 1 user error (bad config, unreadable files), 2
numeric divergence during training.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from vafnet.activations import ActivationKind
from vafnet.data import (Dataset, ParseError, Task, load_csv, normalize,
                         split, synth_classification, synth_regression)
from vafnet.evaluation import HyperGrid, kfold, lr_grid, metric_accuracy, metric_rmse
from vafnet.network import (DenseLayer, FixedLayer, ModelFamily, VafLayer,
                            forward, load_network, n_params, save_network)
from vafnet.optim import DivergenceError, OptimizerSpec
from vafnet.training import (DEFAULT_MINI_BATCH, DEFAULT_PATIENCE,
                             SMALL_DATASET_LIMIT, TrainConfig, train)
from vafnet.vaf import parameter_count, vaf_forward_array

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_DIVERGENCE = 2

DEFAULT_CONFIG = {
    "dataset": {},
    "normalize": True,
    "split": [0.6, 0.2, 0.2],
    "model": {
        "arch": "net_10",
        "archs": None,
        "activation": "relu",
        "vaf": {"g": "relu", "shared": True, "init": "random", "target": "relu"},
    },
    "optimizer": {"kind": "auto", "lr": None, "lr_grid": None},
    "train": {"max_epochs": 300, "patience": DEFAULT_PATIENCE, "batch_size": None},
    "kfold": {"k": 10, "select_on": "test"},
    "seed": 0,
    "jobs": 1,
    "out": "out",
}


class UserError(Exception):
    """Bad input from the user; reported as a message, never a traceback."""


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_USER_ERROR
    try:
        return args.handler(args)
    except UserError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USER_ERROR
    except (ParseError, FileNotFoundError, json.JSONDecodeError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USER_ERROR
    except DivergenceError as err:
        print(f"divergence: {err}", file=sys.stderr)
        return EXIT_DIVERGENCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vafnet",
        description="Train and evaluate networks with trainable activation "
                    "subnetworks.")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--jobs", type=int, help="worker threads for kfold")
        p.add_argument("--out", help="output directory")
        p.add_argument("--dataset", help="dataset CSV path")
        p.add_argument("--model", help="architecture name (e.g. vnet3_25)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=JSON",
                       help="override a config field by dotted path, "
                            "e.g. --set train.max_epochs=50")

    p_train = sub.add_parser("train", help="train one model, write model + trace")
    common(p_train)
    p_train.set_defaults(handler=cmd_train)

    p_kfold = sub.add_parser("kfold", help="cross-validated grid comparison")
    common(p_kfold)
    p_kfold.set_defaults(handler=cmd_kfold)

    p_curve = sub.add_parser("vaf-curve",
                             help="sample a trained activation subnetwork")
    p_curve.add_argument("--model", required=True, help="model JSON file")
    p_curve.add_argument("--layer", type=int, required=True,
                         help="layer index of the subnetwork layer")
    p_curve.add_argument("--range", nargs=2, type=float, default=(-5.0, 5.0),
                         metavar=("LO", "HI"))
    p_curve.add_argument("--samples", type=int, default=201)
    p_curve.add_argument("--out", help="output CSV (default: stdout)")
    p_curve.set_defaults(handler=cmd_vaf_curve)

    p_inspect = sub.add_parser("inspect", help="print layer and parameter counts")
    p_inspect.add_argument("--model", required=True, help="model JSON file")
    p_inspect.set_defaults(handler=cmd_inspect)
    return parser


# --------------------------------------------------------------------------
# Config handling
# --------------------------------------------------------------------------

def _merge(base: dict, override: dict) -> dict:
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(args) -> dict:
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))  # deep copy
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise UserError(f"config file not found: {path}")
        cfg = _merge(cfg, json.loads(path.read_text()))
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.jobs is not None:
        cfg["jobs"] = args.jobs
    if args.out is not None:
        cfg["out"] = args.out
    if args.dataset is not None:
        cfg.setdefault("dataset", {})["path"] = args.dataset
    if args.model is not None:
        cfg["model"]["arch"] = args.model
        cfg["model"]["archs"] = [args.model]
    for item in args.set:
        if "=" not in item:
            raise UserError(f"--set expects KEY=JSON, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw  # bare strings are convenient
        node = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    return cfg


def load_dataset(cfg: dict) -> Dataset:
    spec = cfg.get("dataset") or {}
    if spec.get("synthetic"):
        kind = spec["synthetic"]
        n = int(spec.get("n", 200))
        seed = int(spec.get("seed", cfg["seed"]))
        if kind in ("linear", "sin", "abs"):
            ds = synth_regression(kind, n, float(spec.get("noise", 0.0)), seed)
        elif kind in ("two-gaussians", "xor-clusters"):
            ds = synth_classification(kind, n, seed)
        else:
            raise UserError(f"unknown synthetic dataset: {kind!r}")
    elif spec.get("path"):
        path = Path(spec["path"])
        if not path.exists():
            raise UserError(f"dataset file not found: {path}")
        task = Task(spec.get("task", "classification"))
        target = spec.get("target", -1)
        ds = load_csv(path, target, task, header=bool(spec.get("header", False)),
                      classes=spec.get("classes"))
    else:
        raise UserError('config needs dataset.path or dataset.synthetic')
    if cfg.get("normalize", True):
        ds = normalize(ds)
    return ds


def model_family(cfg: dict) -> ModelFamily:
    model = cfg["model"]
    vaf = model.get("vaf", {})
    return ModelFamily(
        hidden_activation=ActivationKind(model.get("activation", "relu")),
        vaf_g=ActivationKind(vaf.get("g", "relu")),
        vaf_shared=bool(vaf.get("shared", True)),
        vaf_init=str(vaf.get("init", "random")),
        vaf_target=ActivationKind(vaf.get("target", "relu")),
    )


def resolve_optimizer(cfg: dict, n_examples: int
                      ) -> tuple[OptimizerSpec, int | None, tuple[float, ...] | None]:
    """Returns (spec, batch_size, lr axis or None for no lr search)."""
    opt = cfg.get("optimizer", {})
    kind = str(opt.get("kind", "auto")).lower()
    lr = opt.get("lr")
    batch_size = cfg["train"].get("batch_size")
    if kind == "auto":
        kind = "rprop" if n_examples < SMALL_DATASET_LIMIT else "rmsprop"
        if kind == "rmsprop" and batch_size is None:
            batch_size = DEFAULT_MINI_BATCH
    if kind == "rprop":
        return OptimizerSpec("rprop"), batch_size, None
    grid = opt.get("lr_grid")
    if grid == "default":
        axis = lr_grid()
    elif grid:
        axis = tuple(float(v) for v in grid)
    elif lr is not None:
        axis = None
    else:
        axis = lr_grid()
    spec = OptimizerSpec(kind, lr=float(lr) if lr is not None else None)
    return spec, batch_size, axis


def train_config(cfg: dict, optimizer: OptimizerSpec,
                 batch_size: int | None) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(max_epochs=int(t["max_epochs"]), optimizer=optimizer,
                       patience=int(t["patience"]), batch_size=batch_size,
                       seed=int(cfg["seed"]))


def _out_dir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = load_config(args)
    ds = load_dataset(cfg)
    family = model_family(cfg)
    arch = cfg["model"]["arch"]
    opt_spec, batch_size, _ = resolve_optimizer(cfg, ds.n_examples)
    if opt_spec.kind != "rprop" and opt_spec.lr is None:
        opt_spec = opt_spec.with_lr(0.01)
    tkn = train_config(cfg, opt_spec, batch_size)

    fractions = cfg.get("split", [0.6, 0.2, 0.2])
    stratify = ds.task == Task.CLASSIFICATION
    tr, va, te = split(ds, fractions, seed=cfg["seed"], stratify=stratify)

    net = family.build(arch, ds.n_features, ds.n_outputs, seed=cfg["seed"])
    best_net, trace = train(net, tr, va, tkn)

    if ds.task == Task.CLASSIFICATION:
        test_metric = metric_accuracy(forward(best_net, te.x)[0], te.t)
        metric_name = "accuracy"
    else:
        test_metric = metric_rmse(forward(best_net, te.x)[0], te.t)
        metric_name = "rmse"

    out = _out_dir(cfg)
    save_network(best_net, out / "model.json")
    (out / "trace.csv").write_text(trace.to_csv())
    summary = (f"arch={arch} optimizer={opt_spec.kind} "
               f"epochs_run={trace.epochs_run} best_epoch={trace.best_epoch} "
               f"final_train_error={trace.error_train[-1]!r} "
               f"final_val_error={trace.error_val[-1]!r} "
               f"best_val_error={trace.best_val_error!r} "
               f"test_{metric_name}={test_metric!r}\n")
    (out / "summary.txt").write_text(summary)
    print(summary, end="")
    return EXIT_OK


def cmd_kfold(args) -> int:
    cfg = load_config(args)
    ds = load_dataset(cfg)
    family = model_family(cfg)
    archs = cfg["model"].get("archs") or [cfg["model"]["arch"]]
    opt_spec, batch_size, lr_axis = resolve_optimizer(cfg, ds.n_examples)
    tkn = train_config(cfg, opt_spec, batch_size)

    axes = {"arch": tuple(archs)}
    if lr_axis is not None:
        axes["lr"] = lr_axis
    grid = HyperGrid(axes)

    report = kfold(ds, family, grid, k=int(cfg["kfold"]["k"]), seed=cfg["seed"],
                   train_cfg=tkn, select_on=cfg["kfold"].get("select_on", "test"),
                   jobs=int(cfg.get("jobs", 1)))

    out = _out_dir(cfg)
    (out / "report.csv").write_text(report.to_csv())
    (out / "report.txt").write_text(report.to_text() + "\n")
    print(report.to_text())
    return EXIT_OK


def cmd_vaf_curve(args) -> int:
    path = Path(args.model)
    if not path.exists():
        raise UserError(f"model file not found: {path}")
    net = load_network(path)
    if not 0 <= args.layer < len(net.layers):
        raise UserError(f"layer index {args.layer} out of range "
                        f"(network has {len(net.layers)} layers)")
    layer = net.layers[args.layer]
    if not isinstance(layer, VafLayer):
        raise UserError(f"layer {args.layer} is not an activation subnetwork")
    lo, hi = args.range
    if args.samples < 2:
        raise UserError("need at least 2 samples")
    grid = np.linspace(lo, hi, args.samples)
    columns = [vaf_forward_array(p, grid)[0] for p in layer.params]

    lines = ["a," + ",".join(f"z{i}" for i in range(len(columns)))
             if len(columns) > 1 else "a,z"]
    for row in range(args.samples):
        vals = ",".join(f"{float(c[row])!r}" for c in columns)
        lines.append(f"{float(grid[row])!r},{vals}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return EXIT_OK


def _describe_layer(layer) -> str:
    if isinstance(layer, DenseLayer):
        count = layer.w.size + layer.b.size
        return f"dense {layer.in_dim}->{layer.out_dim}  params={count}"
    if isinstance(layer, FixedLayer):
        return f"activation {layer.kind}"
    count = parameter_count(layer.shared, [(layer.width, layer.k)])
    sharing = "shared" if layer.shared else "per-neuron"
    return (f"subnetwork k={layer.k} g={layer.g} {sharing} "
            f"width={layer.width}  params={count}")


def cmd_inspect(args) -> int:
    path = Path(args.model)
    if not path.exists():
        raise UserError(f"model file not found: {path}")
    net = load_network(path)
    print(f"input_dim={net.input_dim} output_dim={net.output_dim} "
          f"total_params={n_params(net)}")
    for i, layer in enumerate(net.layers):
        print(f"  layer {i}: {_describe_layer(layer)}")
    vaf_layers = [l for l in net.layers if isinstance(l, VafLayer)]
    if vaf_layers:
        total = sum(parameter_count(l.shared, [(l.width, l.k)])
                    for l in vaf_layers)
        print(f"subnetwork params: {total}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
