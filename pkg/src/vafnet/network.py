"""Layered feed-forward networks with three layer kinds.

A network is an ordered stack of dense affine maps, fixed elementwise
activations, and trainable activation subnetworks (one bundle per layer
when shared, one per neuron otherwise). Forward returns a tape of
intermediates; backward consumes it and produces exact reverse-mode
gradients for every weight, bias, and subnetwork coefficient. For a shared
subnetwork layer the per-neuron, per-sample contributions are summed into
the single shared slot, which is the exact derivative of the loss with
respect to the shared coefficients.

Parameters flatten to a single vector in a stable order (layer by layer;
dense: W row-major then b; subnetworks: alpha, alpha0, beta, beta0 per
bundle) so optimizers can treat the whole network as one parameter vector.
"""

from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass

import numpy as np

from vafnet.activations import ActivationKind, act_array, act_deriv_array
from vafnet.linalg import Matrix, ShapeError
from vafnet.vaf import VafGrad, VafParams, init_vaf_random, init_vaf_specific

MODEL_FORMAT_VERSION = 1


class ConstructionError(ValueError):
    """Layer specs do not chain into a valid network."""


class TapeError(ValueError):
    """Backward called with a tape that does not match the network."""


# --------------------------------------------------------------------------
# Layer specs and instances
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Dense:
    in_dim: int
    out_dim: int


@dataclass(frozen=True)
class Fixed:
    kind: ActivationKind

    def __post_init__(self):
        object.__setattr__(self, "kind", ActivationKind(self.kind))


@dataclass(frozen=True)
class Vaf:
    k: int
    g: ActivationKind
    shared: bool = True

    def __post_init__(self):
        object.__setattr__(self, "g", ActivationKind(self.g))


LayerSpec = Dense | Fixed | Vaf


@dataclass
class DenseLayer:
    w: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)

    @property
    def in_dim(self) -> int:
        return self.w.shape[1]

    @property
    def out_dim(self) -> int:
        return self.w.shape[0]


@dataclass
class FixedLayer:
    kind: ActivationKind


@dataclass
class VafLayer:
    k: int
    g: ActivationKind
    shared: bool
    width: int
    params: list[VafParams]  # length 1 if shared else width

    def __post_init__(self):
        expected = 1 if self.shared else self.width
        if len(self.params) != expected:
            raise ConstructionError(
                f"subnetwork layer of width {self.width} "
                f"(shared={self.shared}) needs {expected} bundles, "
                f"got {len(self.params)}")

    def stacked(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Coefficients stacked to (r, k) arrays, r = 1 (shared) or width."""
        alpha = np.stack([p.alpha for p in self.params])
        alpha0 = np.stack([p.alpha0 for p in self.params])
        beta = np.stack([p.beta for p in self.params])
        beta0 = np.array([p.beta0 for p in self.params])
        return alpha, alpha0, beta, beta0


Layer = DenseLayer | FixedLayer | VafLayer


@dataclass
class Network:
    input_dim: int
    layers: list[Layer]
    output_dim: int

    def clone(self) -> "Network":
        return copy.deepcopy(self)


# --------------------------------------------------------------------------
# Tape and gradients
# --------------------------------------------------------------------------

@dataclass
class DenseCache:
    x: np.ndarray  # layer input (n, in)


@dataclass
class FixedCache:
    a: np.ndarray  # pre-activation (n, m)


@dataclass
class VafCache:
    a: np.ndarray  # layer input (n, m)
    c: np.ndarray  # hidden pre-activations (n, m, k)


@dataclass
class DenseGrad:
    d_w: np.ndarray
    d_b: np.ndarray


@dataclass
class VafLayerGrad:
    grads: list[VafGrad]  # mirrors VafLayer.params


@dataclass
class GradientSet:
    layer_grads: list  # DenseGrad | None | VafLayerGrad, aligned with layers


# --------------------------------------------------------------------------
# Forward / backward
# --------------------------------------------------------------------------

def forward(net: Network, x: Matrix) -> tuple[Matrix, list]:
    """Run a batch through the network; returns (output, tape)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ShapeError(
            f"input must be (batch, {net.input_dim}), got {x.shape}", x.shape)
    tape = []
    z = x
    for i, layer in enumerate(net.layers):
        if isinstance(layer, DenseLayer):
            if z.shape[1] != layer.in_dim:
                raise ShapeError(
                    f"layer {i}: dense expects width {layer.in_dim}, "
                    f"got {z.shape[1]}", z.shape, layer.w.shape)
            tape.append(DenseCache(z))
            z = z @ layer.w.T + layer.b
        elif isinstance(layer, FixedLayer):
            tape.append(FixedCache(z))
            z = act_array(layer.kind, z)
        elif isinstance(layer, VafLayer):
            if z.shape[1] != layer.width:
                raise ShapeError(
                    f"layer {i}: subnetwork layer expects width {layer.width}, "
                    f"got {z.shape[1]}", z.shape)
            alpha, alpha0, beta, beta0 = layer.stacked()
            c = z[:, :, None] * alpha[None, :, :] + alpha0[None, :, :]
            tape.append(VafCache(z, c))
            z = np.sum(act_array(layer.g, c) * beta[None, :, :], axis=2) + beta0[None, :]
        else:
            raise TypeError(f"unknown layer type: {type(layer)!r}")
    return z, tape


def backward(net: Network, tape: list, d_y: Matrix) -> GradientSet:
    """Exact reverse-mode gradients of sum(d_y * output) w.r.t. all parameters."""
    d_y = np.asarray(d_y, dtype=np.float64)
    if len(tape) != len(net.layers):
        raise TapeError(
            f"tape has {len(tape)} entries for {len(net.layers)} layers")
    if d_y.ndim != 2 or d_y.shape[1] != net.output_dim:
        raise ShapeError(
            f"upstream must be (batch, {net.output_dim}), got {d_y.shape}",
            d_y.shape)
    layer_grads: list = [None] * len(net.layers)
    dz = d_y
    for i in reversed(range(len(net.layers))):
        layer, cache = net.layers[i], tape[i]
        if isinstance(layer, DenseLayer):
            if not isinstance(cache, DenseCache) or cache.x.shape[0] != dz.shape[0]:
                raise TapeError(f"layer {i}: tape entry does not match dense layer")
            layer_grads[i] = DenseGrad(d_w=dz.T @ cache.x, d_b=dz.sum(axis=0))
            dz = dz @ layer.w
        elif isinstance(layer, FixedLayer):
            if not isinstance(cache, FixedCache) or cache.a.shape != dz.shape:
                raise TapeError(f"layer {i}: tape entry does not match activation layer")
            dz = dz * act_deriv_array(layer.kind, cache.a)
        elif isinstance(layer, VafLayer):
            if not isinstance(cache, VafCache) or cache.a.shape != dz.shape:
                raise TapeError(f"layer {i}: tape entry does not match subnetwork layer")
            alpha, alpha0, beta, beta0 = layer.stacked()
            hidden = act_array(layer.g, cache.c)          # (n, m, k)
            hidden_d = act_deriv_array(layer.g, cache.c)  # (n, m, k)
            w = dz[:, :, None] * beta[None, :, :] * hidden_d
            axes = (0, 1) if layer.shared else (0,)
            d_alpha = np.sum(w * cache.a[:, :, None], axis=axes)
            d_alpha0 = np.sum(w, axis=axes)
            d_beta = np.sum(hidden * dz[:, :, None], axis=axes)
            d_beta0 = np.sum(dz, axis=axes)
            if layer.shared:
                grads = [VafGrad(d_alpha, d_alpha0, d_beta, float(d_beta0))]
            else:
                grads = [VafGrad(d_alpha[m], d_alpha0[m], d_beta[m], float(d_beta0[m]))
                         for m in range(layer.width)]
            layer_grads[i] = VafLayerGrad(grads)
            dz = np.sum(w * alpha[None, :, :], axis=2)
        else:
            raise TypeError(f"unknown layer type: {type(layer)!r}")
    return GradientSet(layer_grads)


# --------------------------------------------------------------------------
# Loss
# --------------------------------------------------------------------------

def loss_sse(y: Matrix, t: Matrix) -> float:
    """Half the summed squared error over all outputs and samples (no averaging)."""
    if y.shape != t.shape:
        raise ShapeError(f"loss: shapes {y.shape} and {t.shape} differ",
                         y.shape, t.shape)
    with np.errstate(over="ignore"):  # inf is the divergence signal, not a bug
        d = y - t
        return 0.5 * float(np.sum(d * d))


def loss_sse_grad(y: Matrix, t: Matrix) -> Matrix:
    """Derivative of loss_sse with respect to y."""
    if y.shape != t.shape:
        raise ShapeError(f"loss: shapes {y.shape} and {t.shape} differ",
                         y.shape, t.shape)
    return y - t


# --------------------------------------------------------------------------
# Parameter vector interface
# --------------------------------------------------------------------------

def _param_arrays(net: Network):
    """Yield every parameter array in the canonical flattening order."""
    for layer in net.layers:
        if isinstance(layer, DenseLayer):
            yield layer.w
            yield layer.b
        elif isinstance(layer, VafLayer):
            for p in layer.params:
                yield p.alpha
                yield p.alpha0
                yield p.beta
                yield p  # marker for the scalar beta0


def n_params(net: Network) -> int:
    total = 0
    for arr in _param_arrays(net):
        total += 1 if isinstance(arr, VafParams) else arr.size
    return total


def flatten_params(net: Network) -> np.ndarray:
    """All parameters as one vector, in the canonical order."""
    parts = []
    for arr in _param_arrays(net):
        if isinstance(arr, VafParams):
            parts.append(np.array([arr.beta0]))
        else:
            parts.append(arr.ravel())
    return np.concatenate(parts) if parts else np.zeros(0)


def set_params(net: Network, values: np.ndarray) -> None:
    """Overwrite all parameters from a vector in the canonical order."""
    values = np.asarray(values, dtype=np.float64)
    expected = n_params(net)
    if values.shape != (expected,):
        raise ShapeError(
            f"parameter vector must have shape ({expected},), got {values.shape}",
            values.shape)
    i = 0
    for arr in _param_arrays(net):
        if isinstance(arr, VafParams):
            arr.beta0 = float(values[i])
            i += 1
        else:
            arr[...] = values[i:i + arr.size].reshape(arr.shape)
            i += arr.size


def apply_update(net: Network, delta: np.ndarray) -> None:
    """Add a delta vector (canonical order) to all parameters in place."""
    delta = np.asarray(delta, dtype=np.float64)
    expected = n_params(net)
    if delta.shape != (expected,):
        raise ShapeError(
            f"delta must have shape ({expected},), got {delta.shape}", delta.shape)
    set_params(net, flatten_params(net) + delta)


def flatten_grads(grads: GradientSet) -> np.ndarray:
    """Gradient vector aligned with flatten_params."""
    parts = []
    for g in grads.layer_grads:
        if isinstance(g, DenseGrad):
            parts.append(g.d_w.ravel())
            parts.append(g.d_b.ravel())
        elif isinstance(g, VafLayerGrad):
            for vg in g.grads:
                parts.extend([vg.d_alpha, vg.d_alpha0, vg.d_beta,
                              np.array([vg.d_beta0])])
    return np.concatenate(parts) if parts else np.zeros(0)


# --------------------------------------------------------------------------
# Construction
# --------------------------------------------------------------------------

def _validate_specs(specs: list[LayerSpec]) -> tuple[int, int, list[int]]:
    """Check dimensional chaining; returns (input_dim, output_dim, widths).

    widths[i] is the activation width at layer i (the width entering
    Fixed/Vaf layers, the output width of Dense layers).
    """
    if not specs:
        raise ConstructionError("network needs at least one layer")
    if not isinstance(specs[0], Dense):
        raise ConstructionError("first layer must be dense")
    width = None
    widths = []
    for i, spec in enumerate(specs):
        if isinstance(spec, Dense):
            if spec.in_dim < 1 or spec.out_dim < 1:
                raise ConstructionError(
                    f"layer {i}: dense dims must be >= 1, got {spec}")
            if width is not None and spec.in_dim != width:
                raise ConstructionError(
                    f"layer {i}: dense expects in_dim {width}, got {spec.in_dim}")
            width = spec.out_dim
        elif isinstance(spec, Vaf):
            if spec.k < 1:
                raise ConstructionError(f"layer {i}: k must be >= 1, got {spec.k}")
            widths.append(width)
            continue
        widths.append(width)
    return specs[0].in_dim, width, widths


def build(specs: list[LayerSpec], init: str = "random",
          target: ActivationKind | None = None, seed: int = 0) -> Network:
    """Construct and initialize a network from layer specs.

    Dense weights always use fan-based uniform initialization. Subnetwork
    layers use random initialization, or, with init="specific", start out
    approximating ``target``. Deterministic for a given seed.
    """
    if init not in ("random", "specific"):
        raise ConstructionError(f'init must be "random" or "specific", got {init!r}')
    if init == "specific" and target is None:
        raise ConstructionError('init="specific" requires a target activation')
    input_dim, output_dim, widths = _validate_specs(specs)
    rng = np.random.default_rng(seed)
    layers: list[Layer] = []
    for spec, width in zip(specs, widths):
        if isinstance(spec, Dense):
            r = np.sqrt(6.0 / (spec.in_dim + spec.out_dim))
            w = rng.uniform(-r, r, (spec.out_dim, spec.in_dim))
            layers.append(DenseLayer(w=w, b=np.zeros(spec.out_dim)))
        elif isinstance(spec, Fixed):
            layers.append(FixedLayer(spec.kind))
        elif isinstance(spec, Vaf):
            count = 1 if spec.shared else width
            if init == "random":
                params = [init_vaf_random(spec.k, spec.g, rng) for _ in range(count)]
            else:
                params = [init_vaf_specific(spec.k, spec.g, target, rng)
                          for _ in range(count)]
            layers.append(VafLayer(spec.k, spec.g, spec.shared, width, params))
        else:
            raise TypeError(f"unknown layer spec: {spec!r}")
    return Network(input_dim=input_dim, layers=layers, output_dim=output_dim)


def layer_specs(net: Network) -> list[LayerSpec]:
    """Recover the LayerSpec list describing an existing network."""
    specs: list[LayerSpec] = []
    for layer in net.layers:
        if isinstance(layer, DenseLayer):
            specs.append(Dense(layer.in_dim, layer.out_dim))
        elif isinstance(layer, FixedLayer):
            specs.append(Fixed(layer.kind))
        elif isinstance(layer, VafLayer):
            specs.append(Vaf(layer.k, layer.g, layer.shared))
    return specs


# --------------------------------------------------------------------------
# Architecture names
# --------------------------------------------------------------------------

_ARCH_RE = re.compile(r"^(net|vnet(\d+))_(\d+(?:,\d+)*)$")


def parse_arch(name: str) -> tuple[int | None, list[int]]:
    """Parse an architecture name into (subnetwork k or None, hidden widths).

    "net_50,10" is a plain network with hidden layers of 50 and 10 neurons;
    "vnet3_50,10" is the same shape with shared k=3 activation subnetworks.
    """
    m = _ARCH_RE.match(name)
    if not m:
        raise ValueError(f"bad architecture name: {name!r} "
                         f"(expected e.g. net_25 or vnet3_50,10)")
    k = int(m.group(2)) if m.group(2) else None
    widths = [int(s) for s in m.group(3).split(",")]
    if k is not None and k < 1:
        raise ValueError(f"bad architecture name: {name!r} (k must be >= 1)")
    return k, widths


@dataclass(frozen=True)
class ModelFamily:
    """Turns architecture names plus data dims into layer spec lists.

    Plain architectures use ``hidden_activation`` after every hidden dense
    layer; vnet architectures use a trainable subnetwork (g, shared, and the
    init mode configured here) instead. The output layer is always linear:
    classification uses one-hot targets under the squared-error loss with
    argmax prediction.
    """

    hidden_activation: ActivationKind = ActivationKind.RELU
    vaf_g: ActivationKind = ActivationKind.RELU
    vaf_shared: bool = True
    vaf_init: str = "random"                       # "random" | "specific"
    vaf_target: ActivationKind = ActivationKind.RELU

    def __post_init__(self):
        object.__setattr__(self, "hidden_activation",
                           ActivationKind(self.hidden_activation))
        object.__setattr__(self, "vaf_g", ActivationKind(self.vaf_g))
        object.__setattr__(self, "vaf_target", ActivationKind(self.vaf_target))

    def specs(self, arch: str, input_dim: int, output_dim: int) -> list[LayerSpec]:
        k, widths = parse_arch(arch)
        specs: list[LayerSpec] = []
        prev = input_dim
        for w in widths:
            specs.append(Dense(prev, w))
            if k is None:
                specs.append(Fixed(self.hidden_activation))
            else:
                specs.append(Vaf(k, self.vaf_g, self.vaf_shared))
            prev = w
        specs.append(Dense(prev, output_dim))
        specs.append(Fixed(ActivationKind.IDENTITY))
        return specs

    def build(self, arch: str, input_dim: int, output_dim: int,
              seed: int = 0) -> Network:
        return build(self.specs(arch, input_dim, output_dim),
                     init=self.vaf_init, target=self.vaf_target, seed=seed)


# --------------------------------------------------------------------------
# Model file
# --------------------------------------------------------------------------

def _layer_to_dict(layer: Layer) -> dict:
    if isinstance(layer, DenseLayer):
        return {"type": "dense", "w": layer.w.tolist(), "b": layer.b.tolist()}
    if isinstance(layer, FixedLayer):
        return {"type": "fixed", "activation": layer.kind.value}
    if isinstance(layer, VafLayer):
        return {
            "type": "vaf", "k": layer.k, "g": layer.g.value,
            "shared": layer.shared, "width": layer.width,
            "params": [{"alpha": p.alpha.tolist(), "alpha0": p.alpha0.tolist(),
                        "beta": p.beta.tolist(), "beta0": p.beta0}
                       for p in layer.params],
        }
    raise TypeError(f"unknown layer type: {type(layer)!r}")


def _layer_from_dict(d: dict) -> Layer:
    if d["type"] == "dense":
        return DenseLayer(w=np.array(d["w"], dtype=np.float64),
                          b=np.array(d["b"], dtype=np.float64))
    if d["type"] == "fixed":
        return FixedLayer(ActivationKind(d["activation"]))
    if d["type"] == "vaf":
        params = [VafParams(d["k"], ActivationKind(d["g"]),
                            np.array(p["alpha"]), np.array(p["alpha0"]),
                            np.array(p["beta"]), p["beta0"])
                  for p in d["params"]]
        return VafLayer(d["k"], ActivationKind(d["g"]), d["shared"],
                        d["width"], params)
    raise ValueError(f"unknown layer type in model file: {d.get('type')!r}")


def network_to_json(net: Network) -> str:
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "input_dim": net.input_dim,
        "output_dim": net.output_dim,
        "layers": [_layer_to_dict(layer) for layer in net.layers],
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def network_from_json(text: str) -> Network:
    doc = json.loads(text)
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version: {version!r}")
    return Network(input_dim=doc["input_dim"],
                   layers=[_layer_from_dict(d) for d in doc["layers"]],
                   output_dim=doc["output_dim"])


def save_network(net: Network, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(network_to_json(net))
        fh.write("\n")


def load_network(path) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return network_from_json(fh.read())
