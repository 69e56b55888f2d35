"""The two classifiers: a dense network (DPNN) and a 1-D convolutional network.

Both end in a 2-unit softmax trained with cross-entropy and Adam. All
gradients are written out by hand on top of :mod:`senn.numkernel`.
"""

from __future__ import annotations

import dataclasses
import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, ContractError, SchemaError, ShapeError
from .numkernel import (
    SeededRng,
    Tensor,
    as_tensor,
    conv1d_backward,
    conv1d_forward,
    relu,
    relu_grad,
    softmax,
)

MODEL_FORMAT = "senn-model"
MODEL_FORMAT_VERSION = 1
PROB_FLOOR = 1e-12


class Variant(str, enum.Enum):
    DPNN = "dpnn"
    CONV1D = "conv1d"


def _positive_int(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class ModelSpec:
    """Architecture and training hyperparameters.

    The defaults are the canonical configuration: 16 hidden units, 2 output
    units, 20 epochs and the stock Keras Adam constants.
    """

    variant: Variant = Variant.DPNN
    hidden_units: int = 16
    hidden_layers: int = 1
    output_units: int = 2
    conv_filters: int = 16
    conv_kernel_width: int = 3
    epochs: int = 20
    batch_size: int = 32
    learning_rate: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-7
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        for name in ("hidden_units", "hidden_layers", "conv_filters",
                     "conv_kernel_width", "epochs", "batch_size"):
            _positive_int(name, getattr(self, name))
        if self.output_units != 2:
            raise ConfigError(f"output_units is fixed at 2, got {self.output_units}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1), got {getattr(self, name)}")
        if not self.adam_epsilon > 0:
            raise ConfigError(f"adam_epsilon must be positive, got {self.adam_epsilon}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["variant"] = self.variant.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown ModelSpec fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class Layer:
    """One parameter block.

    ``kind`` is ``"dense"`` (weights ``(in, out)``) or ``"conv1d"`` (weights
    ``(filters, width, channels)``, output flattened position-major).
    ``activation`` is ``"relu"`` or ``"softmax"``.
    """

    kind: str
    weights: Tensor
    bias: Tensor
    activation: str


@dataclass(frozen=True)
class TrainedModel:
    spec: ModelSpec
    layers: tuple
    input_width: int

    @property
    def params(self) -> list:
        """Flat parameter list ``[W1, b1, W2, b2, ...]``."""
        out = []
        for layer in self.layers:
            out.extend((layer.weights, layer.bias))
        return out

    def with_params(self, params) -> "TrainedModel":
        layers = tuple(
            dataclasses.replace(layer, weights=as_tensor(params[2 * i]),
                                bias=as_tensor(params[2 * i + 1]))
            for i, layer in enumerate(self.layers)
        )
        return TrainedModel(self.spec, layers, self.input_width)

    def frozen(self) -> "TrainedModel":
        params = [np.array(p, copy=True) for p in self.params]
        for p in params:
            p.flags.writeable = False
        return self.with_params(params)

    def predict_proba(self, x) -> Tensor:
        return forward(self, x)


@dataclass
class TrainHistory:
    per_epoch_loss: list = field(default_factory=list)
    per_epoch_accuracy: list = field(default_factory=list)


def _glorot(rng: SeededRng, shape, fan_in: int, fan_out: int) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    n = int(np.prod(shape))
    return (limit * (2.0 * rng.uniform(n) - 1.0)).reshape(shape)


def build_model(spec: ModelSpec, input_width: int, rng: Optional[SeededRng] = None) -> TrainedModel:
    """Initialise a model for ``input_width`` features.

    Weights are Glorot-uniform draws from ``rng`` (a fresh ``SeededRng(spec.seed)``
    when omitted), biases start at zero.
    """
    _positive_int("input_width", input_width)
    rng = rng if rng is not None else SeededRng(spec.seed)
    layers = []
    if spec.variant is Variant.DPNN:
        width = input_width
        for _ in range(spec.hidden_layers):
            w = _glorot(rng, (width, spec.hidden_units), width, spec.hidden_units)
            layers.append(Layer("dense", w, np.zeros(spec.hidden_units), "relu"))
            width = spec.hidden_units
    else:
        k = spec.conv_kernel_width
        if input_width < k:
            raise ConfigError(
                f"input width {input_width} is smaller than conv kernel width {k}"
            )
        f = spec.conv_filters
        w = _glorot(rng, (f, k, 1), k * 1, k * f)
        layers.append(Layer("conv1d", w, np.zeros(f), "relu"))
        width = (input_width - k + 1) * f
    w = _glorot(rng, (width, spec.output_units), width, spec.output_units)
    layers.append(Layer("dense", w, np.zeros(spec.output_units), "softmax"))
    return TrainedModel(spec, tuple(layers), int(input_width))


def _check_batch(model: TrainedModel, x) -> Tensor:
    x = as_tensor(x)
    if x.ndim != 2 or x.shape[1] != model.input_width:
        raise ShapeError(
            f"batch shape {x.shape} does not match model input width {model.input_width}"
        )
    return x


def _forward_cache(layers, x: Tensor):
    """Run the network, keeping each layer's input and pre-activation."""
    cache = []
    h = x
    for layer in layers:
        if layer.kind == "conv1d":
            inp = h[:, :, None]
            z = conv1d_forward(inp, layer.weights, layer.bias)  # (B, T, F)
        else:
            inp = h
            z = inp @ layer.weights + layer.bias
        cache.append((inp, z))
        if layer.activation == "relu":
            h = relu(z).reshape(z.shape[0], -1)
        else:
            h = softmax(z)
    return h, cache


def forward(model: TrainedModel, batch) -> Tensor:
    """Class probabilities, shape ``(B, 2)``."""
    x = _check_batch(model, batch)
    if x.shape[0] == 0:
        return np.zeros((0, model.spec.output_units))
    probs, _ = _forward_cache(model.layers, x)
    return probs


def one_hot(labels, n_classes: int = 2) -> Tensor:
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], n_classes))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def cross_entropy(probs, targets) -> float:
    """Mean of ``-sum_c t_c * ln(p_c)`` over the batch, probabilities clamped at 1e-12.

    For one-hot targets this is the negative log-probability of the true class.
    """
    probs = as_tensor(probs)
    targets = as_tensor(targets)
    if probs.shape != targets.shape:
        raise ShapeError(f"probs {probs.shape} and targets {targets.shape} differ")
    if probs.shape[0] == 0:
        raise ContractError("cross-entropy of an empty batch is undefined")
    logp = np.log(np.clip(probs, PROB_FLOOR, 1.0))
    return float(-(targets * logp).sum() / probs.shape[0])


def _backward(layers, x: Tensor, targets: Tensor):
    probs, cache = _forward_cache(layers, x)
    n = x.shape[0]
    grads = [None] * len(layers)
    delta = (probs - targets) / n  # d loss / d logits, softmax and CE fused
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        inp, z = cache[i]
        if layer.kind == "conv1d":
            _, gw, gb = conv1d_backward(inp, layer.weights, delta)
            grads[i] = (gw, gb)
            break  # first layer: no input gradient needed
        gw = inp.T @ delta
        gb = delta.sum(axis=0)
        grads[i] = (gw, gb)
        if i == 0:
            break
        upstream = delta @ layer.weights.T
        prev_z = cache[i - 1][1]
        delta = upstream.reshape(prev_z.shape) * relu_grad(prev_z)
    return grads


def backward(model: TrainedModel, batch, targets) -> list:
    """Exact gradients of ``cross_entropy(forward(model, batch), targets)``.

    Returns one ``(grad_weights, grad_bias)`` pair per layer. The probability
    clamp used by the loss is ignored here.
    """
    x = _check_batch(model, batch)
    targets = as_tensor(targets)
    if targets.shape != (x.shape[0], model.spec.output_units):
        raise ShapeError(f"targets shape {targets.shape} does not fit batch {x.shape}")
    if x.shape[0] == 0:
        raise ContractError("cannot differentiate over an empty batch")
    return _backward(model.layers, x, targets)


@dataclass(frozen=True)
class AdamState:
    m: tuple
    v: tuple
    t: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls(tuple(np.zeros_like(p) for p in params),
                   tuple(np.zeros_like(p) for p in params), 0)


def adam_step(params, grads, state: AdamState, t: int, spec: ModelSpec = ModelSpec()):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``.

    Nothing is updated in place.
    """
    if t < 1:
        raise ContractError(f"Adam step index must be >= 1, got {t}")
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeError("params, grads and moment state have different lengths")
    b1, b2 = spec.adam_beta1, spec.adam_beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeError(f"parameter {p.shape} and gradient {g.shape} differ")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        step = spec.learning_rate * (m / c1) / (np.sqrt(v / c2) + spec.adam_epsilon)
        new_p.append(p - step)
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(tuple(new_m), tuple(new_v), t)


def _flat_grads(grads) -> list:
    out = []
    for gw, gb in grads:
        out.extend((gw, gb))
    return out


def train(spec: ModelSpec, train_x, train_y, rng: Optional[SeededRng] = None):
    """Train a fresh model for ``spec.epochs`` epochs of shuffled mini-batches.

    ``rng`` drives weight initialisation and then the per-epoch shuffles; it
    defaults to ``SeededRng(spec.seed)``. Returns ``(TrainedModel, TrainHistory)``
    where the history holds full-training-set loss and accuracy after each epoch.
    """
    x = as_tensor(train_x)
    y = np.asarray(train_y)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ContractError(f"training set must be a non-empty 2-D array, got {x.shape}")
    if y.shape != (x.shape[0],):
        raise ShapeError(f"labels shape {y.shape} does not match {x.shape[0]} rows")
    if not np.isin(y, (0, 1)).all():
        raise ContractError("labels must be 0 or 1")
    rng = rng if rng is not None else SeededRng(spec.seed)

    model = build_model(spec, x.shape[1], rng)
    targets = one_hot(y)
    layers = model.layers
    params = model.params
    state = AdamState.zeros_like(params)
    history = TrainHistory()
    n = x.shape[0]
    t = 0
    for _ in range(spec.epochs):
        order = rng.permutation(n)
        for start in range(0, n, spec.batch_size):
            idx = order[start : start + spec.batch_size]
            grads = _backward(layers, x[idx], targets[idx])
            t += 1
            params, state = adam_step(params, _flat_grads(grads), state, t, spec)
            layers = model.with_params(params).layers
        probs, _ = _forward_cache(layers, x)
        history.per_epoch_loss.append(cross_entropy(probs, targets))
        history.per_epoch_accuracy.append(float(np.mean((probs[:, 1] >= 0.5) == (y == 1))))
    return model.with_params(params).frozen(), history


def relative_error(analytic: float, numeric: float) -> float:
    """``|a - n| / max(1, |a|, |n|)``: relative for large gradients, absolute near zero."""
    return abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))


def _relu_masks(layers, x):
    _, cache = _forward_cache(layers, x)
    return [z > 0 for (layer, (_, z)) in zip(layers, cache) if layer.activation == "relu"]


def grad_check(
    spec: ModelSpec,
    batch,
    targets,
    epsilon: float = 1e-5,
    model: Optional[TrainedModel] = None,
    backward_fn: Callable = backward,
) -> float:
    """Max relative error between ``backward_fn`` and central differences.

    Every parameter is perturbed by ``+-epsilon``. A coordinate whose
    perturbation flips any ReLU on/off is skipped, because the loss is not
    differentiable across the kink; skipped coordinates are counted in
    ``grad_check.last_skipped``.
    """
    x = as_tensor(batch)
    targets = as_tensor(targets)
    if targets.ndim == 1:
        targets = one_hot(targets)
    if model is None:
        model = build_model(spec, x.shape[1], SeededRng(spec.seed))
    analytic = _flat_grads(backward_fn(model, x, targets))
    params = [np.array(p, dtype=np.float64, copy=True) for p in model.params]
    base_masks = _relu_masks(model.layers, x)

    worst = 0.0
    skipped = 0
    for p, g in zip(params, analytic):
        flat = p.reshape(-1)
        gflat = np.asarray(g).reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + epsilon
            plus = model.with_params(params).layers
            f_plus = cross_entropy(_forward_cache(plus, x)[0], targets)
            masks_plus = _relu_masks(plus, x)
            flat[j] = orig - epsilon
            minus = model.with_params(params).layers
            f_minus = cross_entropy(_forward_cache(minus, x)[0], targets)
            masks_minus = _relu_masks(minus, x)
            flat[j] = orig
            crossed = any(
                not (np.array_equal(a, b) and np.array_equal(a, c))
                for a, b, c in zip(base_masks, masks_plus, masks_minus)
            )
            if crossed:
                skipped += 1
                continue
            numeric = (f_plus - f_minus) / (2.0 * epsilon)
            worst = max(worst, relative_error(float(gflat[j]), numeric))
    grad_check.last_skipped = skipped
    return worst


grad_check.last_skipped = 0


def _array_to_json(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(v) for v in a.reshape(-1)]}


def _array_from_json(d: dict) -> np.ndarray:
    return np.asarray(d["data"], dtype=np.float64).reshape(d["shape"])


def model_to_json(model: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "spec": model.spec.to_dict(),
        "input_width": model.input_width,
        "layers": [
            {
                "kind": layer.kind,
                "activation": layer.activation,
                "weights": _array_to_json(layer.weights),
                "bias": _array_to_json(layer.bias),
            }
            for layer in model.layers
        ],
    }


def model_from_json(doc: dict) -> TrainedModel:
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_FORMAT_VERSION:
        raise SchemaError(
            f"not a {MODEL_FORMAT} v{MODEL_FORMAT_VERSION} document: "
            f"format={doc.get('format')!r} version={doc.get('version')!r}"
        )
    spec = ModelSpec.from_dict(doc["spec"])
    template = build_model(spec, doc["input_width"], SeededRng(0))
    if len(doc["layers"]) != len(template.layers):
        raise SchemaError("layer count does not match the spec")
    params = []
    for want, got in zip(template.layers, doc["layers"]):
        w = _array_from_json(got["weights"])
        b = _array_from_json(got["bias"])
        if got["kind"] != want.kind or w.shape != want.weights.shape or b.shape != want.bias.shape:
            raise SchemaError(
                f"layer {got['kind']} {w.shape}/{b.shape} does not match "
                f"expected {want.kind} {want.weights.shape}/{want.bias.shape}"
            )
        params.extend((w, b))
    return template.with_params(params).frozen()


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_json(model), indent=1) + "\n")


def load_model(path) -> TrainedModel:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    return model_from_json(doc)
