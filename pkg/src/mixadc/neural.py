"""Dense feed-forward networks trained with Adam on a summed-squared-error loss.

Everything is float64 NumPy.  Weights are stored ``(out_dim, in_dim)`` and
a batch of inputs is a ``(N, in_dim)`` array, so a layer computes
``z = a @ W.T + b``.  Matrix products go through the BLAS NumPy is linked
against; with a fixed thread count their evaluation order, and therefore
every trained parameter, is reproducible.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "tanh", "none")
CHECKPOINT_FORMAT = "mixadc-mlp/1"


class TrainingDiverged(RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "relu"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"layer dims must be >= 1, got {self.in_dim}->{self.out_dim}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass(eq=False)
class MlpModel:
    layers: tuple[LayerSpec, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    # bumped on every in-place parameter update; forward caches record it
    version: int = 0

    @property
    def sizes(self) -> list[int]:
        return [self.layers[0].in_dim] + [s.out_dim for s in self.layers]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self) -> list[np.ndarray]:
        """Flat list ``[W0, b0, W1, b1, ...]`` (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "MlpModel":
        return MlpModel(tuple(self.layers), [w.copy() for w in self.weights],
                        [b.copy() for b in self.biases])

    def predict(self, x) -> np.ndarray:
        return forward(self, x)[0]

    def same_parameters(self, other: "MlpModel") -> bool:
        return (self.layers == other.layers
                and all(np.array_equal(a, b) for a, b in zip(self.params(), other.params())))


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 100
    learning_rate: float = 1e-3
    batch_size: int = 128
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    shuffle_seed: int = 0
    init_seed: int = 0

    def __post_init__(self):
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class Dataset:
    inputs: np.ndarray
    targets: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=float))
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ValueError(f"{self.inputs.shape[0]} inputs but {self.targets.shape[0]} targets")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.targets))):
            raise ValueError("dataset contains non-finite values")

    def __len__(self):
        return self.inputs.shape[0]


@dataclass
class ForwardCache:
    activations: list[np.ndarray]  # layer inputs followed by the final output
    model_id: int
    version: int
    squeeze: bool


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


@dataclass
class LossTrace:
    """Per-epoch losses; index 0 holds the untrained model's losses."""

    train: list[float] = field(default_factory=list)
    validation: list[float] = field(default_factory=list)

    @property
    def best_epoch(self) -> int | None:
        if not self.validation:
            return None
        return int(np.argmin(self.validation))


def chain(sizes, activations) -> list[LayerSpec]:
    """``[LayerSpec]`` from a size list ``[in, h1, ..., out]`` and one activation per layer."""
    if len(activations) != len(sizes) - 1:
        raise ValueError("need one activation per layer")
    return [LayerSpec(a, b, act) for a, b, act in zip(sizes[:-1], sizes[1:], activations)]


def init_model(specs, seed: int) -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    specs = tuple(specs)
    if not specs:
        raise ValueError("a model needs at least one layer")
    for prev, nxt in zip(specs[:-1], specs[1:]):
        if prev.out_dim != nxt.in_dim:
            raise ValueError(f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for s in specs:
        limit = np.sqrt(6.0 / (s.in_dim + s.out_dim))
        weights.append(rng.uniform(-limit, limit, size=(s.out_dim, s.in_dim)))
        biases.append(np.zeros(s.out_dim))
    return MlpModel(specs, weights, biases)


def _activate(z, kind):
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return z


def forward(model: MlpModel, x):
    """Returns ``(output, cache)``; a 1-D ``x`` gives a 1-D output."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    a = np.atleast_2d(x)
    if a.shape[1] != model.layers[0].in_dim:
        raise ValueError(f"input width {a.shape[1]} != model input {model.layers[0].in_dim}")
    acts = [a]
    for spec, w, b in zip(model.layers, model.weights, model.biases):
        a = _activate(a @ w.T + b, spec.activation)
        acts.append(a)
    if not np.all(np.isfinite(a)):
        raise FloatingPointError("non-finite values in forward pass")
    out = a[0] if squeeze else a
    return out, ForwardCache(acts, id(model), model.version, squeeze)


def mse_loss(pred, target) -> float:
    """Squared error summed over features, averaged over samples."""
    pred = np.atleast_2d(np.asarray(pred, dtype=float))
    target = np.atleast_2d(np.asarray(target, dtype=float))
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    return float(np.sum((target - pred) ** 2) / pred.shape[0])


def backward(model: MlpModel, cache: ForwardCache, target) -> list[tuple[np.ndarray, np.ndarray]]:
    """Exact gradients of :func:`mse_loss` as ``[(dW, db), ...]`` per layer."""
    if cache.model_id != id(model) or cache.version != model.version:
        raise RuntimeError("stale forward cache: model changed since the forward pass")
    acts = cache.activations
    out = acts[-1]
    target = np.atleast_2d(np.asarray(target, dtype=float))
    if target.shape != out.shape:
        raise ValueError(f"target shape {target.shape} != output shape {out.shape}")
    delta = 2.0 * (out - target) / out.shape[0]
    grads = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        spec, a_out, a_in = model.layers[i], acts[i + 1], acts[i]
        if spec.activation == "relu":
            delta = delta * (a_out > 0)
        elif spec.activation == "tanh":
            delta = delta * (1.0 - a_out ** 2)
        grads[i] = (delta.T @ a_in, delta.sum(axis=0))
        if i:
            delta = delta @ model.weights[i]
    return grads


def flatten_grads(grads) -> list[np.ndarray]:
    out = []
    for gw, gb in grads:
        out += [gw, gb]
    return out


def adam_step(params, grads, state: AdamState, t: int, cfg: TrainingConfig):
    """One in-place Adam update with bias correction; returns ``(params, state)``."""
    if t < 1:
        raise ValueError("Adam step index starts at 1")
    b1, b2, lr, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.learning_rate, cfg.adam_epsilon
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        step = lr * (m / c1) / (np.sqrt(v / c2) + eps)
        if not np.all(np.isfinite(step)):
            raise FloatingPointError("non-finite Adam update")
        p -= step
    state.t = t
    return params, state


def evaluate_loss(model: MlpModel, data: Dataset, chunk: int = 8192) -> float:
    total = 0.0
    for start in range(0, len(data), chunk):
        pred = model.predict(data.inputs[start:start + chunk])
        total += float(np.sum((data.targets[start:start + chunk] - pred) ** 2))
    return total / len(data)


def train(model: MlpModel, data: Dataset, cfg: TrainingConfig,
          validation: Dataset | None = None) -> tuple[MlpModel, LossTrace]:
    """Mini-batch Adam; returns the final-epoch model and its loss trace.

    The input model is not modified.  Each epoch shuffles with a generator
    seeded by ``(shuffle_seed, epoch)``; the short last batch is kept.  The
    per-epoch training loss is the sample-weighted mean of the batch losses
    seen during that epoch.
    """
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    model = model.copy()
    params = model.params()
    state = AdamState.zeros_like(params)
    trace = LossTrace([evaluate_loss(model, data)],
                      [evaluate_loss(model, validation)] if validation is not None else [])
    n = len(data)
    t = 0
    for epoch in range(1, cfg.epochs + 1):
        order = np.random.default_rng([cfg.shuffle_seed, epoch]).permutation(n)
        running = 0.0
        for batch, start in enumerate(range(0, n, cfg.batch_size)):
            idx = order[start:start + cfg.batch_size]
            x, y = data.inputs[idx], data.targets[idx]
            try:
                pred, cache = forward(model, x)
            except FloatingPointError:
                raise TrainingDiverged(f"non-finite activations at epoch {epoch}, batch {batch}",
                                       trace) from None
            loss = mse_loss(pred, y)
            if not np.isfinite(loss):
                raise TrainingDiverged(f"loss is {loss} at epoch {epoch}, batch {batch}", trace)
            running += loss * len(idx)
            t += 1
            try:
                adam_step(params, flatten_grads(backward(model, cache, y)), state, t, cfg)
            except FloatingPointError:
                raise TrainingDiverged(f"non-finite update at epoch {epoch}, batch {batch}",
                                       trace) from None
            model.version += 1
        trace.train.append(running / n)
        if validation is not None:
            trace.validation.append(evaluate_loss(model, validation))
        log.debug("epoch %d train %.6g val %s", epoch, trace.train[-1],
                  trace.validation[-1] if trace.validation else "-")
    return model, trace


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _matrix_text(a: np.ndarray, indent: str) -> str:
    rows = [indent + "  [" + ", ".join(_fmt(x) for x in row) + "]" for row in a]
    return "[\n" + ",\n".join(rows) + "\n" + indent + "]"


def dumps_checkpoint(model: MlpModel) -> str:
    """JSON text with every parameter printed to 17 significant digits, row-major."""
    parts = []
    for spec, w, b in zip(model.layers, model.weights, model.biases):
        parts.append(
            "    {\n"
            f'      "in_dim": {spec.in_dim},\n'
            f'      "out_dim": {spec.out_dim},\n'
            f'      "activation": "{spec.activation}",\n'
            f'      "weights": {_matrix_text(w, "      ")},\n'
            f'      "bias": [' + ", ".join(_fmt(x) for x in b) + "]\n"
            "    }"
        )
    return ('{\n  "format": "' + CHECKPOINT_FORMAT + '",\n  "layers": [\n'
            + ",\n".join(parts) + "\n  ]\n}\n")


def loads_checkpoint(text: str) -> MlpModel:
    doc = json.loads(text)
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"not a {CHECKPOINT_FORMAT} checkpoint")
    layers, weights, biases = [], [], []
    for entry in doc["layers"]:
        spec = LayerSpec(int(entry["in_dim"]), int(entry["out_dim"]), entry["activation"])
        w = np.array(entry["weights"], dtype=float).reshape(spec.out_dim, spec.in_dim)
        b = np.array(entry["bias"], dtype=float).reshape(spec.out_dim)
        layers.append(spec)
        weights.append(w)
        biases.append(b)
    return MlpModel(tuple(layers), weights, biases)


def save_checkpoint(model: MlpModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_checkpoint(model))


def load_checkpoint(path) -> MlpModel:
    with open(path, encoding="utf-8") as fh:
        return loads_checkpoint(fh.read())
