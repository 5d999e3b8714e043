"""Dense layer stacks with manual backprop, losses, optimizers, training.

Layers own their parameters and caches.  A network is built from a
``NetworkSpec`` (a JSON-friendly list of layer descriptors plus loss and
seed); the spec plus the named parameter arrays round-trip through the
checkpoint format bit-exactly.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field

import numpy as np

from .activations import (
    BaselineActivation,
    baseline_backward,
    baseline_forward,
    baseline_init,
    carelu_backward,
    carelu_forward,
    cas_init,
)
from .batchnorm import (
    BnState,
    bn_backward,
    bn_carelu_backward,
    bn_carelu_forward,
    bn_forward,
    bn_init,
)
from .indicators import CompetitionKind
from .tensor import NumericError, ShapeError, tensor


class InvalidState(RuntimeError):
    """Backward called without a matching train-mode forward."""


class LabelError(ValueError):
    """A label lies outside the declared class range."""


class DivergedError(RuntimeError):
    def __init__(self, epoch: int, batch: int, detail: str = ""):
        self.epoch = epoch
        self.batch = batch
        msg = f"training diverged at epoch {epoch}, batch {batch}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class CheckpointError(ValueError):
    """Checkpoint file is malformed or does not match the spec."""


ACTIVATION_NAMES = (
    "relu", "leaky_relu", "prelu", "swish1", "swish",
    "carelu_e", "carelu_l1", "carelu_c",
    "bn_carelu_e", "bn_carelu_l1", "bn_carelu_c",
)

_CARELU_KIND = {
    "e": CompetitionKind.ENERGY,
    "l1": CompetitionKind.L1,
    "c": CompetitionKind.COUNT,
}


@dataclass(frozen=True)
class Param:
    """One trainable array: the live value buffer, its gradient buffer, and
    whether weight decay applies to it."""

    name: str
    value: np.ndarray
    grad: np.ndarray
    decay: bool


# --- layers ----------------------------------------------------------------

class DenseLayer:
    """Affine map x @ W + b; W ~ uniform(-1/sqrt(d_in), 1/sqrt(d_in))."""

    def __init__(self, d_in: int, d_out: int, rng):
        bound = 1.0 / np.sqrt(d_in)
        self.weight = rng.uniform(-bound, bound, size=(d_in, d_out))
        self.bias = np.zeros(d_out)
        self.grad_weight = np.zeros_like(self.weight)
        self.grad_bias = np.zeros_like(self.bias)
        self._x = None

    def forward(self, x, train):
        if x.ndim != 2 or x.shape[1] != self.weight.shape[0]:
            raise ShapeError(
                f"expected (N, {self.weight.shape[0]}) input, got {x.shape}")
        self._x = x if train else None
        return x @ self.weight + self.bias

    def backward(self, grad):
        if self._x is None:
            raise InvalidState("dense backward without a train-mode forward")
        self.grad_weight[...] = self._x.T @ grad
        self.grad_bias[...] = grad.sum(axis=0)
        return grad @ self.weight.T

    def params(self, prefix):
        return [
            Param(f"{prefix}.weight", self.weight, self.grad_weight, True),
            Param(f"{prefix}.bias", self.bias, self.grad_bias, True),
        ]

    def state(self, prefix):
        return {f"{prefix}.weight": self.weight, f"{prefix}.bias": self.bias}


class BaselineLayer:
    """Wraps one of the fixed/parametric baseline activations."""

    def __init__(self, tag: str):
        act = baseline_init(tag)
        self.tag = tag
        self.trainable = tag in ("prelu", "swish")
        self.param = np.array(act.param)
        self.grad_param = np.zeros(())
        self._slope = act.slope
        self._cache = None

    def _act(self):
        return BaselineActivation(tag=self.tag, slope=self._slope,
                                  param=float(self.param))

    def forward(self, x, train):
        y, cache = baseline_forward(self._act(), x)
        self._cache = cache if train else None
        return y

    def backward(self, grad):
        if self._cache is None:
            raise InvalidState(f"{self.tag} backward without a train-mode forward")
        grad_z, grad_param = baseline_backward(self._act(), self._cache, grad)
        self.grad_param[...] = grad_param
        return grad_z

    def params(self, prefix):
        if not self.trainable:
            return []
        name = "slope" if self.tag == "prelu" else "swish_beta"
        return [Param(f"{prefix}.{name}", self.param, self.grad_param, False)]

    def state(self, prefix):
        if not self.trainable:
            return {}
        name = "slope" if self.tag == "prelu" else "swish_beta"
        return {f"{prefix}.{name}": self.param}


class CareluLayer:
    def __init__(self, kind: CompetitionKind):
        init = cas_init(kind)
        self.kind = kind
        self.alpha = np.array(init.alpha)
        self.beta = np.array(init.beta)
        self.grad_alpha = np.zeros(())
        self.grad_beta = np.zeros(())
        self._k = init.k
        self._eps = init.epsilon
        self._cache = None

    def cas_params(self):
        p = cas_init(self.kind)
        p.alpha = float(self.alpha)
        p.beta = float(self.beta)
        p.k = self._k
        p.epsilon = self._eps
        return p

    def forward(self, x, train):
        y, cache = carelu_forward(self.cas_params(), x)
        self._cache = cache if train else None
        return y

    def backward(self, grad):
        if self._cache is None:
            raise InvalidState("carelu backward without a train-mode forward")
        grad_z, ga, gb = carelu_backward(self.cas_params(), self._cache, grad)
        self.grad_alpha[...] = ga
        self.grad_beta[...] = gb
        return grad_z

    def params(self, prefix):
        return [
            Param(f"{prefix}.cas.alpha", self.alpha, self.grad_alpha, False),
            Param(f"{prefix}.cas.beta", self.beta, self.grad_beta, False),
        ]

    def state(self, prefix):
        return {f"{prefix}.cas.alpha": self.alpha, f"{prefix}.cas.beta": self.beta}


class BnCareluLayer:
    """CAS -> BN -> ReLU with the CAS vote taken before normalization."""

    def __init__(self, kind: CompetitionKind, dim: int):
        init = cas_init(kind)
        self.kind = kind
        self.alpha = np.array(init.alpha)
        self.beta = np.array(init.beta)
        self.grad_alpha = np.zeros(())
        self.grad_beta = np.zeros(())
        self._k = init.k
        self._eps = init.epsilon
        self.bn = bn_init(dim)
        self.grad_gamma = np.zeros(dim)
        self.grad_shift = np.zeros(dim)
        self._cache = None

    def cas_params(self):
        p = cas_init(self.kind)
        p.alpha = float(self.alpha)
        p.beta = float(self.beta)
        p.k = self._k
        p.epsilon = self._eps
        return p

    def forward(self, x, train):
        self.bn.mode = "train" if train else "eval"
        y, cache = bn_carelu_forward(self.cas_params(), self.bn, x)
        self._cache = cache if train else None
        return y

    def backward(self, grad):
        if self._cache is None:
            raise InvalidState("bn_carelu backward without a train-mode forward")
        grad_z, ga, gb, ggamma, gshift = bn_carelu_backward(
            self.cas_params(), self.bn, self._cache, grad)
        self.grad_alpha[...] = ga
        self.grad_beta[...] = gb
        self.grad_gamma[...] = ggamma
        self.grad_shift[...] = gshift
        return grad_z

    def params(self, prefix):
        return [
            Param(f"{prefix}.cas.alpha", self.alpha, self.grad_alpha, False),
            Param(f"{prefix}.cas.beta", self.beta, self.grad_beta, False),
            Param(f"{prefix}.bn.gamma", self.bn.gamma, self.grad_gamma, False),
            Param(f"{prefix}.bn.shift", self.bn.shift, self.grad_shift, False),
        ]

    def state(self, prefix):
        return {
            f"{prefix}.cas.alpha": self.alpha,
            f"{prefix}.cas.beta": self.beta,
            f"{prefix}.bn.gamma": self.bn.gamma,
            f"{prefix}.bn.shift": self.bn.shift,
            f"{prefix}.bn.running_mean": self.bn.running_mean,
            f"{prefix}.bn.running_var": self.bn.running_var,
        }


class BatchNormLayer:
    def __init__(self, dim: int):
        self.bn = bn_init(dim)
        self.grad_gamma = np.zeros(dim)
        self.grad_shift = np.zeros(dim)
        self._cache = None

    def forward(self, x, train):
        self.bn.mode = "train" if train else "eval"
        y, cache = bn_forward(self.bn, x)
        self._cache = cache if train else None
        return y

    def backward(self, grad):
        if self._cache is None:
            raise InvalidState("batchnorm backward without a train-mode forward")
        grad_x, ggamma, gshift = bn_backward(self.bn, self._cache, grad)
        self.grad_gamma[...] = ggamma
        self.grad_shift[...] = gshift
        return grad_x

    def params(self, prefix):
        return [
            Param(f"{prefix}.bn.gamma", self.bn.gamma, self.grad_gamma, False),
            Param(f"{prefix}.bn.shift", self.bn.shift, self.grad_shift, False),
        ]

    def state(self, prefix):
        return {
            f"{prefix}.bn.gamma": self.bn.gamma,
            f"{prefix}.bn.shift": self.bn.shift,
            f"{prefix}.bn.running_mean": self.bn.running_mean,
            f"{prefix}.bn.running_var": self.bn.running_var,
        }


# --- spec and network -------------------------------------------------------

@dataclass
class NetworkSpec:
    layers: list = field(default_factory=list)
    loss: str = "cross_entropy"
    seed: int = 0

    def validate(self):
        if self.loss not in ("cross_entropy", "mse"):
            raise ValueError(f"unknown loss {self.loss!r}")
        width = None
        for i, desc in enumerate(self.layers):
            kind = desc.get("type")
            if kind == "dense":
                d_in, d_out = int(desc["d_in"]), int(desc["d_out"])
                if d_in < 1 or d_out < 1:
                    raise ValueError(f"layer {i}: non-positive dense dims")
                if width is not None and width != d_in:
                    raise ValueError(
                        f"layer {i}: expects {d_in} features, previous layer gives {width}")
                width = d_out
            elif kind == "act":
                name = desc.get("name")
                if name not in ACTIVATION_NAMES:
                    raise ValueError(f"layer {i}: unknown activation {name!r}")
                if name.startswith("bn_carelu") and width is None:
                    raise ValueError(f"layer {i}: bn_carelu needs a known width")
            elif kind == "batchnorm":
                dim = int(desc["dim"])
                if width is not None and width != dim:
                    raise ValueError(
                        f"layer {i}: batchnorm dim {dim} vs width {width}")
                width = dim
            else:
                raise ValueError(f"layer {i}: unknown layer type {kind!r}")
        return self

    def to_dict(self):
        return {"layers": self.layers, "loss": self.loss, "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        return cls(layers=list(d["layers"]), loss=d["loss"],
                   seed=int(d["seed"])).validate()


def mlp_spec(d_in: int, hidden: list, d_out: int, activation: str,
             loss: str = "cross_entropy", seed: int = 0) -> NetworkSpec:
    """Dense/activation alternation ending in a plain dense head."""
    layers = []
    width = d_in
    for h in hidden:
        layers.append({"type": "dense", "d_in": width, "d_out": int(h)})
        layers.append({"type": "act", "name": activation})
        width = int(h)
    layers.append({"type": "dense", "d_in": width, "d_out": d_out})
    return NetworkSpec(layers=layers, loss=loss, seed=seed).validate()


class Network:
    def __init__(self, spec: NetworkSpec, layers: list):
        self.spec = spec
        self.layers = layers

    def forward(self, x, train: bool = False) -> np.ndarray:
        x = tensor(x)
        for i, layer in enumerate(self.layers):
            try:
                x = layer.forward(x, train)
            except NumericError as e:
                raise NumericError(
                    f"layer {i} ({type(layer).__name__}): {e}") from e
        return x

    def backward(self, grad) -> np.ndarray:
        grad = tensor(grad)
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self) -> list:
        out = []
        for i, layer in enumerate(self.layers):
            out.extend(layer.params(f"layer{i}"))
        return out

    def state_dict(self) -> dict:
        out = {}
        for i, layer in enumerate(self.layers):
            out.update(layer.state(f"layer{i}"))
        return out

    def load_state(self, state: dict):
        own = self.state_dict()
        if set(own) != set(state):
            missing = sorted(set(own) - set(state))
            extra = sorted(set(state) - set(own))
            raise CheckpointError(
                f"state names do not match spec (missing {missing}, extra {extra})")
        for name, arr in own.items():
            incoming = np.asarray(state[name], dtype=np.float64)
            if incoming.shape != arr.shape:
                raise CheckpointError(
                    f"{name}: shape {incoming.shape} != {arr.shape}")
            arr[...] = incoming

    def cas_layers(self) -> list:
        """(ordinal, layer) for every CAS-bearing layer, ordinals 1-based."""
        found = []
        for layer in self.layers:
            if isinstance(layer, (CareluLayer, BnCareluLayer)):
                found.append(layer)
        return list(enumerate(found, start=1))


def _make_layer(desc, width, rng):
    kind = desc["type"]
    if kind == "dense":
        return DenseLayer(int(desc["d_in"]), int(desc["d_out"]), rng), int(desc["d_out"])
    if kind == "batchnorm":
        return BatchNormLayer(int(desc["dim"])), int(desc["dim"])
    name = desc["name"]
    if name in ("relu", "leaky_relu", "prelu", "swish1", "swish"):
        return BaselineLayer(name), width
    if name.startswith("bn_carelu_"):
        return BnCareluLayer(_CARELU_KIND[name.split("_")[-1]], width), width
    return CareluLayer(_CARELU_KIND[name.split("_")[-1]]), width


def build_network(spec: NetworkSpec) -> Network:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    layers = []
    width = None
    for desc in spec.layers:
        layer, width = _make_layer(desc, width, rng)
        layers.append(layer)
    return Network(spec, layers)


# --- losses ------------------------------------------------------------------

def cross_entropy(logits, labels) -> tuple[float, np.ndarray]:
    """Mean over the batch of -log softmax(logits)[label]."""
    logits = tensor(logits)
    labels = np.asarray(labels)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"expected {n} labels, got shape {labels.shape}")
    if labels.min() < 0 or labels.max() >= c:
        raise LabelError(f"labels must lie in [0, {c})")
    labels = labels.astype(np.int64)
    shifted = logits - logits.max(axis=1, keepdims=True)
    ex = np.exp(shifted)
    z = ex.sum(axis=1, keepdims=True)
    logp = shifted - np.log(z)
    loss = float(-logp[np.arange(n), labels].mean())
    grad = ex / z
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def mse_loss(pred, target) -> tuple[float, np.ndarray]:
    """Mean over every entry of the squared error."""
    pred = tensor(pred)
    target = tensor(target)
    if pred.shape != target.shape:
        raise ShapeError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float((diff * diff).mean()), 2.0 * diff / diff.size


# --- optimizers ----------------------------------------------------------------

class SGD:
    """v <- momentum*v + grad + weight_decay*param; param <- param - lr*v.

    Decay touches only params flagged for it (dense weights and biases);
    activation and normalization parameters are left undecayed so their
    mechanisms stay unbiased.
    """

    def __init__(self, lr: float, momentum: float = 0.0, weight_decay: float = 0.0):
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self._velocity = {}

    def step(self, params: list):
        for p in params:
            g = p.grad
            if p.decay and self.weight_decay:
                g = g + self.weight_decay * p.value
            v = self._velocity.get(p.name)
            if v is None:
                v = np.zeros_like(p.value)
                self._velocity[p.name] = v
            v *= self.momentum
            v += g
            p.value[...] -= self.lr * v
            if not np.all(np.isfinite(p.value)):
                raise NumericError(f"parameter {p.name} became non-finite")


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, weight_decay: float = 0.0):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self._m = {}
        self._v = {}
        self._t = 0

    def step(self, params: list):
        self._t += 1
        b1, b2 = self.beta1, self.beta2
        for p in params:
            g = p.grad
            if p.decay and self.weight_decay:
                g = g + self.weight_decay * p.value
            m = self._m.setdefault(p.name, np.zeros_like(p.value))
            v = self._v.setdefault(p.name, np.zeros_like(p.value))
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            mhat = m / (1.0 - b1 ** self._t)
            vhat = v / (1.0 - b2 ** self._t)
            p.value[...] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
            if not np.all(np.isfinite(p.value)):
                raise NumericError(f"parameter {p.name} became non-finite")


# --- training ----------------------------------------------------------------

@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    optimizer: str = "sgd"
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 5e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    schedule: list = field(default_factory=list)  # [(milestone_epoch, divisor)]


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    test_acc: float
    lr: float
    seconds: float


@dataclass
class TrainReport:
    epochs: list
    best_epoch: int
    best_test_metric: float


def _make_optimizer(cfg: TrainConfig):
    if cfg.optimizer == "sgd":
        return SGD(cfg.lr, cfg.momentum, cfg.weight_decay)
    if cfg.optimizer == "adam":
        return Adam(cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps,
                    cfg.weight_decay)
    raise ValueError(f"unknown optimizer {cfg.optimizer!r}")


def evaluate(net: Network, features, labels, loss_kind: str,
             batch_size: int = 512) -> dict:
    """Eval-mode metrics; accuracy for classification, mse otherwise."""
    features = tensor(features)
    n = features.shape[0]
    total_loss = 0.0
    correct = 0
    sq_err = 0.0
    for start in range(0, n, batch_size):
        xb = features[start:start + batch_size]
        yb = labels[start:start + batch_size]
        out = net.forward(xb, train=False)
        if loss_kind == "cross_entropy":
            loss, _ = cross_entropy(out, yb)
            correct += int((out.argmax(axis=1) == yb).sum())
        else:
            loss, _ = mse_loss(out, yb)
            sq_err += loss * out.size
        total_loss += loss * xb.shape[0]
    metrics = {"loss": total_loss / n, "n": n}
    if loss_kind == "cross_entropy":
        metrics["accuracy"] = correct / n
    else:
        metrics["mse"] = sq_err / (n * np.asarray(labels).shape[1])
    return metrics


def _metric_of(metrics: dict, loss_kind: str) -> float:
    return metrics["accuracy"] if loss_kind == "cross_entropy" else metrics["mse"]


def _better(candidate: float, incumbent: float, loss_kind: str) -> bool:
    if loss_kind == "cross_entropy":
        return candidate > incumbent
    return candidate < incumbent


def train(spec: NetworkSpec, train_features, train_labels, test_features,
          test_labels, cfg: TrainConfig):
    """Seeded training loop.

    Returns (report, net, best_state): ``best_state`` is a copy of the
    network state at the epoch with the best test metric.
    """
    net = build_network(spec)
    opt = _make_optimizer(cfg)
    rng = np.random.default_rng(spec.seed)
    loss_fn = cross_entropy if spec.loss == "cross_entropy" else mse_loss
    n = tensor(train_features).shape[0]
    train_features = tensor(train_features)
    stats = []

    if cfg.epochs == 0:
        t0 = time.perf_counter()
        tr = evaluate(net, train_features, train_labels, spec.loss)
        te = evaluate(net, test_features, test_labels, spec.loss)
        stats.append(EpochStats(0, tr["loss"], _metric_of(tr, spec.loss),
                                _metric_of(te, spec.loss), cfg.lr,
                                time.perf_counter() - t0))
        state = {k: v.copy() for k, v in net.state_dict().items()}
        return (TrainReport(stats, 0, _metric_of(te, spec.loss)), net, state)

    best_metric = None
    best_epoch = -1
    best_state = None
    lr = cfg.lr
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        for milestone, divisor in cfg.schedule:
            if epoch == int(milestone):
                lr = lr / float(divisor)
        opt.lr = lr
        perm = rng.permutation(n)
        loss_sum = 0.0
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            idx = perm[start:start + cfg.batch_size]
            xb = train_features[idx]
            yb = np.asarray(train_labels)[idx]
            try:
                out = net.forward(xb, train=True)
                loss, grad = loss_fn(out, yb)
                if not np.isfinite(loss):
                    raise DivergedError(epoch, bi, "loss is not finite")
                net.backward(grad)
                opt.step(net.parameters())
            except NumericError as e:
                raise DivergedError(epoch, bi, str(e)) from e
            loss_sum += loss * xb.shape[0]
        tr = evaluate(net, train_features, train_labels, spec.loss)
        te = evaluate(net, test_features, test_labels, spec.loss)
        te_metric = _metric_of(te, spec.loss)
        stats.append(EpochStats(epoch, loss_sum / n, _metric_of(tr, spec.loss),
                                te_metric, lr, time.perf_counter() - t0))
        if best_metric is None or _better(te_metric, best_metric, spec.loss):
            best_metric = te_metric
            best_epoch = epoch
            best_state = {k: v.copy() for k, v in net.state_dict().items()}
    return TrainReport(stats, best_epoch, best_metric), net, best_state


# --- checkpoints ---------------------------------------------------------------

_CKPT_MAGIC = b"CRLUCKPT"
_CKPT_VERSION = 1


def save_checkpoint(path, spec: NetworkSpec, state: dict, meta: dict | None = None):
    """Write spec + named float64 tensors.

    Layout: 8-byte magic, little-endian u64 header length, UTF-8 JSON header
    (version, spec, meta, tensor names/shapes in order), then each tensor's
    raw little-endian float64 bytes in header order.  Fully deterministic:
    identical inputs give identical bytes.
    """
    names = list(state.keys())
    header = {
        "version": _CKPT_VERSION,
        "spec": spec.to_dict(),
        "meta": meta or {},
        "tensors": [{"name": n, "shape": list(state[n].shape)} for n in names],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for n in names:
            f.write(np.ascontiguousarray(state[n], dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (spec, state dict, meta)."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 16 or raw[:8] != _CKPT_MAGIC:
        raise CheckpointError(
            f"{path}: bad magic, expected {_CKPT_MAGIC!r}")
    (hlen,) = struct.unpack("<Q", raw[8:16])
    try:
        header = json.loads(raw[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: corrupt header: {e}") from e
    if header.get("version") != _CKPT_VERSION:
        raise CheckpointError(
            f"{path}: version {header.get('version')} not supported "
            f"(expected {_CKPT_VERSION})")
    spec = NetworkSpec.from_dict(header["spec"])
    state = {}
    offset = 16 + hlen
    for entry in header["tensors"]:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated tensor data")
        arr = np.frombuffer(raw[offset:offset + nbytes], dtype="<f8").astype(
            np.float64).reshape(shape)
        state[entry["name"]] = arr
        offset += nbytes
    if offset != len(raw):
        raise CheckpointError(f"{path}: trailing bytes after tensor data")
    return spec, state, header["meta"]


def restore_network(path) -> tuple[Network, dict]:
    spec, state, meta = load_checkpoint(path)
    net = build_network(spec)
    net.load_state(state)
    return net, meta
