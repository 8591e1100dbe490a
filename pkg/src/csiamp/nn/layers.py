"""Dense layers, input batch normalisation and their exact backward passes.

Everything runs in float64. Weights are stored ``(out, in)``.
"""

from dataclasses import dataclass, field

import numpy as np

LINEAR = "linear"
LRELU = "lrelu"
ACTIVATIONS = (LINEAR, LRELU)


def lrelu(x: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(x >= 0, x, alpha * x)


@dataclass
class DenseLayer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str = LINEAR
    alpha: float = 0.01

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValueError(f"inconsistent layer shapes {self.weight.shape} / {self.bias.shape}")

    @classmethod
    def glorot(cls, in_dim: int, out_dim: int, rng: np.random.Generator,
               activation: str = LINEAR, alpha: float = 0.01) -> "DenseLayer":
        limit = np.sqrt(6.0 / (in_dim + out_dim))
        return cls(rng.uniform(-limit, limit, size=(out_dim, in_dim)), np.zeros(out_dim), activation, alpha)

    @property
    def in_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


@dataclass
class BatchNorm:
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.99
    eps: float = 1e-5

    def __post_init__(self):
        if not 0.0 < self.momentum < 1.0:
            raise ValueError("momentum must lie in (0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    @classmethod
    def fresh(cls, dim: int, momentum: float = 0.99, eps: float = 1e-5) -> "BatchNorm":
        return cls(np.ones(dim), np.zeros(dim), np.zeros(dim), np.ones(dim), momentum, eps)

    @property
    def dim(self) -> int:
        return self.gamma.size


@dataclass
class MlpModel:
    layers: list
    input_bn: BatchNorm | None = None
    name: str = "mlp"
    version: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a model needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(f"layer dims do not chain: {a.out_dim} -> {b.in_dim}")
        if self.input_bn is not None and self.input_bn.dim != self.in_dim:
            raise ValueError("batch-norm width does not match the input layer")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def parameters(self) -> dict:
        """Trainable arrays keyed by name; the arrays are the live storage."""
        params = {}
        if self.input_bn is not None:
            params["bn.gamma"] = self.input_bn.gamma
            params["bn.beta"] = self.input_bn.beta
        for i, layer in enumerate(self.layers):
            params[f"{i}.weight"] = layer.weight
            params[f"{i}.bias"] = layer.bias
        return params

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def copy(self) -> "MlpModel":
        bn = None
        if self.input_bn is not None:
            b = self.input_bn
            bn = BatchNorm(b.gamma.copy(), b.beta.copy(), b.running_mean.copy(), b.running_var.copy(),
                           b.momentum, b.eps)
        layers = [DenseLayer(l.weight.copy(), l.bias.copy(), l.activation, l.alpha) for l in self.layers]
        return MlpModel(layers, bn, self.name)

    def load_state(self, other: "MlpModel") -> None:
        """Copy parameter values and running statistics from a same-shaped model in place."""
        for (k, dst), src in zip(self.parameters().items(), other.parameters().values()):
            if dst.shape != src.shape:
                raise ValueError(f"shape mismatch for {k}")
            dst[...] = src
        if self.input_bn is not None:
            self.input_bn.running_mean[...] = other.input_bn.running_mean
            self.input_bn.running_var[...] = other.input_bn.running_var
        self.version += 1


@dataclass
class ForwardCache:
    model_id: int
    version: int
    bn_xhat: np.ndarray | None
    bn_inv_std: np.ndarray | None
    inputs: list  # input to each dense layer
    pre: list  # pre-activation output of each dense layer


def forward(model: MlpModel, x: np.ndarray, mode: str = "infer", update_stats: bool = True):
    """Run the network on a batch.

    Returns ``(output, cache)``; the cache is ``None`` in ``"infer"`` mode. In
    ``"train"`` mode the input batch norm uses batch statistics and (unless
    ``update_stats`` is off) folds them into its running estimates.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.in_dim:
        raise ValueError(f"batch of shape {x.shape} does not match input width {model.in_dim}")
    if mode not in ("train", "infer"):
        raise ValueError(f"unknown mode {mode!r}")
    train = mode == "train"
    bn = model.input_bn
    xhat = inv_std = None
    if bn is not None:
        if train:
            b = x.shape[0]
            if b < 2:
                raise ValueError("train-mode batch norm needs at least two rows")
            mu = x.mean(axis=0)
            var = x.var(axis=0)
            inv_std = 1.0 / np.sqrt(var + bn.eps)
            xhat = (x - mu) * inv_std
            if update_stats:
                m = bn.momentum
                bn.running_mean *= m
                bn.running_mean += (1.0 - m) * mu
                bn.running_var *= m
                bn.running_var += (1.0 - m) * var * (b / (b - 1.0))
        else:
            xhat = (x - bn.running_mean) / np.sqrt(bn.running_var + bn.eps)
        x = bn.gamma * xhat + bn.beta
    inputs, pre = [], []
    for layer in model.layers:
        inputs.append(x)
        z = x @ layer.weight.T + layer.bias
        pre.append(z)
        x = lrelu(z, layer.alpha) if layer.activation == LRELU else z
    if not train:
        return x, None
    return x, ForwardCache(id(model), model.version, xhat, inv_std, inputs, pre)


def backward(model: MlpModel, cache: ForwardCache, grad_out: np.ndarray):
    """Reverse-mode gradients for a train-mode forward pass.

    Returns ``(param_grads, grad_input)`` with ``param_grads`` keyed like
    ``model.parameters()``.
    """
    if cache is None or cache.model_id != id(model) or len(cache.inputs) != len(model.layers):
        raise ValueError("forward cache does not belong to this model")
    if cache.version != model.version:
        raise ValueError("stale forward cache: model parameters changed since the forward pass")
    grad = np.asarray(grad_out, dtype=np.float64)
    if grad.shape != cache.pre[-1].shape:
        raise ValueError(f"grad_out shape {grad.shape} != output shape {cache.pre[-1].shape}")
    grads = {}
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        if layer.activation == LRELU:
            grad = np.where(cache.pre[i] >= 0, grad, layer.alpha * grad)
        grads[f"{i}.weight"] = grad.T @ cache.inputs[i]
        grads[f"{i}.bias"] = grad.sum(axis=0)
        grad = grad @ layer.weight
    bn = model.input_bn
    if bn is not None:
        xhat = cache.bn_xhat
        grads["bn.gamma"] = (grad * xhat).sum(axis=0)
        grads["bn.beta"] = grad.sum(axis=0)
        dxhat = grad * bn.gamma
        b = xhat.shape[0]
        grad = cache.bn_inv_std / b * (b * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
    ordered = {k: grads[k] for k in model.parameters()}
    return ordered, grad


def mse_loss(pred: np.ndarray, label: np.ndarray):
    """Batch mean of the squared Euclidean row error, and its gradient."""
    pred = np.asarray(pred, dtype=np.float64)
    label = np.asarray(label, dtype=np.float64)
    if pred.shape != label.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {label.shape}")
    diff = pred - label
    b = pred.shape[0]
    with np.errstate(over="ignore", invalid="ignore"):  # callers check finiteness
        return float(np.sum(diff * diff) / b), 2.0 * diff / b
