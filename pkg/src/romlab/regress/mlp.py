"""Fully connected closure network trained with Adam, written against numpy.

The network maps the ``r`` coefficients to all ``r`` closure components at
once.  Hidden layers use LeakyReLU and (inverted) dropout while training.
"""

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import DivergenceError, ValidationError
from .base import ClosureModel

ARCHITECTURES = (
    (64, 128, 256, 512, 256, 128, 64),
    (64, 128, 256, 128, 64),
    (64, 128, 64),
)


@dataclass(frozen=True)
class NnConfig:
    widths: tuple = (64, 128, 64)
    learning_rate: float = 1e-3
    l2: float = 1e-4
    dropout: float = 0.3
    epochs: int = 100
    batch_size: int = 512
    negative_slope: float = 0.01
    init: str = "he-uniform"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if not 0 <= self.dropout < 1:
            raise ValidationError("dropout must lie in [0, 1)")
        if self.learning_rate <= 0 or self.l2 < 0 or self.epochs < 0 or self.batch_size < 1:
            raise ValidationError("invalid training settings")
        if self.init not in ("he-uniform", "zeros"):
            raise ValidationError(f"unknown init {self.init!r}")


def leaky_relu(x, slope):
    return np.where(x > 0, x, slope * x)


def init_params(sizes, rng, init="he-uniform"):
    """List of ``(W, b)`` with ``W`` of shape ``(fan_out, fan_in)``."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        if init == "zeros":
            W = np.zeros((fan_out, fan_in))
        else:
            bound = np.sqrt(6.0 / fan_in)
            W = rng.uniform(-bound, bound, (fan_out, fan_in))
        params.append((W, np.zeros(fan_out)))
    return params


def forward(params, X, slope, masks=None):
    """Output and the per-layer cache used by :func:`backward`."""
    cache = []
    a = X
    last = len(params) - 1
    for layer, (W, b) in enumerate(params):
        z = a @ W.T + b
        cache.append((a, z))
        if layer == last:
            return z, cache
        a = leaky_relu(z, slope)
        if masks is not None:
            a = a * masks[layer]
    return a, cache


def loss_and_gradient(params, X, Y, l2, slope=0.01, masks=None):
    """Summed per-output MSE plus ``l2 * sum(W^2)`` and its gradient."""
    out, cache = forward(params, X, slope, masks)
    n = X.shape[0]
    diff = out - Y
    loss = float(np.sum(diff ** 2) / n + l2 * sum(np.sum(W ** 2) for W, _ in params))
    grads = [None] * len(params)
    delta = 2.0 * diff / n
    for layer in range(len(params) - 1, -1, -1):
        W, _ = params[layer]
        a_prev, _ = cache[layer]
        grads[layer] = (delta.T @ a_prev + 2.0 * l2 * W, delta.sum(axis=0))
        if layer == 0:
            break
        delta = delta @ W
        if masks is not None:
            delta = delta * masks[layer - 1]
        z_prev = cache[layer - 1][1]
        delta = delta * np.where(z_prev > 0, 1.0, slope)
    return loss, grads


class MLPModel(ClosureModel):
    kind = "mlp"

    def __init__(self, params, negative_slope=0.01, meta=None):
        super().__init__(params[0][0].shape[1], meta)
        self.params = [(W.copy(), b.copy()) for W, b in params]
        self.negative_slope = negative_slope

    @property
    def parameter_count(self):
        return int(sum(W.size + b.size for W, b in self.params))

    def _predict(self, U):
        return forward(self.params, U, self.negative_slope)[0]

    def to_arrays(self):
        return [a for pair in self.params for a in pair]

    def header_fields(self):
        return {"negative_slope": float(self.negative_slope).hex()}

    @classmethod
    def from_arrays(cls, r, arrays, header):
        params = list(zip(arrays[0::2], arrays[1::2]))
        return cls(params, float.fromhex(header.get("negative_slope", "0x1.47ae147ae147bp-7")))


def fit_mlp(dataset, config=None, **overrides):
    """Train the closure network for ``config.epochs`` epochs of Adam.

    Minibatches come from a seeded shuffle; the final-epoch weights are kept.
    ``meta['loss_history']`` records the mean minibatch loss of each epoch.
    """
    cfg = config or NnConfig()
    if overrides:
        cfg = NnConfig(**{**asdict(cfg), **overrides})
    X, Y = dataset.inputs, dataset.targets
    n, r = X.shape
    rng = np.random.default_rng(cfg.seed)
    sizes = (r, *cfg.widths, r)
    params = init_params(sizes, rng, cfg.init)
    m = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    v = [(np.zeros_like(W), np.zeros_like(b)) for W, b in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    keep = 1.0 - cfg.dropout
    t = 0
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            masks = None
            if cfg.dropout > 0:
                masks = [(rng.random((idx.size, w)) < keep) / keep for w in cfg.widths]
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = loss_and_gradient(params, X[idx], Y[idx], cfg.l2,
                                                cfg.negative_slope, masks)
            if not np.isfinite(loss):
                raise DivergenceError(f"MLP loss became non-finite in epoch {epoch}",
                                      step=epoch)
            losses.append(loss)
            t += 1
            new = []
            for layer, ((W, b), (gW, gb)) in enumerate(zip(params, grads)):
                mW, mb = m[layer]
                vW, vb = v[layer]
                mW = beta1 * mW + (1 - beta1) * gW
                mb = beta1 * mb + (1 - beta1) * gb
                vW = beta2 * vW + (1 - beta2) * gW ** 2
                vb = beta2 * vb + (1 - beta2) * gb ** 2
                m[layer], v[layer] = (mW, mb), (vW, vb)
                c1, c2 = 1 - beta1 ** t, 1 - beta2 ** t
                W = W - cfg.learning_rate * (mW / c1) / (np.sqrt(vW / c2) + eps)
                b = b - cfg.learning_rate * (mb / c1) / (np.sqrt(vb / c2) + eps)
                new.append((W, b))
            params = new
        history.append(float(np.mean(losses)))
    meta = {"config": asdict(cfg), "loss_history": history}
    return MLPModel(params, cfg.negative_slope, meta)
