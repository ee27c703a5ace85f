"""Small dense-network toolkit: layers, softmax cross-entropy, AdamW.

Everything works on batches (rows are samples) and hand-written backward
passes; there is no autograd.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "none")


@dataclass
class DenseLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = "none"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ValueError(f"inconsistent shapes {self.weight.shape} / {self.bias.shape}")

    @property
    def in_features(self) -> int:
        return self.weight.shape[1]

    @property
    def out_features(self) -> int:
        return self.weight.shape[0]

    @property
    def n_params(self) -> int:
        return self.weight.size + self.bias.size


@dataclass
class Projection:
    """Affine map u = P x + b from PCA space to encoding angles."""

    P: np.ndarray  # (n, k)
    b: np.ndarray  # (n,)

    @property
    def n_params(self) -> int:
        return self.P.size + self.b.size


def init_dense(in_features: int, out_features: int, rng: np.random.Generator, activation: str = "none") -> DenseLayer:
    bound = np.sqrt(1.0 / in_features)
    return DenseLayer(
        rng.uniform(-bound, bound, size=(out_features, in_features)),
        rng.uniform(-bound, bound, size=out_features),
        activation,
    )


def init_projection(k: int, n: int, rng: np.random.Generator) -> Projection:
    bound = np.sqrt(1.0 / k)
    return Projection(rng.uniform(-bound, bound, size=(n, k)), rng.uniform(-bound, bound, size=n))


def _check_width(x: np.ndarray, expected: int) -> None:
    if x.shape[-1] != expected:
        raise ValueError(f"expected input width {expected}, got {x.shape[-1]}")


def project(p: Projection, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    _check_width(x, p.P.shape[1])
    return x @ p.P.T + p.b


def project_backward(p: Projection, x: np.ndarray, grad_u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gradients (dP, db) given upstream dL/du for a batch."""
    x2, g2 = np.atleast_2d(x), np.atleast_2d(grad_u)
    return g2.T @ x2, g2.sum(axis=0)


def dense_forward(layer: DenseLayer, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (activation output, pre-activation)."""
    _check_width(x, layer.in_features)
    pre = x @ layer.weight.T + layer.bias
    out = np.maximum(pre, 0.0) if layer.activation == "relu" else pre
    return out, pre


def dense_backward(layer: DenseLayer, x: np.ndarray, pre: np.ndarray, grad_out: np.ndarray):
    """Return (dW, db, dx) for one layer on a batch."""
    g = grad_out * (pre > 0) if layer.activation == "relu" else grad_out
    return g.T @ x, g.sum(axis=0), g @ layer.weight


def encoder_forward(layers: list[DenseLayer], x) -> tuple[np.ndarray, list]:
    """Run the stack; the cache holds (input, pre-activation) per layer."""
    h = np.atleast_2d(np.asarray(x, dtype=np.float64))
    cache = []
    for layer in layers:
        out, pre = dense_forward(layer, h)
        cache.append((h, pre))
        h = out
    return h, cache


def encoder_backward(layers: list[DenseLayer], cache: list, grad_out: np.ndarray):
    """Backpropagate through the stack; returns ([(dW, db), ...], dx)."""
    grads = []
    g = grad_out
    for layer, (h, pre) in zip(reversed(layers), reversed(cache)):
        dW, db, g = dense_backward(layer, h, pre, g)
        grads.append((dW, db))
    return grads[::-1], g


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def classify(head: DenseLayer, z_f) -> np.ndarray:
    logits, _ = dense_forward(head, np.asarray(z_f, dtype=np.float64))
    return softmax(logits)


def cross_entropy(probs, label) -> float:
    """-log p[label]; for a batch (B, C) with labels (B,), the mean."""
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    labels = np.atleast_1d(label)
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(picked, np.finfo(float).tiny))))


def cross_entropy_with_logits(logits, labels) -> tuple[float, np.ndarray]:
    """Mean cross-entropy in log-softmax form and its gradient w.r.t. the logits."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    labels = np.atleast_1d(labels)
    B = len(labels)
    logp = log_softmax(logits)
    loss = -logp[np.arange(B), labels].mean()
    grad = np.exp(logp)
    grad[np.arange(B), labels] -= 1.0
    return float(loss), grad / B


@dataclass
class AdamW:
    """Decoupled-weight-decay Adam over a flat ``{name: array}`` parameter dict.

    ``groups`` maps parameter names to a group label and ``lrs`` maps each
    group to its learning rate.  Weight decay only touches names listed in
    ``decay`` (the classical weight matrices).
    """

    lrs: dict[str, float]
    groups: dict[str, str]
    decay: frozenset = frozenset()
    weight_decay: float = 0.01
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        """Update ``params`` in place."""
        self.step_count += 1
        t = self.step_count
        b1, b2 = self.betas
        bc1 = 1.0 - b1**t
        bc2 = 1.0 - b2**t
        for name, p in params.items():
            g = grads[name]
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {name}")
            lr = self.lrs[self.groups[name]]
            m = self.m.setdefault(name, np.zeros_like(p))
            v = self.v.setdefault(name, np.zeros_like(p))
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            if lr == 0.0:
                continue
            if name in self.decay and self.weight_decay:
                p *= 1.0 - lr * self.weight_decay
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def adamw_step(state: AdamW, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    state.step(params, grads)
    return params
