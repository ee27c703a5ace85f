"""Hybrid predictor: classical encoder and MPS circuit fused by one softmax head.

Modes
-----
hybrid          head sees [z_c || z_q]
classical_only  head sees z_c; no projection, no circuit parameters
quantum_only    head sees z_q; no encoder (the projection is kept)
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .quantum import (
    MpsCircuit,
    batch_param_shift_jacobian,
    build_mps_circuit,
    init_theta,
    sample_z_from_probs,
    simulate_batch,
    z_expectations,
)

MODES = ("hybrid", "classical_only", "quantum_only")
QUANTUM_GROUP = "quantum"
CLASSICAL_GROUP = "classical"


@dataclass
class HybridParams:
    mode: str
    head: nn.DenseLayer
    encoder: list[nn.DenseLayer] = field(default_factory=list)
    projection: nn.Projection | None = None
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    circuit: MpsCircuit | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        d_c = self.encoder[-1].out_features if self.encoder else 0
        n = self.circuit.n_qubits if self.circuit is not None else 0
        expected = {"hybrid": d_c + n, "classical_only": d_c, "quantum_only": n}[self.mode]
        if self.uses_quantum and (self.circuit is None or self.projection is None):
            raise ValueError(f"{self.mode} mode needs a circuit and a projection")
        if self.uses_classical and not self.encoder:
            raise ValueError(f"{self.mode} mode needs an encoder")
        if self.head.in_features != expected:
            raise ValueError(f"head input width {self.head.in_features} != {expected} for {self.mode}")
        if self.circuit is not None and self.theta.shape != (self.circuit.n_params,):
            raise ValueError(f"theta must have {self.circuit.n_params} entries")

    @property
    def uses_quantum(self) -> bool:
        return self.mode != "classical_only"

    @property
    def uses_classical(self) -> bool:
        return self.mode != "quantum_only"

    @property
    def n_classes(self) -> int:
        return self.head.out_features

    @property
    def n_qubits(self) -> int:
        return self.circuit.n_qubits if self.circuit is not None else 0

    @property
    def latent_dim(self) -> int:
        return self.encoder[-1].out_features if self.encoder else 0

    def arrays(self) -> dict[str, np.ndarray]:
        """Named views of every trainable array (mutating them mutates the model)."""
        out: dict[str, np.ndarray] = {}
        if self.uses_quantum:
            out["proj.P"] = self.projection.P
            out["proj.b"] = self.projection.b
            out["theta"] = self.theta
        for i, layer in enumerate(self.encoder):
            out[f"enc{i}.W"] = layer.weight
            out[f"enc{i}.b"] = layer.bias
        out["head.W"] = self.head.weight
        out["head.b"] = self.head.bias
        return out

    def param_groups(self) -> dict[str, str]:
        return {name: QUANTUM_GROUP if name == "theta" else CLASSICAL_GROUP for name in self.arrays()}

    def decay_names(self) -> frozenset:
        # classical weight matrices only: not biases, not theta, not the projection bias
        return frozenset(n for n in self.arrays() if n.endswith(".W") or n == "proj.P")

    def copy(self) -> "HybridParams":
        return copy.deepcopy(self)


def init_hybrid(
    k: int,
    n_classes: int,
    n_qubits: int = 3,
    n_layers: int = 1,
    mode: str = "hybrid",
    hidden: tuple[int, ...] = (64,),
    latent: int = 16,
    seed: int = 42,
) -> HybridParams:
    """Seeded initial parameters; every mode draws the same stream so shared
    branches start identical across ablations."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    rng = np.random.default_rng(seed)
    circuit = build_mps_circuit(n_qubits, n_layers)
    projection = nn.init_projection(k, n_qubits, rng)
    theta = init_theta(circuit, rng)
    widths = (k, *hidden, latent)
    encoder = [nn.init_dense(a, b, rng, "relu") for a, b in zip(widths[:-1], widths[1:])]
    d_in = {"hybrid": latent + n_qubits, "classical_only": latent, "quantum_only": n_qubits}[mode]
    head = nn.init_dense(d_in, n_classes, rng, "none")
    if mode == "classical_only":
        return HybridParams(mode, head, encoder)
    if mode == "quantum_only":
        return HybridParams(mode, head, [], projection, theta, circuit)
    return HybridParams(mode, head, encoder, projection, theta, circuit)


@dataclass
class ForwardCache:
    x: np.ndarray
    logits: np.ndarray
    z_f: np.ndarray
    u: np.ndarray | None = None
    z_q: np.ndarray | None = None
    enc_cache: list | None = None


def forward(params: HybridParams, x, shots: int | None = None, rng: np.random.Generator | None = None):
    """Class probabilities for one sample (k,) or a batch (B, k).

    With ``shots`` set, the exact Z expectations are replaced by finite-shot
    estimates drawn from ``rng`` (evaluation only; there is no backward for
    that path).
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    parts = []
    cache = ForwardCache(x=X, logits=None, z_f=None)
    if params.uses_classical:
        z_c, cache.enc_cache = nn.encoder_forward(params.encoder, X)
        parts.append(z_c)
    if params.uses_quantum:
        cache.u = nn.project(params.projection, X)
        states = simulate_batch(params.circuit, cache.u, params.theta)
        if shots is None:
            cache.z_q = z_expectations(states)
        else:
            if rng is None:
                raise ValueError("shot sampling needs an rng")
            probs = (states.real**2 + states.imag**2).reshape(len(X), -1)
            cache.z_q = sample_z_from_probs(probs, shots, rng)
        parts.append(cache.z_q)
    cache.z_f = np.concatenate(parts, axis=1)
    cache.logits, _ = nn.dense_forward(params.head, cache.z_f)
    probs = nn.softmax(cache.logits)
    return (probs[0] if single else probs), cache


def backward_from_logits(params: HybridParams, cache: ForwardCache, grad_logits: np.ndarray) -> dict[str, np.ndarray]:
    """Chain rule from dL/dlogits to every named parameter array."""
    grad_logits = np.atleast_2d(grad_logits)
    grads: dict[str, np.ndarray] = {}
    grads["head.W"], grads["head.b"], g_zf = nn.dense_backward(params.head, cache.z_f, cache.logits, grad_logits)
    d_c = params.latent_dim if params.uses_classical else 0

    if params.uses_classical:
        enc_grads, _ = nn.encoder_backward(params.encoder, cache.enc_cache, g_zf[:, :d_c])
        for i, (dW, db) in enumerate(enc_grads):
            grads[f"enc{i}.W"], grads[f"enc{i}.b"] = dW, db

    if params.uses_quantum:
        g_zq = g_zf[:, d_c:]  # (B, n)
        P = params.circuit.n_params
        if np.any(g_zq):
            jac = batch_param_shift_jacobian(params.circuit, cache.u, params.theta)  # (B, n, P + n)
            g_all = np.einsum("bn,bnp->bp", g_zq, jac)
        else:
            g_all = np.zeros((len(g_zq), P + params.n_qubits))
        grads["theta"] = g_all[:, :P].sum(axis=0)
        grads["proj.P"], grads["proj.b"] = nn.project_backward(params.projection, cache.x, g_all[:, P:])
    return grads


def backward(params: HybridParams, cache: ForwardCache, labels) -> dict[str, np.ndarray]:
    """Gradients of the mean cross-entropy over the cached batch."""
    _, g = nn.cross_entropy_with_logits(cache.logits, labels)
    return backward_from_logits(params, cache, g)


def loss_and_grads(params: HybridParams, X, y):
    probs, cache = forward(params, np.atleast_2d(X))
    loss, g = nn.cross_entropy_with_logits(cache.logits, y)
    return loss, backward_from_logits(params, cache, g), probs


def batch_loss(params: HybridParams, X, y) -> float:
    _, cache = forward(params, np.atleast_2d(X))
    loss, _ = nn.cross_entropy_with_logits(cache.logits, y)
    return loss


def count_params(params: HybridParams) -> dict[str, int]:
    quantum = params.theta.size if params.uses_quantum else 0
    projection = params.projection.n_params if params.uses_quantum else 0
    encoder = sum(layer.n_params for layer in params.encoder) if params.uses_classical else 0
    head = params.head.n_params
    classical = projection + encoder + head
    return {
        "quantum": quantum,
        "projection": projection,
        "encoder": encoder,
        "head": head,
        "classical": classical,
        "total": quantum + classical,
    }
