"""Dense statevector simulation of the MPS-structured variational circuit.

Conventions:

* qubit 0 is the most significant bit of the basis index (leftmost in a ket);
* RY(a) = [[cos a/2, -sin a/2], [sin a/2, cos a/2]],  RZ(a) = diag(e^{-ia/2}, e^{ia/2});
* each MPS layer applies RZ then RY on every qubit, followed by the CNOT chain
  (0->1), (1->2), ..., (n-2 -> n-1).

All kernels work on a batch of states shaped (M, 2, ..., 2) so that every
parameter-shift evaluation for a mini-batch runs as one vectorised pass.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

MAX_QUBITS = 8
SHIFT = np.pi / 2


class CapacityError(ValueError):
    """Requested register size is outside the simulator's supported range."""


class Gate(NamedTuple):
    kind: str  # "RY" | "RZ" | "CNOT"
    qubits: tuple[int, ...]
    slot: int | None = None  # index into theta; None for CNOT


@dataclass
class StateVector:
    amplitudes: np.ndarray
    n_qubits: int

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.n_qubits)

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def _tensor(self) -> np.ndarray:
        # batch-of-one view sharing memory with ``amplitudes``
        return self.amplitudes.reshape((1,) + (2,) * self.n_qubits)


@dataclass(frozen=True)
class MpsCircuit:
    n_qubits: int
    n_layers: int
    gate_plan: tuple[Gate, ...] = field(repr=False)

    @property
    def n_params(self) -> int:
        return 2 * self.n_qubits * self.n_layers

    @property
    def n_cnots(self) -> int:
        return sum(g.kind == "CNOT" for g in self.gate_plan)


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_QUBITS:
        raise CapacityError(f"supported register sizes are 1..{MAX_QUBITS}, got {n}")


def _check_qubit(n: int, q: int) -> None:
    if not 0 <= q < n:
        raise IndexError(f"qubit {q} out of range for {n} qubits")


# -- batched kernels --------------------------------------------------------

def _sl(n: int, axis: int, value: int) -> tuple:
    return (slice(None),) * axis + (value,)


def _bcast(x: np.ndarray, n: int) -> np.ndarray:
    # (M,) -> (M, 1, ..., 1) against the (M, 2, ..., 2) slice shape
    return np.asarray(x).reshape((-1,) + (1,) * (n - 1))


def _ry(t: np.ndarray, q: int, angles: np.ndarray) -> None:
    n = t.ndim - 1
    i0, i1 = _sl(n, q + 1, 0), _sl(n, q + 1, 1)
    c, s = _bcast(np.cos(angles / 2), n), _bcast(np.sin(angles / 2), n)
    a0 = t[i0].copy()
    a1 = t[i1]
    t[i0] = c * a0 - s * a1
    t[i1] = s * a0 + c * a1


def _rz(t: np.ndarray, q: int, angles: np.ndarray) -> None:
    n = t.ndim - 1
    phase = _bcast(np.exp(-0.5j * angles), n)
    t[_sl(n, q + 1, 0)] *= phase
    t[_sl(n, q + 1, 1)] *= np.conj(phase)


def _cnot(t: np.ndarray, control: int, target: int) -> None:
    sub = t[_sl(t.ndim - 1, control + 1, 1)]
    ax = target + 1 if target < control else target
    i0, i1 = _sl(0, ax, 0), _sl(0, ax, 1)
    tmp = sub[i0].copy()
    sub[i0] = sub[i1]
    sub[i1] = tmp


def z_expectations(t: np.ndarray) -> np.ndarray:
    """(M, 2, ..., 2) amplitudes -> (M, n) array of <Z_k>."""
    n = t.ndim - 1
    probs = t.real**2 + t.imag**2
    out = np.empty((t.shape[0], n))
    for q in range(n):
        other = tuple(a for a in range(1, n + 1) if a != q + 1)
        marg = probs.sum(axis=other) if other else probs
        out[:, q] = marg[:, 0] - marg[:, 1]
    return out


def _encoded_batch(u: np.ndarray) -> np.ndarray:
    """Product state prod_k RY(u_k)|0>, returned as (M, 2, ..., 2) complex."""
    M, n = u.shape
    psi = np.ones((M, 1))
    for k in range(n):
        local = np.stack([np.cos(u[:, k] / 2), np.sin(u[:, k] / 2)], axis=1)
        psi = (psi[:, :, None] * local[:, None, :]).reshape(M, -1)
    return psi.astype(np.complex128).reshape((M,) + (2,) * n)


def simulate_batch(circuit: MpsCircuit, u, theta) -> np.ndarray:
    """Final states for many (u, theta) rows at once.

    ``u`` is (M, n); ``theta`` is (P,) shared or (M, P) per row.
    Returns the amplitudes as (M, 2, ..., 2).
    """
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    theta = np.asarray(theta, dtype=np.float64)
    M = u.shape[0]
    if u.shape[1] != circuit.n_qubits:
        raise ValueError(f"expected {circuit.n_qubits} encoding angles, got {u.shape[1]}")
    if theta.shape[-1] != circuit.n_params:
        raise ValueError(f"expected {circuit.n_params} circuit parameters, got {theta.shape[-1]}")
    if theta.ndim == 1:
        theta = np.broadcast_to(theta, (M, theta.shape[0]))
    t = _encoded_batch(u)
    for g in circuit.gate_plan:
        if g.kind == "RZ":
            _rz(t, g.qubits[0], theta[:, g.slot])
        elif g.kind == "RY":
            _ry(t, g.qubits[0], theta[:, g.slot])
        else:
            _cnot(t, *g.qubits)
    return t


def batch_quantum_features(circuit: MpsCircuit, u, theta) -> np.ndarray:
    """<Z_k> for each row of ``u``; shape (M, n)."""
    return z_expectations(simulate_batch(circuit, u, theta))


def batch_param_shift_jacobian(circuit: MpsCircuit, u, theta) -> np.ndarray:
    """d<Z_k>/d(theta, u) for each row of ``u`` via the two-term shift rule.

    Returns (M, n, P + n): the first P columns are circuit parameters, the
    last n are the encoding angles.  Every generator here is a Pauli
    rotation, so the +-pi/2 rule is exact.
    """
    u = np.atleast_2d(np.asarray(u, dtype=np.float64))
    theta = np.asarray(theta, dtype=np.float64)
    M, n = u.shape
    P = circuit.n_params
    S = P + n
    shifts = np.concatenate([np.eye(S), -np.eye(S)]) * SHIFT  # (2S, S)
    full = np.concatenate([np.broadcast_to(theta, (M, P)), u], axis=1)  # (M, S)
    shifted = (full[:, None, :] + shifts[None, :, :]).reshape(M * 2 * S, S)
    z = batch_quantum_features(circuit, shifted[:, P:], shifted[:, :P]).reshape(M, 2, S, n)
    return np.transpose((z[:, 0] - z[:, 1]) / 2, (0, 2, 1))


# -- single-state API -------------------------------------------------------

def zero_state(n: int) -> StateVector:
    _check_n(n)
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(amps, n)


def apply_ry(s: StateVector, qubit: int, angle: float) -> StateVector:
    """Apply RY in place and return ``s``."""
    _check_qubit(s.n_qubits, qubit)
    _ry(s._tensor(), qubit, np.array([angle], dtype=np.float64))
    return s


def apply_rz(s: StateVector, qubit: int, angle: float) -> StateVector:
    _check_qubit(s.n_qubits, qubit)
    _rz(s._tensor(), qubit, np.array([angle], dtype=np.float64))
    return s


def apply_cnot(s: StateVector, control: int, target: int) -> StateVector:
    _check_qubit(s.n_qubits, control)
    _check_qubit(s.n_qubits, target)
    if control == target:
        raise ValueError("control and target must differ")
    _cnot(s._tensor(), control, target)
    return s


def angle_encode(u) -> StateVector:
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    _check_n(len(u))
    return StateVector(_encoded_batch(u[None, :]).reshape(-1), len(u))


def build_mps_circuit(n: int, layers: int) -> MpsCircuit:
    if n < 2:
        raise ValueError("an MPS circuit needs at least 2 qubits to entangle")
    _check_n(n)
    if layers < 1:
        raise ValueError("layers must be >= 1")
    plan: list[Gate] = []
    slot = 0
    for _ in range(layers):
        for k in range(n):
            plan.append(Gate("RZ", (k,), slot))
            plan.append(Gate("RY", (k,), slot + 1))
            slot += 2
        plan.extend(Gate("CNOT", (k, k + 1)) for k in range(n - 1))
    return MpsCircuit(n, layers, tuple(plan))


def run_circuit(c: MpsCircuit, u, theta) -> StateVector:
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    if len(u) != c.n_qubits:
        raise ValueError(f"expected {c.n_qubits} encoding angles, got {len(u)}")
    if len(theta) != c.n_params:
        raise ValueError(f"expected {c.n_params} circuit parameters, got {len(theta)}")
    t = simulate_batch(c, u[None, :], theta)
    return StateVector(t.reshape(-1), c.n_qubits)


def expect_z(s: StateVector, qubit: int) -> float:
    _check_qubit(s.n_qubits, qubit)
    return float(z_expectations(s._tensor())[0, qubit])


def quantum_features(c: MpsCircuit, u, theta) -> np.ndarray:
    return z_expectations(run_circuit(c, u, theta)._tensor())[0]


def param_shift_jacobian(c: MpsCircuit, u, theta) -> np.ndarray:
    """(n, 2nL + n) Jacobian of the Z features for a single input."""
    u = np.asarray(u, dtype=np.float64).reshape(1, -1)
    return batch_param_shift_jacobian(c, u, theta)[0]


def _bit_signs(n: int) -> np.ndarray:
    # (2^n, n): +1 where qubit k's bit is 0, -1 where it is 1
    idx = np.arange(2**n)[:, None]
    bits = (idx >> (n - 1 - np.arange(n))[None, :]) & 1
    return 1.0 - 2.0 * bits


def sample_z_from_probs(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Empirical per-qubit mean of +-1 outcomes from ``shots`` basis samples.

    ``probs`` may be (2^n,) or (M, 2^n); returns (n,) or (M, n).
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = np.asarray(probs, dtype=np.float64)
    single = probs.ndim == 1
    probs = np.atleast_2d(probs)
    probs = np.clip(probs, 0.0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    n = int(round(np.log2(probs.shape[1])))
    counts = np.stack([rng.multinomial(shots, p) for p in probs])
    est = counts @ _bit_signs(n) / shots
    return est[0] if single else est


def sample_z_estimates(s: StateVector, shots: int, seed) -> np.ndarray:
    """Finite-shot estimate of every <Z_k>; ``seed`` is an int or a Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return sample_z_from_probs(s.probabilities(), shots, rng)


def init_theta(circuit: MpsCircuit, rng: np.random.Generator, scale: float = np.pi / 10) -> np.ndarray:
    """Uniform on [-scale, scale]; small angles start the ansatz near identity."""
    return rng.uniform(-scale, scale, size=circuit.n_params)
