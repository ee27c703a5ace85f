"""
An MPS-structured circuit on a statevector
==========================================

Build the ladder circuit, run it on encoded inputs, read out Z
expectations and their parameter-shift Jacobian.
"""
import numpy as np

from hqtn_ser.quantum import build_mps_circuit, param_shift_jacobian, quantum_features, run_circuit

circuit = build_mps_circuit(3, 1)
print(f"{circuit.n_params} rotation angles, {circuit.n_cnots} CNOTs")
for gate in circuit.gate_plan:
    print(" ", gate.kind, gate.qubits, "" if gate.slot is None else f"theta[{gate.slot}]")

rng = np.random.default_rng(0)
u = rng.uniform(-np.pi, np.pi, 3)
theta = rng.uniform(-np.pi, np.pi, circuit.n_params)

state = run_circuit(circuit, u, theta)
print("norm:", state.norm())
print("probabilities:", np.round(state.probabilities(), 4))
print("<Z_k>:", np.round(quantum_features(circuit, u, theta), 4))

# exact gradients: one column per angle, then one per encoding input
J = param_shift_jacobian(circuit, u, theta)
print("Jacobian shape:", J.shape)

# compare one column against a central difference
h = 1e-5
e = np.zeros_like(theta)
e[3] = h
fd = (quantum_features(circuit, u, theta + e) - quantum_features(circuit, u, theta - e)) / (2 * h)
print("d<Z>/d theta[3]  shift:", np.round(J[:, 3], 8), " difference:", np.round(fd, 8))
