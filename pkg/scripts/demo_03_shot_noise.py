"""
Finite-shot readout
===================

Exact expectations versus estimates from sampled bitstrings.  The spread
shrinks like 1/sqrt(shots).
"""
import numpy as np

from hqtn_ser.quantum import angle_encode, expect_z, sample_z_estimates

state = angle_encode([np.pi / 2, np.pi / 3, 0.2])
exact = np.array([expect_z(state, k) for k in range(3)])
print("exact <Z>:", np.round(exact, 4))

for shots in (64, 256, 1024, 16384):
    est = np.array([sample_z_estimates(state, shots, seed) for seed in range(200)])
    spread = est.std(axis=0)
    print(f"{shots:>6} shots  std per qubit {np.round(spread, 4)}  predicted {np.round(np.sqrt((1 - exact**2) / shots), 4)}")
