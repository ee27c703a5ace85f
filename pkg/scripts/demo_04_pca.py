"""
PCA on wide feature matrices
============================

With far fewer samples than dimensions the Gram matrix is the cheap
route; both routes give the same components.
"""
import time

import numpy as np

from hqtn_ser.pca import fit_pca

rng = np.random.default_rng(1)
latent = rng.normal(size=(120, 6)) * np.array([9, 6, 4, 2, 1, 0.5])
X = latent @ rng.normal(size=(6, 1500)) + 0.05 * rng.normal(size=(120, 1500))

t0 = time.perf_counter()
gram = fit_pca(X, 8, method="gram")
t1 = time.perf_counter()
cov = fit_pca(X, 8, method="covariance")
t2 = time.perf_counter()
print(f"gram {t1 - t0:.3f}s, covariance {t2 - t1:.3f}s")
print("max component difference:", np.abs(gram.components - cov.components).max())
print("explained variance:", np.round(gram.explained_variance, 2))

Z = gram.transform(X)
print("projected shape:", Z.shape, " mean of projections:", np.abs(Z.mean(axis=0)).max())
