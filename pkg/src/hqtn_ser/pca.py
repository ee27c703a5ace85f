"""PCA compression fitted on the training split only."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class InsufficientSamplesError(ValueError):
    pass


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (D,)
    components: np.ndarray  # (D, k), orthonormal columns, descending variance
    explained_variance: np.ndarray  # (k,)

    @property
    def k(self) -> int:
        return self.components.shape[1]

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def transform(self, x: np.ndarray) -> np.ndarray:
        return pca_transform(self, x)

    def inverse_transform(self, z: np.ndarray) -> np.ndarray:
        return self.mean + np.asarray(z) @ self.components.T


def _fix_signs(components: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive; first index wins ties
    idx = np.argmax(np.abs(components), axis=0)
    signs = np.sign(components[idx, np.arange(components.shape[1])])
    signs[signs == 0] = 1.0
    return components * signs


def _complete_basis(basis: np.ndarray, k: int) -> np.ndarray:
    """Extend orthonormal columns to ``k`` by Gram-Schmidt over the standard basis."""
    D = basis.shape[0]
    cols = [basis[:, j] for j in range(basis.shape[1])]
    for j in range(D):
        if len(cols) == k:
            break
        v = np.zeros(D)
        v[j] = 1.0
        for _ in range(2):  # re-orthogonalise once for stability
            for c in cols:
                v -= (c @ v) * c
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            cols.append(v / norm)
    return np.column_stack(cols)


def fit_pca(train_features, k: int = 32, method: str = "auto", rtol: float | None = None) -> PcaModel:
    """Fit the top-``k`` principal directions of ``train_features`` (N x D).

    ``method="gram"`` eigendecomposes the N x N Gram matrix and lifts the
    eigenvectors back to feature space, which is what makes D = 27648 cheap.
    ``"covariance"`` works on the D x D covariance; ``"auto"`` picks whichever
    matrix is smaller.  Variances use the unbiased N - 1 divisor.

    If the centred data has rank r < k, the remaining k - r directions are a
    deterministic orthonormal completion with zero variance, and a warning is
    emitted.  Eigenvalues at or below ``rtol * largest`` count as zero; the
    default ``rtol`` is ``max(N, D) * eps``, the usual matrix-rank cutoff.
    """
    X = np.asarray(train_features, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError("train_features must be a 2-D array")
    N, D = X.shape
    if N < k:
        raise InsufficientSamplesError(f"need at least k={k} samples, got {N}")
    if D < k:
        raise DimensionError(f"feature dimension {D} is smaller than k={k}")
    if method == "auto":
        method = "gram" if N <= D else "covariance"

    if rtol is None:
        rtol = max(N, D) * np.finfo(np.float64).eps
    mean = X.mean(axis=0)
    Xc = X - mean
    denom = max(N - 1, 1)

    if method == "gram":
        gram = (Xc @ Xc.T) / denom
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1]
        evals, evecs = evals[order], evecs[:, order]
        tol = rtol * max(evals[0], 0.0) + 1e-300
        keep = min(k, int(np.sum(evals > tol)))
        # v = Xc^T u / sqrt((N-1) lambda) has unit norm when Xc Xc^T u = (N-1) lambda u
        comps = Xc.T @ evecs[:, :keep] / np.sqrt(denom * evals[:keep])
    elif method == "covariance":
        cov = (Xc.T @ Xc) / denom
        evals, evecs = np.linalg.eigh(cov)
        order = np.argsort(evals)[::-1]
        evals, evecs = evals[order], evecs[:, order]
        tol = rtol * max(evals[0], 0.0) + 1e-300
        keep = min(k, int(np.sum(evals > tol)))
        comps = evecs[:, :keep]
    else:
        raise ValueError(f"unknown method {method!r}")

    variances = np.zeros(k)
    variances[:keep] = evals[:keep]
    comps = _fix_signs(comps) if keep else comps
    if keep < k:
        warnings.warn(
            f"training data has rank {keep} < k={k}; padding with zero-variance directions",
            RuntimeWarning,
            stacklevel=2,
        )
        filler = _complete_basis(comps, k)[:, keep:]
        comps = np.column_stack([comps, _fix_signs(filler)])
    return PcaModel(mean=mean, components=comps, explained_variance=variances)


def pca_transform(model: PcaModel, x) -> np.ndarray:
    """Project one sample (D,) or a batch (B, D) onto the principal components."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.dim:
        raise DimensionError(f"expected feature length {model.dim}, got {x.shape[-1]}")
    return (x - model.mean) @ model.components
