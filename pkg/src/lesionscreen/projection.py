"""PCA projection of backbone embeddings for latent-space inspection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PcaProjection:
    coordinates: np.ndarray          # (n_rows, dims), row order preserved
    explained_variance: np.ndarray   # (dims,) fractions of total variance
    components: np.ndarray           # (dims, n_features)


def pca_project(embeddings: np.ndarray, dims: int = 3) -> PcaProjection:
    """Mean-centered projection onto the top-``dims`` principal axes.

    Explained-variance fractions are non-increasing and relative to the total
    variance of the input. Component signs are fixed so the largest-magnitude
    loading of each axis is positive, keeping output deterministic.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"embeddings must be 2-D, got shape {x.shape}")
    n, p = x.shape
    if dims < 1 or dims > p:
        raise ValueError(f"dims must be in [1, {p}], got {dims}")
    if n < dims:
        raise ValueError(f"need at least {dims} rows for a {dims}-D projection, got {n}")
    if not np.isfinite(x).all():
        raise ValueError("embeddings contain non-finite values")

    centered = x - x.mean(axis=0, keepdims=True)
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    components = vt[:dims]
    for i in range(dims):
        pivot = np.argmax(np.abs(components[i]))
        if components[i, pivot] < 0:
            components[i] = -components[i]

    total = float((centered**2).sum())
    if total == 0.0:
        fractions = np.zeros(dims)
    else:
        fractions = (singular[:dims] ** 2) / total
    return PcaProjection(
        coordinates=centered @ components.T,
        explained_variance=fractions,
        components=components,
    )
